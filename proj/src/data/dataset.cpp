#include "cfd/data.hpp"

#include "cfd/error.hpp"
#include "cfd/random.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

namespace cfd {

Dataset Dataset::subset(const IndexSet& indices) const {
    Dataset out;
    out.num_classes = num_classes;
    out.provenance = provenance;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw ValidationError("subset index out of range");
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(indices[i]));
        out.labels.push_back(labels[indices[i]]);
    }
    return out;
}

void Dataset::validate() const {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw ValidationError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                              std::to_string(labels.size()) + " labels");
    }
    for (int y : labels) {
        if (y < 0 || y >= num_classes) {
            throw ValidationError("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
        }
    }
}

Matrix blob_means(int num_classes, int dim, std::uint64_t seed) {
    if (num_classes < 1 || dim < 1) throw ValidationError("blob sizes must be >= 1");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix means(num_classes, dim);
    for (Eigen::Index c = 0; c < means.rows(); ++c) {
        for (Eigen::Index j = 0; j < means.cols(); ++j) means(c, j) = normal(rng);
    }
    return means;
}

Dataset sample_blobs(const Matrix& means, int samples_per_class, double spread, std::uint64_t seed) {
    if (samples_per_class < 1) throw ValidationError("samples_per_class must be >= 1");
    if (!(spread >= 0.0)) throw ValidationError("spread must be nonnegative");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset out;
    out.num_classes = static_cast<int>(means.rows());
    out.provenance = Provenance::synthetic;
    out.features.resize(means.rows() * samples_per_class, means.cols());
    Eigen::Index r = 0;
    for (Eigen::Index c = 0; c < means.rows(); ++c) {
        for (int s = 0; s < samples_per_class; ++s, ++r) {
            for (Eigen::Index j = 0; j < means.cols(); ++j) {
                out.features(r, j) = means(c, j) + spread * normal(rng);
            }
            out.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

Dataset make_blobs(int num_classes, int dim, int samples_per_class, double spread, std::uint64_t seed) {
    if (num_classes < 1 || dim < 1 || samples_per_class < 1) {
        throw ValidationError("make_blobs sizes must all be >= 1");
    }
    return sample_blobs(blob_means(num_classes, dim, seed), samples_per_class, spread,
                        derive_seed(seed, {1}));
}

Dataset load_csv(const std::filesystem::path& path, std::optional<int> num_classes) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": missing header row");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 2) throw ValidationError(path.string() + ": need at least one feature and a label");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                if (col + 1 == columns) {
                    labels.push_back(std::stoi(cell, &used));
                } else {
                    values.push_back(std::stod(cell, &used));
                }
            } catch (const std::logic_error&) {
                throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": bad value '" +
                                      cell + "'");
            }
            ++col;
        }
        if (col != columns) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(columns) + " columns, got " + std::to_string(col));
        }
    }

    Dataset out;
    out.provenance = Provenance::csv_file;
    out.features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(labels.size()),
                                      static_cast<Eigen::Index>(columns - 1));
    out.labels = std::move(labels);
    const int max_label = out.labels.empty() ? 1 : *std::max_element(out.labels.begin(), out.labels.end());
    out.num_classes = num_classes.value_or(std::max(2, max_label + 1));
    out.validate();
    return out;
}

}  // namespace cfd
