#include "cfd/soft_labels.hpp"

#include "cfd/error.hpp"

#include <cmath>
#include <string>

namespace cfd {

SoftLabelMatrix::SoftLabelMatrix(Matrix values, double tolerance) : values_(std::move(values)) {
    require_row_stochastic(values_, tolerance);
}

void require_row_stochastic(const Matrix& m, double tolerance) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ValidationError("row " + std::to_string(r) + " has invalid probability " +
                                      std::to_string(v));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tolerance) {
            throw ValidationError("row " + std::to_string(r) + " sums to " + std::to_string(sum) +
                                  ", expected 1");
        }
    }
}

Matrix one_hot(const std::vector<int>& labels, int num_classes) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw ValidationError("label " + std::to_string(labels[i]) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
        }
        m(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return m;
}

std::vector<int> row_argmax(const Matrix& m) {
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Eigen::Index best = 0;
        m.row(r).maxCoeff(&best);
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

}  // namespace cfd
