#pragma once

#include "cfd/soft_labels.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace cfd {

enum class Provenance { synthetic, idx_file, csv_file };

using IndexSet = std::vector<std::size_t>;

struct Dataset {
    Matrix features;          // n x d
    std::vector<int> labels;  // n entries in [0, num_classes)
    int num_classes = 0;
    Provenance provenance = Provenance::synthetic;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

    Dataset subset(const IndexSet& indices) const;
    /// Throws ValidationError on label/row-count violations.
    void validate() const;
};

/// Class means drawn from N(0, I_dim); deterministic in seed.
Matrix blob_means(int num_classes, int dim, std::uint64_t seed);

/// samples_per_class points per class from N(mean_c, spread^2 I), class-major order.
Dataset sample_blobs(const Matrix& means, int samples_per_class, double spread, std::uint64_t seed);

/// Isotropic Gaussian blobs around seeded random means.
Dataset make_blobs(int num_classes, int dim, int samples_per_class, double spread, std::uint64_t seed);

/// Parses an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled to [0, 1]. num_classes defaults to max(label) + 1.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::optional<int> num_classes = std::nullopt);

/// CSV with a header row; the last column is an integer label.
Dataset load_csv(const std::filesystem::path& path, std::optional<int> num_classes = std::nullopt);

struct PartitionSpec {
    int num_clients = 1;
    double alpha = 1.0;
    std::uint64_t seed = 0;
    bool equal_sizes = true;

    void validate() const;
};

/// Non-IID split of `data` into num_clients disjoint index sets.
///
/// With equal_sizes each client draws class proportions p ~ Dirichlet(alpha)
/// and fills a quota of floor(n / num_clients) samples by sampling classes
/// from p. Clients fill in order of decreasing max(p), so the most
/// concentrated ones claim whole classes first. When a drawn class pool is empty the client remaps that class, for
/// the rest of its quota, to the class with the most samples left. Leftover
/// samples are not assigned.
///
/// Without equal_sizes each class is split across clients with proportions
/// drawn from Dirichlet(alpha) over clients; every sample is assigned.
std::vector<IndexSet> dirichlet_partition(const Dataset& data, const PartitionSpec& spec);

/// Fraction of a client's samples that belong to each class.
std::vector<double> class_shares(const Dataset& data, const IndexSet& indices);

/// One JSON object per line: {"client_id": i, "indices": [...]}.
void write_partition_jsonl(std::ostream& out, const std::vector<IndexSet>& partition);

/// Unlabeled distillation pool and the currently selected subset.
struct PublicPool {
    Matrix features;  // m x d
    IndexSet selected;

    std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
    Matrix selected_features() const;
    void validate() const;
};

enum class SelectionStrategy { random, entropy, certainty, margin };

IndexSet select_random(const PublicPool& pool, std::size_t n, std::uint64_t seed);

/// Indices of the n highest-scoring pool rows; ties go to the lower index.
/// Scores: entropy H(p), certainty -max(p), margin max2(p) - max(p).
IndexSet select_active(const PublicPool& pool, std::size_t n, const SoftLabelMatrix& predictions,
                       SelectionStrategy strategy);

double selection_score(const double* row, std::size_t classes, SelectionStrategy strategy);

}  // namespace cfd
