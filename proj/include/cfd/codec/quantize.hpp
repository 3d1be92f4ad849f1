#pragma once

#include "cfd/random.hpp"
#include "cfd/soft_labels.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cfd {

inline constexpr int kMaxQuantBits = 16;

/// Rows of grid indices l in [0, 2^b - 1] with sum(l) = 2^b - 1 per row, so
/// l / (2^b - 1) is exactly row-stochastic. For b = 1 each row is one-hot
/// and can be carried as a 1-based class id.
class QuantizedLabels {
public:
    QuantizedLabels() = default;
    /// Validates ranges and the per-row sum constraint.
    QuantizedLabels(std::size_t rows, std::size_t classes, int bits, std::vector<std::uint16_t> grid);

    /// b = 1 labels from 1-based class ids.
    static QuantizedLabels from_class_ids(std::span<const std::uint32_t> class_ids, std::size_t classes);

    std::size_t rows() const { return rows_; }
    std::size_t classes() const { return classes_; }
    int bits() const { return bits_; }
    std::uint32_t levels() const { return (1u << bits_) - 1u; }
    std::span<const std::uint16_t> grid() const { return grid_; }
    std::span<const std::uint16_t> row(std::size_t r) const { return {grid_.data() + r * classes_, classes_}; }

    /// 1-based class id per row; requires bits() == 1.
    std::vector<std::uint32_t> class_ids() const;
    Matrix dequantize() const;

    friend bool operator==(const QuantizedLabels&, const QuantizedLabels&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t classes_ = 0;
    int bits_ = 1;
    std::vector<std::uint16_t> grid_;
};

/// Nearest point (in L1) on the grid {l / (2^b - 1)} restricted to the simplex.
/// Floors p * (2^b - 1) and hands the missing units to the largest
/// fractional parts; equal fractional parts at the cut are chosen at random
/// from tie_rng. Throws ValidationError for non-stochastic p or bits outside
/// [1, 16].
std::vector<std::uint16_t> quantize(std::span<const double> p, int bits, Rng& tie_rng);

/// Row-wise quantize with a single tie-break stream seeded by tie_seed.
QuantizedLabels quantize_matrix(const SoftLabelMatrix& y, int bits, std::uint64_t tie_seed);

}  // namespace cfd
