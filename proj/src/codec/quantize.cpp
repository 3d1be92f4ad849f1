#include "cfd/codec/quantize.hpp"

#include "cfd/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cfd {

namespace {

void check_bits(int bits) {
    if (bits < 1 || bits > kMaxQuantBits) {
        throw ValidationError("quantization bits must be in [1, 16], got " + std::to_string(bits));
    }
}

// Picks `count` members of `candidates` (already sorted best-first by key)
// and randomizes only among the members that tie with the last pick.
std::vector<std::size_t> pick_with_ties(const std::vector<std::size_t>& candidates, const std::vector<double>& key,
                                        std::size_t count, Rng& rng) {
    if (count == 0) return {};
    const double cut = key[candidates[count - 1]];
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> tied;
    for (std::size_t idx : candidates) {
        if (key[idx] == cut) {
            tied.push_back(idx);
        } else if (chosen.size() + tied.size() < count) {
            chosen.push_back(idx);
        }
    }
    const std::size_t need = count - chosen.size();
    if (tied.size() > need) {
        std::shuffle(tied.begin(), tied.end(), rng);
        tied.resize(need);
    }
    chosen.insert(chosen.end(), tied.begin(), tied.end());
    return chosen;
}

}  // namespace

QuantizedLabels::QuantizedLabels(std::size_t rows, std::size_t classes, int bits, std::vector<std::uint16_t> grid)
    : rows_(rows), classes_(classes), bits_(bits), grid_(std::move(grid)) {
    check_bits(bits);
    if (grid_.size() != rows * classes) throw ShapeError("grid size does not match rows x classes");
    if (rows > 0 && classes < 1) throw ShapeError("quantized labels need at least one class");
    const std::uint32_t total = levels();
    for (std::size_t r = 0; r < rows_; ++r) {
        std::uint32_t sum = 0;
        for (std::uint16_t l : row(r)) {
            if (l > total) throw ValidationError("grid index above 2^b - 1");
            sum += l;
        }
        if (sum != total) {
            throw ValidationError("row " + std::to_string(r) + " grid sum " + std::to_string(sum) + " != " +
                                  std::to_string(total));
        }
    }
}

QuantizedLabels QuantizedLabels::from_class_ids(std::span<const std::uint32_t> class_ids, std::size_t classes) {
    std::vector<std::uint16_t> grid(class_ids.size() * classes, 0);
    for (std::size_t r = 0; r < class_ids.size(); ++r) {
        if (class_ids[r] < 1 || class_ids[r] > classes) {
            throw ValidationError("class id " + std::to_string(class_ids[r]) + " outside [1, " +
                                  std::to_string(classes) + "]");
        }
        grid[r * classes + class_ids[r] - 1] = 1;
    }
    return QuantizedLabels(class_ids.size(), classes, 1, std::move(grid));
}

std::vector<std::uint32_t> QuantizedLabels::class_ids() const {
    if (bits_ != 1) throw ValidationError("class ids exist only for 1-bit labels");
    std::vector<std::uint32_t> ids(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        const auto rw = row(r);
        ids[r] = static_cast<std::uint32_t>(std::find(rw.begin(), rw.end(), 1) - rw.begin()) + 1;
    }
    return ids;
}

Matrix QuantizedLabels::dequantize() const {
    Matrix out(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(classes_));
    const double scale = 1.0 / static_cast<double>(levels());
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < classes_; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = grid_[r * classes_ + c] * scale;
        }
    }
    return out;
}

std::vector<std::uint16_t> quantize(std::span<const double> p, int bits, Rng& tie_rng) {
    check_bits(bits);
    if (p.empty()) throw ValidationError("cannot quantize an empty probability vector");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("probabilities must be finite and >= 0");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
        throw ValidationError("probabilities sum to " + std::to_string(sum) + ", expected 1");
    }

    const std::int64_t total = (std::int64_t{1} << bits) - 1;
    const std::size_t k = p.size();
    std::vector<std::int64_t> floors(k);
    std::vector<double> frac(k);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double scaled = p[i] * static_cast<double>(total);
        floors[i] = std::min<std::int64_t>(total, static_cast<std::int64_t>(std::floor(scaled)));
        frac[i] = scaled - static_cast<double>(floors[i]);
        assigned += floors[i];
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::int64_t missing = total - assigned;
    if (missing > 0) {
        std::stable_sort(order.begin(), order.end(), [&frac](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
        for (std::size_t i : pick_with_ties(order, frac, static_cast<std::size_t>(std::min<std::int64_t>(missing, k)), tie_rng)) {
            ++floors[i];
        }
    } else if (missing < 0) {
        // Only reachable when p sums slightly above 1 within tolerance.
        std::erase_if(order, [&floors](std::size_t i) { return floors[i] == 0; });
        std::stable_sort(order.begin(), order.end(), [&frac](std::size_t a, std::size_t b) { return frac[a] < frac[b]; });
        for (std::size_t i : pick_with_ties(order, frac, static_cast<std::size_t>(-missing), tie_rng)) --floors[i];
    }

    std::vector<std::uint16_t> grid(k);
    for (std::size_t i = 0; i < k; ++i) grid[i] = static_cast<std::uint16_t>(floors[i]);
    return grid;
}

QuantizedLabels quantize_matrix(const SoftLabelMatrix& y, int bits, std::uint64_t tie_seed) {
    check_bits(bits);
    Rng rng(tie_seed);
    const std::size_t n = y.rows();
    const std::size_t c = y.classes();
    std::vector<std::uint16_t> grid;
    grid.reserve(n * c);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = y.values().row(static_cast<Eigen::Index>(r));
        const auto q = quantize(std::span<const double>(row.data(), c), bits, rng);
        grid.insert(grid.end(), q.begin(), q.end());
    }
    return QuantizedLabels(n, c, bits, std::move(grid));
}

}  // namespace cfd
