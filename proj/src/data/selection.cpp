#include "cfd/data.hpp"

#include "cfd/error.hpp"
#include "cfd/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cfd {

Matrix PublicPool::selected_features() const {
    const std::vector<Eigen::Index> idx(selected.begin(), selected.end());
    return features(idx, Eigen::all);
}

void PublicPool::validate() const {
    std::vector<bool> seen(size(), false);
    for (std::size_t i : selected) {
        if (i >= size()) throw ValidationError("selected index " + std::to_string(i) + " out of range");
        if (seen[i]) throw ValidationError("selected index " + std::to_string(i) + " repeated");
        seen[i] = true;
    }
}

IndexSet select_random(const PublicPool& pool, std::size_t n, std::uint64_t seed) {
    if (n > pool.size()) {
        throw ValidationError("cannot select " + std::to_string(n) + " of " + std::to_string(pool.size()) +
                              " pool rows");
    }
    IndexSet all(pool.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates: the first n slots end up a uniform sample.
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(n);
    std::sort(all.begin(), all.end());
    return all;
}

double selection_score(const double* row, std::size_t classes, SelectionStrategy strategy) {
    switch (strategy) {
        case SelectionStrategy::entropy: {
            double h = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                if (row[c] > 0.0) h -= row[c] * std::log2(row[c]);
            }
            return h;
        }
        case SelectionStrategy::certainty:
            return -*std::max_element(row, row + classes);
        case SelectionStrategy::margin: {
            const std::size_t top = static_cast<std::size_t>(std::max_element(row, row + classes) - row);
            double second = -1.0;
            for (std::size_t c = 0; c < classes; ++c) {
                if (c != top) second = std::max(second, row[c]);
            }
            return (classes > 1 ? second : 0.0) - row[top];
        }
        case SelectionStrategy::random:
            break;
    }
    throw ValidationError("random selection has no score; use select_random");
}

IndexSet select_active(const PublicPool& pool, std::size_t n, const SoftLabelMatrix& predictions,
                       SelectionStrategy strategy) {
    if (predictions.rows() != pool.size()) {
        throw ShapeError("predictions have " + std::to_string(predictions.rows()) + " rows, pool has " +
                         std::to_string(pool.size()));
    }
    if (n > pool.size()) {
        throw ValidationError("cannot select " + std::to_string(n) + " of " + std::to_string(pool.size()) +
                              " pool rows");
    }
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        scores[i] = selection_score(predictions.values().row(static_cast<Eigen::Index>(i)).data(),
                                    predictions.classes(), strategy);
    }
    IndexSet order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(n);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace cfd
