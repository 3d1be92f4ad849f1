#pragma once

// Independent reference implementations used only by tests.

#include "cfd/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace cfd::oracle {

/// Calls visit(l) for every vector of `parts` nonnegative integers summing to `total`.
inline void for_each_composition(int total, int parts, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> l(static_cast<std::size_t>(parts), 0);
    std::function<void(int, int)> rec = [&](int idx, int left) {
        if (idx == parts - 1) {
            l[static_cast<std::size_t>(idx)] = left;
            visit(l);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            l[static_cast<std::size_t>(idx)] = v;
            rec(idx + 1, left - v);
        }
    };
    rec(0, total);
}

/// Exact L1 objective scaled by levels * 2^shift for dyadic p_i = k_i / 2^shift:
/// sum_i |l_i * 2^shift - levels * k_i|.
inline std::int64_t scaled_l1(const std::vector<int>& grid, const std::vector<std::int64_t>& k, int levels, int shift) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::int64_t d = (std::int64_t{grid[i]} << shift) - std::int64_t{levels} * k[i];
        total += d < 0 ? -d : d;
    }
    return total;
}

/// Brute-force minimum of scaled_l1 over every grid vector on the simplex.
inline std::int64_t brute_force_min_l1(const std::vector<std::int64_t>& k, int bits, int shift) {
    const int levels = (1 << bits) - 1;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for_each_composition(levels, static_cast<int>(k.size()), [&](const std::vector<int>& l) {
        best = std::min(best, scaled_l1(l, k, levels, shift));
    });
    return best;
}

/// Mean cross-entropy computed with plain loops straight from the flat
/// parameter layout (row-major weights, then bias), no Eigen.
inline double naive_loss(const ModelParams& params, const ModelSpec& spec, const Matrix& x, const Matrix& targets) {
    const auto v = params.values();
    const int d = spec.input_dim;
    const int c = spec.num_classes;
    const int h = spec.hidden_dim;
    double total = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::vector<double> in(x.row(r).data(), x.row(r).data() + d);
        std::size_t offset = 0;
        if (spec.kind == ModelKind::mlp1) {
            std::vector<double> hid(static_cast<std::size_t>(h), 0.0);
            for (int j = 0; j < h; ++j) {
                double s = v[static_cast<std::size_t>(d * h + j)];
                for (int i = 0; i < d; ++i) s += in[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i * h + j)];
                hid[static_cast<std::size_t>(j)] = s > 0.0 ? s : 0.0;
            }
            in = hid;
            offset = static_cast<std::size_t>(d * h + h);
        }
        const int width = static_cast<int>(in.size());
        std::vector<double> z(static_cast<std::size_t>(c));
        double zmax = -1e300;
        for (int k = 0; k < c; ++k) {
            double s = v[offset + static_cast<std::size_t>(width * c + k)];
            for (int i = 0; i < width; ++i) s += in[static_cast<std::size_t>(i)] * v[offset + static_cast<std::size_t>(i * c + k)];
            z[static_cast<std::size_t>(k)] = s;
            zmax = std::max(zmax, s);
        }
        double norm = 0.0;
        for (double zk : z) norm += std::exp(zk - zmax);
        for (int k = 0; k < c; ++k) {
            const double p = std::exp(z[static_cast<std::size_t>(k)] - zmax) / norm;
            total -= targets(r, k) * std::log(std::max(p, 1e-12));
        }
    }
    return total / static_cast<double>(x.rows());
}

/// Central finite-difference gradient of naive_loss.
inline std::vector<double> numeric_gradient(const ModelParams& params, const ModelSpec& spec, const Matrix& x,
                                            const Matrix& targets, double step = 1e-5) {
    std::vector<double> g(params.param_count());
    ModelParams probe = params;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double orig = probe.values()[i];
        probe.values()[i] = orig + step;
        const double up = naive_loss(probe, spec, x, targets);
        probe.values()[i] = orig - step;
        const double down = naive_loss(probe, spec, x, targets);
        probe.values()[i] = orig;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

}  // namespace cfd::oracle
