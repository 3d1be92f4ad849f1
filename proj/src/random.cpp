#include "cfd/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> salts) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t s : salts) {
        h = splitmix64(h ^ splitmix64(s + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

std::vector<double> sample_dirichlet(std::size_t k, double alpha, Rng& rng) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a); the log form keeps tiny alphas from
    // underflowing every component to zero.
    std::gamma_distribution<double> gamma(alpha + 1.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> log_g(k);
    for (auto& lg : log_g) {
        double u = unif(rng);
        while (u <= 0.0) u = unif(rng);
        lg = std::log(gamma(rng)) + std::log(u) / alpha;
    }
    const double top = *std::max_element(log_g.begin(), log_g.end());
    double total = 0.0;
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i) {
        p[i] = std::exp(log_g[i] - top);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

}  // namespace cfd
