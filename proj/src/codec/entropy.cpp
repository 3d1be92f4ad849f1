#include "cfd/codec/entropy.hpp"

#include "cfd/error.hpp"

#include <cmath>
#include <map>

namespace cfd {

double empirical_entropy(std::span<const std::uint32_t> symbols) {
    if (symbols.empty()) throw ValidationError("entropy of an empty sequence is undefined");
    std::map<std::uint32_t, std::size_t> counts;
    for (std::uint32_t s : symbols) ++counts[s];
    const double n = static_cast<double>(symbols.size());
    double h = 0.0;
    for (const auto& [symbol, count] : counts) {
        const double f = static_cast<double>(count) / n;
        h -= f * std::log2(f);
    }
    return h == 0.0 ? 0.0 : h;
}

}  // namespace cfd
