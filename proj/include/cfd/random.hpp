#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cfd {

using Rng = std::mt19937_64;

/// Derives an independent child seed from a base seed and a list of salts
/// (round number, client id, purpose tag, ...) using splitmix64 finalization.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> salts);

/// Samples a point from Dirichlet(alpha * 1_k). Stable for very small alpha
/// (gamma variates are combined in log space).
std::vector<double> sample_dirichlet(std::size_t k, double alpha, Rng& rng);

/// Purpose tags mixed into derived seeds so unrelated streams never collide.
namespace seed_tag {
inline constexpr std::uint64_t client_init = 0x11;
inline constexpr std::uint64_t client_distill = 0x12;
inline constexpr std::uint64_t local_train = 0x13;
inline constexpr std::uint64_t server_distill = 0x14;
inline constexpr std::uint64_t quantize_up = 0x15;
inline constexpr std::uint64_t quantize_down = 0x16;
inline constexpr std::uint64_t participants = 0x17;
}  // namespace seed_tag

}  // namespace cfd
