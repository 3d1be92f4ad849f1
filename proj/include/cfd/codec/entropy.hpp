#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cfd {

/// -sum_s f_s log2 f_s over the empirical symbol frequencies, in bits/symbol.
/// Throws ValidationError on an empty sequence.
double empirical_entropy(std::span<const std::uint32_t> symbols);

/// Adaptive range coder over an alphabet of `alphabet` symbols (<= 65535).
///
/// 32-bit low/range state, range starts at 0xFFFFFFFF. One frequency table,
/// every count starting at 1, incremented after each symbol; when the total
/// exceeds 2^16 all counts are halved (floor, minimum 1). Per symbol:
/// range /= total; low += range * cum(s); range *= freq(s); then while
/// range < 2^24 the top byte of low is emitted and low, range shift left by 8.
/// A carry out of low propagates into the bytes already emitted. Four bytes
/// of low are flushed at the end; an empty sequence produces no bytes.
std::vector<std::uint8_t> entropy_code(std::span<const std::uint32_t> symbols, std::uint32_t alphabet);

/// Decodes exactly `count` symbols. Throws DecodeError if the payload is
/// inconsistent with the coder (overrun, leftover bytes, impossible value).
std::vector<std::uint32_t> entropy_decode(std::span<const std::uint8_t> payload, std::uint32_t alphabet,
                                          std::size_t count);

inline constexpr std::uint32_t kMaxAlphabet = 65535;

}  // namespace cfd
