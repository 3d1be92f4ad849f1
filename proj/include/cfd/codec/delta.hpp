#pragma once

#include "cfd/codec/quantize.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cfd {

/// Per-position change stream against a reference set of 1-bit labels.
/// Symbol 0 marks an unchanged position, k in [1, C] a new class id k.
/// A message without a reference round carries the full class ids.
struct DeltaMessage {
    std::size_t rows = 0;
    std::size_t classes = 0;
    std::vector<std::uint32_t> symbols;
    std::optional<std::uint32_t> reference_round;

    bool is_full() const { return !reference_round.has_value(); }
    friend bool operator==(const DeltaMessage&, const DeltaMessage&) = default;
};

/// `prev` may be null only for a first (full) message.
DeltaMessage delta_encode(const QuantizedLabels& curr, const QuantizedLabels* prev,
                          std::optional<std::uint32_t> reference_round = std::nullopt);

/// Exact inverse of delta_encode. Throws ProtocolError when the message needs
/// a reference and none is given.
QuantizedLabels delta_decode(const DeltaMessage& msg, const QuantizedLabels* prev);

}  // namespace cfd
