#pragma once

#include "cfd/codec/delta.hpp"
#include "cfd/codec/quantize.hpp"
#include "cfd/soft_labels.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cfd {

enum class WireMode : std::uint8_t { raw32 = 0, quantized = 1, quantized_delta = 2 };

inline constexpr std::array<char, 4> kWireMagic{'C', 'F', 'D', 'M'};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint8_t kFlagFullMessage = 0x01;
/// magic(4) version(1) mode(1) round(4) sender(4) n(4) C(2) b(1) flags(1) payload_len(8)
inline constexpr std::size_t kHeaderSize = 30;

struct MessageHeader {
    WireMode mode = WireMode::raw32;
    std::uint32_t round = 0;
    std::uint32_t sender_id = 0;
    std::uint32_t rows = 0;
    std::uint16_t classes = 0;
    std::uint8_t bits = 32;
    std::uint8_t flags = 0;
    std::uint64_t payload_len = 0;

    bool full_message() const { return (flags & kFlagFullMessage) != 0; }
    friend bool operator==(const MessageHeader&, const MessageHeader&) = default;
};

struct EncodedMessage {
    MessageHeader header;
    std::vector<std::uint8_t> payload;

    std::size_t bit_length() const { return payload.size() * 8; }
    /// Header (big-endian fields) followed by the payload.
    std::vector<std::uint8_t> serialize() const;
    /// Throws FormatError on a bad magic/version/mode or a length mismatch.
    static EncodedMessage parse(std::span<const std::uint8_t> bytes);

    friend bool operator==(const EncodedMessage&, const EncodedMessage&) = default;
};

struct MessageContext {
    std::uint32_t round = 0;
    std::uint32_t sender_id = 0;
};

/// Symbol stream carried by a coded message, together with its alphabet.
struct SymbolStream {
    std::vector<std::uint32_t> symbols;
    std::uint32_t alphabet = 0;
};

/// Row-major n x C matrix as little-endian float32. Also used for parameter
/// vectors (n = param_count, C = 1).
EncodedMessage encode_raw32(const Matrix& values, const MessageContext& ctx);
Matrix decode_raw32(const EncodedMessage& msg);

/// b = 1: class_id - 1 over alphabet C. b > 1: all n*C grid indices over
/// alphabet 2^b (requires 2^b <= 65535).
SymbolStream quantized_symbols(const QuantizedLabels& labels);
EncodedMessage encode_quantized(const QuantizedLabels& labels, const MessageContext& ctx);
QuantizedLabels decode_quantized(const EncodedMessage& msg);

/// Delta stream over alphabet C + 1; a full message sets the full-message flag.
SymbolStream delta_symbols(const DeltaMessage& delta);
EncodedMessage encode_delta(const DeltaMessage& delta, const MessageContext& ctx);
DeltaMessage decode_delta_message(const EncodedMessage& msg, std::optional<std::uint32_t> reference_round);

/// Inputs for one upload; which pointers must be set depends on the mode:
/// raw32 needs `raw`, quantized needs `current`, quantized_delta needs
/// `current` and (unless this is the first message) `previous`.
struct UpstreamContent {
    const SoftLabelMatrix* raw = nullptr;
    const QuantizedLabels* current = nullptr;
    const QuantizedLabels* previous = nullptr;
    std::uint32_t previous_round = 0;
};

EncodedMessage encode_upstream(WireMode mode, const UpstreamContent& content, const MessageContext& ctx);

/// What a receiver reconstructs from any message. For raw32 only `raw` is set;
/// for the quantized modes `labels` holds the reconstructed labels.
struct DecodedMessage {
    MessageHeader header;
    std::optional<Matrix> raw;
    std::optional<QuantizedLabels> labels;
    SymbolStream stream;  // empty for raw32
};

/// `reference` is the receiver's copy of the sender's previous labels; it is
/// required for delta messages without the full-message flag.
DecodedMessage decode_message(const EncodedMessage& msg, const QuantizedLabels* reference = nullptr);

}  // namespace cfd
