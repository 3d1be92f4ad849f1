#include "cfd/codec/wire.hpp"

#include "cfd/codec/entropy.hpp"
#include "cfd/error.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace cfd {

namespace {

void put_be(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | in[offset + static_cast<std::size_t>(i)];
    return v;
}

MessageHeader make_header(WireMode mode, const MessageContext& ctx, std::size_t rows, std::size_t classes,
                          int bits) {
    if (rows > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("too many rows for one message");
    if (classes > std::numeric_limits<std::uint16_t>::max()) throw ValidationError("too many classes for one message");
    MessageHeader h;
    h.mode = mode;
    h.round = ctx.round;
    h.sender_id = ctx.sender_id;
    h.rows = static_cast<std::uint32_t>(rows);
    h.classes = static_cast<std::uint16_t>(classes);
    h.bits = static_cast<std::uint8_t>(bits);
    return h;
}

EncodedMessage seal(MessageHeader header, std::vector<std::uint8_t> payload) {
    header.payload_len = payload.size();
    return {header, std::move(payload)};
}

void expect_mode(const EncodedMessage& msg, WireMode mode) {
    if (msg.header.mode != mode) throw DecodeError("unexpected message mode");
    if (msg.header.payload_len != msg.payload.size()) throw DecodeError("payload_len does not match payload");
}

std::uint32_t grid_alphabet(int bits) {
    const std::uint32_t alphabet = 1u << bits;
    if (alphabet > kMaxAlphabet) {
        throw ValidationError("grid alphabet 2^" + std::to_string(bits) + " exceeds the coder limit");
    }
    return alphabet;
}

}  // namespace

std::vector<std::uint8_t> EncodedMessage::serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + payload.size());
    out.insert(out.end(), kWireMagic.begin(), kWireMagic.end());
    out.push_back(kWireVersion);
    out.push_back(static_cast<std::uint8_t>(header.mode));
    put_be(out, header.round, 4);
    put_be(out, header.sender_id, 4);
    put_be(out, header.rows, 4);
    put_be(out, header.classes, 2);
    out.push_back(header.bits);
    out.push_back(header.flags);
    put_be(out, payload.size(), 8);
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

EncodedMessage EncodedMessage::parse(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) throw FormatError("message shorter than header", bytes.size());
    if (std::memcmp(bytes.data(), kWireMagic.data(), kWireMagic.size()) != 0) {
        throw FormatError("bad message magic", 0);
    }
    if (bytes[4] != kWireVersion) throw FormatError("unsupported version " + std::to_string(bytes[4]), 4);
    if (bytes[5] > static_cast<std::uint8_t>(WireMode::quantized_delta)) {
        throw FormatError("unknown mode " + std::to_string(bytes[5]), 5);
    }
    EncodedMessage msg;
    msg.header.mode = static_cast<WireMode>(bytes[5]);
    msg.header.round = static_cast<std::uint32_t>(get_be(bytes, 6, 4));
    msg.header.sender_id = static_cast<std::uint32_t>(get_be(bytes, 10, 4));
    msg.header.rows = static_cast<std::uint32_t>(get_be(bytes, 14, 4));
    msg.header.classes = static_cast<std::uint16_t>(get_be(bytes, 18, 2));
    msg.header.bits = bytes[20];
    msg.header.flags = bytes[21];
    msg.header.payload_len = get_be(bytes, 22, 8);
    if (msg.header.payload_len != bytes.size() - kHeaderSize) {
        throw FormatError("payload_len " + std::to_string(msg.header.payload_len) + " but " +
                              std::to_string(bytes.size() - kHeaderSize) + " payload bytes follow",
                          22);
    }
    msg.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
    return msg;
}

EncodedMessage encode_raw32(const Matrix& values, const MessageContext& ctx) {
    auto header = make_header(WireMode::raw32, ctx, static_cast<std::size_t>(values.rows()),
                              static_cast<std::size_t>(values.cols()), 32);
    std::vector<std::uint8_t> payload;
    payload.reserve(static_cast<std::size_t>(values.size()) * 4);
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values(r, c)));
            for (int i = 0; i < 4; ++i) payload.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
    return seal(header, std::move(payload));
}

Matrix decode_raw32(const EncodedMessage& msg) {
    expect_mode(msg, WireMode::raw32);
    const std::size_t rows = msg.header.rows;
    const std::size_t cols = msg.header.classes;
    if (msg.payload.size() != rows * cols * 4) throw DecodeError("raw32 payload size does not match n x C");
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const std::uint8_t* p = msg.payload.data();
    for (std::size_t i = 0; i < rows * cols; ++i, p += 4) {
        const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                                   (std::uint32_t{p[3]} << 24);
        out.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return out;
}

SymbolStream quantized_symbols(const QuantizedLabels& labels) {
    SymbolStream stream;
    if (labels.bits() == 1) {
        stream.alphabet = static_cast<std::uint32_t>(labels.classes());
        stream.symbols = labels.class_ids();
        for (auto& s : stream.symbols) --s;
    } else {
        stream.alphabet = grid_alphabet(labels.bits());
        stream.symbols.assign(labels.grid().begin(), labels.grid().end());
    }
    return stream;
}

EncodedMessage encode_quantized(const QuantizedLabels& labels, const MessageContext& ctx) {
    auto header = make_header(WireMode::quantized, ctx, labels.rows(), labels.classes(), labels.bits());
    const SymbolStream stream = quantized_symbols(labels);
    return seal(header, entropy_code(stream.symbols, stream.alphabet));
}

QuantizedLabels decode_quantized(const EncodedMessage& msg) {
    expect_mode(msg, WireMode::quantized);
    const std::size_t rows = msg.header.rows;
    const std::size_t classes = msg.header.classes;
    const int bits = msg.header.bits;
    if (bits < 1 || bits > kMaxQuantBits) throw DecodeError("invalid bit width in header");
    try {
        if (bits == 1) {
            auto symbols = entropy_decode(msg.payload, static_cast<std::uint32_t>(classes), rows);
            for (auto& s : symbols) ++s;
            return QuantizedLabels::from_class_ids(symbols, classes);
        }
        const auto symbols = entropy_decode(msg.payload, grid_alphabet(bits), rows * classes);
        return QuantizedLabels(rows, classes, bits, std::vector<std::uint16_t>(symbols.begin(), symbols.end()));
    } catch (const ValidationError& e) {
        throw DecodeError(std::string("decoded labels are invalid: ") + e.what());
    }
}

SymbolStream delta_symbols(const DeltaMessage& delta) {
    if (delta.classes + 1 > kMaxAlphabet) throw ValidationError("too many classes for delta coding");
    return {delta.symbols, static_cast<std::uint32_t>(delta.classes + 1)};
}

EncodedMessage encode_delta(const DeltaMessage& delta, const MessageContext& ctx) {
    auto header = make_header(WireMode::quantized_delta, ctx, delta.rows, delta.classes, 1);
    if (delta.is_full()) header.flags |= kFlagFullMessage;
    const SymbolStream stream = delta_symbols(delta);
    return seal(header, entropy_code(stream.symbols, stream.alphabet));
}

DeltaMessage decode_delta_message(const EncodedMessage& msg, std::optional<std::uint32_t> reference_round) {
    expect_mode(msg, WireMode::quantized_delta);
    DeltaMessage delta;
    delta.rows = msg.header.rows;
    delta.classes = msg.header.classes;
    delta.symbols = entropy_decode(msg.payload, static_cast<std::uint32_t>(delta.classes + 1), delta.rows);
    if (!msg.header.full_message()) delta.reference_round = reference_round.value_or(0);
    return delta;
}

EncodedMessage encode_upstream(WireMode mode, const UpstreamContent& content, const MessageContext& ctx) {
    switch (mode) {
        case WireMode::raw32:
            if (content.raw == nullptr) throw ValidationError("raw32 upload needs raw soft labels");
            return encode_raw32(content.raw->values(), ctx);
        case WireMode::quantized:
            if (content.current == nullptr) throw ValidationError("quantized upload needs quantized labels");
            return encode_quantized(*content.current, ctx);
        case WireMode::quantized_delta: {
            if (content.current == nullptr) throw ValidationError("delta upload needs quantized labels");
            if (content.current->bits() != 1) throw ValidationError("delta coding applies to 1-bit labels only");
            std::optional<std::uint32_t> ref;
            if (content.previous != nullptr) ref = content.previous_round;
            return encode_delta(delta_encode(*content.current, content.previous, ref), ctx);
        }
    }
    throw ValidationError("unknown upstream mode");
}

DecodedMessage decode_message(const EncodedMessage& msg, const QuantizedLabels* reference) {
    DecodedMessage out;
    out.header = msg.header;
    switch (msg.header.mode) {
        case WireMode::raw32:
            out.raw = decode_raw32(msg);
            break;
        case WireMode::quantized:
            out.labels = decode_quantized(msg);
            out.stream = quantized_symbols(*out.labels);
            break;
        case WireMode::quantized_delta: {
            if (!msg.header.full_message() && reference == nullptr) {
                throw ProtocolError("delta message from sender " + std::to_string(msg.header.sender_id) +
                                    " has no stored reference");
            }
            const DeltaMessage delta = decode_delta_message(msg, std::nullopt);
            out.labels = delta_decode(delta, msg.header.full_message() ? nullptr : reference);
            out.stream = delta_symbols(delta);
            break;
        }
    }
    return out;
}

}  // namespace cfd
