#include "cfd/codec/delta.hpp"

#include "cfd/error.hpp"

namespace cfd {

namespace {

void require_one_bit(const QuantizedLabels& q, const char* what) {
    if (q.bits() != 1) {
        throw ValidationError(std::string(what) + " must be 1-bit labels for delta coding");
    }
}

}  // namespace

DeltaMessage delta_encode(const QuantizedLabels& curr, const QuantizedLabels* prev,
                          std::optional<std::uint32_t> reference_round) {
    require_one_bit(curr, "current labels");
    DeltaMessage msg{curr.rows(), curr.classes(), curr.class_ids(), std::nullopt};
    if (prev == nullptr) return msg;

    require_one_bit(*prev, "reference labels");
    if (prev->rows() != curr.rows() || prev->classes() != curr.classes()) {
        throw ValidationError("delta reference has shape " + std::to_string(prev->rows()) + "x" +
                              std::to_string(prev->classes()) + ", current is " + std::to_string(curr.rows()) +
                              "x" + std::to_string(curr.classes()));
    }
    const auto before = prev->class_ids();
    for (std::size_t i = 0; i < msg.symbols.size(); ++i) {
        if (msg.symbols[i] == before[i]) msg.symbols[i] = 0;
    }
    msg.reference_round = reference_round.value_or(0);
    return msg;
}

QuantizedLabels delta_decode(const DeltaMessage& msg, const QuantizedLabels* prev) {
    if (msg.symbols.size() != msg.rows) throw ValidationError("delta message length differs from row count");
    if (msg.is_full()) {
        return QuantizedLabels::from_class_ids(msg.symbols, msg.classes);
    }
    if (prev == nullptr) {
        throw ProtocolError("delta message references round " + std::to_string(*msg.reference_round) +
                            " but no reference labels are available");
    }
    require_one_bit(*prev, "reference labels");
    if (prev->rows() != msg.rows || prev->classes() != msg.classes) {
        throw ValidationError("delta reference shape does not match message");
    }
    std::vector<std::uint32_t> ids = prev->class_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (msg.symbols[i] > msg.classes) throw DecodeError("delta symbol outside [0, C]");
        if (msg.symbols[i] != 0) ids[i] = msg.symbols[i];
    }
    return QuantizedLabels::from_class_ids(ids, msg.classes);
}

}  // namespace cfd
