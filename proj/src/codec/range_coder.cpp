#include "cfd/codec/entropy.hpp"

#include "cfd/error.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cfd {

namespace {

constexpr std::uint32_t kTop = 1u << 24;
constexpr std::uint32_t kMaxTotal = 1u << 16;

// Adaptive counts kept in a Fenwick tree so cumulative lookups stay
// logarithmic for large alphabets.
class FrequencyModel {
public:
    explicit FrequencyModel(std::uint32_t alphabet) : freq_(alphabet, 1), tree_(alphabet + 1, 0), total_(alphabet) {
        rebuild();
    }

    std::uint32_t total() const { return total_; }
    std::uint32_t freq(std::uint32_t s) const { return freq_[s]; }

    std::uint32_t cum(std::uint32_t s) const {
        std::uint32_t sum = 0;
        for (std::size_t i = s; i > 0; i -= i & (~i + 1)) sum += tree_[i];
        return sum;
    }

    // Symbol whose interval [cum(s), cum(s) + freq(s)) contains value.
    std::uint32_t find(std::uint32_t value) const {
        std::size_t pos = 0;
        std::size_t step = 1;
        while (step * 2 < tree_.size()) step *= 2;
        for (; step > 0; step /= 2) {
            if (pos + step < tree_.size() && tree_[pos + step] <= value) {
                pos += step;
                value -= tree_[pos];
            }
        }
        return static_cast<std::uint32_t>(pos);
    }

    void update(std::uint32_t s) {
        ++freq_[s];
        ++total_;
        if (total_ > kMaxTotal) {
            total_ = 0;
            for (auto& f : freq_) {
                f = std::max<std::uint32_t>(1, f >> 1);
                total_ += f;
            }
            rebuild();
            return;
        }
        for (std::size_t i = s + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
    }

private:
    void rebuild() {
        std::fill(tree_.begin(), tree_.end(), 0);
        for (std::size_t i = 1; i < tree_.size(); ++i) {
            tree_[i] += freq_[i - 1];
            const std::size_t parent = i + (i & (~i + 1));
            if (parent < tree_.size()) tree_[parent] += tree_[i];
        }
    }

    std::vector<std::uint32_t> freq_;
    std::vector<std::uint32_t> tree_;
    std::uint32_t total_;
};

void check_alphabet(std::uint32_t alphabet) {
    if (alphabet < 1 || alphabet > kMaxAlphabet) {
        throw ValidationError("alphabet size must be in [1, 65535], got " + std::to_string(alphabet));
    }
}

}  // namespace

std::vector<std::uint8_t> entropy_code(std::span<const std::uint32_t> symbols, std::uint32_t alphabet) {
    check_alphabet(alphabet);
    std::vector<std::uint8_t> out;
    if (symbols.empty()) return out;
    out.reserve(symbols.size() / 2 + 8);

    FrequencyModel model(alphabet);
    std::uint64_t low = 0;
    std::uint32_t range = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const std::uint32_t s = symbols[i];
        if (s >= alphabet) {
            throw ValidationError("symbol " + std::to_string(s) + " at position " + std::to_string(i) +
                                  " outside alphabet of size " + std::to_string(alphabet));
        }
        const std::uint32_t r = range / model.total();
        low += std::uint64_t{r} * model.cum(s);
        range = r * model.freq(s);
        if (low > 0xFFFFFFFFu) {
            std::size_t k = out.size();
            do {
                if (k == 0) throw std::logic_error("range coder carry ran past the first byte");
                --k;
            } while (++out[k] == 0);
            low &= 0xFFFFFFFFu;
        }
        while (range < kTop) {
            out.push_back(static_cast<std::uint8_t>(low >> 24));
            low = (low << 8) & 0xFFFFFFFFu;
            range <<= 8;
        }
        model.update(s);
    }
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(low >> shift));
    return out;
}

std::vector<std::uint32_t> entropy_decode(std::span<const std::uint8_t> payload, std::uint32_t alphabet,
                                          std::size_t count) {
    check_alphabet(alphabet);
    std::vector<std::uint32_t> out;
    if (count == 0) {
        if (!payload.empty()) throw DecodeError("payload present for an empty symbol stream");
        return out;
    }
    if (payload.size() < 4) throw DecodeError("coded payload shorter than the 4-byte flush");
    out.reserve(count);

    std::size_t pos = 0;
    std::uint32_t code = 0;
    for (; pos < 4; ++pos) code = (code << 8) | payload[pos];

    FrequencyModel model(alphabet);
    std::uint32_t low = 0;
    std::uint32_t range = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t r = range / model.total();
        const std::uint32_t value = (code - low) / r;
        if (value >= model.total()) throw DecodeError("corrupted payload at symbol " + std::to_string(i));
        const std::uint32_t s = model.find(value);
        low += r * model.cum(s);
        range = r * model.freq(s);
        while (range < kTop) {
            if (pos >= payload.size()) throw DecodeError("payload ended before symbol " + std::to_string(i + 1));
            code = (code << 8) | payload[pos++];
            low <<= 8;
            range <<= 8;
        }
        out.push_back(s);
        model.update(s);
    }
    if (pos != payload.size()) {
        throw DecodeError(std::to_string(payload.size() - pos) + " trailing bytes after the coded stream");
    }
    return out;
}

}  // namespace cfd
