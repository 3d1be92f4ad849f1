#include "cfd/protocols.hpp"

#include "cfd/error.hpp"

namespace cfd {

SoftLabelMatrix aggregate_softlabels(const std::vector<SoftLabelMatrix>& uploads) {
    if (uploads.empty()) throw ProtocolError("cannot aggregate an empty list of uploads");
    Matrix sum = Matrix::Zero(uploads.front().values().rows(), uploads.front().values().cols());
    for (const auto& u : uploads) {
        if (u.rows() != uploads.front().rows() || u.classes() != uploads.front().classes()) {
            throw ShapeError("uploads differ in shape: " + std::to_string(u.rows()) + "x" +
                             std::to_string(u.classes()) + " vs " + std::to_string(uploads.front().rows()) + "x" +
                             std::to_string(uploads.front().classes()));
        }
        sum += u.values();
    }
    sum /= static_cast<double>(uploads.size());
    return SoftLabelMatrix(std::move(sum));
}

SoftLabelMatrix aggregate_softlabels(const std::vector<QuantizedLabels>& uploads) {
    std::vector<SoftLabelMatrix> dense;
    dense.reserve(uploads.size());
    for (const auto& u : uploads) dense.emplace_back(u.dequantize());
    return aggregate_softlabels(dense);
}

ModelParams weighted_average(const std::vector<ModelParams>& params, const std::vector<std::size_t>& sizes) {
    if (params.empty()) throw ProtocolError("cannot average an empty list of models");
    if (params.size() != sizes.size()) throw ProtocolError("one data size per model is required");
    std::size_t total = 0;
    for (std::size_t n : sizes) total += n;
    if (total == 0) throw ProtocolError("total local data size is zero");

    ModelParams out = ModelParams::zeros(params.front().layout());
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].same_layout(out)) throw ProtocolError("client models have different layouts");
        const double w = static_cast<double>(sizes[i]) / static_cast<double>(total);
        const auto src = params[i].values();
        auto dst = out.values();
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
    return out;
}

}  // namespace cfd
