#include "cfd/model.hpp"

#include "cfd/error.hpp"
#include "cfd/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cfd {

namespace {

using MatrixMap = Eigen::Map<const Matrix>;
using RowVectorMap = Eigen::Map<const Eigen::RowVectorXd>;
using MutMatrixMap = Eigen::Map<Matrix>;
using MutRowVectorMap = Eigen::Map<Eigen::RowVectorXd>;

struct Layer {
    MatrixMap weight;
    RowVectorMap bias;
};

struct MutLayer {
    MutMatrixMap weight;
    MutRowVectorMap bias;
};

Layer layer_at(const ModelParams& p, std::size_t first_tensor) {
    const auto& layout = p.layout();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < first_tensor; ++i) offset += layout[i].size();
    const auto& w = layout[first_tensor];
    const auto& b = layout[first_tensor + 1];
    const double* base = p.values().data() + offset;
    return {MatrixMap(base, static_cast<Eigen::Index>(w.rows), static_cast<Eigen::Index>(w.cols)),
            RowVectorMap(base + w.size(), static_cast<Eigen::Index>(b.rows))};
}

MutLayer layer_at(ModelParams& p, std::size_t first_tensor) {
    const auto& layout = p.layout();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < first_tensor; ++i) offset += layout[i].size();
    const auto& w = layout[first_tensor];
    const auto& b = layout[first_tensor + 1];
    double* base = p.values().data() + offset;
    return {MutMatrixMap(base, static_cast<Eigen::Index>(w.rows), static_cast<Eigen::Index>(w.cols)),
            MutRowVectorMap(base + w.size(), static_cast<Eigen::Index>(b.rows))};
}

void softmax_rows(Matrix& z) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
    }
}

void check_input(const ModelParams& params, const ModelSpec& spec, const Matrix& x) {
    if (params.layout() != model_layout(spec)) {
        throw ShapeError("parameter layout does not match model spec");
    }
    if (x.cols() != spec.input_dim) {
        throw ShapeError("feature width " + std::to_string(x.cols()) + " != input_dim " +
                         std::to_string(spec.input_dim));
    }
}

struct Activations {
    Matrix hidden;  // post-ReLU, empty for softmax_regression
    Matrix probs;
};

Activations run_forward(const ModelParams& params, const ModelSpec& spec, const Matrix& x) {
    Activations act;
    if (spec.kind == ModelKind::softmax_regression) {
        const Layer out = layer_at(params, 0);
        act.probs = (x * out.weight).rowwise() + out.bias;
    } else {
        const Layer hid = layer_at(params, 0);
        const Layer out = layer_at(params, 2);
        act.hidden = ((x * hid.weight).rowwise() + hid.bias).cwiseMax(0.0);
        act.probs = (act.hidden * out.weight).rowwise() + out.bias;
    }
    softmax_rows(act.probs);
    return act;
}

}  // namespace

void ModelSpec::validate() const {
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (kind == ModelKind::mlp1 && hidden_dim < 1) throw ConfigError("mlp1 needs hidden_dim >= 1");
    if (kind == ModelKind::softmax_regression && hidden_dim != 0) {
        throw ConfigError("softmax_regression takes hidden_dim = 0");
    }
}

std::vector<TensorInfo> model_layout(const ModelSpec& spec) {
    spec.validate();
    const auto d = static_cast<std::size_t>(spec.input_dim);
    const auto c = static_cast<std::size_t>(spec.num_classes);
    if (spec.kind == ModelKind::softmax_regression) {
        return {{"output.weight", d, c}, {"output.bias", c, 1}};
    }
    const auto h = static_cast<std::size_t>(spec.hidden_dim);
    return {{"hidden.weight", d, h}, {"hidden.bias", h, 1}, {"output.weight", h, c}, {"output.bias", c, 1}};
}

ModelParams::ModelParams(std::vector<TensorInfo> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
    std::size_t expected = 0;
    for (const auto& t : layout_) expected += t.size();
    if (expected != values_.size()) {
        throw ShapeError("layout describes " + std::to_string(expected) + " parameters, got " +
                         std::to_string(values_.size()));
    }
}

ModelParams ModelParams::zeros(std::vector<TensorInfo> layout) {
    std::size_t n = 0;
    for (const auto& t : layout) n += t.size();
    return ModelParams(std::move(layout), std::vector<double>(n, 0.0));
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
    if (!same_layout(other)) throw ShapeError("cannot combine parameters with different layouts");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

ModelParams& ModelParams::operator*=(double factor) {
    for (auto& v : values_) v *= factor;
    return *this;
}

double ModelParams::norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

ModelParams operator+(ModelParams a, const ModelParams& b) { return a += b; }

ModelParams operator-(ModelParams a, const ModelParams& b) { return a += (-1.0) * b; }

ModelParams operator*(double factor, ModelParams a) { return a *= factor; }

ModelParams init_model(const ModelSpec& spec) {
    auto params = ModelParams::zeros(model_layout(spec));
    Rng rng(spec.init_seed);
    auto values = params.values();
    std::size_t offset = 0;
    for (const auto& t : params.layout()) {
        if (t.cols > 1 || t.name.ends_with("weight")) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(t.rows));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (std::size_t i = 0; i < t.size(); ++i) values[offset + i] = dist(rng);
        }
        offset += t.size();
    }
    return params;
}

SoftLabelMatrix forward(const ModelParams& params, const ModelSpec& spec, const Matrix& x) {
    check_input(params, spec, x);
    return SoftLabelMatrix(run_forward(params, spec, x).probs, 1e-9);
}

LossAndGrad loss_and_grad(const ModelParams& params, const ModelSpec& spec, const Matrix& x,
                          const Matrix& targets) {
    check_input(params, spec, x);
    if (targets.rows() != x.rows() || targets.cols() != spec.num_classes) {
        throw ShapeError("targets must be " + std::to_string(x.rows()) + " x " +
                         std::to_string(spec.num_classes));
    }
    require_row_stochastic(targets);
    if (x.rows() == 0) throw ValidationError("empty batch");

    const Activations act = run_forward(params, spec, x);
    const double inv_n = 1.0 / static_cast<double>(x.rows());

    LossAndGrad out{0.0, ModelParams::zeros(params.layout())};
    out.loss = -(targets.array() * act.probs.array().max(kLogFloor).log()).sum() * inv_n;

    // d/dz of -sum_c t_c log softmax(z)_c is p * sum(t) - t.
    const Matrix dz = (act.probs.array().colwise() * targets.rowwise().sum().array() -
                       targets.array()).matrix() * inv_n;

    if (spec.kind == ModelKind::softmax_regression) {
        MutLayer g = layer_at(out.grad, 0);
        g.weight.noalias() = x.transpose() * dz;
        g.bias = dz.colwise().sum();
    } else {
        const Layer out_layer = layer_at(params, 2);
        MutLayer g_out = layer_at(out.grad, 2);
        g_out.weight.noalias() = act.hidden.transpose() * dz;
        g_out.bias = dz.colwise().sum();
        Matrix dh = dz * out_layer.weight.transpose();
        dh.array() *= (act.hidden.array() > 0.0).cast<double>();
        MutLayer g_hid = layer_at(out.grad, 0);
        g_hid.weight.noalias() = x.transpose() * dh;
        g_hid.bias = dh.colwise().sum();
    }
    return out;
}

ModelParams train(ModelParams params, const ModelSpec& spec, const Matrix& x, const Matrix& targets,
                  OptimizerState& opt, const TrainOptions& options) {
    if (options.epochs < 1) throw ValidationError("epochs must be >= 1");
    if (options.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (x.rows() == 0) throw ValidationError("cannot train on empty data");
    check_input(params, spec, x);
    if (targets.rows() != x.rows()) throw ShapeError("targets and features differ in row count");

    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(options.shuffle_seed);
    const auto batch = static_cast<std::size_t>(options.batch_size);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                order.begin() + static_cast<std::ptrdiff_t>(stop));
            const Matrix xb = x(idx, Eigen::all);
            const Matrix tb = targets(idx, Eigen::all);
            const LossAndGrad lg = loss_and_grad(params, spec, xb, tb);
            opt.step(params, lg.grad);
        }
    }
    return params;
}

double accuracy(const ModelParams& params, const ModelSpec& spec, const Matrix& x,
                const std::vector<int>& labels) {
    if (static_cast<std::size_t>(x.rows()) != labels.size()) {
        throw ShapeError("label count differs from feature rows");
    }
    if (labels.empty()) return 0.0;
    check_input(params, spec, x);
    const std::vector<int> pred = row_argmax(run_forward(params, spec, x).probs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace cfd
