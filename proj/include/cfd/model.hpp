#pragma once

#include "cfd/soft_labels.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cfd {

enum class ModelKind { softmax_regression, mlp1 };

struct ModelSpec {
    ModelKind kind = ModelKind::softmax_regression;
    int input_dim = 1;
    int hidden_dim = 0;  // unused for softmax_regression
    int num_classes = 2;
    std::uint64_t init_seed = 0;

    /// Throws ConfigError on invalid dimensions.
    void validate() const;
};

struct TensorInfo {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;  // 1 for bias vectors

    std::size_t size() const { return rows * cols; }
    friend bool operator==(const TensorInfo&, const TensorInfo&) = default;
};

std::vector<TensorInfo> model_layout(const ModelSpec& spec);

/// Flat parameter vector plus the tensor layout it is sliced into.
class ModelParams {
public:
    ModelParams() = default;
    ModelParams(std::vector<TensorInfo> layout, std::vector<double> values);
    static ModelParams zeros(std::vector<TensorInfo> layout);

    const std::vector<TensorInfo>& layout() const { return layout_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::size_t param_count() const { return values_.size(); }

    bool same_layout(const ModelParams& other) const { return layout_ == other.layout_; }

    ModelParams& operator+=(const ModelParams& other);
    ModelParams& operator*=(double factor);
    double norm() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
    std::vector<TensorInfo> layout_;
    std::vector<double> values_;
};

ModelParams operator+(ModelParams a, const ModelParams& b);
ModelParams operator-(ModelParams a, const ModelParams& b);
ModelParams operator*(double factor, ModelParams a);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and zero biases, drawn
/// from spec.init_seed.
ModelParams init_model(const ModelSpec& spec);

/// Class probabilities for every row of x (n x input_dim).
SoftLabelMatrix forward(const ModelParams& params, const ModelSpec& spec, const Matrix& x);

struct LossAndGrad {
    double loss = 0.0;
    ModelParams grad;
};

/// Mean cross-entropy between the model's softmax output and row-stochastic
/// targets (hard labels are one-hot rows). log() is clamped at kLogFloor.
LossAndGrad loss_and_grad(const ModelParams& params, const ModelSpec& spec, const Matrix& x,
                          const Matrix& targets);

inline constexpr double kLogFloor = 1e-12;

enum class OptimizerKind { sgd, adam };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step_count = 0;
    std::vector<double> first_moment;   // sgd velocity / adam m
    std::vector<double> second_moment;  // adam v

    static OptimizerState sgd(double learning_rate, double momentum = 0.0);
    static OptimizerState adam(double learning_rate = 1e-3);

    /// Applies one update in place; lazily sizes the moment buffers.
    void step(ModelParams& params, const ModelParams& grad);
};

struct TrainOptions {
    int epochs = 1;
    int batch_size = 32;
    std::uint64_t shuffle_seed = 0;
};

/// Minibatch training for `epochs` passes over (x, targets) in a seeded
/// shuffle order. Bit-deterministic given the inputs.
ModelParams train(ModelParams params, const ModelSpec& spec, const Matrix& x,
                  const Matrix& targets, OptimizerState& opt, const TrainOptions& options);

double accuracy(const ModelParams& params, const ModelSpec& spec, const Matrix& x,
                const std::vector<int>& labels);

}  // namespace cfd
