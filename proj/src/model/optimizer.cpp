#include "cfd/model.hpp"

#include "cfd/error.hpp"

#include <cmath>

namespace cfd {

OptimizerState OptimizerState::sgd(double learning_rate, double momentum) {
    OptimizerState s;
    s.kind = OptimizerKind::sgd;
    s.learning_rate = learning_rate;
    s.momentum = momentum;
    return s;
}

OptimizerState OptimizerState::adam(double learning_rate) {
    OptimizerState s;
    s.kind = OptimizerKind::adam;
    s.learning_rate = learning_rate;
    return s;
}

void OptimizerState::step(ModelParams& params, const ModelParams& grad) {
    if (!params.same_layout(grad)) throw ShapeError("gradient layout differs from parameters");
    const std::size_t n = params.param_count();
    auto theta = params.values();
    const auto g = grad.values();
    if (first_moment.size() != n) first_moment.assign(n, 0.0);
    ++step_count;

    if (kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < n; ++i) {
            first_moment[i] = momentum * first_moment[i] + g[i];
            theta[i] -= learning_rate * first_moment[i];
        }
        return;
    }

    if (second_moment.size() != n) second_moment.assign(n, 0.0);
    const double t = static_cast<double>(step_count);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
        first_moment[i] = beta1 * first_moment[i] + (1.0 - beta1) * g[i];
        second_moment[i] = beta2 * second_moment[i] + (1.0 - beta2) * g[i] * g[i];
        const double m_hat = first_moment[i] / c1;
        const double v_hat = second_moment[i] / c2;
        theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

}  // namespace cfd
