#pragma once

#include <string>
#include <vector>

#include "slotgen/tensor.hpp"

namespace slotgen::numcore {

/// A named parameter tensor with its gradient accumulator.
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value = nullptr;
    Tensor<T>* grad = nullptr;
};

template <typename T>
struct AdamState {
    T learning_rate = T(2e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);
    /// Learning rate multiplier applied when an epoch brings no dev gain.
    T lr_decay = T(0.9);
    long long step_count = 0;

    std::vector<Tensor<T>> first_moment;
    std::vector<Tensor<T>> second_moment;

    void init(const std::vector<ParamRef<T>>& params) {
        first_moment.clear();
        second_moment.clear();
        for (const auto& p : params) {
            first_moment.emplace_back(p.value->shape());
            second_moment.emplace_back(p.value->shape());
        }
        step_count = 0;
    }

    void decay_learning_rate() { learning_rate *= lr_decay; }
};

/// Bias-corrected Adam update over all registered parameters.
/// Throws NonFiniteGradient before touching any parameter.
template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, AdamState<T>& state) {
    if (state.first_moment.size() != params.size()) state.init(params);
    for (const auto& p : params) {
        require_same_shape(*p.value, *p.grad, "adam: parameter vs gradient shape");
        if (!p.grad->all_finite())
            raise(Errc::non_finite_gradient, "gradient of " + p.name + " is not finite");
    }

    ++state.step_count;
    const T b1 = state.beta1;
    const T b2 = state.beta2;
    const T bias1 = T(1) - std::pow(b1, static_cast<T>(state.step_count));
    const T bias2 = T(1) - std::pow(b2, static_cast<T>(state.step_count));

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<T>& value = *params[pi].value;
        const Tensor<T>& grad = *params[pi].grad;
        Tensor<T>& m = state.first_moment[pi];
        Tensor<T>& v = state.second_moment[pi];
        for (std::size_t i = 0; i < value.size(); ++i) {
            const T g = grad[i];
            m[i] = b1 * m[i] + (T(1) - b1) * g;
            v[i] = b2 * v[i] + (T(1) - b2) * g * g;
            const T m_hat = m[i] / bias1;
            const T v_hat = v[i] / bias2;
            value[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

}  // namespace slotgen::numcore
