#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slotgen/adam.hpp"

namespace slotgen::numcore {

template <typename T>
struct GradCheckReport {
    T max_rel_error = T(0);
    std::string worst_param;
    std::size_t worst_index = 0;
    T worst_analytic = T(0);
    T worst_numeric = T(0);
};

/// Central-difference comparison against analytic gradients.
///
/// The caller runs its backward pass first so each ParamRef's grad tensor
/// holds the analytic gradient; `loss_fn` must re-evaluate the scalar loss
/// for the current parameter values (deterministic, dropout off). Relative
/// error uses |a - n| / max(|a| + |n|, floor); the floor keeps finite-
/// difference noise on near-zero gradients from registering as error.
template <typename T>
GradCheckReport<T> grad_check(const std::function<T()>& loss_fn,
                              const std::vector<ParamRef<T>>& params,
                              T eps = T(1e-5),
                              T denom_floor = T(1e-3)) {
    GradCheckReport<T> report;
    for (const auto& p : params) {
        Tensor<T>& value = *p.value;
        const Tensor<T>& analytic = *p.grad;
        require_same_shape(value, analytic, "grad_check: parameter vs gradient shape");
        for (std::size_t i = 0; i < value.size(); ++i) {
            const T saved = value[i];
            value[i] = saved + eps;
            const T loss_plus = loss_fn();
            value[i] = saved - eps;
            const T loss_minus = loss_fn();
            value[i] = saved;

            const T numeric = (loss_plus - loss_minus) / (T(2) * eps);
            const T a = analytic[i];
            const T denom = std::max(std::abs(a) + std::abs(numeric), denom_floor);
            const T rel = std::abs(a - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = p.name;
                report.worst_index = i;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace slotgen::numcore
