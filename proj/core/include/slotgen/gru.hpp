#pragma once

#include <string>
#include <vector>

#include "slotgen/ops.hpp"

namespace slotgen::numcore {

/// Gated recurrent unit parameters. w_* act on the input (hidden x input),
/// u_* on the previous hidden state (hidden x hidden).
template <typename T>
struct GruParams {
    Tensor<T> w_update, u_update, b_update;
    Tensor<T> w_reset, u_reset, b_reset;
    Tensor<T> w_cand, u_cand, b_cand;

    GruParams() = default;
    GruParams(std::size_t input_dim, std::size_t hidden_dim)
        : w_update(Tensor<T>::mat(hidden_dim, input_dim)),
          u_update(Tensor<T>::mat(hidden_dim, hidden_dim)),
          b_update(Tensor<T>::vec(hidden_dim)),
          w_reset(Tensor<T>::mat(hidden_dim, input_dim)),
          u_reset(Tensor<T>::mat(hidden_dim, hidden_dim)),
          b_reset(Tensor<T>::vec(hidden_dim)),
          w_cand(Tensor<T>::mat(hidden_dim, input_dim)),
          u_cand(Tensor<T>::mat(hidden_dim, hidden_dim)),
          b_cand(Tensor<T>::vec(hidden_dim)) {}

    std::size_t input_dim() const { return w_update.cols(); }
    std::size_t hidden_dim() const { return w_update.rows(); }

    template <typename F>
    void for_each(const std::string& prefix, F&& f) {
        f(prefix + ".w_update", w_update);
        f(prefix + ".u_update", u_update);
        f(prefix + ".b_update", b_update);
        f(prefix + ".w_reset", w_reset);
        f(prefix + ".u_reset", u_reset);
        f(prefix + ".b_reset", b_reset);
        f(prefix + ".w_cand", w_cand);
        f(prefix + ".u_cand", u_cand);
        f(prefix + ".b_cand", b_cand);
    }

    void zero() {
        for_each("", [](const std::string&, Tensor<T>& t) { t.zero(); });
    }
};

/// Forward activations one backward step needs.
template <typename T>
struct GruCache {
    Tensor<T> x, h_prev;
    Tensor<T> update, reset, reset_h, cand;  // z, r, r o h_prev, h~
};

/// One GRU step:
///   z = sigmoid(Wz x + Uz h_prev + bz)
///   r = sigmoid(Wr x + Ur h_prev + br)
///   h~ = tanh(Wc x + Uc (r o h_prev) + bc)
///   h = (1 - z) o h_prev + z o h~
template <typename T>
Tensor<T> gru_forward(const Tensor<T>& x, const Tensor<T>& h_prev, const GruParams<T>& p,
                      GruCache<T>* cache = nullptr) {
    require(x.size() == p.input_dim(), "gru input size");
    require(h_prev.size() == p.hidden_dim(), "gru hidden size");
    const std::size_t d = p.hidden_dim();

    Tensor<T> z = Tensor<T>::vec(d);
    Tensor<T> r = Tensor<T>::vec(d);
    Tensor<T> cand = Tensor<T>::vec(d);
    Tensor<T> reset_h = Tensor<T>::vec(d);

    matvec(p.w_update, x.data(), z.data());
    matvec(p.u_update, h_prev.data(), z.data(), true);
    matvec(p.w_reset, x.data(), r.data());
    matvec(p.u_reset, h_prev.data(), r.data(), true);
    for (std::size_t i = 0; i < d; ++i) {
        z[i] = logistic(z[i] + p.b_update[i]);
        r[i] = logistic(r[i] + p.b_reset[i]);
        reset_h[i] = r[i] * h_prev[i];
    }
    matvec(p.w_cand, x.data(), cand.data());
    matvec(p.u_cand, reset_h.data(), cand.data(), true);

    Tensor<T> h = Tensor<T>::vec(d);
    for (std::size_t i = 0; i < d; ++i) {
        cand[i] = std::tanh(cand[i] + p.b_cand[i]);
        h[i] = (T(1) - z[i]) * h_prev[i] + z[i] * cand[i];
    }

    if (cache != nullptr) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->update = std::move(z);
        cache->reset = std::move(r);
        cache->reset_h = std::move(reset_h);
        cache->cand = std::move(cand);
    }
    return h;
}

/// Convenience overload matching the plain-cell contract.
template <typename T>
Tensor<T> gru_cell(const Tensor<T>& x, const Tensor<T>& h_prev, const GruParams<T>& p) {
    return gru_forward(x, h_prev, p);
}

/// Backward for one step. `dh` is dLoss/dh; parameter gradients accumulate
/// into `grads`, input/state gradients accumulate into dx / dh_prev.
template <typename T>
void gru_backward(const GruParams<T>& p, const GruCache<T>& cache, const Tensor<T>& dh,
                  GruParams<T>& grads, Tensor<T>* dx, Tensor<T>* dh_prev) {
    const std::size_t d = p.hidden_dim();

    Tensor<T> da_cand = Tensor<T>::vec(d);
    Tensor<T> da_update = Tensor<T>::vec(d);
    Tensor<T> d_reset_h = Tensor<T>::vec(d);
    Tensor<T> da_reset = Tensor<T>::vec(d);

    for (std::size_t i = 0; i < d; ++i) {
        const T z = cache.update[i];
        const T c = cache.cand[i];
        // h = (1-z) h_prev + z c
        da_cand[i] = dh[i] * z * (T(1) - c * c);
        da_update[i] = dh[i] * (c - cache.h_prev[i]) * z * (T(1) - z);
    }
    matvec_transposed(p.u_cand, da_cand.data(), d_reset_h.data());
    for (std::size_t i = 0; i < d; ++i) {
        const T r = cache.reset[i];
        da_reset[i] = d_reset_h[i] * cache.h_prev[i] * r * (T(1) - r);
    }

    add_outer(grads.w_cand, da_cand.data(), cache.x.data());
    add_outer(grads.u_cand, da_cand.data(), cache.reset_h.data());
    add_outer(grads.w_update, da_update.data(), cache.x.data());
    add_outer(grads.u_update, da_update.data(), cache.h_prev.data());
    add_outer(grads.w_reset, da_reset.data(), cache.x.data());
    add_outer(grads.u_reset, da_reset.data(), cache.h_prev.data());
    for (std::size_t i = 0; i < d; ++i) {
        grads.b_cand[i] += da_cand[i];
        grads.b_update[i] += da_update[i];
        grads.b_reset[i] += da_reset[i];
    }

    if (dx != nullptr) {
        matvec_transposed(p.w_cand, da_cand.data(), dx->data(), true);
        matvec_transposed(p.w_update, da_update.data(), dx->data(), true);
        matvec_transposed(p.w_reset, da_reset.data(), dx->data(), true);
    }
    if (dh_prev != nullptr) {
        for (std::size_t i = 0; i < d; ++i) {
            (*dh_prev)[i] += dh[i] * (T(1) - cache.update[i]) +
                             d_reset_h[i] * cache.reset[i];
        }
        matvec_transposed(p.u_update, da_update.data(), dh_prev->data(), true);
        matvec_transposed(p.u_reset, da_reset.data(), dh_prev->data(), true);
    }
}

}  // namespace slotgen::numcore
