#pragma once

#include <string>

#include "slotgen/ops.hpp"

namespace slotgen::numcore {

/// Additive attention: e_i = v . tanh(Ws s + Wm h_i), a = softmax(e).
template <typename T>
struct AttentionParams {
    Tensor<T> w_state;   // A x H
    Tensor<T> w_memory;  // A x H
    Tensor<T> v;         // A

    AttentionParams() = default;
    AttentionParams(std::size_t attn_dim, std::size_t hidden_dim)
        : w_state(Tensor<T>::mat(attn_dim, hidden_dim)),
          w_memory(Tensor<T>::mat(attn_dim, hidden_dim)),
          v(Tensor<T>::vec(attn_dim)) {}

    std::size_t attn_dim() const { return v.size(); }

    template <typename F>
    void for_each(const std::string& prefix, F&& f) {
        f(prefix + ".w_state", w_state);
        f(prefix + ".w_memory", w_memory);
        f(prefix + ".v", v);
    }

    void zero() {
        w_state.zero();
        w_memory.zero();
        v.zero();
    }
};

template <typename T>
struct AttentionCache {
    Tensor<T> s_prev;     // H
    Tensor<T> activated;  // m x A, tanh(Ws s + Wm h_i)
    Tensor<T> weights;    // m
};

/// `memory_proj` is the per-sentence precomputation Wm * h_i (m x A); pass an
/// empty tensor to have it computed on the fly.
template <typename T>
Tensor<T> attention_forward(const Tensor<T>& s_prev, const Tensor<T>& memory,
                            const Tensor<T>& memory_proj, const AttentionParams<T>& p,
                            AttentionCache<T>* cache = nullptr) {
    require(memory.rank() == 2 && memory.rows() >= 1, "attention needs a non-empty memory");
    require(s_prev.size() == memory.cols(), "attention state size");
    const std::size_t m = memory.rows();
    const std::size_t a_dim = p.attn_dim();

    Tensor<T> state_proj = Tensor<T>::vec(a_dim);
    matvec(p.w_state, s_prev.data(), state_proj.data());

    Tensor<T> activated = Tensor<T>::mat(m, a_dim);
    Tensor<T> scores = Tensor<T>::vec(m);
    for (std::size_t i = 0; i < m; ++i) {
        T* qrow = activated.row(i);
        if (memory_proj.size() == m * a_dim) {
            const T* mp = memory_proj.row(i);
            for (std::size_t k = 0; k < a_dim; ++k) qrow[k] = mp[k];
        } else {
            matvec(p.w_memory, memory.row(i), qrow);
        }
        for (std::size_t k = 0; k < a_dim; ++k) qrow[k] = std::tanh(qrow[k] + state_proj[k]);
        scores[i] = dot(p.v.data(), qrow, a_dim);
    }
    softmax_inplace(scores.data(), m);

    if (cache != nullptr) {
        cache->s_prev = s_prev;
        cache->activated = std::move(activated);
        cache->weights = scores;
    }
    return scores;
}

/// Spec-shaped convenience: weights over memory rows for a decoder state.
template <typename T>
Tensor<T> attention_scores(const Tensor<T>& s_prev, const Tensor<T>& memory,
                           const AttentionParams<T>& p) {
    return attention_forward(s_prev, memory, Tensor<T>(), p);
}

/// C = sum_i a_i h_i.
template <typename T>
Tensor<T> context(const Tensor<T>& weights, const Tensor<T>& memory) {
    require(weights.size() == memory.rows(), "context weights vs memory rows");
    Tensor<T> out = Tensor<T>::vec(memory.cols());
    for (std::size_t i = 0; i < memory.rows(); ++i)
        axpy(weights[i], memory.row(i), out.data(), memory.cols());
    return out;
}

/// Backward through context + attention given dL/dC. Accumulates into
/// d_memory (m x H), ds_prev (H) and the parameter gradients.
template <typename T>
void attention_backward(const AttentionParams<T>& p, const Tensor<T>& memory,
                        const AttentionCache<T>& cache, const Tensor<T>& d_context,
                        AttentionParams<T>& grads, Tensor<T>& d_memory, Tensor<T>& ds_prev) {
    const std::size_t m = memory.rows();
    const std::size_t h_dim = memory.cols();
    const std::size_t a_dim = p.attn_dim();

    // C = sum a_i h_i
    Tensor<T> d_weights = Tensor<T>::vec(m);
    for (std::size_t i = 0; i < m; ++i) {
        d_weights[i] = dot(d_context.data(), memory.row(i), h_dim);
        axpy(cache.weights[i], d_context.data(), d_memory.row(i), h_dim);
    }

    // softmax backward: de_i = a_i (dw_i - sum_j a_j dw_j)
    T mixed = T(0);
    for (std::size_t i = 0; i < m; ++i) mixed += cache.weights[i] * d_weights[i];
    Tensor<T> d_scores = Tensor<T>::vec(m);
    for (std::size_t i = 0; i < m; ++i)
        d_scores[i] = cache.weights[i] * (d_weights[i] - mixed);

    // e_i = v . q_i with q_i = tanh(Ws s + Wm h_i)
    Tensor<T> dq = Tensor<T>::vec(a_dim);
    Tensor<T> dq_total = Tensor<T>::vec(a_dim);
    for (std::size_t i = 0; i < m; ++i) {
        const T* q = cache.activated.row(i);
        for (std::size_t k = 0; k < a_dim; ++k) {
            grads.v[k] += d_scores[i] * q[k];
            dq[k] = d_scores[i] * p.v[k] * (T(1) - q[k] * q[k]);
            dq_total[k] += dq[k];
        }
        add_outer(grads.w_memory, dq.data(), memory.row(i));
        matvec_transposed(p.w_memory, dq.data(), d_memory.row(i), true);
    }
    add_outer(grads.w_state, dq_total.data(), cache.s_prev.data());
    matvec_transposed(p.w_state, dq_total.data(), ds_prev.data(), true);
}

}  // namespace slotgen::numcore
