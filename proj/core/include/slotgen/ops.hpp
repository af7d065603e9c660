#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "slotgen/tensor.hpp"

namespace slotgen::numcore {

// ---- dense kernels ----

/// y (+)= W x, W: r x c
template <typename T>
void matvec(const Tensor<T>& w, const T* x, T* y, bool accumulate = false) {
    const std::size_t r = w.rows();
    const std::size_t c = w.cols();
    const T* wd = w.data();
    for (std::size_t i = 0; i < r; ++i) {
        T acc = accumulate ? y[i] : T(0);
        const T* wrow = wd + i * c;
        for (std::size_t j = 0; j < c; ++j) acc += wrow[j] * x[j];
        y[i] = acc;
    }
}

/// y (+)= W^T x, W: r x c, x: r, y: c
template <typename T>
void matvec_transposed(const Tensor<T>& w, const T* x, T* y, bool accumulate = false) {
    const std::size_t r = w.rows();
    const std::size_t c = w.cols();
    const T* wd = w.data();
    if (!accumulate)
        for (std::size_t j = 0; j < c; ++j) y[j] = T(0);
    for (std::size_t i = 0; i < r; ++i) {
        const T xi = x[i];
        if (xi == T(0)) continue;
        const T* wrow = wd + i * c;
        for (std::size_t j = 0; j < c; ++j) y[j] += wrow[j] * xi;
    }
}

/// G += u v^T, G: r x c
template <typename T>
void add_outer(Tensor<T>& g, const T* u, const T* v) {
    const std::size_t r = g.rows();
    const std::size_t c = g.cols();
    T* gd = g.data();
    for (std::size_t i = 0; i < r; ++i) {
        const T ui = u[i];
        if (ui == T(0)) continue;
        T* grow = gd + i * c;
        for (std::size_t j = 0; j < c; ++j) grow[j] += ui * v[j];
    }
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T logistic(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

// ---- softmax / cross entropy ----

/// In-place softmax with max subtraction; sums to 1 and is strictly positive.
template <typename T>
void softmax_inplace(T* x, std::size_t n) {
    require(n > 0, "softmax over an empty vector");
    T mx = x[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    T sum = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    for (std::size_t i = 0; i < n; ++i) x[i] /= sum;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    Tensor<T> out = logits;
    softmax_inplace(out.data(), out.size());
    return out;
}

/// Cross-entropy of softmax(logits) against a gold index. Returns the loss
/// and the gradient w.r.t. the logits (softmax - onehot).
template <typename T>
std::pair<T, Tensor<T>> softmax_xent(const Tensor<T>& logits, std::size_t gold) {
    if (gold >= logits.size())
        raise(Errc::index_out_of_range,
              "gold index " + std::to_string(gold) + " >= " + std::to_string(logits.size()));
    Tensor<T> grad = softmax(logits);
    T p = grad[gold];
    // p > 0 by construction; clamp anyway against denormal underflow
    T loss = -std::log(std::max(p, std::numeric_limits<T>::min()));
    grad[gold] -= T(1);
    return {loss, std::move(grad)};
}

// ---- dropout ----

enum class DropoutMode { train, eval };

/// Inverted dropout: each element is zeroed with probability p and survivors
/// are scaled by 1/(1-p). Eval mode is the identity. When `mask` is given it
/// receives the per-element scale, which is also the backward multiplier.
/// Never applied to embedding outputs; that exclusion is the caller's.
template <typename T>
void dropout_inplace(Tensor<T>& x, T p, DropoutMode mode, Rng& rng, Tensor<T>* mask = nullptr) {
    if (p < T(0) || p >= T(1)) raise(Errc::config_error, "dropout rate must be in [0, 1)");
    if (mask != nullptr && !mask->same_shape(x)) *mask = x;
    if (mode == DropoutMode::eval || p == T(0)) {
        if (mask != nullptr) mask->fill(T(1));
        return;
    }
    const T keep_scale = T(1) / (T(1) - p);
    for (std::size_t i = 0; i < x.size(); ++i) {
        T scale = (rng.next_double() < static_cast<double>(p)) ? T(0) : keep_scale;
        x[i] *= scale;
        if (mask != nullptr) (*mask)[i] = scale;
    }
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T p, DropoutMode mode, Rng& rng) {
    Tensor<T> out = x;
    dropout_inplace(out, p, mode, rng);
    return out;
}

}  // namespace slotgen::numcore
