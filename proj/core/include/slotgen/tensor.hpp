#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "slotgen/common.hpp"

namespace slotgen::numcore {

/// Dense row-major tensor. Rank 1 and 2 cover everything the model needs;
/// training uses float, gradient checking double.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
        std::size_t n = 1;
        for (std::size_t d : shape_) {
            if (d == 0) raise(Errc::shape_mismatch, "zero dimension in tensor shape");
            n *= d;
        }
        data_.assign(n, T(0));
    }

    static Tensor vec(std::size_t n) { return Tensor({n}); }
    static Tensor mat(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }

    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* row(std::size_t r) { return data_.data() + r * cols(); }
    const T* row(std::size_t r) const { return data_.data() + r * cols(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    void fill(T v) { data_.assign(data_.size(), v); }
    void zero() { fill(T(0)); }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

template <typename T>
inline void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b)) raise(Errc::shape_mismatch, what);
}

inline void require(bool cond, const char* what) {
    if (!cond) raise(Errc::shape_mismatch, what);
}

}  // namespace slotgen::numcore
