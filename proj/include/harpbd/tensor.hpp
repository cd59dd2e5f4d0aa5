#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "harpbd/common.hpp"

namespace harpbd {

/// Dense row-major float64 tensor. Rank is usually 2 in this codebase
/// (row-vector convention: a feature vector is 1 x D).
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(checked_numel(shape_)), 0.0);
    }

    Tensor(std::vector<int64_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        require(checked_numel(shape_) == static_cast<int64_t>(data_.size()),
                "Tensor: data size does not match shape");
    }

    static Tensor zeros(int64_t r, int64_t c) { return Tensor({r, c}); }

    static Tensor full(int64_t r, int64_t c, double v) {
        Tensor t({r, c});
        t.data_.assign(t.data_.size(), v);
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    int64_t rows() const {
        require(shape_.size() == 2, "Tensor::rows: rank-2 tensor required");
        return shape_[0];
    }
    int64_t cols() const {
        require(shape_.size() == 2, "Tensor::cols: rank-2 tensor required");
        return shape_[1];
    }

    double& operator()(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols() + c)]; }
    double operator()(int64_t r, int64_t c) const {
        return data_[static_cast<size_t>(r * cols() + c)];
    }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    void fill(double v) { data_.assign(data_.size(), v); }

    Tensor reshaped(std::vector<int64_t> shape) const {
        require(checked_numel(shape) == numel(), "Tensor::reshaped: element count mismatch");
        return Tensor(std::move(shape), data_);
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool bitwise_equal(const Tensor& o) const {
        if (shape_ != o.shape_) return false;
        for (size_t i = 0; i < data_.size(); ++i)
            if (std::bit_cast<uint64_t>(data_[i]) != std::bit_cast<uint64_t>(o.data_[i]))
                return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + ")";
    }

  private:
    static int64_t checked_numel(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            require(d >= 0, "Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

/// C = A * B for rank-2 tensors, accumulating into a preallocated output.
inline void matmul_into(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate = false) {
    const int64_t m = a.rows(), k = a.cols(), n = b.cols();
    require(b.rows() == k, "matmul: inner dimensions differ " + a.shape_str() + " vs " + b.shape_str());
    require(out.rows() == m && out.cols() == n, "matmul: bad output shape");
    double* o = out.data();
    const double* pa = a.data();
    const double* pb = b.data();
    if (!accumulate) out.fill(0.0);
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* orow = o + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = pb + p * n;
            for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor out({a.rows(), b.cols()});
    matmul_into(a, b, out);
    return out;
}

inline Tensor transpose(const Tensor& a) {
    Tensor out({a.cols(), a.rows()});
    for (int64_t i = 0; i < a.rows(); ++i)
        for (int64_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

}  // namespace harpbd
