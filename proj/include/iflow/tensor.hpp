#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "iflow/common.hpp"
#include "iflow/rng.hpp"

namespace iflow {

// Dense row-major value carrier. Files and checkpoints always hold the float
// instantiation; the double one exists for oracles and the spectral solver.
template <class T>
class TensorT {
public:
    TensorT() = default;
    explicit TensorT(std::vector<std::size_t> shape, T fill = T(0))
        : shape_(std::move(shape)), data_(count(shape_), fill) {}
    TensorT(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_))
            data_error("tensor data size " + std::to_string(data_.size()) +
                       " does not match shape (" + shape_str() + ")");
    }

    static TensorT zeros(std::vector<std::size_t> shape) { return TensorT(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t d) const { return shape_[d]; }

    // 2-D convenience
    std::size_t rows() const { return shape_.size() > 0 ? shape_[0] : 0; }
    std::size_t cols() const { return shape_.size() > 1 ? shape_[1] : 1; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    const T& at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    std::string shape_str() const {
        std::string s;
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s.empty() ? "scalar" : s;
    }

    void fill_normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
        for (auto& v : data_) v = T(mean + stddev * rng.normal());
    }

    void fill_uniform(Rng& rng, double lo, double hi) {
        for (auto& v : data_) v = T(rng.uniform(lo, hi));
    }

    TensorT<T> row(std::size_t r) const {
        TensorT<T> out({shape_[1]});
        for (std::size_t c = 0; c < shape_[1]; ++c) out[c] = at2(r, c);
        return out;
    }

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto e : shape) n *= e;
        return n;
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;

template <class To, class From>
TensorT<To> cast(const TensorT<From>& t) {
    TensorT<To> out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = To(t[i]);
    return out;
}

// Gathers rows of a 2-D tensor.
template <class T>
TensorT<T> take_rows(const TensorT<T>& x, const std::vector<std::size_t>& idx) {
    if (x.ndim() != 2) data_error("take_rows expects a 2-D tensor, got " + x.shape_str());
    TensorT<T> out({idx.size(), x.cols()});
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out.at2(r, c) = x.at2(idx[r], c);
    return out;
}

} // namespace iflow
