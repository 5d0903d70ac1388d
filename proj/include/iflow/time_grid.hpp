#pragma once

#include <vector>

#include "iflow/common.hpp"
#include "iflow/tensor.hpp"

namespace iflow {

// Strictly increasing discretization of [eps, t_end]; index 0 is the data end.
struct TimeGrid {
    std::vector<double> t;

    int size() const { return int(t.size()); }
    double operator[](int i) const { return t[std::size_t(i)]; }
    double front() const { return t.front(); }
    double back() const { return t.back(); }
};

// t_i = (eps^(1/rho) + (i-1)/(n-1) * (t_end^(1/rho) - eps^(1/rho)))^rho, i=1..n.
// rho=1 degenerates to a uniform grid; endpoints are pinned exactly.
TimeGrid make_time_grid(double eps = 0.002, double t_end = 1.0, double rho = 7.0, int n = 11);

// Linear interpolation path between a clean state and its noisy counterpart:
// x_t = x0 + t * (x1 - x0), du/dt constant u = x1 - x0.
template <class T>
TensorT<T> path_field(const TensorT<T>& x0, const TensorT<T>& x1) {
    if (!x0.same_shape(x1))
        config_error("path endpoints shape mismatch: " + x0.shape_str() + " vs " + x1.shape_str());
    TensorT<T> u(x0.shape());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = x1[i] - x0[i];
    return u;
}

// Per-row times: t.size() must equal the row count of 2-D inputs.
template <class T>
TensorT<T> path_sample(const TensorT<T>& x0, const TensorT<T>& x1, const std::vector<double>& t) {
    if (!x0.same_shape(x1))
        config_error("path endpoints shape mismatch: " + x0.shape_str() + " vs " + x1.shape_str());
    if (x0.ndim() != 2 || t.size() != x0.rows())
        config_error("path_sample needs one time per row");
    TensorT<T> out(x0.shape());
    for (std::size_t r = 0; r < x0.rows(); ++r) {
        const T tr = T(t[r]);
        for (std::size_t c = 0; c < x0.cols(); ++c)
            out.at2(r, c) = x0.at2(r, c) + tr * (x1.at2(r, c) - x0.at2(r, c));
    }
    return out;
}

// One Euler step toward the data end along the conditional field.
template <class T>
TensorT<T> backward_step(const TensorT<T>& x_hi, const TensorT<T>& u, double t_hi, double t_lo) {
    if (!x_hi.same_shape(u))
        config_error("backward_step shape mismatch: " + x_hi.shape_str() + " vs " + u.shape_str());
    if (t_lo > t_hi) config_error("backward_step expects t_lo <= t_hi");
    TensorT<T> out(x_hi.shape());
    const T dt = T(t_hi - t_lo);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x_hi[i] - u[i] * dt;
    return out;
}

// Row-wise variant with one (t_hi, t_lo) pair per row.
template <class T>
TensorT<T> backward_step_rows(const TensorT<T>& x_hi, const TensorT<T>& u,
                              const std::vector<double>& t_hi, const std::vector<double>& t_lo) {
    if (!x_hi.same_shape(u) || x_hi.ndim() != 2 || t_hi.size() != x_hi.rows() ||
        t_lo.size() != x_hi.rows())
        config_error("backward_step_rows needs matching shapes and one time pair per row");
    TensorT<T> out(x_hi.shape());
    for (std::size_t r = 0; r < x_hi.rows(); ++r) {
        if (t_lo[r] > t_hi[r]) config_error("backward_step expects t_lo <= t_hi");
        const T dt = T(t_hi[r] - t_lo[r]);
        for (std::size_t c = 0; c < x_hi.cols(); ++c)
            out.at2(r, c) = x_hi.at2(r, c) - u.at2(r, c) * dt;
    }
    return out;
}

} // namespace iflow
