#pragma once

#include <functional>

#include "iflow/tensor.hpp"
#include "iflow/time_grid.hpp"

namespace iflow {

// Velocity field evaluated on a batch at one shared time.
using OdeField = std::function<Tensor(const Tensor& x, double t)>;

// Explicit Euler down the grid: x <- x - v(x, t_i) (t_i - t_{i-1}) for
// i = N..2, so the field is evaluated N-1 times and the result sits at the
// first grid node.
Tensor solve_ode_backward(const Tensor& x1, const TimeGrid& grid, const OdeField& v);

} // namespace iflow
