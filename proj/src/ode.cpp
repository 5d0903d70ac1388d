#include "iflow/ode.hpp"

#include <cmath>

namespace iflow {

Tensor solve_ode_backward(const Tensor& x1, const TimeGrid& grid, const OdeField& v) {
    if (grid.t.size() < 2) config_error("solve_ode_backward: grid needs at least two nodes");
    Tensor x = x1;
    for (std::size_t i = grid.t.size() - 1; i >= 1; --i) {
        const double t = grid.t[i];
        const double dt = grid.t[i] - grid.t[i - 1];
        const Tensor vel = v(x, t);
        if (!vel.same_shape(x))
            data_error("solve_ode_backward: field returned shape " + vel.shape_str() +
                       " for state " + x.shape_str());
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] = float(double(x[k]) - double(vel[k]) * dt);
            if (!std::isfinite(x[k]))
                numeric_error("solve_ode_backward: state became non-finite at t = " +
                              std::to_string(t));
        }
    }
    return x;
}

} // namespace iflow
