#include "iflow/time_grid.hpp"

#include <cmath>

namespace iflow {

TimeGrid make_time_grid(double eps, double t_end, double rho, int n) {
    if (n < 2) config_error("time grid needs at least 2 points, got " + std::to_string(n));
    if (!(eps > 0.0)) config_error("time grid eps must be positive");
    if (!(eps < t_end)) config_error("time grid needs eps < t_end");
    if (!(rho > 0.0)) config_error("time grid rho must be positive");

    TimeGrid grid;
    grid.t.resize(std::size_t(n));
    const double lo = std::pow(eps, 1.0 / rho);
    const double hi = std::pow(t_end, 1.0 / rho);
    for (int i = 0; i < n; ++i) {
        const double frac = double(i) / double(n - 1);
        grid.t[std::size_t(i)] = std::pow(lo + frac * (hi - lo), rho);
    }
    // pow round trips are not exact; the endpoints are contractual
    grid.t.front() = eps;
    grid.t.back() = t_end;
    return grid;
}

} // namespace iflow
