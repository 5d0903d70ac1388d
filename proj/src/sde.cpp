#include "iflow/sde.hpp"

#include <cmath>

#include "iflow/common.hpp"

namespace iflow {

std::vector<double> euler_maruyama(std::vector<double> x, const SdeFn& drift,
                                   const SdeFn& diffusion, double t0, double t1, int steps,
                                   Rng& rng) {
    if (steps < 1) config_error("euler_maruyama: steps must be positive");
    if (!(t1 > t0)) config_error("euler_maruyama: need t1 > t0");
    const double dt = (t1 - t0) / double(steps);
    const double sdt = std::sqrt(dt);
    std::vector<double> mu(x.size()), sig(x.size());
    for (int s = 0; s < steps; ++s) {
        const double t = t0 + double(s) * dt;
        drift(x, t, mu);
        diffusion(x, t, sig);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dw = sig[i] == 0.0 ? 0.0 : sig[i] * sdt * rng.normal();
            x[i] += mu[i] * dt + dw;
            if (!std::isfinite(x[i]))
                numeric_error("euler_maruyama: state " + std::to_string(i) +
                              " became non-finite at step " + std::to_string(s + 1));
        }
    }
    return x;
}

} // namespace iflow
