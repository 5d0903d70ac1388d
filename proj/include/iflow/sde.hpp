#pragma once

#include <functional>
#include <vector>

#include "iflow/rng.hpp"

namespace iflow {

// Fills `out` with the drift / diffusion of the state at time t.
using SdeFn =
    std::function<void(const std::vector<double>& x, double t, std::vector<double>& out)>;

// Euler-Maruyama from t0 to t1 in uniform steps. One normal draw per state
// element per step, in element order, so runs are reproducible from the seed.
// With a zero diffusion this is exactly the forward Euler method.
std::vector<double> euler_maruyama(std::vector<double> x0, const SdeFn& drift,
                                   const SdeFn& diffusion, double t0, double t1, int steps,
                                   Rng& rng);

} // namespace iflow
