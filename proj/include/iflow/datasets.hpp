#pragma once

#include "iflow/rng.hpp"
#include "iflow/tensor.hpp"

namespace iflow {

// Eight unit-circle modes observed through isotropic jitter. `clean` holds the
// matching mode atom for every observation, so the pair is a ready-made
// ground-truth coupling.
struct EightGaussians {
    Tensor noisy;   // n x 2
    Tensor clean;   // n x 2, row i is the center that produced noisy row i
    Tensor centers; // 8 x 2
    std::vector<int> labels;
};

EightGaussians make_eight_gaussians(std::size_t n, double sigma_obs, Rng& rng);

// Scalar linear-Gaussian pairs: x0 ~ N(0, tau^2), x1 = x0 + sigma z.
struct Gaussian1d {
    Tensor x0; // n x 1
    Tensor x1; // n x 1
};

Gaussian1d make_gaussian1d(std::size_t n, double tau, double sigma, Rng& rng);

} // namespace iflow
