#pragma once

#include "iflow/tensor.hpp"

namespace iflow {

// Result of fitting g = f + f^gamma u + w to a single noisy image via patch
// moment statistics: each small patch is assumed locally constant, so its
// sample variance tracks sigma_u^2 f^(2 gamma) + sigma_w^2 against its mean.
struct PgFit {
    double gamma = 0.0;
    double sigma_u = 0.0;
    double sigma_w = 0.0;
    double log_likelihood = 0.0;
    std::size_t n_patches = 0;
};

// patch is the side length of the non-overlapping square tiles. A flat image
// carries no slope information and is rejected.
PgFit fit_poisson_gaussian(const Tensor& img, int patch = 4);

} // namespace iflow
