#pragma once

#include <vector>

#include "iflow/rng.hpp"
#include "iflow/tensor.hpp"

namespace iflow {

// 10 log10(peak^2 / mse), capped at 200 dB so identical inputs stay finite.
double psnr(const Tensor& a, const Tensor& b, double peak = 255.0);

// Energy distance between the row samples of x and y, all-pairs V-statistic:
// 2 E|X-Y| - E|X-X'| - E|Y-Y'|. Nonnegative, zero iff the laws agree.
double energy_distance(const Tensor& x, const Tensor& y);

// Leave-one-out 1-NN two-sample accuracy over the pooled rows. 0.5 means the
// classifier cannot tell the sets apart.
double nn_accuracy(const Tensor& x, const Tensor& y);

struct Resampled {
    double value = 0.0;
    double se = 0.0;
};

// Repeats nn_accuracy on random half-subsamples of each side; se is the
// spread of the round values over sqrt(rounds).
Resampled nn_accuracy_resampled(const Tensor& x, const Tensor& y, Rng& rng, int rounds = 10);

// Isotropic Gaussian mixture with shared component scale tau.
struct MixtureSpec {
    Tensor centers;              // k x d
    std::vector<double> weights; // empty = uniform
    double tau = 1.0;
};

// E[x0 | x] under x = x0 + noise_std * z with x0 drawn from the mixture.
Tensor gm_posterior_mean(const MixtureSpec& mix, const Tensor& x, double noise_std);

// Exact draws from p(x0 | x1) for the same observation model; returns
// n_draws rows per input row, grouped by input.
Tensor gm_posterior_sample(const MixtureSpec& mix, const Tensor& x1, double noise_std,
                           std::size_t n_draws, Rng& rng);

// Euclidean distance from each row of x to its closest row of centers.
std::vector<double> nearest_center_distance(const Tensor& x, const Tensor& centers);

} // namespace iflow
