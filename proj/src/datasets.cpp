#include "iflow/datasets.hpp"

#include <cmath>

namespace iflow {

EightGaussians make_eight_gaussians(std::size_t n, double sigma_obs, Rng& rng) {
    if (!(sigma_obs >= 0.0)) config_error("eight-gaussians: sigma_obs must be nonnegative");
    const double h = std::sqrt(0.5);
    const double cx[8] = {0.0, 0.0, 1.0, -1.0, h, h, -h, -h};
    const double cy[8] = {1.0, -1.0, 0.0, 0.0, h, -h, h, -h};

    EightGaussians d;
    d.centers = Tensor({8, 2});
    for (std::size_t k = 0; k < 8; ++k) {
        d.centers.at2(k, 0) = float(cx[k]);
        d.centers.at2(k, 1) = float(cy[k]);
    }
    d.noisy = Tensor({n, 2});
    d.clean = Tensor({n, 2});
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = rng.uniform_index(8);
        d.labels[i] = int(k);
        d.clean.at2(i, 0) = float(cx[k]);
        d.clean.at2(i, 1) = float(cy[k]);
        d.noisy.at2(i, 0) = float(cx[k] + sigma_obs * rng.normal());
        d.noisy.at2(i, 1) = float(cy[k] + sigma_obs * rng.normal());
    }
    return d;
}

Gaussian1d make_gaussian1d(std::size_t n, double tau, double sigma, Rng& rng) {
    if (!(tau > 0.0) || !(sigma > 0.0))
        config_error("gaussian1d: tau and sigma must be positive");
    Gaussian1d d;
    d.x0 = Tensor({n, 1});
    d.x1 = Tensor({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = tau * rng.normal();
        d.x0[i] = float(x0);
        d.x1[i] = float(x0 + sigma * rng.normal());
    }
    return d;
}

} // namespace iflow
