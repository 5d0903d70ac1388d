#pragma once

#include <optional>
#include <string>
#include <variant>

#include "iflow/rng.hpp"
#include "iflow/serialize.hpp"
#include "iflow/tensor.hpp"

namespace iflow {

// Forward observation processes p(x1 | x0). All stochastic branches draw with
// the caller's stream; the NS branch is a deterministic spectral simulation
// (the conditional-ODE route for invertible dynamics).

struct AdditiveGaussian {
    double sigma = 25.0;
};

// eta = white noise convolved with g(r) = cos(|r|) exp(-r^2 / (2 a^2)) / (2 pi a^2),
// zero padded. Operates on 2-D states; batches of flattened images need
// height/width set.
struct CorrelatedGaussian {
    double sigma = 25.0;
    double a = 2.0;
    int radius = 8;
    std::size_t height = 0;
    std::size_t width = 0;
};

// dx = (s/2)(a(1-x) - b x) dt + sqrt(s x (1-x)) dw on [0,1], Euler-Maruyama.
struct JacobiProcess {
    double s = 1.0;
    double a = 1.0;
    double b = 1.0;
    int em_steps = 100;
};

// x1 = zeta * Poisson(x0 / zeta)
struct PoissonProcess {
    double zeta = 0.01;
};

// x1 = x0 * Gamma(k, 1/k), unit-mean multiplier
struct GammaProcess {
    double k = 100.0;
};

// x1 = x0 * Rayleigh(sigma_r); the multiplier mean stays uncorrected
struct RayleighProcess {
    double sigma_r = 0.3;
};

// g = f + f^gamma * u + w with u ~ N(0, sigma_u^2), w ~ N(0, sigma_w^2)
struct PoissonGaussianProcess {
    double gamma = 1.0;
    double sigma_u = 0.05;
    double sigma_w = 2.0;
};

// one multiplicative branch followed by additive Gaussian noise
struct CompoundProcess {
    std::string base = "poisson"; // poisson | gamma | rayleigh
    double param = 0.01;          // zeta / k / sigma_r of the base
    double sigma_add = 10.0;
};

// x1 = spectral Navier-Stokes evolution of x0 over t_end; rows are flattened
// (vx | vy) fields on an m x m grid. dt = 0 picks the step from the CFL and
// diffusive stability bounds.
struct NsTransform {
    int m = 64;
    double nu = 1e-3;
    double t_end = 0.1;
    double dt = 0.0;
};

using Process = std::variant<AdditiveGaussian, CorrelatedGaussian, JacobiProcess, PoissonProcess,
                             GammaProcess, RayleighProcess, PoissonGaussianProcess,
                             CompoundProcess, NsTransform>;

Tensor sample_noise(const Process& proc, const Tensor& x0, Rng& rng);

// Declared state domain, used by trainers to clamp bootstrapped states before
// redrawing. The samplers themselves reject out-of-domain inputs.
std::optional<std::pair<double, double>> process_domain(const Process& proc);

bool process_is_deterministic(const Process& proc);

std::string process_kind(const Process& proc);

// Flat config dialect, keys under "noise.". Unknown keys are rejected.
Process process_from_kv(const KvMap& kv);
KvMap process_to_kv(const Process& proc);

// Value of the correlated-noise kernel at integer offset (dx, dy).
double correlated_kernel(const CorrelatedGaussian& proc, int dx, int dy);

} // namespace iflow
