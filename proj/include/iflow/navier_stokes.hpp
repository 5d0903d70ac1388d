#pragma once

#include <string>
#include <vector>

#include "iflow/rng.hpp"
#include "iflow/tensor.hpp"

namespace iflow {

// Incompressible velocity field on the periodic unit square, m x m grid,
// row-major with row = y index and column = x index.
struct VelocityField {
    int m = 0;
    Tensor vx;
    Tensor vy;
    double t = 0.0;
    double nu = 0.0;
};

// Vorticity-streamfunction pseudo-spectral integrator: integrating factor for
// the viscous term, RK4 on the advection term, 2/3-rule dealiasing. dt = 0
// derives the step from the diffusive and CFL bounds. The mean velocity is
// carried outside the vorticity and conserved exactly.
VelocityField ns_simulate(const VelocityField& v0, double nu, double dt, double t_end);

double ns_auto_dt(const VelocityField& v0, double nu);

// psi = sum_i A_i sin(kx_i x) cos(ky_i y); A ~ U[0,2], wavenumbers drawn from
// U[0,10] and snapped to integer multiples of 2 pi so every mode is periodic
// on the unit square. v = (d psi / dy, -d psi / dx), evaluated analytically.
VelocityField random_stream_field(Rng& rng, int n_modes, int m);

// vx = -a1 sin(2 pi y + phase1), vy = a2 sin(4 pi x + phase2)
VelocityField single_mode_field(int m, double a1, double a2, double phase1 = 0.0,
                                double phase2 = 0.0);

double field_energy(const VelocityField& v);       // mean kinetic energy
double field_divergence_max(const VelocityField& v); // sup norm of the spectral divergence
double field_max_speed(const VelocityField& v);

// Key=value header (ns.m, ns.t, ns.nu), blank line, then the vx and vy tensor
// records.
void save_field(const VelocityField& v, const std::string& path);
VelocityField load_field(const std::string& path);

// Training rows are [vx | vy] flattened.
std::vector<float> flatten_field(const VelocityField& v);
VelocityField unflatten_field(const float* data, int m);

} // namespace iflow
