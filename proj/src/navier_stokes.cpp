#include "iflow/navier_stokes.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

#include "iflow/fft.hpp"
#include "iflow/serialize.hpp"

namespace iflow {

namespace {

using cd = std::complex<double>;

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct SpectralCtx {
    int m;
    std::vector<double> kx, ky, k2; // per mode, row-major, row = y frequency
    std::vector<char> keep;         // 2/3-rule mask
    double mean_vx = 0.0, mean_vy = 0.0;

    explicit SpectralCtx(int m_) : m(m_) {
        const std::size_t n = std::size_t(m) * std::size_t(m);
        kx.resize(n);
        ky.resize(n);
        k2.resize(n);
        keep.resize(n);
        const int cutoff = m / 3;
        for (int r = 0; r < m; ++r) {
            const int jy = r <= m / 2 ? r : r - m;
            for (int c = 0; c < m; ++c) {
                const int jx = c <= m / 2 ? c : c - m;
                const std::size_t i = std::size_t(r) * std::size_t(m) + std::size_t(c);
                kx[i] = 2.0 * M_PI * double(jx);
                ky[i] = 2.0 * M_PI * double(jy);
                k2[i] = kx[i] * kx[i] + ky[i] * ky[i];
                keep[i] = std::abs(jx) <= cutoff && std::abs(jy) <= cutoff;
            }
        }
    }

    // N(w) = -dealias(FFT(v . grad w)); also reports the advecting max speed.
    void nonlinear(const std::vector<cd>& w_hat, std::vector<cd>& n_hat, double* max_speed) const {
        const std::size_t n = w_hat.size();
        std::vector<cd> vxh(n), vyh(n), wxh(n), wyh(n);
        for (std::size_t i = 0; i < n; ++i) {
            const cd psi = k2[i] > 0.0 ? w_hat[i] / k2[i] : cd(0.0);
            vxh[i] = cd(0.0, ky[i]) * psi;
            vyh[i] = cd(0.0, -kx[i]) * psi;
            wxh[i] = cd(0.0, kx[i]) * w_hat[i];
            wyh[i] = cd(0.0, ky[i]) * w_hat[i];
        }
        const std::size_t mm = std::size_t(m);
        fft2_inplace(vxh, mm, true);
        fft2_inplace(vyh, mm, true);
        fft2_inplace(wxh, mm, true);
        fft2_inplace(wyh, mm, true);

        double speed = 0.0;
        std::vector<cd> adv(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double vx = vxh[i].real() + mean_vx;
            const double vy = vyh[i].real() + mean_vy;
            speed = std::max({speed, std::abs(vx), std::abs(vy)});
            adv[i] = cd(vx * wxh[i].real() + vy * wyh[i].real(), 0.0);
        }
        fft2_inplace(adv, mm, false);
        n_hat.resize(n);
        for (std::size_t i = 0; i < n; ++i) n_hat[i] = keep[i] ? -adv[i] : cd(0.0);
        n_hat[0] = cd(0.0); // mean vorticity stays zero on the torus
        if (max_speed) *max_speed = speed;
    }
};

std::vector<cd> to_spectral(const Tensor& field, int m) {
    std::vector<cd> out(std::size_t(m) * std::size_t(m));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cd(double(field[i]), 0.0);
    fft2_inplace(out, std::size_t(m), false);
    return out;
}

void check_field(const VelocityField& v, const char* what) {
    if (!power_of_two(v.m) || v.m < 4)
        config_error(std::string(what) + ": grid size must be a power of two >= 4, got " +
                     std::to_string(v.m));
    const std::size_t mm = std::size_t(v.m);
    if (v.vx.ndim() != 2 || v.vx.extent(0) != mm || v.vx.extent(1) != mm ||
        !v.vx.same_shape(v.vy))
        data_error(std::string(what) + ": velocity component shapes " + v.vx.shape_str() +
                   " / " + v.vy.shape_str() + " do not match an " + std::to_string(v.m) + "^2 grid");
}

} // namespace

double field_max_speed(const VelocityField& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.vx.size(); ++i)
        s = std::max({s, std::abs(double(v.vx[i])), std::abs(double(v.vy[i]))});
    return s;
}

double ns_auto_dt(const VelocityField& v0, double nu) {
    const double pim = M_PI * double(v0.m);
    double dt = 1e9;
    if (nu > 0.0) dt = std::min(dt, 0.9 / (nu * pim * pim));
    const double speed = field_max_speed(v0);
    if (speed > 0.0) dt = std::min(dt, 0.4 / (speed * double(v0.m)));
    return dt;
}

VelocityField ns_simulate(const VelocityField& v0, double nu, double dt, double t_end) {
    check_field(v0, "ns_simulate");
    if (nu < 0.0) config_error("ns_simulate: viscosity must be nonnegative");
    if (!(t_end > 0.0)) config_error("ns_simulate: t_end must be positive");

    if (dt == 0.0) dt = std::min(ns_auto_dt(v0, nu), t_end);
    if (!(dt > 0.0)) config_error("ns_simulate: dt must be positive");
    const double pim = M_PI * double(v0.m);
    if (dt * nu * pim * pim >= 1.0)
        config_error("ns_simulate: dt " + std::to_string(dt) +
                     " violates the diffusive stability bound dt*nu*(pi*M)^2 < 1");

    SpectralCtx ctx(v0.m);
    const std::size_t n = std::size_t(v0.m) * std::size_t(v0.m);

    double mean_vx = 0.0, mean_vy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_vx += double(v0.vx[i]);
        mean_vy += double(v0.vy[i]);
    }
    ctx.mean_vx = mean_vx / double(n);
    ctx.mean_vy = mean_vy / double(n);

    // w = dvy/dx - dvx/dy, built spectrally from the initial velocity
    std::vector<cd> vxh = to_spectral(v0.vx, v0.m);
    std::vector<cd> vyh = to_spectral(v0.vy, v0.m);
    std::vector<cd> w_hat(n);
    for (std::size_t i = 0; i < n; ++i)
        w_hat[i] = cd(0.0, ctx.kx[i]) * vyh[i] - cd(0.0, ctx.ky[i]) * vxh[i];
    w_hat[0] = cd(0.0);

    const long full_steps = long(std::floor(t_end / dt + 1e-12));
    const double remainder = t_end - double(full_steps) * dt;

    std::vector<double> e_half(n), e_full(n);
    auto set_factors = [&](double step) {
        for (std::size_t i = 0; i < n; ++i) {
            e_half[i] = std::exp(-nu * ctx.k2[i] * step * 0.5);
            e_full[i] = e_half[i] * e_half[i];
        }
    };

    std::vector<cd> n1, n2, n3, n4, stage(n);
    auto rk4_step = [&](double step, long step_index) {
        double speed = 0.0;
        ctx.nonlinear(w_hat, n1, &speed);
        if (speed * step * double(v0.m) > 0.5)
            numeric_error("ns_simulate: CFL violated at step " + std::to_string(step_index) +
                          " (max|v|*dt*M = " + std::to_string(speed * step * double(v0.m)) +
                          "); reduce dt");
        for (std::size_t i = 0; i < n; ++i)
            stage[i] = e_half[i] * (w_hat[i] + 0.5 * step * n1[i]);
        ctx.nonlinear(stage, n2, nullptr);
        for (std::size_t i = 0; i < n; ++i)
            stage[i] = e_half[i] * w_hat[i] + 0.5 * step * n2[i];
        ctx.nonlinear(stage, n3, nullptr);
        for (std::size_t i = 0; i < n; ++i)
            stage[i] = e_full[i] * w_hat[i] + step * e_half[i] * n3[i];
        ctx.nonlinear(stage, n4, nullptr);
        for (std::size_t i = 0; i < n; ++i)
            w_hat[i] = e_full[i] * w_hat[i] +
                       step / 6.0 *
                           (e_full[i] * n1[i] + 2.0 * e_half[i] * (n2[i] + n3[i]) + n4[i]);
    };

    set_factors(dt);
    for (long s = 0; s < full_steps; ++s) rk4_step(dt, s + 1);
    if (remainder > 1e-12 * dt) {
        set_factors(remainder);
        rk4_step(remainder, full_steps + 1);
    }

    // velocity reconstruction; the carried mean flow is added back
    std::vector<cd> outx(n), outy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const cd psi = ctx.k2[i] > 0.0 ? w_hat[i] / ctx.k2[i] : cd(0.0);
        outx[i] = cd(0.0, ctx.ky[i]) * psi;
        outy[i] = cd(0.0, -ctx.kx[i]) * psi;
    }
    fft2_inplace(outx, std::size_t(v0.m), true);
    fft2_inplace(outy, std::size_t(v0.m), true);

    VelocityField out;
    out.m = v0.m;
    out.t = v0.t + t_end;
    out.nu = nu;
    out.vx = Tensor({std::size_t(v0.m), std::size_t(v0.m)});
    out.vy = Tensor({std::size_t(v0.m), std::size_t(v0.m)});
    for (std::size_t i = 0; i < n; ++i) {
        out.vx[i] = float(outx[i].real() + ctx.mean_vx);
        out.vy[i] = float(outy[i].real() + ctx.mean_vy);
    }
    return out;
}

VelocityField random_stream_field(Rng& rng, int n_modes, int m) {
    if (n_modes < 1) config_error("random_stream_field: n_modes must be positive");
    if (!power_of_two(m) || m < 4)
        config_error("random_stream_field: grid size must be a power of two >= 4");

    struct Mode {
        double a, kx, ky;
    };
    std::vector<Mode> modes;
    modes.resize(std::size_t(n_modes));
    for (auto& mode : modes) {
        mode.a = rng.uniform(0.0, 2.0);
        // wavenumbers snap to multiples of 2 pi: anything else is aperiodic on
        // the unit square
        mode.kx = 2.0 * M_PI * std::round(rng.uniform(0.0, 10.0) / (2.0 * M_PI));
        mode.ky = 2.0 * M_PI * std::round(rng.uniform(0.0, 10.0) / (2.0 * M_PI));
    }

    VelocityField out;
    out.m = m;
    out.vx = Tensor({std::size_t(m), std::size_t(m)});
    out.vy = Tensor({std::size_t(m), std::size_t(m)});
    for (int r = 0; r < m; ++r) {
        const double y = double(r) / double(m);
        for (int c = 0; c < m; ++c) {
            const double x = double(c) / double(m);
            double vx = 0.0, vy = 0.0;
            for (const auto& mode : modes) {
                vx += -mode.a * mode.ky * std::sin(mode.kx * x) * std::sin(mode.ky * y);
                vy += -mode.a * mode.kx * std::cos(mode.kx * x) * std::cos(mode.ky * y);
            }
            out.vx.at2(std::size_t(r), std::size_t(c)) = float(vx);
            out.vy.at2(std::size_t(r), std::size_t(c)) = float(vy);
        }
    }
    return out;
}

VelocityField single_mode_field(int m, double a1, double a2, double phase1, double phase2) {
    if (!power_of_two(m) || m < 4)
        config_error("single_mode_field: grid size must be a power of two >= 4");
    VelocityField out;
    out.m = m;
    out.vx = Tensor({std::size_t(m), std::size_t(m)});
    out.vy = Tensor({std::size_t(m), std::size_t(m)});
    for (int r = 0; r < m; ++r) {
        const double y = double(r) / double(m);
        for (int c = 0; c < m; ++c) {
            const double x = double(c) / double(m);
            out.vx.at2(std::size_t(r), std::size_t(c)) =
                float(-a1 * std::sin(2.0 * M_PI * y + phase1));
            out.vy.at2(std::size_t(r), std::size_t(c)) =
                float(a2 * std::sin(4.0 * M_PI * x + phase2));
        }
    }
    return out;
}

double field_energy(const VelocityField& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.vx.size(); ++i)
        acc += double(v.vx[i]) * double(v.vx[i]) + double(v.vy[i]) * double(v.vy[i]);
    return 0.5 * acc / double(v.vx.size());
}

double field_divergence_max(const VelocityField& v) {
    check_field(v, "field_divergence_max");
    SpectralCtx ctx(v.m);
    std::vector<cd> vxh = to_spectral(v.vx, v.m);
    std::vector<cd> vyh = to_spectral(v.vy, v.m);
    std::vector<cd> div(vxh.size());
    for (std::size_t i = 0; i < div.size(); ++i)
        div[i] = cd(0.0, ctx.kx[i]) * vxh[i] + cd(0.0, ctx.ky[i]) * vyh[i];
    fft2_inplace(div, std::size_t(v.m), true);
    double worst = 0.0;
    for (const auto& d : div) worst = std::max(worst, std::abs(d.real()));
    return worst;
}

void save_field(const VelocityField& v, const std::string& path) {
    check_field(v, "save_field");
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot open " + path + " for writing");
    char buf[64];
    out << "ns.m=" << v.m << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", v.t);
    out << "ns.t=" << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", v.nu);
    out << "ns.nu=" << buf << "\n\n";
    write_tensor(out, v.vx);
    write_tensor(out, v.vy);
    if (!out) data_error("write failed for " + path);
}

VelocityField load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error("cannot open " + path);
    std::string header, line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        offset += line.size() + 1;
        if (line.empty()) break;
        header += line + "\n";
    }
    KvMap kv;
    try {
        kv = parse_kv(header);
    } catch (const Error& e) {
        data_error(path + ": bad field header: " + e.what());
    }
    VelocityField v;
    v.m = int(kv_get_long(kv, "ns.m", 0));
    v.t = kv_get_double(kv, "ns.t", 0.0);
    v.nu = kv_get_double(kv, "ns.nu", 0.0);
    v.vx = read_tensor(in, offset, path);
    v.vy = read_tensor(in, offset, path);
    check_field(v, path.c_str());
    return v;
}

std::vector<float> flatten_field(const VelocityField& v) {
    std::vector<float> out;
    out.reserve(2 * v.vx.size());
    out.insert(out.end(), v.vx.data(), v.vx.data() + v.vx.size());
    out.insert(out.end(), v.vy.data(), v.vy.data() + v.vy.size());
    return out;
}

VelocityField unflatten_field(const float* data, int m) {
    const std::size_t n = std::size_t(m) * std::size_t(m);
    VelocityField v;
    v.m = m;
    v.vx = Tensor({std::size_t(m), std::size_t(m)},
                  std::vector<float>(data, data + n));
    v.vy = Tensor({std::size_t(m), std::size_t(m)},
                  std::vector<float>(data + n, data + 2 * n));
    return v;
}

} // namespace iflow
