#include "iflow/process.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>

#include "iflow/navier_stokes.hpp"

namespace iflow {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_range(const Tensor& x, double lo, double hi, const std::string& what) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = double(x[i]);
        if (!(v >= lo && v <= hi))
            data_error(what + ": state " + std::to_string(i) + " = " + fmt(v) +
                       " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    }
}

void require_nonneg(const Tensor& x, const std::string& what) {
    require_range(x, 0.0, std::numeric_limits<double>::infinity(), what);
}

double rayleigh_draw(Rng& rng, double sigma_r) {
    return sigma_r * std::sqrt(-2.0 * std::log(1.0 - rng.uniform()));
}

double poisson_scaled(Rng& rng, double x, double zeta) {
    std::poisson_distribution<long long> pois(x / zeta);
    return zeta * double(pois(rng));
}

double gamma_multiplier(Rng& rng, double k) {
    std::gamma_distribution<double> gam(k, 1.0 / k);
    return gam(rng);
}

Tensor sample_impl(const AdditiveGaussian& p, const Tensor& x0, Rng& rng) {
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < x0.size(); ++i)
        out[i] = float(double(x0[i]) + p.sigma * rng.normal());
    return out;
}

// Convolves one unit-variance white image with the kernel, zero padded.
void convolve_white(const CorrelatedGaussian& p, Rng& rng, std::size_t h, std::size_t w,
                    const float* src, float* dst, double sigma) {
    TensorT<double> z({h, w});
    z.fill_normal(rng);
    const int rad = p.radius;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -rad; dy <= rad; ++dy) {
                const long sy = long(y) - dy;
                if (sy < 0 || sy >= long(h)) continue;
                for (int dx = -rad; dx <= rad; ++dx) {
                    const long sx = long(x) - dx;
                    if (sx < 0 || sx >= long(w)) continue;
                    acc += correlated_kernel(p, dx, dy) * z.at2(std::size_t(sy), std::size_t(sx));
                }
            }
            const std::size_t i = y * w + x;
            dst[i] = float(double(src[i]) + sigma * acc);
        }
}

Tensor sample_impl(const CorrelatedGaussian& p, const Tensor& x0, Rng& rng) {
    Tensor out(x0.shape());
    if (p.height > 0 && p.width > 0) {
        if (x0.ndim() != 2 || x0.cols() != p.height * p.width)
            data_error("correlated noise: rows of " + x0.shape_str() +
                       " do not flatten a " + std::to_string(p.height) + "x" +
                       std::to_string(p.width) + " image");
        for (std::size_t b = 0; b < x0.rows(); ++b)
            convolve_white(p, rng, p.height, p.width, x0.data() + b * x0.cols(),
                           out.data() + b * x0.cols(), p.sigma);
    } else {
        if (x0.ndim() != 2)
            data_error("correlated noise: expected a 2-D image, got " + x0.shape_str() +
                       " (set height/width for flattened batches)");
        convolve_white(p, rng, x0.rows(), x0.cols(), x0.data(), out.data(), p.sigma);
    }
    return out;
}

Tensor sample_impl(const JacobiProcess& p, const Tensor& x0, Rng& rng) {
    require_range(x0, 0.0, 1.0, "jacobi noise");
    if (p.em_steps < 1) config_error("jacobi noise: em_steps must be positive");
    const double dt = 1.0 / double(p.em_steps);
    const double sdt = std::sqrt(dt);
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        double x = double(x0[i]);
        for (int s = 0; s < p.em_steps; ++s) {
            const double drift = 0.5 * p.s * (p.a * (1.0 - x) - p.b * x);
            const double diff = std::sqrt(std::max(p.s * x * (1.0 - x), 0.0));
            x += drift * dt + diff * sdt * rng.normal();
            // the diffusion vanishes at the walls; the clamp keeps EM overshoot inside
            x = std::min(std::max(x, 1e-5), 1.0 - 1e-5);
        }
        out[i] = float(x);
    }
    return out;
}

Tensor sample_impl(const PoissonProcess& p, const Tensor& x0, Rng& rng) {
    if (!(p.zeta > 0.0)) config_error("poisson noise: zeta must be positive");
    require_nonneg(x0, "poisson noise");
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < x0.size(); ++i)
        out[i] = float(poisson_scaled(rng, double(x0[i]), p.zeta));
    return out;
}

Tensor sample_impl(const GammaProcess& p, const Tensor& x0, Rng& rng) {
    if (!(p.k > 0.0)) config_error("gamma noise: k must be positive");
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < x0.size(); ++i)
        out[i] = float(double(x0[i]) * gamma_multiplier(rng, p.k));
    return out;
}

Tensor sample_impl(const RayleighProcess& p, const Tensor& x0, Rng& rng) {
    if (!(p.sigma_r > 0.0)) config_error("rayleigh noise: sigma_r must be positive");
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < x0.size(); ++i)
        out[i] = float(double(x0[i]) * rayleigh_draw(rng, p.sigma_r));
    return out;
}

Tensor sample_impl(const PoissonGaussianProcess& p, const Tensor& x0, Rng& rng) {
    require_nonneg(x0, "poisson-gaussian noise");
    Tensor out(x0.shape());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double f = double(x0[i]);
        const double u = p.sigma_u * rng.normal();
        const double w = p.sigma_w * rng.normal();
        out[i] = float(f + std::pow(f, p.gamma) * u + w);
    }
    return out;
}

Tensor sample_impl(const CompoundProcess& p, const Tensor& x0, Rng& rng) {
    Tensor out(x0.shape());
    if (p.base == "poisson") {
        require_nonneg(x0, "compound noise");
        for (std::size_t i = 0; i < x0.size(); ++i)
            out[i] = float(poisson_scaled(rng, double(x0[i]), p.param) +
                           p.sigma_add * rng.normal());
    } else if (p.base == "gamma") {
        for (std::size_t i = 0; i < x0.size(); ++i)
            out[i] = float(double(x0[i]) * gamma_multiplier(rng, p.param) +
                           p.sigma_add * rng.normal());
    } else if (p.base == "rayleigh") {
        for (std::size_t i = 0; i < x0.size(); ++i)
            out[i] = float(double(x0[i]) * rayleigh_draw(rng, p.param) +
                           p.sigma_add * rng.normal());
    } else {
        config_error("compound noise: base must be poisson, gamma, or rayleigh, got '" +
                     p.base + "'");
    }
    return out;
}

Tensor sample_impl(const NsTransform& p, const Tensor& x0, Rng&) {
    const std::size_t per_row = 2 * std::size_t(p.m) * std::size_t(p.m);
    const bool batched = x0.ndim() == 2;
    if (!batched && x0.ndim() != 1)
        data_error("ns transform: expected 1-D or 2-D states, got " + x0.shape_str());
    const std::size_t width = batched ? x0.cols() : x0.size();
    if (width != per_row)
        data_error("ns transform: row width " + std::to_string(width) + " does not hold two " +
                   std::to_string(p.m) + "^2 velocity components");
    const std::size_t nrows = batched ? x0.rows() : 1;
    Tensor out(x0.shape());
    for (std::size_t b = 0; b < nrows; ++b) {
        VelocityField v = unflatten_field(x0.data() + b * per_row, p.m);
        VelocityField evolved = ns_simulate(v, p.nu, p.dt, p.t_end);
        const std::vector<float> flat = flatten_field(evolved);
        std::copy(flat.begin(), flat.end(), out.data() + b * per_row);
    }
    return out;
}

const std::set<std::string>& allowed_keys(const std::string& kind) {
    static const std::map<std::string, std::set<std::string>> table = {
        {"additive", {"noise.sigma"}},
        {"correlated", {"noise.sigma", "noise.a", "noise.radius", "noise.height", "noise.width"}},
        {"jacobi", {"noise.s", "noise.a", "noise.b", "noise.em_steps"}},
        {"poisson", {"noise.zeta"}},
        {"gamma", {"noise.k"}},
        {"rayleigh", {"noise.sigma_r"}},
        {"poisson-gaussian", {"noise.gamma", "noise.sigma_u", "noise.sigma_w"}},
        {"compound", {"noise.base", "noise.param", "noise.sigma_add"}},
        {"ns", {"noise.m", "noise.nu", "noise.t_end", "noise.dt"}},
    };
    auto it = table.find(kind);
    if (it == table.end())
        config_error("unknown noise.kind '" + kind +
                     "' (additive, correlated, jacobi, poisson, gamma, rayleigh, "
                     "poisson-gaussian, compound, ns)");
    return it->second;
}

} // namespace

double correlated_kernel(const CorrelatedGaussian& proc, int dx, int dy) {
    const double r2 = double(dx) * dx + double(dy) * dy;
    const double r = std::sqrt(r2);
    return std::cos(r) * std::exp(-r2 / (2.0 * proc.a * proc.a)) /
           (2.0 * M_PI * proc.a * proc.a);
}

Tensor sample_noise(const Process& proc, const Tensor& x0, Rng& rng) {
    return std::visit([&](const auto& p) { return sample_impl(p, x0, rng); }, proc);
}

std::optional<std::pair<double, double>> process_domain(const Process& proc) {
    const double inf = std::numeric_limits<double>::infinity();
    if (std::holds_alternative<JacobiProcess>(proc)) return std::pair{0.0, 1.0};
    if (std::holds_alternative<PoissonProcess>(proc)) return std::pair{0.0, inf};
    if (std::holds_alternative<PoissonGaussianProcess>(proc)) return std::pair{0.0, inf};
    if (const auto* c = std::get_if<CompoundProcess>(&proc); c && c->base == "poisson")
        return std::pair{0.0, inf};
    return std::nullopt;
}

bool process_is_deterministic(const Process& proc) {
    return std::holds_alternative<NsTransform>(proc);
}

std::string process_kind(const Process& proc) {
    struct Visitor {
        std::string operator()(const AdditiveGaussian&) const { return "additive"; }
        std::string operator()(const CorrelatedGaussian&) const { return "correlated"; }
        std::string operator()(const JacobiProcess&) const { return "jacobi"; }
        std::string operator()(const PoissonProcess&) const { return "poisson"; }
        std::string operator()(const GammaProcess&) const { return "gamma"; }
        std::string operator()(const RayleighProcess&) const { return "rayleigh"; }
        std::string operator()(const PoissonGaussianProcess&) const { return "poisson-gaussian"; }
        std::string operator()(const CompoundProcess&) const { return "compound"; }
        std::string operator()(const NsTransform&) const { return "ns"; }
    };
    return std::visit(Visitor{}, proc);
}

Process process_from_kv(const KvMap& kv) {
    const std::string kind = kv_get_string(kv, "noise.kind", "additive");
    const auto& allowed = allowed_keys(kind);
    for (const auto& [key, value] : kv) {
        (void)value;
        if (key.rfind("noise.", 0) == 0 && key != "noise.kind" && !allowed.count(key))
            config_error("unknown key '" + key + "' for noise.kind=" + kind);
    }

    if (kind == "additive") {
        AdditiveGaussian p;
        p.sigma = kv_get_double(kv, "noise.sigma", p.sigma);
        if (!(p.sigma > 0.0)) config_error("noise.sigma must be positive");
        return p;
    }
    if (kind == "correlated") {
        CorrelatedGaussian p;
        p.sigma = kv_get_double(kv, "noise.sigma", p.sigma);
        p.a = kv_get_double(kv, "noise.a", p.a);
        p.radius = int(kv_get_long(kv, "noise.radius", p.radius));
        p.height = std::size_t(kv_get_long(kv, "noise.height", long(p.height)));
        p.width = std::size_t(kv_get_long(kv, "noise.width", long(p.width)));
        if (!(p.sigma > 0.0)) config_error("noise.sigma must be positive");
        if (!(p.a > 0.0)) config_error("noise.a must be positive");
        if (p.radius < 0) config_error("noise.radius must be nonnegative");
        return p;
    }
    if (kind == "jacobi") {
        JacobiProcess p;
        p.s = kv_get_double(kv, "noise.s", p.s);
        p.a = kv_get_double(kv, "noise.a", p.a);
        p.b = kv_get_double(kv, "noise.b", p.b);
        p.em_steps = int(kv_get_long(kv, "noise.em_steps", p.em_steps));
        if (!(p.s > 0.0) || !(p.a > 0.0) || !(p.b > 0.0))
            config_error("jacobi noise parameters s, a, b must be positive");
        if (p.em_steps < 1) config_error("noise.em_steps must be positive");
        return p;
    }
    if (kind == "poisson") {
        PoissonProcess p;
        p.zeta = kv_get_double(kv, "noise.zeta", p.zeta);
        if (!(p.zeta > 0.0)) config_error("noise.zeta must be positive");
        return p;
    }
    if (kind == "gamma") {
        GammaProcess p;
        p.k = kv_get_double(kv, "noise.k", p.k);
        if (!(p.k > 0.0)) config_error("noise.k must be positive");
        return p;
    }
    if (kind == "rayleigh") {
        RayleighProcess p;
        p.sigma_r = kv_get_double(kv, "noise.sigma_r", p.sigma_r);
        if (!(p.sigma_r > 0.0)) config_error("noise.sigma_r must be positive");
        return p;
    }
    if (kind == "poisson-gaussian") {
        PoissonGaussianProcess p;
        p.gamma = kv_get_double(kv, "noise.gamma", p.gamma);
        p.sigma_u = kv_get_double(kv, "noise.sigma_u", p.sigma_u);
        p.sigma_w = kv_get_double(kv, "noise.sigma_w", p.sigma_w);
        if (p.gamma < 0.0) config_error("noise.gamma must be nonnegative");
        if (!(p.sigma_u > 0.0) || !(p.sigma_w > 0.0))
            config_error("noise.sigma_u and noise.sigma_w must be positive");
        return p;
    }
    if (kind == "compound") {
        CompoundProcess p;
        p.base = kv_get_string(kv, "noise.base", p.base);
        p.param = kv_get_double(kv, "noise.param", p.param);
        p.sigma_add = kv_get_double(kv, "noise.sigma_add", p.sigma_add);
        if (p.base != "poisson" && p.base != "gamma" && p.base != "rayleigh")
            config_error("noise.base must be poisson, gamma, or rayleigh, got '" + p.base + "'");
        if (!(p.param > 0.0)) config_error("noise.param must be positive");
        if (!(p.sigma_add > 0.0)) config_error("noise.sigma_add must be positive");
        return p;
    }
    // allowed_keys already rejected anything else
    NsTransform p;
    p.m = int(kv_get_long(kv, "noise.m", p.m));
    p.nu = kv_get_double(kv, "noise.nu", p.nu);
    p.t_end = kv_get_double(kv, "noise.t_end", p.t_end);
    p.dt = kv_get_double(kv, "noise.dt", p.dt);
    if (p.nu < 0.0) config_error("noise.nu must be nonnegative");
    if (!(p.t_end > 0.0)) config_error("noise.t_end must be positive");
    if (p.dt < 0.0) config_error("noise.dt must be nonnegative (0 = automatic)");
    return p;
}

KvMap process_to_kv(const Process& proc) {
    KvMap kv;
    kv["noise.kind"] = process_kind(proc);
    struct Visitor {
        KvMap& kv;
        void operator()(const AdditiveGaussian& p) const { kv["noise.sigma"] = fmt(p.sigma); }
        void operator()(const CorrelatedGaussian& p) const {
            kv["noise.sigma"] = fmt(p.sigma);
            kv["noise.a"] = fmt(p.a);
            kv["noise.radius"] = std::to_string(p.radius);
            kv["noise.height"] = std::to_string(p.height);
            kv["noise.width"] = std::to_string(p.width);
        }
        void operator()(const JacobiProcess& p) const {
            kv["noise.s"] = fmt(p.s);
            kv["noise.a"] = fmt(p.a);
            kv["noise.b"] = fmt(p.b);
            kv["noise.em_steps"] = std::to_string(p.em_steps);
        }
        void operator()(const PoissonProcess& p) const { kv["noise.zeta"] = fmt(p.zeta); }
        void operator()(const GammaProcess& p) const { kv["noise.k"] = fmt(p.k); }
        void operator()(const RayleighProcess& p) const { kv["noise.sigma_r"] = fmt(p.sigma_r); }
        void operator()(const PoissonGaussianProcess& p) const {
            kv["noise.gamma"] = fmt(p.gamma);
            kv["noise.sigma_u"] = fmt(p.sigma_u);
            kv["noise.sigma_w"] = fmt(p.sigma_w);
        }
        void operator()(const CompoundProcess& p) const {
            kv["noise.base"] = p.base;
            kv["noise.param"] = fmt(p.param);
            kv["noise.sigma_add"] = fmt(p.sigma_add);
        }
        void operator()(const NsTransform& p) const {
            kv["noise.m"] = std::to_string(p.m);
            kv["noise.nu"] = fmt(p.nu);
            kv["noise.t_end"] = fmt(p.t_end);
            kv["noise.dt"] = fmt(p.dt);
        }
    };
    std::visit(Visitor{kv}, proc);
    return kv;
}

} // namespace iflow
