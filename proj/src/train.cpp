#include "iflow/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "iflow/adamw.hpp"
#include "iflow/ode.hpp"

namespace iflow {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<int> split_ints(const std::string& s, const std::string& key) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = s.find(',', pos);
        const std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
        try {
            std::size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            config_error("key '" + key + "': '" + tok + "' is not an integer");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void validate(const TrainConfig& c) {
    if (c.epochs < 1) config_error("train.epochs must be positive");
    if (c.batch < 1) config_error("train.batch must be positive");
    if (c.steps_per_epoch < 0) config_error("train.steps_per_epoch must be nonnegative");
    if (!(c.lr > 0.0)) config_error("train.lr must be positive");
    if (c.weight_decay < 0.0) config_error("train.weight_decay must be nonnegative");
    if (c.lr_schedule != "constant" && c.lr_schedule != "halve-midpoint")
        config_error("train.lr_schedule must be constant or halve-midpoint");
    if (c.distance != "sq" && c.distance != "huber")
        config_error("train.distance must be sq or huber");
    if (!(c.huber_c > 0.0)) config_error("train.huber_c must be positive");
    if (c.variant != "v1" && c.variant != "v2") config_error("train.variant must be v1 or v2");
    if (c.ode_steps < 1) config_error("train.ode_steps must be positive");
    if (c.refresh_interval < 1) config_error("train.refresh_interval must be positive");
    if (c.hidden.empty()) config_error("train.hidden must name at least one layer");
    for (int h : c.hidden)
        if (h < 1) config_error("train.hidden entries must be positive");
    if (c.embed_dim < 2 || c.embed_dim % 2 != 0)
        config_error("train.embed_dim must be a positive even number");
    if (!(c.embed_scale > 0.0)) config_error("train.embed_scale must be positive");
    if (c.activation != "silu" && c.activation != "relu")
        config_error("train.activation must be silu or relu");
    // grid parameters are validated by make_time_grid
}

struct EpochPlan {
    std::vector<std::size_t> perm;
    long steps = 0;
};

EpochPlan plan_epoch(std::size_t n, const TrainConfig& cfg, Rng& shuffle_rng) {
    EpochPlan plan;
    plan.perm.resize(n);
    std::iota(plan.perm.begin(), plan.perm.end(), std::size_t(0));
    for (std::size_t i = n; i > 1; --i)
        std::swap(plan.perm[i - 1], plan.perm[shuffle_rng.uniform_index(i)]);
    const long full = long((n + std::size_t(cfg.batch) - 1) / std::size_t(cfg.batch));
    plan.steps = cfg.steps_per_epoch > 0 ? std::min(cfg.steps_per_epoch, full) : full;
    return plan;
}

std::vector<std::size_t> batch_rows(const EpochPlan& plan, long step, long batch) {
    const std::size_t lo = std::size_t(step) * std::size_t(batch);
    const std::size_t hi = std::min(plan.perm.size(), lo + std::size_t(batch));
    return std::vector<std::size_t>(plan.perm.begin() + long(lo), plan.perm.begin() + long(hi));
}

void clamp_to_domain(Tensor& x, const Process& proc) {
    const auto dom = process_domain(proc);
    if (!dom) return;
    const float lo = float(dom->first), hi = float(dom->second);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::min(std::max(x[i], lo), hi);
}

[[noreturn]] void rethrow_with_step(const Error& e, const char* what, long epoch, long step) {
    throw Error(e.kind(), std::string(e.what()) + " (" + what + ", epoch " +
                              std::to_string(epoch + 1) + ", step " + std::to_string(step + 1) +
                              ")");
}

void check_model(const Model& m, ModelKind kind, const Tensor& data, const char* what) {
    if (m.kind != kind)
        config_error(std::string(what) + ": model kind does not match the training method");
    if (data.ndim() != 2) data_error(std::string(what) + ": data must be 2-D, got " + data.shape_str());
    if (std::size_t(m.spec.in_dim) != data.cols())
        config_error(std::string(what) + ": model width " + std::to_string(m.spec.in_dim) +
                     " does not match data width " + std::to_string(data.cols()));
}

KvMap snapshot(const TrainConfig& cfg) { return train_config_to_kv(cfg); }

void stamp_meta(Model& m, const TrainConfig& cfg) {
    for (const auto& [k, v] : snapshot(cfg)) m.extra_meta[k] = v;
}

double run_step_loss(Model& model, const ConsistencyBatch& b, const TrainConfig& cfg,
                     ParamStore& grads_into) {
    GraphT<float> g;
    const BoundNet<float> net = BoundNet<float>::bind(g, model);
    const int hi = g.input(b.x_hi);
    const int lo = g.input(b.x_lo);
    const int loss =
        consistency_loss(g, net, hi, lo, b.t_hi, b.t_lo, b.lambda, cfg.distance, cfg.huber_c);
    const double value = g.scalar(loss);
    grads_into.zero_grads();
    grads_into.accumulate(g.grad(loss));
    return value;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
    case Method::Ifm: return "ifm";
    case Method::Icm: return "icm";
    case Method::Gct: return "gct";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "ifm") return Method::Ifm;
    if (name == "icm") return Method::Icm;
    if (name == "gct") return Method::Gct;
    config_error("unknown training method '" + name + "' (ifm, icm, gct)");
}

TrainConfig train_config_from_kv(const KvMap& kv) {
    static const std::set<std::string> allowed = {
        "train.method",     "train.epochs",       "train.batch",
        "train.steps_per_epoch", "train.seed",    "train.lr",
        "train.weight_decay", "train.lr_schedule", "train.eps",
        "train.t_end",      "train.rho",          "train.grid_n",
        "train.distance",   "train.huber_c",      "train.variant",
        "train.ode_steps",  "train.refresh_interval", "train.hidden",
        "train.embed_dim",  "train.embed_scale",  "train.activation",
    };
    for (const auto& [key, value] : kv) {
        (void)value;
        if (key.rfind("train.", 0) == 0 && !allowed.count(key))
            config_error("unknown key '" + key + "'");
    }
    TrainConfig c;
    c.method = method_from_name(kv_get_string(kv, "train.method", method_name(c.method)));
    c.epochs = kv_get_long(kv, "train.epochs", c.epochs);
    c.batch = kv_get_long(kv, "train.batch", c.batch);
    c.steps_per_epoch = kv_get_long(kv, "train.steps_per_epoch", c.steps_per_epoch);
    c.seed = uint64_t(kv_get_long(kv, "train.seed", long(c.seed)));
    c.lr = kv_get_double(kv, "train.lr", c.lr);
    c.weight_decay = kv_get_double(kv, "train.weight_decay", c.weight_decay);
    c.lr_schedule = kv_get_string(kv, "train.lr_schedule", c.lr_schedule);
    c.eps = kv_get_double(kv, "train.eps", c.eps);
    c.t_end = kv_get_double(kv, "train.t_end", c.t_end);
    c.rho = kv_get_double(kv, "train.rho", c.rho);
    c.grid_n = int(kv_get_long(kv, "train.grid_n", c.grid_n));
    c.distance = kv_get_string(kv, "train.distance", c.distance);
    c.huber_c = kv_get_double(kv, "train.huber_c", c.huber_c);
    c.variant = kv_get_string(kv, "train.variant", c.variant);
    c.ode_steps = int(kv_get_long(kv, "train.ode_steps", c.ode_steps));
    c.refresh_interval = kv_get_long(kv, "train.refresh_interval", c.refresh_interval);
    if (kv.count("train.hidden")) c.hidden = split_ints(kv.at("train.hidden"), "train.hidden");
    c.embed_dim = int(kv_get_long(kv, "train.embed_dim", c.embed_dim));
    c.embed_scale = kv_get_double(kv, "train.embed_scale", c.embed_scale);
    c.activation = kv_get_string(kv, "train.activation", c.activation);
    validate(c);
    return c;
}

KvMap train_config_to_kv(const TrainConfig& c) {
    KvMap kv;
    kv["train.method"] = method_name(c.method);
    kv["train.epochs"] = std::to_string(c.epochs);
    kv["train.batch"] = std::to_string(c.batch);
    kv["train.steps_per_epoch"] = std::to_string(c.steps_per_epoch);
    kv["train.seed"] = std::to_string(c.seed);
    kv["train.lr"] = fmt(c.lr);
    kv["train.weight_decay"] = fmt(c.weight_decay);
    kv["train.lr_schedule"] = c.lr_schedule;
    kv["train.eps"] = fmt(c.eps);
    kv["train.t_end"] = fmt(c.t_end);
    kv["train.rho"] = fmt(c.rho);
    kv["train.grid_n"] = std::to_string(c.grid_n);
    kv["train.distance"] = c.distance;
    kv["train.huber_c"] = fmt(c.huber_c);
    kv["train.variant"] = c.variant;
    kv["train.ode_steps"] = std::to_string(c.ode_steps);
    kv["train.refresh_interval"] = std::to_string(c.refresh_interval);
    kv["train.hidden"] = join_ints(c.hidden);
    kv["train.embed_dim"] = std::to_string(c.embed_dim);
    kv["train.embed_scale"] = fmt(c.embed_scale);
    kv["train.activation"] = c.activation;
    return kv;
}

ConsistencyBatch make_consistency_batch(const Tensor& x0, const Tensor& x1p,
                                        const std::vector<int>& j, const TimeGrid& grid) {
    if (!x0.same_shape(x1p) || x0.ndim() != 2)
        config_error("consistency batch endpoints must be matching 2-D tensors");
    if (j.size() != x0.rows()) config_error("consistency batch needs one node index per row");
    ConsistencyBatch b;
    b.t_hi.resize(j.size());
    b.t_lo.resize(j.size());
    b.lambda.resize(j.size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j[r] < 0 || j[r] + 1 >= grid.size())
            config_error("consistency batch node index " + std::to_string(j[r]) +
                         " outside the grid");
        b.t_lo[r] = grid[j[r]];
        b.t_hi[r] = grid[j[r] + 1];
        b.lambda[r] = b.t_hi[r] - b.t_lo[r];
    }
    b.x_hi = path_sample(x0, x1p, b.t_hi);
    const Tensor u = path_field(x0, x1p);
    b.x_lo = backward_step_rows(b.x_hi, u, b.t_hi, b.t_lo);
    return b;
}

template <class T>
int consistency_loss(GraphT<T>& g, const BoundNet<T>& net, int x_hi, int x_lo,
                     const std::vector<double>& t_hi, const std::vector<double>& t_lo,
                     const std::vector<double>& lambda, const std::string& distance,
                     double huber_c) {
    const int c_hi = net.forward(x_hi, t_hi);
    const int c_lo = g.stop_gradient(net.forward(x_lo, t_lo));
    int d;
    if (distance == "sq") {
        d = g.sqdiff(c_hi, c_lo);
    } else if (distance == "huber") {
        const int r = g.sub(c_hi, c_lo);
        const int rr = g.mul(r, r);
        const int shifted = g.add_scalar(rr, T(huber_c * huber_c));
        d = g.add_scalar(g.sqrt_of(shifted), T(-huber_c));
    } else {
        config_error("unknown distance '" + distance + "' (sq, huber)");
    }
    const auto& shape = g.value(d).shape();
    TensorT<T> lam(shape);
    if (lambda.size() != shape[0]) config_error("consistency loss needs one weight per row");
    for (std::size_t r = 0; r < shape[0]; ++r)
        for (std::size_t c = 0; c < shape[1]; ++c) lam.at2(r, c) = T(lambda[r]);
    return g.mean_all(g.mul(d, g.input(std::move(lam))));
}

template <class T>
int flow_loss(GraphT<T>& g, const BoundNet<T>& net, int x_t, const std::vector<double>& ts,
              const TensorT<T>& target) {
    const int v = net.forward(x_t, ts);
    return g.mean_all(g.sqdiff(v, g.input(target)));
}

template int consistency_loss<float>(GraphT<float>&, const BoundNet<float>&, int, int,
                                     const std::vector<double>&, const std::vector<double>&,
                                     const std::vector<double>&, const std::string&, double);
template int consistency_loss<double>(GraphT<double>&, const BoundNet<double>&, int, int,
                                      const std::vector<double>&, const std::vector<double>&,
                                      const std::vector<double>&, const std::string&, double);
template int flow_loss<float>(GraphT<float>&, const BoundNet<float>&, int,
                              const std::vector<double>&, const TensorT<float>&);
template int flow_loss<double>(GraphT<double>&, const BoundNet<double>&, int,
                               const std::vector<double>&, const TensorT<double>&);

TrainReport train_ifm(Model& model, const Tensor& x1, const Process& proc,
                      const TrainConfig& cfg) {
    validate(cfg);
    check_model(model, ModelKind::VectorField, x1, "ifm");
    if (cfg.variant == "v1" && !std::holds_alternative<AdditiveGaussian>(proc))
        config_error("ifm: variant v1 is only defined for additive noise; use v2");
    if (cfg.refresh_interval != 1) config_error("ifm: refresh_interval is a consistency-only knob");

    const TimeGrid grid = make_time_grid(cfg.eps, cfg.t_end, cfg.rho, cfg.ode_steps + 1);
    const StepLr sched{cfg.lr, cfg.lr_schedule == "halve-midpoint" ? cfg.epochs : 0, 0.5};
    AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    Rng root(cfg.seed);

    const auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    report.config = snapshot(cfg);
    const auto field = [&](const Tensor& x, double t) { return model_forward(model, x, t); };

    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = root.sub("epoch", uint64_t(epoch));
        Rng shuffle_rng = erng.sub("shuffle");
        const EpochPlan plan = plan_epoch(x1.rows(), cfg, shuffle_rng);
        double acc = 0.0;
        for (long step = 0; step < plan.steps; ++step) {
            try {
                Rng srng = erng.sub("step", uint64_t(step));
                const auto rows = batch_rows(plan, step, cfg.batch);
                const Tensor x1_b = take_rows(x1, rows);

                Tensor x0_b = solve_ode_backward(x1_b, grid, field);
                clamp_to_domain(x0_b, proc);

                Rng noise_rng = srng.sub("noise");
                Rng trng = srng.sub("t");
                std::vector<double> ts(rows.size());
                for (auto& t : ts) t = cfg.eps + (cfg.t_end - cfg.eps) * trng.uniform();

                Tensor x_t, target;
                if (cfg.variant == "v1") {
                    const double sigma = std::get<AdditiveGaussian>(proc).sigma;
                    target = Tensor(x0_b.shape());
                    x_t = Tensor(x0_b.shape());
                    for (std::size_t r = 0; r < x0_b.rows(); ++r)
                        for (std::size_t c = 0; c < x0_b.cols(); ++c) {
                            const double n = sigma * noise_rng.normal();
                            target.at2(r, c) = float(n);
                            x_t.at2(r, c) = float(double(x0_b.at2(r, c)) + ts[r] * n);
                        }
                } else {
                    const Tensor x1p = sample_noise(proc, x0_b, noise_rng);
                    x_t = path_sample(x0_b, x1p, ts);
                    target = path_field(x0_b, x1p);
                }

                GraphT<float> g;
                const BoundNet<float> net = BoundNet<float>::bind(g, model);
                const int loss = flow_loss(g, net, g.input(x_t), ts, target);
                const double value = g.scalar(loss);
                if (!std::isfinite(value))
                    numeric_error("ifm: loss became non-finite");
                model.params.zero_grads();
                model.params.accumulate(g.grad(loss));
                opt.step(model.params, sched.at(epoch));
                acc += value;
                ++report.steps;
            } catch (const Error& e) {
                if (e.kind() == ErrKind::Numeric) rethrow_with_step(e, "ifm", epoch, step);
                throw;
            }
        }
        report.epoch_loss.push_back(plan.steps > 0 ? acc / double(plan.steps) : 0.0);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stamp_meta(model, cfg);
    return report;
}

namespace {

// Shared inner loop for the two consistency trainers; `clean` distinguishes
// training against known clean states from the self-bootstrapped kind.
TrainReport train_consistency(Model& model, const Tensor& data, const Process& proc,
                              const TrainConfig& cfg, bool clean) {
    validate(cfg);
    check_model(model, ModelKind::Consistency, data, clean ? "gct" : "icm");
    if (cfg.refresh_interval > 1 && !process_is_deterministic(proc))
        config_error("refresh_interval > 1 needs a deterministic observation process");
    if (clean && cfg.refresh_interval > 1)
        config_error("refresh_interval is an inverse-training knob; clean data never goes stale");

    const TimeGrid grid = make_time_grid(cfg.eps, cfg.t_end, cfg.rho, cfg.grid_n);
    const StepLr sched{cfg.lr, cfg.lr_schedule == "halve-midpoint" ? cfg.epochs : 0, 0.5};
    AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    Rng root(cfg.seed);

    const bool lagged = cfg.refresh_interval > 1;
    Tensor x0_cache, x1p_cache;
    long global_step = 0;

    const auto refresh_cache = [&](Rng& rng) {
        x0_cache = Tensor(data.shape());
        const std::size_t chunk = std::size_t(std::max<long>(cfg.batch, 1));
        for (std::size_t lo = 0; lo < data.rows(); lo += chunk) {
            const std::size_t hi = std::min(data.rows(), lo + chunk);
            std::vector<std::size_t> rows(hi - lo);
            std::iota(rows.begin(), rows.end(), lo);
            const Tensor pred = model_forward(model, take_rows(data, rows), grid.back());
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (std::size_t c = 0; c < data.cols(); ++c)
                    x0_cache.at2(rows[r], c) = pred.at2(r, c);
        }
        clamp_to_domain(x0_cache, proc);
        x1p_cache = sample_noise(proc, x0_cache, rng);
    };

    const auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    report.config = snapshot(cfg);

    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = root.sub("epoch", uint64_t(epoch));
        Rng shuffle_rng = erng.sub("shuffle");
        const EpochPlan plan = plan_epoch(data.rows(), cfg, shuffle_rng);
        double acc = 0.0;
        for (long step = 0; step < plan.steps; ++step) {
            try {
                Rng srng = erng.sub("step", uint64_t(step));
                Rng noise_rng = srng.sub("noise");
                const auto rows = batch_rows(plan, step, cfg.batch);

                Tensor x0_b, x1p_b;
                if (clean) {
                    x0_b = take_rows(data, rows);
                    x1p_b = sample_noise(proc, x0_b, noise_rng);
                } else if (lagged) {
                    if (global_step % cfg.refresh_interval == 0) {
                        Rng rrng = srng.sub("refresh");
                        refresh_cache(rrng);
                    }
                    x0_b = take_rows(x0_cache, rows);
                    x1p_b = take_rows(x1p_cache, rows);
                } else {
                    x0_b = model_forward(model, take_rows(data, rows), grid.back());
                    clamp_to_domain(x0_b, proc);
                    x1p_b = sample_noise(proc, x0_b, noise_rng);
                }

                Rng irng = srng.sub("i");
                std::vector<int> j(rows.size());
                for (auto& v : j) v = int(irng.uniform_index(std::size_t(grid.size() - 1)));

                const ConsistencyBatch b = make_consistency_batch(x0_b, x1p_b, j, grid);
                const double value = run_step_loss(model, b, cfg, model.params);
                if (!std::isfinite(value))
                    numeric_error(std::string(clean ? "gct" : "icm") + ": loss became non-finite");
                opt.step(model.params, sched.at(epoch));
                acc += value;
                ++report.steps;
                ++global_step;
            } catch (const Error& e) {
                if (e.kind() == ErrKind::Numeric)
                    rethrow_with_step(e, clean ? "gct" : "icm", epoch, step);
                throw;
            }
        }
        report.epoch_loss.push_back(plan.steps > 0 ? acc / double(plan.steps) : 0.0);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stamp_meta(model, cfg);
    return report;
}

} // namespace

TrainReport train_icm(Model& model, const Tensor& x1, const Process& proc,
                      const TrainConfig& cfg) {
    return train_consistency(model, x1, proc, cfg, false);
}

TrainReport train_gct(Model& model, const Tensor& x0, const Process& proc,
                      const TrainConfig& cfg) {
    return train_consistency(model, x0, proc, cfg, true);
}

Tensor denoise(const Model& model, const Tensor& x1, const TimeGrid& grid) {
    if (x1.ndim() != 2) data_error("denoise: observations must be 2-D, got " + x1.shape_str());
    if (model.kind == ModelKind::Consistency) return model_forward(model, x1, grid.back());
    return solve_ode_backward(
        x1, grid, [&](const Tensor& x, double t) { return model_forward(model, x, t); });
}

std::vector<double> flatten_grads(const std::map<std::string, Tensor>& grads) {
    std::vector<double> flat;
    for (const auto& [name, g] : grads) {
        (void)name;
        for (std::size_t i = 0; i < g.size(); ++i) flat.push_back(double(g[i]));
    }
    return flat;
}

} // namespace iflow
