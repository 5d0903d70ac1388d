#include "iflow.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "iflow/csv.hpp"
#include "iflow/datasets.hpp"
#include "iflow/metrics.hpp"
#include "iflow/navier_stokes.hpp"
#include "iflow/nets.hpp"
#include "iflow/noise_fit.hpp"
#include "iflow/pca.hpp"
#include "iflow/process.hpp"
#include "iflow/time_grid.hpp"
#include "iflow/train.hpp"

struct iflow_tensor {
    iflow::Tensor t;
};
struct iflow_model {
    iflow::Model m;
};
struct iflow_process {
    iflow::Process p;
    std::string kind;
};
struct iflow_rng {
    iflow::Rng r;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <class F>
int guarded(F&& f) {
    try {
        f();
        return 0;
    } catch (const iflow::Error& e) {
        set_error(e.what());
        return int(e.kind());
    } catch (const std::exception& e) {
        set_error(e.what());
        return int(iflow::ErrKind::Data);
    }
}

int null_arg(const char* what) {
    set_error(std::string("null argument: ") + what);
    return int(iflow::ErrKind::Config);
}

iflow::KvMap parse_config(const char* kv_text) {
    return iflow::parse_kv(kv_text ? std::string(kv_text) : std::string());
}

iflow_tensor* wrap(iflow::Tensor t) { return new iflow_tensor{std::move(t)}; }

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Rebuilds the discretization a trained model recorded in its metadata.
iflow::TimeGrid grid_from_meta(const iflow::Model& m) {
    const iflow::TrainConfig cfg = iflow::train_config_from_kv(m.extra_meta);
    const int nodes = m.kind == iflow::ModelKind::VectorField ? cfg.ode_steps + 1 : cfg.grid_n;
    return iflow::make_time_grid(cfg.eps, cfg.t_end, cfg.rho, nodes);
}

iflow::VelocityField field_from_tensor(const iflow::Tensor& t, int m) {
    const std::size_t need = 2 * std::size_t(m) * std::size_t(m);
    if (t.ndim() != 1 || t.size() != need)
        iflow::data_error("velocity field tensor must be 1-D of length " + std::to_string(need) +
                          ", got " + t.shape_str());
    return iflow::unflatten_field(t.data(), m);
}

iflow::Tensor field_to_tensor(const iflow::VelocityField& v) {
    std::vector<float> flat = iflow::flatten_field(v);
    const std::size_t n = flat.size();
    return iflow::Tensor({n}, std::move(flat));
}

} // namespace

extern "C" {

const char* iflow_version(void) { return "0.1.0"; }

const char* iflow_last_error(void) { return g_last_error.c_str(); }

void iflow_string_free(char* s) { std::free(s); }

int iflow_tensor_create(const size_t* shape, size_t ndim, const float* data, iflow_tensor** out) {
    if (!out || (!shape && ndim > 0)) return null_arg("shape/out");
    return guarded([&] {
        std::vector<std::size_t> dims(shape, shape + ndim);
        iflow::Tensor t(dims);
        if (data) std::memcpy(t.data(), data, t.size() * sizeof(float));
        *out = wrap(std::move(t));
    });
}

void iflow_tensor_free(iflow_tensor* t) { delete t; }

int iflow_tensor_ndim(const iflow_tensor* t, size_t* out) {
    if (!t || !out) return null_arg("tensor/out");
    *out = t->t.ndim();
    return 0;
}

int iflow_tensor_extent(const iflow_tensor* t, size_t dim, size_t* out) {
    if (!t || !out) return null_arg("tensor/out");
    return guarded([&] {
        if (dim >= t->t.ndim())
            iflow::config_error("dimension " + std::to_string(dim) + " out of range for " +
                                t->t.shape_str());
        *out = t->t.extent(dim);
    });
}

int iflow_tensor_data(const iflow_tensor* t, const float** data, size_t* count) {
    if (!t || !data || !count) return null_arg("tensor/data/count");
    *data = t->t.data();
    *count = t->t.size();
    return 0;
}

int iflow_tensor_save(const iflow_tensor* t, const char* path) {
    if (!t || !path) return null_arg("tensor/path");
    return guarded([&] { iflow::save_tensor(t->t, path); });
}

int iflow_tensor_load(const char* path, iflow_tensor** out) {
    if (!path || !out) return null_arg("path/out");
    return guarded([&] { *out = wrap(iflow::load_tensor(path)); });
}

int iflow_csv_save(const iflow_tensor* t, const char* path) {
    if (!t || !path) return null_arg("tensor/path");
    return guarded([&] { iflow::save_csv(t->t, path); });
}

int iflow_csv_load(const char* path, iflow_tensor** out) {
    if (!path || !out) return null_arg("path/out");
    return guarded([&] { *out = wrap(iflow::load_csv(path)); });
}

int iflow_labels_save(const int* labels, size_t count, const char* path) {
    if ((!labels && count > 0) || !path) return null_arg("labels/path");
    return guarded([&] {
        iflow::save_labels(std::vector<int>(labels, labels + count), path);
    });
}

int iflow_rng_create(uint64_t seed, iflow_rng** out) {
    if (!out) return null_arg("out");
    *out = new iflow_rng{iflow::Rng(seed)};
    return 0;
}

void iflow_rng_free(iflow_rng* r) { delete r; }

int iflow_process_create(const char* kv_text, iflow_process** out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        iflow::Process p = iflow::process_from_kv(parse_config(kv_text));
        std::string kind = iflow::process_kind(p);
        *out = new iflow_process{std::move(p), std::move(kind)};
    });
}

void iflow_process_free(iflow_process* p) { delete p; }

int iflow_process_kind(const iflow_process* p, const char** out) {
    if (!p || !out) return null_arg("process/out");
    *out = p->kind.c_str();
    return 0;
}

int iflow_sample_noise(const iflow_process* p, const iflow_tensor* x0, iflow_rng* rng,
                       iflow_tensor** out) {
    if (!p || !x0 || !rng || !out) return null_arg("process/x0/rng/out");
    return guarded([&] { *out = wrap(iflow::sample_noise(p->p, x0->t, rng->r)); });
}

int iflow_model_create(const char* kv_text, int in_dim, uint64_t seed, iflow_model** out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        const iflow::TrainConfig cfg = iflow::train_config_from_kv(parse_config(kv_text));
        iflow::MlpSpec spec;
        spec.in_dim = in_dim;
        spec.out_dim = in_dim;
        spec.hidden = cfg.hidden;
        spec.embed_dim = cfg.embed_dim;
        spec.embed_scale = cfg.embed_scale;
        spec.activation = cfg.activation;
        const iflow::ModelKind kind = cfg.method == iflow::Method::Ifm
                                          ? iflow::ModelKind::VectorField
                                          : iflow::ModelKind::Consistency;
        *out = new iflow_model{iflow::make_model(kind, spec, seed)};
    });
}

void iflow_model_free(iflow_model* m) { delete m; }

int iflow_model_save(const iflow_model* m, const char* path) {
    if (!m || !path) return null_arg("model/path");
    return guarded([&] { iflow::save_model(m->m, path); });
}

int iflow_model_load(const char* path, iflow_model** out) {
    if (!path || !out) return null_arg("path/out");
    return guarded([&] { *out = new iflow_model{iflow::load_model(path)}; });
}

int iflow_model_forward(const iflow_model* m, const iflow_tensor* x, double t,
                        iflow_tensor** out) {
    if (!m || !x || !out) return null_arg("model/x/out");
    return guarded([&] { *out = wrap(iflow::model_forward(m->m, x->t, t)); });
}

int iflow_train(iflow_model* m, const iflow_tensor* data, const iflow_process* p,
                const char* kv_text, char** report_csv, double* wall_seconds) {
    if (!m || !data || !p) return null_arg("model/data/process");
    return guarded([&] {
        const iflow::TrainConfig cfg = iflow::train_config_from_kv(parse_config(kv_text));
        iflow::TrainReport report;
        switch (cfg.method) {
        case iflow::Method::Ifm: report = iflow::train_ifm(m->m, data->t, p->p, cfg); break;
        case iflow::Method::Icm: report = iflow::train_icm(m->m, data->t, p->p, cfg); break;
        case iflow::Method::Gct: report = iflow::train_gct(m->m, data->t, p->p, cfg); break;
        }
        if (report_csv) {
            std::string csv = "epoch,loss\n";
            char buf[64];
            for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
                std::snprintf(buf, sizeof buf, "%zu,%.9g\n", e + 1, report.epoch_loss[e]);
                csv += buf;
            }
            *report_csv = dup_string(csv);
        }
        if (wall_seconds) *wall_seconds = report.wall_seconds;
    });
}

int iflow_denoise(const iflow_model* m, const iflow_tensor* x1, iflow_tensor** out) {
    if (!m || !x1 || !out) return null_arg("model/x1/out");
    return guarded([&] { *out = wrap(iflow::denoise(m->m, x1->t, grid_from_meta(m->m))); });
}

int iflow_psnr(const iflow_tensor* a, const iflow_tensor* b, double peak, double* out) {
    if (!a || !b || !out) return null_arg("a/b/out");
    return guarded([&] { *out = iflow::psnr(a->t, b->t, peak); });
}

int iflow_energy_distance(const iflow_tensor* x, const iflow_tensor* y, double* out) {
    if (!x || !y || !out) return null_arg("x/y/out");
    return guarded([&] { *out = iflow::energy_distance(x->t, y->t); });
}

int iflow_nn_accuracy(const iflow_tensor* x, const iflow_tensor* y, double* out) {
    if (!x || !y || !out) return null_arg("x/y/out");
    return guarded([&] { *out = iflow::nn_accuracy(x->t, y->t); });
}

int iflow_nn_accuracy_resampled(const iflow_tensor* x, const iflow_tensor* y, uint64_t seed,
                                int rounds, double* value, double* se) {
    if (!x || !y || !value || !se) return null_arg("x/y/value/se");
    return guarded([&] {
        iflow::Rng rng(seed);
        const iflow::Resampled r = iflow::nn_accuracy_resampled(x->t, y->t, rng, rounds);
        *value = r.value;
        *se = r.se;
    });
}

int iflow_fit_poisson_gaussian(const iflow_tensor* img, int patch, double* gamma,
                               double* sigma_u, double* sigma_w) {
    if (!img || !gamma || !sigma_u || !sigma_w) return null_arg("img/gamma/sigma_u/sigma_w");
    return guarded([&] {
        const iflow::PgFit fit = iflow::fit_poisson_gaussian(img->t, patch);
        *gamma = fit.gamma;
        *sigma_u = fit.sigma_u;
        *sigma_w = fit.sigma_w;
    });
}

int iflow_ns_simulate(const iflow_tensor* field, int m, double nu, double dt, double t_end,
                      iflow_tensor** out) {
    if (!field || !out) return null_arg("field/out");
    return guarded([&] {
        const iflow::VelocityField v0 = field_from_tensor(field->t, m);
        *out = wrap(field_to_tensor(iflow::ns_simulate(v0, nu, dt, t_end)));
    });
}

int iflow_random_stream_field(uint64_t seed, int n_modes, int m, iflow_tensor** out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        iflow::Rng rng(seed);
        *out = wrap(field_to_tensor(iflow::random_stream_field(rng, n_modes, m)));
    });
}

int iflow_single_mode_field(int m, double a1, double a2, double phase1, double phase2,
                            iflow_tensor** out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        *out = wrap(field_to_tensor(iflow::single_mode_field(m, a1, a2, phase1, phase2)));
    });
}

int iflow_field_save(const iflow_tensor* field, int m, double t, double nu, const char* path) {
    if (!field || !path) return null_arg("field/path");
    return guarded([&] {
        iflow::VelocityField v = field_from_tensor(field->t, m);
        v.t = t;
        v.nu = nu;
        iflow::save_field(v, path);
    });
}

int iflow_field_load(const char* path, iflow_tensor** out, int* m, double* t, double* nu) {
    if (!path || !out) return null_arg("path/out");
    return guarded([&] {
        const iflow::VelocityField v = iflow::load_field(path);
        *out = wrap(field_to_tensor(v));
        if (m) *m = v.m;
        if (t) *t = v.t;
        if (nu) *nu = v.nu;
    });
}

int iflow_make_eight_gaussians(size_t n, double sigma_obs, uint64_t seed, iflow_tensor** noisy,
                               iflow_tensor** clean, iflow_tensor** centers, int** labels,
                               size_t* label_count) {
    if (!noisy || !clean || !centers) return null_arg("noisy/clean/centers");
    return guarded([&] {
        iflow::Rng rng(seed);
        iflow::EightGaussians d = iflow::make_eight_gaussians(n, sigma_obs, rng);
        *noisy = wrap(std::move(d.noisy));
        *clean = wrap(std::move(d.clean));
        *centers = wrap(std::move(d.centers));
        if (labels) {
            *labels = static_cast<int*>(std::malloc(d.labels.size() * sizeof(int)));
            if (*labels) std::memcpy(*labels, d.labels.data(), d.labels.size() * sizeof(int));
            if (label_count) *label_count = d.labels.size();
        } else if (label_count) {
            *label_count = d.labels.size();
        }
    });
}

void iflow_labels_free(int* labels) { std::free(labels); }

int iflow_make_gaussian1d(size_t n, double tau, double sigma, uint64_t seed, iflow_tensor** x0,
                          iflow_tensor** x1) {
    if (!x0 || !x1) return null_arg("x0/x1");
    return guarded([&] {
        iflow::Rng rng(seed);
        iflow::Gaussian1d d = iflow::make_gaussian1d(n, tau, sigma, rng);
        *x0 = wrap(std::move(d.x0));
        *x1 = wrap(std::move(d.x1));
    });
}

int iflow_sc_embed(const iflow_tensor* counts, int k, uint64_t seed, iflow_tensor** out) {
    if (!counts || !out) return null_arg("counts/out");
    return guarded([&] {
        const iflow::PcaResult pca = iflow::pca_fit(counts->t, k, 300, seed);
        *out = wrap(iflow::normalize_embedding(iflow::pca_transform(pca, counts->t)));
    });
}

int iflow_time_grid(double eps, double t_end, double rho, int n, double* out, size_t cap,
                    size_t* written) {
    if (!out && cap > 0) return null_arg("out");
    return guarded([&] {
        const iflow::TimeGrid grid = iflow::make_time_grid(eps, t_end, rho, n);
        const std::size_t count = std::min(cap, grid.t.size());
        for (std::size_t i = 0; i < count; ++i) out[i] = grid.t[i];
        if (written) *written = grid.t.size();
    });
}

} // extern "C"
