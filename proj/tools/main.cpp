// Command-line front end. Everything goes through the C API in iflow.h; this
// file only handles argument plumbing, the flat key=value config dialect, and
// artifact placement.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iflow.h"

namespace {

using Kv = std::map<std::string, std::string>;

[[noreturn]] void fail(int code, const std::string& msg) {
    std::fprintf(stderr, "error: %s\n", msg.c_str());
    std::exit(code);
}

// Library failures carry their exit code in the status.
void check(int status) {
    if (status != 0) fail(status, iflow_last_error());
}

std::string default_out() {
    const char* env = std::getenv("IF_OUT");
    return env && *env ? env : ".";
}

void trim(std::string& s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    s.erase(0, i);
}

Kv read_kv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(3, "cannot open config file " + path);
    Kv kv;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(2, path + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        trim(key);
        trim(value);
        if (key.empty()) fail(2, path + ":" + std::to_string(line_no) + ": empty key");
        if (kv.count(key))
            fail(2, path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

void apply_sets(Kv& kv, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos || eq == 0) fail(2, "--set expects key=value, got '" + s + "'");
        std::string key = s.substr(0, eq), value = s.substr(eq + 1);
        trim(key);
        trim(value);
        kv[key] = value;
    }
}

void restrict_keys(const Kv& kv, std::initializer_list<const char*> exact,
                   std::initializer_list<const char*> prefixes) {
    for (const auto& [key, value] : kv) {
        (void)value;
        bool ok = false;
        for (const char* e : exact)
            if (key == e) {
                ok = true;
                break;
            }
        for (const char* p : prefixes)
            if (!ok && key.rfind(p, 0) == 0) ok = true;
        if (!ok) fail(2, "unknown key '" + key + "' for this command");
    }
}

std::string get(const Kv& kv, const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

double getd(const Kv& kv, const std::string& key, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        fail(2, "key '" + key + "': '" + it->second + "' is not a number");
    }
}

long getl(const Kv& kv, const std::string& key, long fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t used = 0;
        const long v = std::stol(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        fail(2, "key '" + key + "': '" + it->second + "' is not an integer");
    }
}

std::string render(const Kv& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(3, "cannot open " + path + " for writing");
    out << text;
    if (!out) fail(3, "write failed for " + path);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(3, "cannot create output directory " + dir + ": " + ec.message());
}

// RAII wrappers so error paths cannot leak handles.
struct TensorPtr {
    iflow_tensor* p = nullptr;
    ~TensorPtr() { iflow_tensor_free(p); }
    iflow_tensor** out() { return &p; }
};
struct ModelPtr {
    iflow_model* p = nullptr;
    ~ModelPtr() { iflow_model_free(p); }
};
struct ProcessPtr {
    iflow_process* p = nullptr;
    ~ProcessPtr() { iflow_process_free(p); }
};

TensorPtr load_tensor_arg(const std::string& path, const char* what) {
    if (path.empty()) fail(2, std::string("missing required key '") + what + "'");
    TensorPtr t;
    check(iflow_tensor_load(path.c_str(), t.out()));
    return t;
}

// ---- subcommands ----------------------------------------------------------

int cmd_gen_data(const std::string& kind, Kv kv, const std::string& out_dir) {
    ensure_dir(out_dir);
    const uint64_t seed = uint64_t(getl(kv, "data.seed", 0));
    if (kind == "8gaussians") {
        restrict_keys(kv, {"data.n", "data.eval_n", "data.sigma_obs", "data.seed"}, {});
        const long n = getl(kv, "data.n", 8000);
        const long eval_n = getl(kv, "data.eval_n", 1600);
        const double sigma_obs = getd(kv, "data.sigma_obs", 0.15);
        kv["data.n"] = std::to_string(n);
        kv["data.eval_n"] = std::to_string(eval_n);
        kv["data.sigma_obs"] = fmt_double(sigma_obs);
        kv["data.seed"] = std::to_string(seed);

        const auto emit = [&](long count, uint64_t s, const std::string& prefix) {
            TensorPtr noisy, clean, centers;
            int* labels = nullptr;
            size_t label_count = 0;
            check(iflow_make_eight_gaussians(size_t(count), sigma_obs, s, noisy.out(),
                                             clean.out(), centers.out(), &labels, &label_count));
            check(iflow_tensor_save(noisy.p, join(out_dir, prefix + "_noisy.ift").c_str()));
            check(iflow_tensor_save(clean.p, join(out_dir, prefix + "_clean.ift").c_str()));
            check(iflow_tensor_save(centers.p, join(out_dir, "centers.ift").c_str()));
            const int st =
                iflow_labels_save(labels, label_count, join(out_dir, prefix + "_labels.txt").c_str());
            iflow_labels_free(labels);
            check(st);
        };
        emit(n, seed, "train");
        emit(eval_n, seed + 1, "eval");
    } else if (kind == "gaussian1d") {
        restrict_keys(kv, {"data.n", "data.eval_n", "data.tau", "data.sigma", "data.seed"}, {});
        const long n = getl(kv, "data.n", 8000);
        const long eval_n = getl(kv, "data.eval_n", 1600);
        const double tau = getd(kv, "data.tau", 1.0);
        const double sigma = getd(kv, "data.sigma", 0.5);
        kv["data.n"] = std::to_string(n);
        kv["data.eval_n"] = std::to_string(eval_n);
        kv["data.tau"] = fmt_double(tau);
        kv["data.sigma"] = fmt_double(sigma);
        kv["data.seed"] = std::to_string(seed);

        const auto emit = [&](long count, uint64_t s, const std::string& prefix) {
            TensorPtr x0, x1;
            check(iflow_make_gaussian1d(size_t(count), tau, sigma, s, x0.out(), x1.out()));
            check(iflow_tensor_save(x0.p, join(out_dir, prefix + "_x0.ift").c_str()));
            check(iflow_tensor_save(x1.p, join(out_dir, prefix + "_x1.ift").c_str()));
        };
        emit(n, seed, "train");
        emit(eval_n, seed + 1, "eval");
    } else if (kind == "sc-embed") {
        restrict_keys(kv, {"data.input", "data.k", "data.seed"}, {});
        const std::string input = get(kv, "data.input", "");
        if (input.empty()) fail(2, "sc-embed needs data.input (a counts CSV)");
        const long k = getl(kv, "data.k", 20);
        kv["data.k"] = std::to_string(k);
        kv["data.seed"] = std::to_string(seed);

        TensorPtr counts;
        check(iflow_csv_load(input.c_str(), counts.out()));
        TensorPtr embed;
        check(iflow_sc_embed(counts.p, int(k), seed, embed.out()));
        check(iflow_tensor_save(embed.p, join(out_dir, "embed.ift").c_str()));
        check(iflow_csv_save(embed.p, join(out_dir, "embed.csv").c_str()));
    } else {
        fail(2, "unknown dataset '" + kind + "' (8gaussians, gaussian1d, sc-embed)");
    }
    write_text(join(out_dir, "gen-data.config"), render(kv));
    std::printf("wrote %s dataset to %s\n", kind.c_str(), out_dir.c_str());
    return 0;
}

int cmd_simulate_ns(Kv kv, const std::string& out_dir) {
    restrict_keys(kv,
                  {"ns.m", "ns.nu", "ns.t_end", "ns.dt", "ns.kind", "ns.seed", "ns.n_modes",
                   "ns.a1", "ns.a2", "ns.phase1", "ns.phase2", "ns.input"},
                  {});
    ensure_dir(out_dir);
    const long m = getl(kv, "ns.m", 64);
    const double nu = getd(kv, "ns.nu", 1e-3);
    const double t_end = getd(kv, "ns.t_end", 0.1);
    const double dt = getd(kv, "ns.dt", 0.0);
    const std::string kind = get(kv, "ns.kind", "random");
    const uint64_t seed = uint64_t(getl(kv, "ns.seed", 0));
    const long n_modes = getl(kv, "ns.n_modes", 10);
    const std::string input = get(kv, "ns.input", "");

    TensorPtr field;
    double t0 = 0.0;
    int m_eff = int(m);
    if (!input.empty()) {
        double file_nu = 0.0;
        check(iflow_field_load(input.c_str(), field.out(), &m_eff, &t0, &file_nu));
    } else if (kind == "random") {
        check(iflow_random_stream_field(seed, int(n_modes), int(m), field.out()));
    } else if (kind == "single") {
        check(iflow_single_mode_field(int(m), getd(kv, "ns.a1", 1.0), getd(kv, "ns.a2", 1.0),
                                      getd(kv, "ns.phase1", 0.0), getd(kv, "ns.phase2", 0.0),
                                      field.out()));
    } else {
        fail(2, "ns.kind must be random or single, got '" + kind + "'");
    }

    check(iflow_field_save(field.p, m_eff, t0, nu, join(out_dir, "field0.vf").c_str()));
    TensorPtr evolved;
    check(iflow_ns_simulate(field.p, m_eff, nu, dt, t_end, evolved.out()));
    check(iflow_field_save(evolved.p, m_eff, t0 + t_end, nu, join(out_dir, "field1.vf").c_str()));

    kv["ns.m"] = std::to_string(m_eff);
    kv["ns.nu"] = fmt_double(nu);
    kv["ns.t_end"] = fmt_double(t_end);
    kv["ns.dt"] = fmt_double(dt);
    kv["ns.kind"] = kind;
    kv["ns.seed"] = std::to_string(seed);
    kv["ns.n_modes"] = std::to_string(n_modes);
    write_text(join(out_dir, "simulate-ns.config"), render(kv));
    std::printf("evolved %dx%d field to t=%s\n", m_eff, m_eff, fmt_double(t0 + t_end).c_str());
    return 0;
}

int cmd_train(const std::string& method, Kv kv, const std::string& out_dir) {
    restrict_keys(kv, {"io.data", "io.model"}, {"train.", "noise."});
    ensure_dir(out_dir);
    kv["train.method"] = method;
    const std::string data_path = get(kv, "io.data", "");
    const std::string model_path = get(kv, "io.model", join(out_dir, "model.ift"));
    kv["io.model"] = model_path;

    TensorPtr data = load_tensor_arg(data_path, "io.data");
    size_t ndim = 0;
    check(iflow_tensor_ndim(data.p, &ndim));
    if (ndim != 2) fail(3, "training data must be 2-D");
    size_t width = 0;
    check(iflow_tensor_extent(data.p, 1, &width));

    const std::string kv_text = render(kv);
    ProcessPtr proc;
    check(iflow_process_create(kv_text.c_str(), &proc.p));
    ModelPtr model;
    check(iflow_model_create(kv_text.c_str(), int(width), uint64_t(getl(kv, "train.seed", 0)),
                             &model.p));

    char* csv = nullptr;
    double wall = 0.0;
    check(iflow_train(model.p, data.p, proc.p, kv_text.c_str(), &csv, &wall));
    write_text(join(out_dir, "train_log.csv"), csv ? csv : "");
    iflow_string_free(csv);

    check(iflow_model_save(model.p, model_path.c_str()));
    write_text(join(out_dir, "train.config"), render(kv));
    // wall time lives apart from the deterministic artifacts
    write_text(join(out_dir, "timing.txt"), "wall_seconds=" + fmt_double(wall) + "\n");
    std::printf("trained %s model -> %s\n", method.c_str(), model_path.c_str());
    return 0;
}

int cmd_denoise(Kv kv, const std::string& out_dir) {
    restrict_keys(kv, {"io.model", "io.input", "io.output"}, {});
    ensure_dir(out_dir);
    const std::string model_path = get(kv, "io.model", "");
    if (model_path.empty()) fail(2, "missing required key 'io.model'");
    const std::string output = get(kv, "io.output", join(out_dir, "denoised.ift"));
    kv["io.output"] = output;

    ModelPtr model;
    check(iflow_model_load(model_path.c_str(), &model.p));
    TensorPtr input = load_tensor_arg(get(kv, "io.input", ""), "io.input");
    TensorPtr result;
    check(iflow_denoise(model.p, input.p, result.out()));
    check(iflow_tensor_save(result.p, output.c_str()));
    write_text(join(out_dir, "denoise.config"), render(kv));
    std::printf("denoised -> %s\n", output.c_str());
    return 0;
}

int cmd_fit_noise(Kv kv, const std::string& out_dir) {
    restrict_keys(kv, {"io.input", "fit.patch"}, {});
    ensure_dir(out_dir);
    const long patch = getl(kv, "fit.patch", 4);
    kv["fit.patch"] = std::to_string(patch);

    TensorPtr img = load_tensor_arg(get(kv, "io.input", ""), "io.input");
    double gamma = 0.0, sigma_u = 0.0, sigma_w = 0.0;
    check(iflow_fit_poisson_gaussian(img.p, int(patch), &gamma, &sigma_u, &sigma_w));

    Kv fit;
    fit["noise.kind"] = "poisson-gaussian";
    fit["noise.gamma"] = fmt_double(gamma);
    fit["noise.sigma_u"] = fmt_double(sigma_u);
    fit["noise.sigma_w"] = fmt_double(sigma_w);
    write_text(join(out_dir, "fit.kv"), render(fit));
    write_text(join(out_dir, "fit-noise.config"), render(kv));
    std::printf("gamma=%.6g sigma_u=%.6g sigma_w=%.6g\n", gamma, sigma_u, sigma_w);
    return 0;
}

int cmd_eval(Kv kv, const std::string& out_dir) {
    restrict_keys(kv, {"eval.metric", "io.a", "io.b", "eval.peak", "eval.rounds", "eval.seed"},
                  {});
    ensure_dir(out_dir);
    const std::string metric = get(kv, "eval.metric", "");
    if (metric.empty()) fail(2, "missing required key 'eval.metric'");

    TensorPtr a = load_tensor_arg(get(kv, "io.a", ""), "io.a");
    TensorPtr b = load_tensor_arg(get(kv, "io.b", ""), "io.b");

    std::string result;
    char buf[128];
    if (metric == "psnr") {
        double v = 0.0;
        check(iflow_psnr(a.p, b.p, getd(kv, "eval.peak", 255.0), &v));
        std::snprintf(buf, sizeof buf, "psnr=%.12g\n", v);
        result = buf;
    } else if (metric == "energy") {
        double v = 0.0;
        check(iflow_energy_distance(a.p, b.p, &v));
        std::snprintf(buf, sizeof buf, "energy=%.12g\n", v);
        result = buf;
    } else if (metric == "nn-acc") {
        const long rounds = getl(kv, "eval.rounds", 0);
        if (rounds > 0) {
            double v = 0.0, se = 0.0;
            check(iflow_nn_accuracy_resampled(a.p, b.p, uint64_t(getl(kv, "eval.seed", 0)),
                                              int(rounds), &v, &se));
            std::snprintf(buf, sizeof buf, "nn_acc=%.12g\nnn_acc_se=%.12g\n", v, se);
            result = buf;
        } else {
            double v = 0.0;
            check(iflow_nn_accuracy(a.p, b.p, &v));
            std::snprintf(buf, sizeof buf, "nn_acc=%.12g\n", v);
            result = buf;
        }
    } else {
        fail(2, "eval.metric must be psnr, energy, or nn-acc, got '" + metric + "'");
    }

    std::fputs(result.c_str(), stdout);
    write_text(join(out_dir, "eval.txt"), result);
    write_text(join(out_dir, "eval.config"), render(kv));
    return 0;
}

int cmd_grid(Kv kv, const std::string& out_dir) {
    restrict_keys(kv, {"grid.eps", "grid.t_end", "grid.rho", "grid.n"}, {});
    ensure_dir(out_dir);
    const long n = getl(kv, "grid.n", 11);
    if (n < 2 || n > 100000) fail(2, "grid.n must be in [2, 100000]");
    std::vector<double> nodes(static_cast<size_t>(n), 0.0);
    size_t written = 0;
    check(iflow_time_grid(getd(kv, "grid.eps", 0.002), getd(kv, "grid.t_end", 1.0),
                          getd(kv, "grid.rho", 7.0), int(n), nodes.data(), nodes.size(),
                          &written));
    std::string text;
    char buf[64];
    for (size_t i = 0; i < written && i < nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g\n", nodes[i]);
        text += buf;
    }
    std::fputs(text.c_str(), stdout);
    write_text(join(out_dir, "grid.txt"), text);
    write_text(join(out_dir, "grid.config"), render(kv));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"inverse flow, consistency, and generalized consistency training toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = default_out();
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "key=value config file")->configurable(false);
    app.add_option("--out", out_dir, "output directory (default $IF_OUT or .)");
    app.add_option("--set", sets, "override one key, e.g. --set train.lr=2e-3");

    std::string gen_kind, train_method;
    auto* gen = app.add_subcommand("gen-data", "generate a reference dataset");
    gen->add_option("kind", gen_kind, "8gaussians | gaussian1d | sc-embed")->required();
    auto* sim = app.add_subcommand("simulate-ns", "evolve a velocity field");
    auto* train = app.add_subcommand("train", "train a model");
    train->add_option("method", train_method, "ifm | icm | gct")->required();
    auto* den = app.add_subcommand("denoise", "recover clean states with a trained model");
    auto* fit = app.add_subcommand("fit-noise", "fit a poisson-gaussian noise model");
    auto* ev = app.add_subcommand("eval", "compare two tensors");
    auto* grid = app.add_subcommand("grid", "print the time discretization");
    for (auto* sub : {gen, sim, train, den, fit, ev, grid}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Kv kv;
    if (!config_path.empty()) kv = read_kv_file(config_path);
    apply_sets(kv, sets);

    if (gen->parsed()) return cmd_gen_data(gen_kind, std::move(kv), out_dir);
    if (sim->parsed()) return cmd_simulate_ns(std::move(kv), out_dir);
    if (train->parsed()) return cmd_train(train_method, std::move(kv), out_dir);
    if (den->parsed()) return cmd_denoise(std::move(kv), out_dir);
    if (fit->parsed()) return cmd_fit_noise(std::move(kv), out_dir);
    if (ev->parsed()) return cmd_eval(std::move(kv), out_dir);
    if (grid->parsed()) return cmd_grid(std::move(kv), out_dir);
    return 2;
}
