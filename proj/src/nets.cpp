#include "iflow/nets.hpp"

#include <cmath>
#include <sstream>

namespace iflow {

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

} // namespace

int mlp_layer_count(const MlpSpec& spec) { return int(spec.hidden.size()) + 1; }

std::string layer_weight_name(int layer) { return "mlp." + std::to_string(layer) + ".weight"; }
std::string layer_bias_name(int layer) { return "mlp." + std::to_string(layer) + ".bias"; }

Model make_model(ModelKind kind, const MlpSpec& spec, uint64_t seed) {
    if (spec.in_dim < 1) config_error("model.in_dim must be positive");
    if (spec.out_dim < 1) config_error("model.out_dim must be positive");
    if (spec.embed_dim < 2 || spec.embed_dim % 2 != 0)
        config_error("model.embed_dim must be even and >= 2, got " +
                     std::to_string(spec.embed_dim));
    if (spec.activation != "silu" && spec.activation != "relu")
        config_error("model.activation must be silu or relu, got '" + spec.activation + "'");
    if (kind == ModelKind::Consistency && spec.in_dim != spec.out_dim)
        config_error("consistency model needs in_dim == out_dim");
    for (int h : spec.hidden)
        if (h < 1) config_error("model.hidden entries must be positive");

    Model m;
    m.kind = kind;
    m.spec = spec;
    m.seed = seed;

    Rng init = Rng(seed).sub("init");
    m.freqs = Tensor({std::size_t(spec.embed_dim / 2)});
    Rng freq_rng = init.sub("freqs");
    m.freqs.fill_normal(freq_rng, 0.0, spec.embed_scale);

    const int layers = mlp_layer_count(spec);
    int fan_in = spec.in_dim + spec.embed_dim;
    for (int l = 0; l < layers; ++l) {
        const int fan_out = l < int(spec.hidden.size()) ? spec.hidden[std::size_t(l)]
                                                        : spec.out_dim;
        Tensor w({std::size_t(fan_in), std::size_t(fan_out)});
        Tensor b({std::size_t(fan_out)});
        if (l == layers - 1) {
            // zero output layer: the consistency map starts at identity and the
            // vector field starts at zero, so inversion begins from x0 = x1
        } else {
            const double bound = 1.0 / std::sqrt(double(fan_in));
            Rng wr = init.sub("weight", uint64_t(l));
            Rng br = init.sub("bias", uint64_t(l));
            w.fill_uniform(wr, -bound, bound);
            b.fill_uniform(br, -bound, bound);
        }
        m.params.add(layer_weight_name(l), std::move(w));
        m.params.add(layer_bias_name(l), std::move(b));
        fan_in = fan_out;
    }
    return m;
}

template <class T>
TensorT<T> fourier_embed(const Tensor& freqs, const std::vector<double>& ts) {
    const std::size_t half = freqs.size();
    TensorT<T> out({ts.size(), 2 * half});
    for (std::size_t r = 0; r < ts.size(); ++r) {
        for (std::size_t k = 0; k < half; ++k) {
            const double arg = 2.0 * M_PI * double(freqs[k]) * ts[r];
            out.at2(r, k) = T(std::sin(arg));
            out.at2(r, half + k) = T(std::cos(arg));
        }
    }
    return out;
}

template <class T>
BoundNet<T> BoundNet<T>::bind(GraphT<T>& g, const Model& m) {
    BoundNet<T> net;
    net.g_ = &g;
    net.model_ = &m;
    const int layers = mlp_layer_count(m.spec);
    for (int l = 0; l < layers; ++l) {
        net.weight_ids_.push_back(
            g.param(layer_weight_name(l), cast<T>(m.params.get(layer_weight_name(l)))));
        net.bias_ids_.push_back(
            g.param(layer_bias_name(l), cast<T>(m.params.get(layer_bias_name(l)))));
    }
    return net;
}

template <class T>
int BoundNet<T>::forward(int x_node, const std::vector<double>& ts) const {
    GraphT<T>& g = *g_;
    const Model& m = *model_;
    // pushing nodes can reallocate the graph, so take extents by value here
    const std::size_t batch = g.value(x_node).rows();
    if (g.value(x_node).ndim() != 2 || g.value(x_node).cols() != std::size_t(m.spec.in_dim))
        config_error("model forward expects (batch, " + std::to_string(m.spec.in_dim) +
                     "), got " + g.value(x_node).shape_str());
    if (ts.size() != batch) config_error("model forward needs one time per row");

    int h = g.concat_cols(x_node, g.input(fourier_embed<T>(m.freqs, ts)));
    const int layers = mlp_layer_count(m.spec);
    for (int l = 0; l < layers; ++l) {
        h = g.add_bias(g.matmul(h, weight_ids_[std::size_t(l)]), bias_ids_[std::size_t(l)]);
        if (l < layers - 1) h = m.spec.activation == "relu" ? g.relu(h) : g.silu(h);
    }
    if (m.kind == ModelKind::VectorField) return h;

    // c(x, t) = x + t * F(x, t); exact identity at t = 0
    TensorT<T> t_tile({batch, std::size_t(m.spec.out_dim)});
    for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t c = 0; c < std::size_t(m.spec.out_dim); ++c)
            t_tile.at2(r, c) = T(ts[r]);
    return g.add(x_node, g.mul(h, g.input(std::move(t_tile))));
}

template <class T>
TensorT<T> model_forward(const Model& m, const TensorT<T>& x, const std::vector<double>& ts) {
    GraphT<T> g;
    auto net = BoundNet<T>::bind(g, m);
    const int out = net.forward(g.input(x), ts);
    return g.value(out);
}

Tensor model_forward(const Model& m, const Tensor& x, double t) {
    return model_forward<float>(m, x, std::vector<double>(x.rows(), t));
}

void save_model(const Model& m, const std::string& path) {
    std::map<std::string, Tensor> entries = m.params.params();
    entries.emplace("embed.freqs", m.freqs);
    save_checkpoint(entries, path);

    KvMap meta = m.extra_meta;
    meta["model.kind"] = m.kind == ModelKind::VectorField ? "vf" : "cf";
    meta["model.in_dim"] = std::to_string(m.spec.in_dim);
    meta["model.out_dim"] = std::to_string(m.spec.out_dim);
    meta["model.hidden"] = join_ints(m.spec.hidden);
    meta["model.embed_dim"] = std::to_string(m.spec.embed_dim);
    meta["model.embed_scale"] = std::to_string(m.spec.embed_scale);
    meta["model.activation"] = m.spec.activation;
    meta["model.seed"] = std::to_string(m.seed);
    save_kv_file(meta, path + ".meta");
}

Model load_model(const std::string& path) {
    KvMap meta = load_kv_file(path + ".meta");
    MlpSpec spec;
    spec.in_dim = int(kv_get_long(meta, "model.in_dim", 0));
    spec.out_dim = int(kv_get_long(meta, "model.out_dim", 0));
    spec.hidden = split_ints(kv_get_string(meta, "model.hidden", ""));
    spec.embed_dim = int(kv_get_long(meta, "model.embed_dim", 0));
    spec.embed_scale = kv_get_double(meta, "model.embed_scale", 1.0);
    spec.activation = kv_get_string(meta, "model.activation", "silu");
    const std::string kind = kv_get_string(meta, "model.kind", "");
    if (kind != "vf" && kind != "cf") data_error(path + ".meta: bad model.kind '" + kind + "'");

    Model m = make_model(kind == "vf" ? ModelKind::VectorField : ModelKind::Consistency, spec,
                         uint64_t(kv_get_long(meta, "model.seed", 0)));
    for (const auto& k : {"model.kind", "model.in_dim", "model.out_dim", "model.hidden",
                          "model.embed_dim", "model.embed_scale", "model.activation",
                          "model.seed"})
        meta.erase(k);
    m.extra_meta = meta;

    auto entries = load_checkpoint(path);
    auto take = [&](const std::string& name) {
        auto it = entries.find(name);
        if (it == entries.end()) data_error(path + ": checkpoint missing tensor '" + name + "'");
        return it->second;
    };
    {
        Tensor f = take("embed.freqs");
        if (!f.same_shape(m.freqs))
            data_error(path + ": embed.freqs shape " + f.shape_str() + ", expected " +
                       m.freqs.shape_str());
        m.freqs = std::move(f);
    }
    for (auto& [name, t] : m.params.params()) {
        Tensor loaded = take(name);
        if (!loaded.same_shape(t))
            data_error(path + ": tensor '" + name + "' has shape " + loaded.shape_str() +
                       ", expected " + t.shape_str());
        t = std::move(loaded);
    }
    return m;
}

template class BoundNet<float>;
template class BoundNet<double>;
template TensorT<float> fourier_embed<float>(const Tensor&, const std::vector<double>&);
template TensorT<double> fourier_embed<double>(const Tensor&, const std::vector<double>&);
template TensorT<float> model_forward<float>(const Model&, const TensorT<float>&,
                                             const std::vector<double>&);
template TensorT<double> model_forward<double>(const Model&, const TensorT<double>&,
                                               const std::vector<double>&);

} // namespace iflow
