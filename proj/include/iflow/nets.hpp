#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iflow/autodiff.hpp"
#include "iflow/serialize.hpp"
#include "iflow/tensor.hpp"

namespace iflow {

struct MlpSpec {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<int> hidden = {256, 256, 256, 256};
    int embed_dim = 256;
    double embed_scale = 1.0;
    std::string activation = "silu"; // or "relu"
};

enum class ModelKind { VectorField, Consistency };

// A time-conditioned MLP: input is concat(x, embed(t)). The consistency head
// wraps the trunk as c(x, t) = x + t * F(x, t), so c(x, 0) returns x exactly
// and a zero-initialized output layer makes the whole map start at identity.
struct Model {
    ModelKind kind = ModelKind::VectorField;
    MlpSpec spec;
    Tensor freqs; // frozen Gaussian frequencies, half the embed width
    ParamStore params;
    uint64_t seed = 0;
    KvMap extra_meta; // carried through save/load untouched
};

Model make_model(ModelKind kind, const MlpSpec& spec, uint64_t seed);

int mlp_layer_count(const MlpSpec& spec);
std::string layer_weight_name(int layer);
std::string layer_bias_name(int layer);

// embed(t) = [sin(2 pi f_k t) | cos(2 pi f_k t)], one row per entry of ts.
template <class T>
TensorT<T> fourier_embed(const Tensor& freqs, const std::vector<double>& ts);

// Binds a model's parameters into a graph once; forward can then be called
// several times (the consistency bootstrap needs two passes per step) and all
// passes share the same parameter leaves.
template <class T>
class BoundNet {
public:
    static BoundNet bind(GraphT<T>& g, const Model& m);

    // x_node must be (B, in_dim); ts supplies one time per row.
    int forward(int x_node, const std::vector<double>& ts) const;

private:
    GraphT<T>* g_ = nullptr;
    const Model* model_ = nullptr;
    std::vector<int> weight_ids_;
    std::vector<int> bias_ids_;
};

// Convenience eager pass (builds a throwaway graph).
template <class T>
TensorT<T> model_forward(const Model& m, const TensorT<T>& x, const std::vector<double>& ts);

Tensor model_forward(const Model& m, const Tensor& x, double t);

// Model files: binary checkpoint at `path`, metadata text block at `path.meta`.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

extern template class BoundNet<float>;
extern template class BoundNet<double>;
extern template TensorT<float> fourier_embed<float>(const Tensor&, const std::vector<double>&);
extern template TensorT<double> fourier_embed<double>(const Tensor&, const std::vector<double>&);
extern template TensorT<float> model_forward<float>(const Model&, const TensorT<float>&,
                                                    const std::vector<double>&);
extern template TensorT<double> model_forward<double>(const Model&, const TensorT<double>&,
                                                      const std::vector<double>&);

} // namespace iflow
