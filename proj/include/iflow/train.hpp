#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iflow/nets.hpp"
#include "iflow/process.hpp"
#include "iflow/serialize.hpp"
#include "iflow/tensor.hpp"
#include "iflow/time_grid.hpp"

namespace iflow {

enum class Method { Ifm, Icm, Gct };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct TrainConfig {
    Method method = Method::Icm;
    long epochs = 2000;
    long batch = 256;
    long steps_per_epoch = 0; // 0 = one full pass over the data per epoch
    uint64_t seed = 0;

    double lr = 1e-3;
    double weight_decay = 0.01;
    std::string lr_schedule = "constant"; // or "halve-midpoint"

    // time discretization shared by sampling and the backward solve
    double eps = 0.002;
    double t_end = 1.0;
    double rho = 7.0;
    int grid_n = 11;

    std::string distance = "sq"; // or "huber"
    double huber_c = 0.03;

    // flow matching
    std::string variant = "v2"; // v1 needs the additive process
    int ode_steps = 10;         // evaluations per backward solve

    // consistency bootstrap: recompute the recovered states every k steps.
    // k > 1 only makes sense when the observation process is deterministic.
    long refresh_interval = 1;

    std::vector<int> hidden = {256, 256, 256, 256};
    int embed_dim = 256;
    double embed_scale = 1.0;
    std::string activation = "silu";
};

TrainConfig train_config_from_kv(const KvMap& kv);
KvMap train_config_to_kv(const TrainConfig& cfg);

struct TrainReport {
    std::vector<double> epoch_loss;
    long steps = 0;
    double wall_seconds = 0.0;
    KvMap config;
};

// One matched pair of adjacent-node states along per-row interpolation paths.
struct ConsistencyBatch {
    Tensor x_hi, x_lo;
    std::vector<double> t_hi, t_lo;
    std::vector<double> lambda; // node spacing, the per-row loss weight
};

// j picks the lower grid node per row (0-based, < grid size - 1). The upper
// state comes from the path, the lower one from a single step back along the
// conditional field, so both sit on the same path through (x0, x1p).
ConsistencyBatch make_consistency_batch(const Tensor& x0, const Tensor& x1p,
                                        const std::vector<int>& j, const TimeGrid& grid);

// mean over rows and columns of lambda_row * d(c(x_hi, t_hi), sg(c(x_lo, t_lo))).
// d is elementwise squared error, or sqrt(r^2 + c^2) - c for "huber".
template <class T>
int consistency_loss(GraphT<T>& g, const BoundNet<T>& net, int x_hi, int x_lo,
                     const std::vector<double>& t_hi, const std::vector<double>& t_lo,
                     const std::vector<double>& lambda, const std::string& distance,
                     double huber_c);

// mean over rows and columns of (v(x_t, t) - target)^2.
template <class T>
int flow_loss(GraphT<T>& g, const BoundNet<T>& net, int x_t, const std::vector<double>& ts,
              const TensorT<T>& target);

// Training entry points. The model must already have the matching kind and
// shapes; the resolved configuration is also stamped into model.extra_meta.
TrainReport train_ifm(Model& model, const Tensor& x1, const Process& proc,
                      const TrainConfig& cfg);
TrainReport train_icm(Model& model, const Tensor& x1, const Process& proc,
                      const TrainConfig& cfg);
TrainReport train_gct(Model& model, const Tensor& x0, const Process& proc,
                      const TrainConfig& cfg);

// Recovers clean states from observations: consistency models evaluate once
// at the far end of the grid, flow models integrate backward along it.
Tensor denoise(const Model& model, const Tensor& x1, const TimeGrid& grid);

// Name-ordered flattening, for comparing gradients across runs.
std::vector<double> flatten_grads(const std::map<std::string, Tensor>& grads);

extern template int consistency_loss<float>(GraphT<float>&, const BoundNet<float>&, int, int,
                                            const std::vector<double>&, const std::vector<double>&,
                                            const std::vector<double>&, const std::string&, double);
extern template int consistency_loss<double>(GraphT<double>&, const BoundNet<double>&, int, int,
                                             const std::vector<double>&, const std::vector<double>&,
                                             const std::vector<double>&, const std::string&, double);
extern template int flow_loss<float>(GraphT<float>&, const BoundNet<float>&, int,
                                     const std::vector<double>&, const TensorT<float>&);
extern template int flow_loss<double>(GraphT<double>&, const BoundNet<double>&, int,
                                      const std::vector<double>&, const TensorT<double>&);

} // namespace iflow
