#pragma once

#include <map>
#include <string>

#include "iflow/autodiff.hpp"
#include "iflow/tensor.hpp"

namespace iflow {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01; // decoupled: applied to the weights, not the gradient
};

// Moment buffers are kept in double so the update is insensitive to the
// float32 parameter storage.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    // Applies one update from the gradients currently held by the store.
    // lr_override < 0 keeps the configured rate.
    void step(ParamStore& store, double lr_override = -1.0);

    long steps_taken() const { return t_; }
    const AdamWConfig& config() const { return cfg_; }

private:
    AdamWConfig cfg_;
    long t_ = 0;
    std::map<std::string, TensorT<double>> m_, v_;
};

// Piecewise-constant rate: base until the midpoint epoch, then base * factor.
struct StepLr {
    double base = 1e-3;
    long total_epochs = 0; // 0 disables the drop
    double factor = 0.5;

    double at(long epoch) const {
        if (total_epochs <= 0) return base;
        return epoch >= total_epochs / 2 ? base * factor : base;
    }
};

} // namespace iflow
