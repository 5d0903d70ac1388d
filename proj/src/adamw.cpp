#include "iflow/adamw.hpp"

#include <cmath>

namespace iflow {

void AdamW::step(ParamStore& store, double lr_override) {
    const double lr = lr_override >= 0.0 ? lr_override : cfg_.lr;
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (auto& [name, p] : store.params()) {
        const Tensor& g = store.grad(name);
        auto mit = m_.find(name);
        if (mit == m_.end()) {
            mit = m_.emplace(name, TensorT<double>(p.shape())).first;
            v_.emplace(name, TensorT<double>(p.shape()));
        }
        TensorT<double>& m = mit->second;
        TensorT<double>& v = v_.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = double(g[i]);
            if (!std::isfinite(gi))
                numeric_error("adamw: non-finite gradient in '" + name + "' at element " +
                              std::to_string(i));
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            double pi = double(p[i]);
            pi -= lr * cfg_.weight_decay * pi;
            pi -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            p[i] = float(pi);
        }
    }
}

} // namespace iflow
