#pragma once

#include <cstdint>
#include <vector>

#include "iflow/tensor.hpp"

namespace iflow {

struct PcaResult {
    Tensor mean;                    // d
    Tensor components;              // k x d, unit rows, leading first
    std::vector<double> eigenvalues; // covariance spectrum along the components
};

// Power iteration with deflation on the sample covariance. Deterministic for a
// fixed seed; iters bounds the per-component iteration count.
PcaResult pca_fit(const Tensor& x, int k, int iters = 300, uint64_t seed = 1);

Tensor pca_transform(const PcaResult& p, const Tensor& x);

// Embedding cleanup used before training on expression profiles: keep the
// first six coordinates and put them on the leading component's scale.
Tensor normalize_embedding(const Tensor& embed);

} // namespace iflow
