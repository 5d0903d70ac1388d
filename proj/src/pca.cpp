#include "iflow/pca.hpp"

#include <cmath>

#include "iflow/blas.hpp"
#include "iflow/rng.hpp"

namespace iflow {

PcaResult pca_fit(const Tensor& x, int k, int iters, uint64_t seed) {
    if (x.ndim() != 2) data_error("pca: expected a 2-D matrix, got " + x.shape_str());
    const std::size_t n = x.rows(), d = x.cols();
    if (n < 2) data_error("pca: need at least two rows");
    if (k < 1 || std::size_t(k) > d)
        config_error("pca: component count " + std::to_string(k) + " outside [1, " +
                     std::to_string(d) + "]");
    if (iters < 1) config_error("pca: iters must be positive");

    PcaResult res;
    res.mean = Tensor({d});
    TensorT<double> xc({n, d});
    for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += double(x.at2(r, c));
        res.mean[c] = float(acc / double(n));
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c)
            xc.at2(r, c) = double(x.at2(r, c)) - double(res.mean[c]);

    res.components = Tensor({std::size_t(k), d});
    std::vector<std::vector<double>> comps;
    Rng rng(seed);

    std::vector<double> v(d), w(n), u(d);
    for (int comp = 0; comp < k; ++comp) {
        for (auto& e : v) e = rng.normal();
        double lambda = 0.0;
        for (int it = 0; it < iters; ++it) {
            // implicit covariance product: u = Xc^T (Xc v) / (n - 1)
            detail::gemm(false, false, int(n), 1, int(d), 1.0, xc.data(), int(d), v.data(), 1,
                         0.0, w.data(), 1);
            detail::gemm(true, false, int(d), 1, int(n), 1.0 / double(n - 1), xc.data(), int(d),
                         w.data(), 1, 0.0, u.data(), 1);
            for (const auto& prev : comps) {
                double dot = 0.0;
                for (std::size_t i = 0; i < d; ++i) dot += u[i] * prev[i];
                for (std::size_t i = 0; i < d; ++i) u[i] -= dot * prev[i];
            }
            double norm = 0.0;
            for (double e : u) norm += e * e;
            norm = std::sqrt(norm);
            if (norm < 1e-300)
                numeric_error("pca: covariance product vanished for component " +
                              std::to_string(comp + 1) + "; rank is too low");
            double drift = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                const double next = u[i] / norm;
                drift = std::max(drift, std::abs(next - v[i]));
                v[i] = next;
            }
            lambda = norm;
            if (drift < 1e-12 && it > 0) break;
        }
        for (std::size_t i = 0; i < d; ++i) res.components.at2(std::size_t(comp), i) = float(v[i]);
        res.eigenvalues.push_back(lambda);
        comps.push_back(v);
    }
    return res;
}

Tensor pca_transform(const PcaResult& p, const Tensor& x) {
    if (x.ndim() != 2 || x.cols() != p.mean.size())
        data_error("pca_transform: input " + x.shape_str() + " does not match the fitted width " +
                   std::to_string(p.mean.size()));
    const std::size_t n = x.rows(), d = x.cols(), k = p.components.rows();
    Tensor out({n, k});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                acc += (double(x.at2(r, i)) - double(p.mean[i])) *
                       double(p.components.at2(c, i));
            out.at2(r, c) = float(acc);
        }
    return out;
}

Tensor normalize_embedding(const Tensor& embed) {
    if (embed.ndim() != 2 || embed.cols() < 1)
        data_error("normalize_embedding: expected a 2-D embedding, got " + embed.shape_str());
    const std::size_t n = embed.rows();
    const std::size_t keep = std::min<std::size_t>(6, embed.cols());
    if (n < 2) data_error("normalize_embedding: need at least two rows");

    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += double(embed.at2(r, 0));
    mean /= double(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double d = double(embed.at2(r, 0)) - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / double(n - 1));
    if (sd < 1e-30)
        data_error("normalize_embedding: the leading coordinate is constant");

    Tensor out({n, keep});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < keep; ++c)
            out.at2(r, c) = float(double(embed.at2(r, c)) / sd);
    return out;
}

} // namespace iflow
