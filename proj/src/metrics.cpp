#include "iflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace iflow {

namespace {

double row_dist(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
        const double d = double(a.at2(i, c)) - double(b.at2(j, c));
        acc += d * d;
    }
    return std::sqrt(acc);
}

void require_samples(const Tensor& x, const Tensor& y, const char* what) {
    if (x.ndim() != 2 || y.ndim() != 2 || x.cols() != y.cols())
        data_error(std::string(what) + ": expected 2-D samples of equal width, got " +
                   x.shape_str() + " and " + y.shape_str());
    if (x.rows() == 0 || y.rows() == 0)
        data_error(std::string(what) + ": empty sample");
}

double mean_cross(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) acc += row_dist(a, i, b, j);
    return acc / (double(a.rows()) * double(b.rows()));
}

Tensor random_half(const Tensor& x, Rng& rng) {
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    idx.resize(std::max<std::size_t>(1, x.rows() / 2));
    return take_rows(x, idx);
}

} // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
    if (!a.same_shape(b))
        data_error("psnr: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    if (a.size() == 0) data_error("psnr: empty input");
    if (!(peak > 0.0)) config_error("psnr: peak must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        mse += d * d;
    }
    mse /= double(a.size());
    if (mse <= 0.0) return 200.0;
    return std::min(200.0, 10.0 * std::log10(peak * peak / mse));
}

double energy_distance(const Tensor& x, const Tensor& y) {
    require_samples(x, y, "energy_distance");
    return 2.0 * mean_cross(x, y) - mean_cross(x, x) - mean_cross(y, y);
}

double nn_accuracy(const Tensor& x, const Tensor& y) {
    require_samples(x, y, "nn_accuracy");
    const std::size_t nx = x.rows(), ny = y.rows();
    auto at = [&](std::size_t i) -> std::pair<const Tensor&, std::size_t> {
        return i < nx ? std::pair<const Tensor&, std::size_t>{x, i}
                      : std::pair<const Tensor&, std::size_t>{y, i - nx};
    };
    std::size_t correct = 0;
    for (std::size_t i = 0; i < nx + ny; ++i) {
        const auto [ti, ri] = at(i);
        double best = 0.0;
        std::size_t best_j = nx + ny;
        for (std::size_t j = 0; j < nx + ny; ++j) {
            if (j == i) continue;
            const auto [tj, rj] = at(j);
            const double d = row_dist(ti, ri, tj, rj);
            if (best_j == nx + ny || d < best) {
                best = d;
                best_j = j;
            }
        }
        if ((i < nx) == (best_j < nx)) ++correct;
    }
    return double(correct) / double(nx + ny);
}

Resampled nn_accuracy_resampled(const Tensor& x, const Tensor& y, Rng& rng, int rounds) {
    if (rounds < 2) config_error("nn_accuracy_resampled: need at least two rounds");
    std::vector<double> vals;
    for (int r = 0; r < rounds; ++r) {
        Rng round_rng = rng.sub("round", uint64_t(r));
        vals.push_back(nn_accuracy(random_half(x, round_rng), random_half(y, round_rng)));
    }
    Resampled out;
    for (double v : vals) out.value += v;
    out.value /= double(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - out.value) * (v - out.value);
    out.se = std::sqrt(ss / double(vals.size() - 1)) / std::sqrt(double(vals.size()));
    return out;
}

namespace {

void check_mixture(const MixtureSpec& mix, const Tensor& x, const char* what) {
    if (mix.centers.ndim() != 2 || mix.centers.rows() == 0)
        config_error(std::string(what) + ": mixture needs a k x d center matrix");
    if (!mix.weights.empty() && mix.weights.size() != mix.centers.rows())
        config_error(std::string(what) + ": weight count does not match center count");
    if (!(mix.tau > 0.0)) config_error(std::string(what) + ": tau must be positive");
    if (x.ndim() != 2 || x.cols() != mix.centers.cols())
        data_error(std::string(what) + ": input " + x.shape_str() +
                   " does not match center width " + std::to_string(mix.centers.cols()));
}

// log responsibilities and per-component posterior means for one row
void posterior_row(const MixtureSpec& mix, const Tensor& x, std::size_t r, double noise_std,
                   std::vector<double>& logw, TensorT<double>& means) {
    const std::size_t k = mix.centers.rows(), d = mix.centers.cols();
    const double t2 = mix.tau * mix.tau, s2 = noise_std * noise_std;
    for (std::size_t c = 0; c < k; ++c) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = double(x.at2(r, j)) - double(mix.centers.at2(c, j));
            sq += diff * diff;
            means.at2(c, j) =
                (t2 * double(x.at2(r, j)) + s2 * double(mix.centers.at2(c, j))) / (t2 + s2);
        }
        const double pi_c = mix.weights.empty() ? 1.0 / double(k) : mix.weights[c];
        logw[c] = std::log(std::max(pi_c, 1e-300)) - sq / (2.0 * (t2 + s2));
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    double z = 0.0;
    for (double& w : logw) z += std::exp(w - top);
    const double logz = top + std::log(z);
    for (double& w : logw) w -= logz;
}

} // namespace

Tensor gm_posterior_mean(const MixtureSpec& mix, const Tensor& x, double noise_std) {
    check_mixture(mix, x, "gm_posterior_mean");
    if (!(noise_std > 0.0)) config_error("gm_posterior_mean: noise_std must be positive");
    const std::size_t k = mix.centers.rows(), d = mix.centers.cols();
    Tensor out(x.shape());
    std::vector<double> logw(k);
    TensorT<double> means({k, d});
    for (std::size_t r = 0; r < x.rows(); ++r) {
        posterior_row(mix, x, r, noise_std, logw, means);
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < k; ++c) acc += std::exp(logw[c]) * means.at2(c, j);
            out.at2(r, j) = float(acc);
        }
    }
    return out;
}

Tensor gm_posterior_sample(const MixtureSpec& mix, const Tensor& x1, double noise_std,
                           std::size_t n_draws, Rng& rng) {
    check_mixture(mix, x1, "gm_posterior_sample");
    if (!(noise_std > 0.0)) config_error("gm_posterior_sample: noise_std must be positive");
    if (n_draws == 0) config_error("gm_posterior_sample: n_draws must be positive");
    const std::size_t k = mix.centers.rows(), d = mix.centers.cols();
    const double t2 = mix.tau * mix.tau, s2 = noise_std * noise_std;
    const double post_sd = std::sqrt(t2 * s2 / (t2 + s2));

    Tensor out({x1.rows() * n_draws, d});
    std::vector<double> logw(k);
    TensorT<double> means({k, d});
    for (std::size_t r = 0; r < x1.rows(); ++r) {
        posterior_row(mix, x1, r, noise_std, logw, means);
        std::vector<double> cdf(k);
        double run = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            run += std::exp(logw[c]);
            cdf[c] = run;
        }
        for (std::size_t s = 0; s < n_draws; ++s) {
            const double u = rng.uniform() * run;
            std::size_t c = 0;
            while (c + 1 < k && cdf[c] < u) ++c;
            for (std::size_t j = 0; j < d; ++j)
                out.at2(r * n_draws + s, j) = float(means.at2(c, j) + post_sd * rng.normal());
        }
    }
    return out;
}

std::vector<double> nearest_center_distance(const Tensor& x, const Tensor& centers) {
    require_samples(x, centers, "nearest_center_distance");
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double best = row_dist(x, i, centers, 0);
        for (std::size_t j = 1; j < centers.rows(); ++j)
            best = std::min(best, row_dist(x, i, centers, j));
        out[i] = best;
    }
    return out;
}

} // namespace iflow
