#include "iflow/noise_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "iflow/common.hpp"

namespace iflow {

namespace {

struct PatchStats {
    std::vector<double> mean, var;
    int n = 0; // samples per patch
};

PatchStats collect_patches(const Tensor& img, int patch) {
    if (img.ndim() != 2)
        data_error("noise fit: expected a 2-D image, got " + img.shape_str());
    if (patch < 2) config_error("noise fit: patch side must be at least 2");
    const std::size_t ph = img.rows() / std::size_t(patch);
    const std::size_t pw = img.cols() / std::size_t(patch);
    if (ph * pw < 8)
        data_error("noise fit: image " + img.shape_str() + " yields only " +
                   std::to_string(ph * pw) + " patches; need at least 8");
    PatchStats st;
    st.n = patch * patch;
    st.mean.reserve(ph * pw);
    st.var.reserve(ph * pw);
    for (std::size_t py = 0; py < ph; ++py)
        for (std::size_t px = 0; px < pw; ++px) {
            double sum = 0.0;
            for (int dy = 0; dy < patch; ++dy)
                for (int dx = 0; dx < patch; ++dx)
                    sum += double(img.at2(py * patch + dy, px * patch + dx));
            const double mean = sum / double(st.n);
            double ss = 0.0;
            for (int dy = 0; dy < patch; ++dy)
                for (int dx = 0; dx < patch; ++dx) {
                    const double d = double(img.at2(py * patch + dy, px * patch + dx)) - mean;
                    ss += d * d;
                }
            st.mean.push_back(mean);
            st.var.push_back(ss / double(st.n - 1));
        }
    return st;
}

struct LineFit {
    double a = 0.0; // sigma_u^2
    double b = 0.0; // sigma_w^2
};

// Weighted least squares of var ~ a * mean^(2 gamma) + b, iterated so the
// weights track the fitted variance of each patch variance.
LineFit wls_for_gamma(const PatchStats& st, double gamma) {
    const std::size_t np = st.mean.size();
    std::vector<double> z(np), w(np, 1.0);
    for (std::size_t i = 0; i < np; ++i) z[i] = std::pow(std::max(st.mean[i], 0.0), 2.0 * gamma);

    LineFit fit;
    for (int round = 0; round < 3; ++round) {
        double szz = 0, sz = 0, s1 = 0, szy = 0, sy = 0;
        for (std::size_t i = 0; i < np; ++i) {
            szz += w[i] * z[i] * z[i];
            sz += w[i] * z[i];
            s1 += w[i];
            szy += w[i] * z[i] * st.var[i];
            sy += w[i] * st.var[i];
        }
        const double det = szz * s1 - sz * sz;
        if (std::abs(det) > 1e-12 * std::max(szz * s1, 1.0)) {
            fit.a = (szy * s1 - sz * sy) / det;
            fit.b = (szz * sy - sz * szy) / det;
        } else {
            fit.a = 0.0;
            fit.b = sy / s1;
        }
        if (fit.a < 0.0) {
            fit.a = 0.0;
            fit.b = sy / s1;
        }
        fit.b = std::max(fit.b, 1e-12);
        for (std::size_t i = 0; i < np; ++i) {
            const double v = std::max(fit.a * z[i] + fit.b, 1e-12);
            w[i] = 1.0 / (v * v);
        }
    }
    return fit;
}

// Gaussian log-likelihood of the patch samples under the fitted variance law,
// with each patch mean plugged in.
double score_gamma(const PatchStats& st, double gamma, LineFit* out) {
    const LineFit fit = wls_for_gamma(st, gamma);
    double ll = 0.0;
    for (std::size_t i = 0; i < st.mean.size(); ++i) {
        const double z = std::pow(std::max(st.mean[i], 0.0), 2.0 * gamma);
        const double v = std::max(fit.a * z + fit.b, 1e-12);
        ll += -0.5 * double(st.n) * std::log(2.0 * M_PI * v) -
              0.5 * double(st.n - 1) * st.var[i] / v;
    }
    if (out) *out = fit;
    return ll;
}

} // namespace

PgFit fit_poisson_gaussian(const Tensor& img, int patch) {
    const PatchStats st = collect_patches(img, patch);

    const double vmax = *std::max_element(st.var.begin(), st.var.end());
    double mean_spread = *std::max_element(st.mean.begin(), st.mean.end()) -
                         *std::min_element(st.mean.begin(), st.mean.end());
    if (vmax < 1e-12)
        data_error("noise fit: patch variances are all zero; the image is constant");
    if (mean_spread < 1e-9)
        data_error("noise fit: patch means are all equal; the variance law is unidentifiable");

    // coarse grid over the exponent, then a golden-section polish of the best cell
    const double lo = 0.0, hi = 1.5, step = 0.05;
    double best_gamma = lo, best_score = -std::numeric_limits<double>::infinity();
    for (double g = lo; g <= hi + 1e-12; g += step) {
        const double s = score_gamma(st, g, nullptr);
        if (s > best_score) {
            best_score = s;
            best_gamma = g;
        }
    }

    double a = std::max(lo, best_gamma - step);
    double b = std::min(hi, best_gamma + step);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = score_gamma(st, x1, nullptr), f2 = score_gamma(st, x2, nullptr);
    for (int it = 0; it < 40 && b - a > 1e-7; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = score_gamma(st, x2, nullptr);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = score_gamma(st, x1, nullptr);
        }
    }
    const double gamma = 0.5 * (a + b);

    PgFit out;
    LineFit line;
    out.log_likelihood = score_gamma(st, gamma, &line);
    out.gamma = gamma;
    out.sigma_u = std::sqrt(line.a);
    out.sigma_w = std::sqrt(line.b);
    out.n_patches = st.mean.size();
    return out;
}

} // namespace iflow
