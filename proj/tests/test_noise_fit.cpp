#include "doctest.h"

#include <cmath>

#include "iflow/noise_fit.hpp"
#include "iflow/rng.hpp"

using namespace iflow;

namespace {

// Image of flat 4x4 tiles with levels cycling over [lo, hi], plus noise drawn
// from the variance law v(f) = (sigma_u f^gamma)^2 + sigma_w^2. Flat tiles keep
// signal structure out of the patch variances, which is what the fitter assumes.
Tensor tiled_image(std::size_t side, double lo, double hi, double gamma, double sigma_u,
                   double sigma_w, uint64_t seed) {
    Tensor img({side, side});
    Rng rng(seed);
    const std::size_t tiles = side / 4;
    for (std::size_t ty = 0; ty < tiles; ++ty)
        for (std::size_t tx = 0; tx < tiles; ++tx) {
            const double u = double((ty * tiles + tx) % 16) / 15.0;
            const double f = lo + (hi - lo) * u;
            for (std::size_t dy = 0; dy < 4; ++dy)
                for (std::size_t dx = 0; dx < 4; ++dx) {
                    const double noise =
                        sigma_u * std::pow(f, gamma) * rng.normal() + sigma_w * rng.normal();
                    img.at2(ty * 4 + dy, tx * 4 + dx) = float(f + noise);
                }
        }
    return img;
}

} // namespace

TEST_CASE("variance-law fit recovers planted parameters within ten percent") {
    // gamma = 0.5 is the counting-noise exponent; sigma_w comparable to the
    // signal-dependent term keeps both identifiable
    const double gamma = 0.5, sigma_u = 0.2, sigma_w = 0.1;
    Tensor img = tiled_image(256, 0.25, 4.0, gamma, sigma_u, sigma_w, 41);
    PgFit fit = fit_poisson_gaussian(img, 4);

    CHECK(fit.n_patches == 64 * 64);
    CHECK(std::abs(fit.gamma - gamma) < 0.1 * gamma);
    CHECK(std::abs(fit.sigma_u - sigma_u) < 0.1 * sigma_u);
    CHECK(std::abs(fit.sigma_w - sigma_w) < 0.1 * sigma_w);
    CHECK(std::isfinite(fit.log_likelihood));
}

TEST_CASE("fit tracks a different exponent") {
    // gamma = 1 makes the noise proportional to the signal
    Tensor img = tiled_image(256, 0.25, 4.0, 1.0, 0.1, 0.05, 42);
    PgFit fit = fit_poisson_gaussian(img, 4);
    CHECK(std::abs(fit.gamma - 1.0) < 0.1);
    CHECK(std::abs(fit.sigma_u - 0.1) < 0.01);
}

TEST_CASE("pure additive noise drives the signal-dependent term to zero") {
    Tensor img = tiled_image(128, 0.25, 4.0, 0.5, 1e-6, 0.2, 43);
    PgFit fit = fit_poisson_gaussian(img, 4);
    CHECK(fit.sigma_u < 0.03);
    CHECK(std::abs(fit.sigma_w - 0.2) < 0.02);
}

TEST_CASE("constant image is a degenerate-data error") {
    Tensor img({64, 64}, 0.5f);
    try {
        (void)fit_poisson_gaussian(img, 4);
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrKind::Data);
        CHECK(std::string(e.what()).find("constant") != std::string::npos);
    }
}

TEST_CASE("varying but mean-flat image cannot identify the variance law") {
    // a checkerboard makes every patch identical: nonzero variance, but all
    // patch means coincide, so var ~ a g(mean) + b has no lever arm
    Tensor img({64, 64});
    for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x)
            img.at2(y, x) = ((x + y) % 2) ? 0.75f : 0.25f;
    try {
        (void)fit_poisson_gaussian(img, 4);
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrKind::Data);
        CHECK(std::string(e.what()).find("unidentifiable") != std::string::npos);
    }
}

TEST_CASE("undersized images and bad patch sizes are rejected") {
    CHECK_THROWS_AS((void)fit_poisson_gaussian(Tensor({8, 8}), 4), Error);
    CHECK_THROWS_AS((void)fit_poisson_gaussian(Tensor({64}), 4), Error);
    CHECK_THROWS_AS((void)fit_poisson_gaussian(Tensor({64, 64}), 1), Error);
}
