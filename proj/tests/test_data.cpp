#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "iflow/csv.hpp"
#include "iflow/datasets.hpp"
#include "iflow/pca.hpp"

using namespace iflow;

namespace {

// Jacobi eigensolver on a small symmetric matrix, used as the reference
// spectrum for the power-iteration fit.
void jacobi_eigen(std::vector<double>& a, std::vector<double>& vecs, int d) {
    vecs.assign(std::size_t(d) * d, 0.0);
    for (int i = 0; i < d; ++i) vecs[std::size_t(i) * d + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += std::abs(a[std::size_t(p) * d + q]);
        if (off < 1e-13) break;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) {
                const double apq = a[std::size_t(p) * d + q];
                if (std::abs(apq) < 1e-15) continue;
                const double app = a[std::size_t(p) * d + p];
                const double aqq = a[std::size_t(q) * d + q];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < d; ++k) {
                    const double akp = a[std::size_t(k) * d + p];
                    const double akq = a[std::size_t(k) * d + q];
                    a[std::size_t(k) * d + p] = c * akp - s * akq;
                    a[std::size_t(k) * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[std::size_t(p) * d + k];
                    const double aqk = a[std::size_t(q) * d + k];
                    a[std::size_t(p) * d + k] = c * apk - s * aqk;
                    a[std::size_t(q) * d + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = vecs[std::size_t(k) * d + p];
                    const double vkq = vecs[std::size_t(k) * d + q];
                    vecs[std::size_t(k) * d + p] = c * vkp - s * vkq;
                    vecs[std::size_t(k) * d + q] = s * vkp + c * vkq;
                }
            }
    }
}

} // namespace

TEST_CASE("mode dataset geometry: centers on the unit circle, labels consistent") {
    Rng rng(301);
    EightGaussians data = make_eight_gaussians(4000, 0.1, rng);
    REQUIRE(data.noisy.rows() == 4000);
    REQUIRE(data.clean.rows() == 4000);
    REQUIRE(data.centers.rows() == 8);
    REQUIRE(data.labels.size() == 4000);

    for (std::size_t c = 0; c < 8; ++c) {
        const double r = std::hypot(double(data.centers.at2(c, 0)), double(data.centers.at2(c, 1)));
        CHECK(r == doctest::Approx(1.0).epsilon(1e-6));
    }
    // the four axis atoms and the four diagonal atoms are all present
    CHECK(data.centers.at2(0, 0) == 0.0f);
    CHECK(data.centers.at2(0, 1) == 1.0f);
    const float h = float(std::sqrt(0.5));
    CHECK(data.centers.at2(4, 0) == doctest::Approx(h));
    CHECK(data.centers.at2(4, 1) == doctest::Approx(h));

    std::vector<int> counts(8, 0);
    for (std::size_t i = 0; i < 4000; ++i) {
        const int lab = data.labels[i];
        REQUIRE(lab >= 0);
        REQUIRE(lab < 8);
        ++counts[std::size_t(lab)];
        // clean row repeats the labeled center exactly
        CHECK(data.clean.at2(i, 0) == data.centers.at2(std::size_t(lab), 0));
        CHECK(data.clean.at2(i, 1) == data.centers.at2(std::size_t(lab), 1));
        // the observation scatters around it at the jitter scale
        const double dx = double(data.noisy.at2(i, 0)) - double(data.clean.at2(i, 0));
        const double dy = double(data.noisy.at2(i, 1)) - double(data.clean.at2(i, 1));
        CHECK(std::hypot(dx, dy) < 0.1 * 6.0);
    }
    for (int c : counts) CHECK(c > 300); // roughly balanced assignment

    // deterministic in the stream
    Rng rng2(301);
    EightGaussians again = make_eight_gaussians(4000, 0.1, rng2);
    for (std::size_t i = 0; i < data.noisy.size(); ++i) CHECK(again.noisy[i] == data.noisy[i]);
}

TEST_CASE("scalar dataset has the requested prior and observation spread") {
    Rng rng(302);
    Gaussian1d d = make_gaussian1d(40000, 1.0, 0.5, rng);
    auto stats = [](const Tensor& t) {
        double m = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) m += t[i];
        m /= double(t.size());
        double v = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) v += (t[i] - m) * (t[i] - m);
        return std::pair{m, v / double(t.size())};
    };
    auto [m0, v0] = stats(d.x0);
    auto [m1, v1] = stats(d.x1);
    CHECK(std::abs(m0) < 0.02);
    CHECK(v0 == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::abs(m1) < 0.02);
    CHECK(v1 == doctest::Approx(1.25).epsilon(0.03));
    // x1 - x0 is independent of x0
    double cov = 0.0;
    for (std::size_t i = 0; i < d.x0.size(); ++i)
        cov += (d.x0[i] - m0) * ((d.x1[i] - d.x0[i]) - (m1 - m0));
    cov /= double(d.x0.size());
    CHECK(std::abs(cov) < 0.01);
}

TEST_CASE("principal directions match a dense eigensolver") {
    // anisotropic Gaussian blob with a known rotation
    Rng rng(303);
    const int d = 5;
    Tensor x({2000, std::size_t(d)});
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double raw[5];
        for (int j = 0; j < d; ++j) raw[j] = rng.normal();
        // stretch: scales 3, 2, 1, 0.5, 0.25 along a fixed mixing
        const double scales[5] = {3.0, 2.0, 1.0, 0.5, 0.25};
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k)
                acc += std::cos(double(j * k) * 0.7 + 0.3 * double(k)) * scales[k] * raw[k] * 0.5;
            x.at2(r, std::size_t(j)) = float(acc + double(j) * 0.1);
        }
    }

    PcaResult fit = pca_fit(x, 3, 500, 7);
    REQUIRE(fit.components.rows() == 3);
    REQUIRE(fit.eigenvalues.size() == 3);

    // reference: dense covariance, Jacobi rotations
    std::vector<double> mean(std::size_t(d), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (int j = 0; j < d; ++j) mean[std::size_t(j)] += double(x.at2(r, std::size_t(j)));
    for (auto& m : mean) m /= double(x.rows());
    std::vector<double> cov(std::size_t(d) * d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                cov[std::size_t(a) * d + b] += (double(x.at2(r, std::size_t(a))) - mean[std::size_t(a)]) *
                                               (double(x.at2(r, std::size_t(b))) - mean[std::size_t(b)]);
    for (auto& c : cov) c /= double(x.rows() - 1);

    std::vector<double> diag = cov, vecs;
    jacobi_eigen(diag, vecs, d);
    // extract the top three eigenpairs from the diagonalization
    std::vector<std::pair<double, int>> order;
    for (int j = 0; j < d; ++j) order.emplace_back(diag[std::size_t(j) * d + j], j);
    std::sort(order.rbegin(), order.rend());

    for (int c = 0; c < 3; ++c) {
        CHECK(fit.eigenvalues[std::size_t(c)] ==
              doctest::Approx(order[std::size_t(c)].first).epsilon(1e-3));
        // direction match up to sign: |<fit, ref>| close to 1
        double dot = 0.0;
        for (int j = 0; j < d; ++j)
            dot += double(fit.components.at2(std::size_t(c), std::size_t(j))) *
                   vecs[std::size_t(j) * d + order[std::size_t(c)].second];
        CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-3));
    }

    // mean removal: transform of the mean row lands at the origin
    Tensor mean_row({1, std::size_t(d)});
    for (int j = 0; j < d; ++j) mean_row.at2(0, std::size_t(j)) = fit.mean[std::size_t(j)];
    Tensor z = pca_transform(fit, mean_row);
    for (std::size_t j = 0; j < z.size(); ++j) CHECK(std::abs(z[j]) < 1e-5);
}

TEST_CASE("projection scores reproduce the eigenvalue spectrum") {
    Rng rng(304);
    Tensor x({3000, 4});
    for (std::size_t r = 0; r < x.rows(); ++r) {
        x.at2(r, 0) = float(2.0 * rng.normal());
        x.at2(r, 1) = float(1.0 * rng.normal());
        x.at2(r, 2) = float(0.5 * rng.normal());
        x.at2(r, 3) = float(0.1 * rng.normal());
    }
    PcaResult fit = pca_fit(x, 2, 300, 11);
    Tensor z = pca_transform(fit, x);
    REQUIRE(z.cols() == 2);
    for (int c = 0; c < 2; ++c) {
        double var = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r)
            var += double(z.at2(r, std::size_t(c))) * double(z.at2(r, std::size_t(c)));
        var /= double(z.rows() - 1);
        CHECK(var == doctest::Approx(fit.eigenvalues[std::size_t(c)]).epsilon(0.02));
    }
    CHECK(fit.eigenvalues[0] > fit.eigenvalues[1]);
}

TEST_CASE("embedding cleanup keeps six columns on the leading scale") {
    Rng rng(305);
    Tensor embed({500, 9});
    for (std::size_t r = 0; r < embed.rows(); ++r)
        for (std::size_t c = 0; c < 9; ++c)
            embed.at2(r, c) = float((9.0 - double(c)) * rng.normal());
    Tensor out = normalize_embedding(embed);
    REQUIRE(out.cols() == 6);
    REQUIRE(out.rows() == 500);
    double var0 = 0.0, mean0 = 0.0;
    for (std::size_t r = 0; r < out.rows(); ++r) mean0 += double(out.at2(r, 0));
    mean0 /= double(out.rows());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        const double d0 = double(out.at2(r, 0)) - mean0;
        var0 += d0 * d0;
    }
    var0 /= double(out.rows() - 1);
    CHECK(std::sqrt(var0) == doctest::Approx(1.0).epsilon(0.01));

    // relative scales are preserved
    double var1 = 0.0;
    for (std::size_t r = 0; r < out.rows(); ++r)
        var1 += double(out.at2(r, 1)) * double(out.at2(r, 1));
    var1 /= double(out.rows() - 1);
    CHECK(std::sqrt(var1) == doctest::Approx(8.0 / 9.0).epsilon(0.15));

    // narrow embeddings pass through with fewer columns
    Tensor narrow({10, 3});
    narrow.fill_normal(rng);
    CHECK(normalize_embedding(narrow).cols() == 3);

    // a constant leading coordinate has no scale to normalize by
    CHECK_THROWS_AS((void)normalize_embedding(Tensor({10, 3}, 1.0f)), Error);
}

TEST_CASE("csv round-trips a matrix") {
    Tensor x({3, 2}, {1.25f, -2.0f, 0.0f, 1e-5f, 300.0f, -0.75f});
    const auto path = (std::filesystem::temp_directory_path() / "iflow_rt.csv").string();
    save_csv(x, path);
    Tensor back = load_csv(path);
    REQUIRE(back.same_shape(x));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-6));
    std::filesystem::remove(path);
}

TEST_CASE("csv loader skips one header line and rejects ragged rows") {
    const auto dir = std::filesystem::temp_directory_path();
    {
        std::ofstream f(dir / "iflow_hdr.csv");
        f << "x,y\n1.5,2.5\n3.5,4.5\n";
    }
    Tensor t = load_csv((dir / "iflow_hdr.csv").string());
    REQUIRE(t.rows() == 2);
    CHECK(t.at2(0, 0) == 1.5f);
    CHECK(t.at2(1, 1) == 4.5f);

    {
        std::ofstream f(dir / "iflow_rag.csv");
        f << "1,2\n3,4,5\n";
    }
    try {
        (void)load_csv((dir / "iflow_rag.csv").string());
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrKind::Data);
        // errors carry path:line so the offending row is addressable
        CHECK(std::string(e.what()).find("iflow_rag.csv:2") != std::string::npos);
    }

    {
        std::ofstream f(dir / "iflow_mid.csv");
        f << "1,2\nx,4\n";
    }
    CHECK_THROWS_AS((void)load_csv((dir / "iflow_mid.csv").string()), Error);

    std::filesystem::remove(dir / "iflow_hdr.csv");
    std::filesystem::remove(dir / "iflow_rag.csv");
    std::filesystem::remove(dir / "iflow_mid.csv");
}

TEST_CASE("label files round-trip") {
    const auto path = (std::filesystem::temp_directory_path() / "iflow_lab.txt").string();
    std::vector<int> labels{3, 0, 7, 7, 1};
    save_labels(labels, path);
    CHECK(load_labels(path) == labels);
    std::filesystem::remove(path);
}
