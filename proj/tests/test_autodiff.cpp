#include "doctest.h"

#include <cmath>

#include "iflow/autodiff.hpp"
#include "iflow/rng.hpp"

using namespace iflow;

namespace {

TensorT<double> random_tensor(std::vector<std::size_t> shape, uint64_t seed, double lo = -1.0,
                              double hi = 1.0) {
    TensorT<double> t(shape);
    Rng rng(seed);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

} // namespace

TEST_CASE("gradient of sum of squares is exact") {
    auto x = random_tensor({6}, 1);
    GraphT<double> g;
    const int xid = g.param("x", x);
    const int loss = g.mean_all(g.mul(xid, xid));
    auto grads = g.grad(loss);
    const auto& gx = grads.at("x");
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(gx[i] - 2.0 * x[i] / double(x.size())) < 1e-12);
}

TEST_CASE("finite differences confirm every primitive") {
    const double tol = 1e-4;

    SUBCASE("add and scale") {
        auto x = random_tensor({2, 3}, 2);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) {
                      return g.mean_all(g.mul(g.add(xid, g.scale(xid, 0.5)), xid));
                  },
                  x) < tol);
    }
    SUBCASE("sub and add_scalar") {
        auto x = random_tensor({5}, 3);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) {
                      const int y = g.add_scalar(xid, 0.7);
                      return g.mean_all(g.mul(g.sub(y, g.scale(xid, 2.0)), y));
                  },
                  x) < tol);
    }
    SUBCASE("mul") {
        auto x = random_tensor({4}, 4);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) {
                      return g.mean_all(g.mul(xid, g.mul(xid, xid)));
                  },
                  x) < tol);
    }
    SUBCASE("matmul with a constant right factor") {
        auto x = random_tensor({3, 4}, 5);
        auto w = random_tensor({4, 2}, 6);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) {
                      const int wid = g.input(w);
                      const int y = g.matmul(xid, wid);
                      return g.mean_all(g.mul(y, y));
                  },
                  x) < tol);
    }
    SUBCASE("matmul with a constant left factor") {
        auto a = random_tensor({3, 4}, 7);
        auto x = random_tensor({4, 2}, 8);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) {
                      const int aid = g.input(a);
                      const int y = g.matmul(aid, xid);
                      return g.mean_all(g.mul(y, y));
                  },
                  x) < tol);
    }
    SUBCASE("add_bias, gradient to the bias") {
        auto b = random_tensor({3}, 9);
        auto a = random_tensor({4, 3}, 10);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int bid) {
                      const int aid = g.input(a);
                      const int y = g.add_bias(aid, bid);
                      return g.mean_all(g.mul(y, y));
                  },
                  b) < tol);
    }
    SUBCASE("silu") {
        auto x = random_tensor({7}, 11, -3.0, 3.0);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) { return g.mean_all(g.silu(xid)); }, x) < tol);
    }
    SUBCASE("relu away from the kink") {
        // keep probes away from 0 so the central difference stays valid
        auto x = random_tensor({6}, 12, 0.5, 2.0);
        for (std::size_t i = 0; i < x.size(); i += 2) x[i] = -x[i];
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) { return g.mean_all(g.relu(xid)); }, x) < tol);
    }
    SUBCASE("sin and cos") {
        auto x = random_tensor({5}, 13, -2.0, 2.0);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) {
                      return g.mean_all(g.mul(g.sin_of(xid), g.cos_of(xid)));
                  },
                  x) < tol);
    }
    SUBCASE("sqrt") {
        auto x = random_tensor({5}, 14, 0.5, 4.0);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) { return g.mean_all(g.sqrt_of(xid)); }, x) < tol);
    }
    SUBCASE("concat_cols, both sides") {
        auto x = random_tensor({3, 5}, 15);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) {
                      // feed x through both halves of the concat
                      const int y = g.concat_cols(g.scale(xid, 1.5), xid);
                      return g.mean_all(g.mul(y, y));
                  },
                  x) < tol);
    }
    SUBCASE("sqdiff, both sides") {
        auto x = random_tensor({6}, 16);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int xid) {
                      return g.mean_all(g.sqdiff(xid, g.scale(xid, -0.3)));
                  },
                  x) < tol);
    }
    SUBCASE("a composite resembling one network layer") {
        auto w = random_tensor({4, 3}, 17);
        auto xin = random_tensor({5, 4}, 18);
        auto bias = random_tensor({3}, 19);
        auto target = random_tensor({5, 3}, 28);
        CHECK(check_gradients(
                  [&](GraphT<double>& g, int wid) {
                      const int x = g.input(xin);
                      const int b = g.input(bias);
                      const int h = g.silu(g.add_bias(g.matmul(x, wid), b));
                      return g.mean_all(g.sqdiff(h, g.input(target)));
                  },
                  w) < tol);
    }
}

TEST_CASE("matmul backward matches the hand-written oracle") {
    // loss = mean((A B)^2); dL/dA = (2/n) (A B) B^T, dL/dB = (2/n) A^T (A B)
    auto a = random_tensor({2, 3}, 20);
    auto b = random_tensor({3, 2}, 21);
    GraphT<double> g;
    const int aid = g.param("a", a);
    const int bid = g.param("b", b);
    const int y = g.matmul(aid, bid);
    const int loss = g.mean_all(g.mul(y, y));
    auto grads = g.grad(loss);

    const auto& yv = g.value(y);
    const double n = double(yv.size());
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 3; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 2; ++j) acc += yv.at2(i, j) * b.at2(k, j);
            CHECK(std::abs(grads.at("a").at2(i, k) - 2.0 * acc / n) < 1e-12);
        }
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < 2; ++i) acc += a.at2(i, k) * yv.at2(i, j);
            CHECK(std::abs(grads.at("b").at2(k, j) - 2.0 * acc / n) < 1e-12);
        }
}

TEST_CASE("add_bias backward sums over rows") {
    auto a = random_tensor({4, 3}, 22);
    auto b = random_tensor({3}, 23);
    GraphT<double> g;
    const int aid = g.input(a);
    const int bid = g.param("b", b);
    const int loss = g.mean_all(g.add_bias(aid, bid));
    auto grads = g.grad(loss);
    // each bias element feeds 4 of the 12 outputs of the mean
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(std::abs(grads.at("b")[c] - 4.0 / 12.0) < 1e-12);
}

TEST_CASE("stop_gradient blocks the upstream path") {
    auto x = random_tensor({4}, 24);
    GraphT<double> g;
    const int xid = g.param("x", x);
    const int frozen = g.stop_gradient(g.mul(xid, xid));
    const int loss = g.mean_all(g.mul(xid, frozen));
    auto grads = g.grad(loss);
    // d/dx mean(x * stop(x^2)) treats the stopped factor as constant: x^2 / n
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(grads.at("x")[i] - x[i] * x[i] / double(x.size())) < 1e-12);

    // value is unchanged by the stop
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(g.value(frozen)[i] == x[i] * x[i]);
}

TEST_CASE("untouched parameters come back with zero gradients") {
    GraphT<double> g;
    const int xid = g.param("x", TensorT<double>({3}, {1.0, 2.0, 3.0}));
    const int unused = g.param("y", TensorT<double>({2}, {5.0, 6.0}));
    (void)unused;
    const int loss = g.mean_all(xid);
    auto grads = g.grad(loss);
    REQUIRE(grads.count("y") == 1);
    for (std::size_t i = 0; i < 2; ++i) CHECK(grads.at("y")[i] == 0.0);
}

TEST_CASE("shape mismatches are config errors naming the shapes") {
    GraphT<double> g;
    const int a = g.input(TensorT<double>({2, 3}));
    const int b = g.input(TensorT<double>({3, 3}));
    try {
        (void)g.add(a, b);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrKind::Config);
        CHECK(std::string(e.what()).find("2x3") != std::string::npos);
    }
    CHECK_THROWS_AS((void)g.matmul(a, a), Error);
    CHECK_THROWS_AS((void)g.grad(a), Error); // non-scalar loss
}

TEST_CASE("diamond graphs accumulate gradients from both paths") {
    auto x = random_tensor({3}, 25);
    GraphT<double> g;
    const int xid = g.param("x", x);
    const int p = g.scale(xid, 2.0);
    const int q = g.scale(xid, 3.0);
    const int loss = g.mean_all(g.add(p, q));
    auto grads = g.grad(loss);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(grads.at("x")[i] - 5.0 / 3.0) < 1e-12);
}

TEST_CASE("param store rejects duplicates and validates shapes") {
    ParamStore store;
    store.add("w", Tensor({2, 2}, {1, 2, 3, 4}));
    CHECK(store.has("w"));
    CHECK(!store.has("v"));
    CHECK_THROWS_AS(store.add("w", Tensor({2, 2})), Error);
    CHECK_THROWS_AS((void)store.get("v"), Error);
    CHECK(store.count() == 4);

    std::map<std::string, Tensor> g1;
    g1.emplace("w", Tensor({2, 2}, {1, 1, 1, 1}));
    store.accumulate(g1);
    store.accumulate(g1);
    CHECK(store.grad("w")[0] == 2.0f);
    store.zero_grads();
    CHECK(store.grad("w")[0] == 0.0f);

    std::map<std::string, Tensor> bad;
    bad.emplace("w", Tensor({4}));
    CHECK_THROWS_AS(store.accumulate(bad), Error);
}

TEST_CASE("float graph agrees with the double graph on a small network") {
    auto wd = random_tensor({3, 3}, 26);
    auto xd = random_tensor({2, 3}, 27);
    GraphT<double> gd;
    const int wdid = gd.param("w", wd);
    const int ld = gd.mean_all(gd.silu(gd.matmul(gd.input(xd), wdid)));

    GraphT<float> gf;
    const int wfid = gf.param("w", cast<float>(wd));
    const int lf = gf.mean_all(gf.silu(gf.matmul(gf.input(cast<float>(xd)), wfid)));

    CHECK(std::abs(gd.scalar(ld) - gf.scalar(lf)) < 1e-6);
    auto gdg = gd.grad(ld);
    auto gfg = gf.grad(lf);
    for (std::size_t i = 0; i < wd.size(); ++i)
        CHECK(std::abs(gdg.at("w")[i] - double(gfg.at("w")[i])) < 1e-5);
}
