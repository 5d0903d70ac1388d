#include "doctest.h"

#include "iflow/rng.hpp"
#include "iflow/tensor.hpp"

using namespace iflow;

TEST_CASE("tensor construction and indexing") {
    Tensor t({2, 3});
    CHECK(t.ndim() == 2);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t.size() == 6);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0f);

    t.at2(1, 2) = 5.0f;
    CHECK(t[5] == 5.0f);
    CHECK(t.at2(1, 2) == 5.0f);

    Tensor s({4}, 2.5f);
    CHECK(s.ndim() == 1);
    CHECK(s.size() == 4);
    CHECK(s[3] == 2.5f);
}

TEST_CASE("tensor from data vector checks length") {
    std::vector<float> d{1, 2, 3, 4, 5, 6};
    Tensor t({2, 3}, d);
    CHECK(t.at2(0, 0) == 1.0f);
    CHECK(t.at2(1, 2) == 6.0f);

    CHECK_THROWS_AS(Tensor({2, 2}, d), Error);
}

TEST_CASE("shape comparison and printing") {
    Tensor a({2, 3}), b({2, 3}), c({3, 2});
    CHECK(a.same_shape(b));
    CHECK(!a.same_shape(c));
    CHECK(a.shape_str() == "2x3");
    CHECK(Tensor({5}).shape_str() == "5");
}

TEST_CASE("row copy and take_rows") {
    Tensor t({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor r1 = t.row(1);
    CHECK(r1.ndim() == 1);
    CHECK(r1[0] == 3.0f);
    CHECK(r1[1] == 4.0f);

    Tensor sel = take_rows(t, {2, 0});
    CHECK(sel.rows() == 2);
    CHECK(sel.at2(0, 0) == 5.0f);
    CHECK(sel.at2(0, 1) == 6.0f);
    CHECK(sel.at2(1, 0) == 1.0f);
}

TEST_CASE("fill_normal matches stream moments") {
    Tensor t({50000});
    Rng rng(123);
    t.fill_normal(rng);
    double mean = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) mean += t[i];
    mean /= double(t.size());
    double var = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) var += (t[i] - mean) * (t[i] - mean);
    var /= double(t.size());
    // SE of the mean is 1/sqrt(n) ~ 0.0045
    CHECK(std::abs(mean) < 0.015);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("cast between precisions round-trips exactly for float values") {
    Tensor t({2, 2}, {0.25f, -1.5f, 3.0f, 0.125f});
    TensorT<double> d = cast<double>(t);
    CHECK(d.at2(1, 0) == 3.0);
    Tensor back = cast<float>(d);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);
}

TEST_CASE("rng substreams are order independent") {
    Rng root(42);
    const uint64_t a_then_b_a = Rng(42).sub("alpha").next();
    Rng r2(42);
    (void)r2.sub("beta").next();
    const uint64_t b_then_a_a = r2.sub("alpha").next();
    CHECK(a_then_b_a == b_then_a_a);

    // distinct names and indices give distinct streams
    CHECK(root.sub("alpha").next() != root.sub("beta").next());
    CHECK(root.sub("step", 0).next() != root.sub("step", 1).next());
}

TEST_CASE("uniform_index stays in range and covers all cells") {
    Rng rng(7);
    std::vector<int> hits(5, 0);
    for (int i = 0; i < 2000; ++i) {
        const std::size_t k = rng.uniform_index(5);
        REQUIRE(k < 5);
        ++hits[k];
    }
    for (int c : hits) CHECK(c > 300);
}
