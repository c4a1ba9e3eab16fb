#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mktcn/rng.hpp"
#include "mktcn/tensor.hpp"

using namespace mktcn;

namespace {

// Independent oracle: plain triple loop.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) c.at(i, j) += a.at(i, p) * b.at(p, j);
    return c;
}

}  // namespace

TEST_CASE("matmul identity and hand cases") {
    Tensor eye({2, 2}, {1, 0, 0, 1});
    Tensor b({2, 2}, {3, 4, 5, 6});
    Tensor c = matmul(eye, b);
    for (std::size_t i = 0; i < 4; ++i) CHECK(c[i] == b[i]);

    Tensor row({1, 2}, {1, 2});
    Tensor col({2, 1}, {3, 4});
    CHECK(matmul(row, col)[0] == 11.0);
}

TEST_CASE("matmul matches triple-loop oracle on random shapes") {
    Rng rng(12345);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng.below(40);
        const std::size_t k = 1 + rng.below(40);
        const std::size_t n = 1 + rng.below(40);
        Tensor a = gaussian_fill(rng, {m, k}, 0.0, 1.0);
        Tensor b = gaussian_fill(rng, {k, n}, 0.0, 1.0);
        Tensor got = matmul(a, b);
        Tensor want = matmul_oracle(a, b);
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("matmul shape errors name both shapes") {
    Tensor a({2, 3});
    Tensor b({2, 3});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), std::invalid_argument);
}

TEST_CASE("matmul associativity against oracle") {
    Rng rng(99);
    Tensor a = gaussian_fill(rng, {5, 7}, 0.0, 1.0);
    Tensor b = gaussian_fill(rng, {7, 3}, 0.0, 1.0);
    Tensor c = gaussian_fill(rng, {3, 4}, 0.0, 1.0);
    Tensor left = matmul(matmul(a, b), c);
    Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i)
        CHECK(left[i] == doctest::Approx(right[i]).epsilon(1e-10));
}

TEST_CASE("rng determinism: same seed, identical stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(43);
    bool differ = false;
    for (int i = 0; i < 16; ++i) differ |= (c.next_u64() != d.next_u64());
    CHECK(differ);
}

TEST_CASE("gaussian_fill basics") {
    Rng rng(7);
    Tensor zero_std = gaussian_fill(rng, {10}, 2.5, 0.0);
    for (std::size_t i = 0; i < zero_std.size(); ++i) CHECK(zero_std[i] == 2.5);

    Rng r1(42), r2(42);
    Tensor t1 = gaussian_fill(r1, {4, 5}, 0.0, 1.0);
    Tensor t2 = gaussian_fill(r2, {4, 5}, 0.0, 1.0);
    for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i] == t2[i]);

    CHECK_THROWS_AS(gaussian_fill(rng, {3}, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("gaussian_fill law of large numbers") {
    Rng rng(2024);
    const std::size_t n = 100000;
    Tensor t = gaussian_fill(rng, {n}, 0.0, 1.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += t[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (t[i] - mean) * (t[i] - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 0.02);
}

TEST_CASE("softmax values and stability") {
    auto p = softmax({0.0, 0.0, 0.0});
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    auto q = softmax({1000.0, 0.0, 0.0});
    CHECK(q[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q[2] == doctest::Approx(0.0).epsilon(1e-12));

    // Direct formula.
    auto r = softmax({1.0, 2.0, 3.0});
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(r[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
    CHECK(r[1] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
    CHECK(r[2] == doctest::Approx(std::exp(3.0) / z).epsilon(1e-12));

    CHECK_THROWS_AS(softmax({std::nan(""), 1.0}), std::domain_error);
}

TEST_CASE("softmax sums to one and is shift-invariant") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> logits(3 + rng.below(5));
        for (auto& v : logits) v = rng.normal(0.0, 5.0);
        auto p = softmax(logits);
        double sum = 0.0;
        for (double v : p) {
            sum += v;
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        const double shift = rng.normal(0.0, 10.0);
        auto shifted = logits;
        for (auto& v : shifted) v += shift;
        auto ps = softmax(shifted);
        for (std::size_t i = 0; i < p.size(); ++i)
            CHECK(p[i] == doctest::Approx(ps[i]).epsilon(1e-12));
    }
}

TEST_CASE("argmax rules") {
    CHECK(argmax({0.1, 0.7, 0.2}) == 1);
    CHECK(argmax({0.5, 0.5, 0.0}) == 0);  // tie -> lowest index
    CHECK_THROWS_AS(argmax({}), std::invalid_argument);

    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(1 + rng.below(20));
        for (auto& x : v) x = rng.normal();
        std::size_t best = 0;  // linear-scan oracle
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] > v[best]) best = i;
        CHECK(argmax(v) == best);
    }
}
