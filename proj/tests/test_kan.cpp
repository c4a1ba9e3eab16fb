#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mktcn/bspline.hpp"
#include "mktcn/kan.hpp"
#include "mktcn/rng.hpp"

using namespace mktcn;

namespace {

// Direct-summation oracle for phi, independent of eval_nonzero's local window.
double phi_oracle(const KanEdge& edge, const BSplineBasis& basis, double x) {
    const auto all = basis.eval(x);
    double spline = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) spline += edge.coef[i] * all[i];
    const double sw = x / (1.0 + std::exp(-x));
    return edge.mu * sw + edge.omega_w * spline;
}

KanLayer random_layer(std::size_t n_in, std::size_t n_out, uint64_t seed,
                      int order = 3, int grid = 5) {
    Rng rng(seed);
    return KanLayer(n_in, n_out, BSplineBasis(order, grid), rng);
}

}  // namespace

TEST_CASE("basis layout and partition of unity") {
    for (int order = 1; order <= 3; ++order) {
        for (int grid = 3; grid <= 8; ++grid) {
            BSplineBasis basis(order, grid);
            CHECK(basis.knots().size() == static_cast<std::size_t>(grid + 1 + 2 * order));
            CHECK(basis.count() == static_cast<std::size_t>(grid + order));
            for (int i = 0; i <= 1000; ++i) {
                const double x = -1.0 + 2.0 * i / 1000.0;
                const auto vals = basis.eval(x);
                double sum = 0.0;
                for (double v : vals) {
                    CHECK(v >= 0.0);
                    sum += v;
                }
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("basis symmetric at the domain midpoint") {
    BSplineBasis basis(3, 5);
    const auto vals = basis.eval(0.0);
    const std::size_t n = vals.size();
    for (std::size_t i = 0; i < n; ++i)
        CHECK(vals[i] == doctest::Approx(vals[n - 1 - i]).epsilon(1e-12));
}

TEST_CASE("order-1 hat functions have closed form") {
    BSplineBasis basis(1, 2);  // hats centered at -1, 0, 1
    const auto vals = basis.eval(-0.5);
    REQUIRE(vals.size() == 3);
    CHECK(vals[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(vals[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(vals[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("basis derivative matches finite differences") {
    Rng rng(31);
    for (int order = 1; order <= 3; ++order) {
        BSplineBasis basis(order, 5);
        for (int trial = 0; trial < 50; ++trial) {
            const double x = rng.uniform(-0.95, 0.95);
            double d[8];
            const std::size_t first = basis.deriv_nonzero(x, d);
            const double h = 1e-7;
            const auto up = basis.eval(x + h);
            const auto dn = basis.eval(x - h);
            for (int i = 0; i <= order; ++i) {
                const double fd = (up[first + i] - dn[first + i]) / (2 * h);
                CHECK(d[i] == doctest::Approx(fd).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("phi_eval basics") {
    BSplineBasis basis(3, 5);
    KanEdge edge;
    edge.coef.assign(basis.count(), 0.0);
    edge.mu = 1.0;
    edge.omega_w = 0.0;
    CHECK(phi_eval(edge, basis, 0.0) == 0.0);  // Swish(0) = 0

    edge.mu = 0.0;
    edge.omega_w = 2.5;
    edge.coef.assign(basis.count(), 1.0);  // partition of unity
    CHECK(phi_eval(edge, basis, 0.3) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("phi_eval matches direct-summation oracle") {
    Rng rng(77);
    BSplineBasis basis(3, 5);
    for (int trial = 0; trial < 100; ++trial) {
        KanEdge edge;
        edge.coef.resize(basis.count());
        for (auto& c : edge.coef) c = rng.normal();
        edge.mu = rng.normal();
        edge.omega_w = rng.normal();
        const double x = rng.uniform(-1.5, 1.5);  // includes clamped inputs
        CHECK(phi_eval(edge, basis, x) ==
              doctest::Approx(phi_oracle(edge, basis, x)).epsilon(1e-12));
    }
}

TEST_CASE("kan_forward trivial cases") {
    Rng rng(3);
    KanLayer layer(4, 2, BSplineBasis(3, 5), rng);
    std::fill(layer.coef().begin(), layer.coef().end(), 0.0);
    std::fill(layer.mu().begin(), layer.mu().end(), 0.0);
    auto out = layer.forward({0.1, -0.2, 0.5, 0.9});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);

    // Single-edge layer reduces to phi_eval.
    KanLayer single(1, 1, BSplineBasis(3, 5), rng);
    const KanEdge edge = single.edge(0, 0);
    for (double x : {-0.7, 0.0, 0.4, 1.3})
        CHECK(single.forward({x})[0] ==
              doctest::Approx(phi_eval(edge, single.basis(), x)).epsilon(1e-12));
}

TEST_CASE("kan_forward matches double-loop oracle") {
    KanLayer layer = random_layer(3, 2, 404);
    Rng rng(405);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> x(3);
        for (auto& v : x) v = rng.uniform(-1.4, 1.4);
        const auto out = layer.forward(x);
        for (std::size_t j = 0; j < 2; ++j) {
            double want = 0.0;
            for (std::size_t i = 0; i < 3; ++i)
                want += phi_oracle(layer.edge(j, i), layer.basis(), x[i]);
            CHECK(out[j] == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("kan layer composition applies layers in order") {
    Rng rng(17);
    std::vector<KanLayer> layers;
    layers.emplace_back(3, 4, BSplineBasis(3, 5), rng);
    layers.emplace_back(4, 2, BSplineBasis(3, 5), rng);
    std::vector<double> x{0.2, -0.4, 0.6};
    const auto got = kan_forward(layers, x);
    const auto mid = layers[0].forward(x);
    const auto want = layers[1].forward(mid);
    CHECK(got == want);
}

TEST_CASE("backward before forward is a state error") {
    KanLayer layer = random_layer(2, 2, 9);
    CHECK_THROWS_AS(layer.backward({1.0, 0.0}), std::logic_error);
}

TEST_CASE("zero upstream gives zero gradients") {
    KanLayer layer = random_layer(3, 2, 10);
    layer.forward({0.1, 0.2, 0.3});
    auto gx = layer.backward({0.0, 0.0});
    for (double v : gx) CHECK(v == 0.0);
    for (double v : layer.coef_grad()) CHECK(v == 0.0);
    for (double v : layer.mu_grad()) CHECK(v == 0.0);
    for (double v : layer.omega_grad()) CHECK(v == 0.0);
}

TEST_CASE("d phi / d mu equals Swish exactly") {
    KanLayer layer = random_layer(2, 1, 20);
    const std::vector<double> x{0.37, -0.6};
    layer.forward(x);
    layer.backward({1.0});
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(layer.mu_grad()[i] == swish(x[i]));
}

TEST_CASE("parameter and input gradients match central finite differences") {
    Rng rng(2025);
    for (int trial = 0; trial < 4; ++trial) {
        const std::size_t n_in = 1 + rng.below(5);
        const std::size_t n_out = 1 + rng.below(5);
        KanLayer layer = random_layer(n_in, n_out, 100 + trial);
        std::vector<double> x(n_in), upstream(n_out);
        for (auto& v : x) v = rng.uniform(-0.9, 0.9);  // strictly inside the domain
        for (auto& v : upstream) v = rng.normal();

        auto loss = [&](KanLayer& l, const std::vector<double>& input) {
            const auto out = l.forward(input);
            double s = 0.0;
            for (std::size_t j = 0; j < out.size(); ++j) s += upstream[j] * out[j];
            return s;
        };

        layer.zero_grad();
        layer.forward(x);
        const auto gx = layer.backward(upstream);
        const double h = 1e-6;

        auto check_fd = [&](std::vector<double>& param, const std::vector<double>& grad) {
            for (std::size_t i = 0; i < param.size(); ++i) {
                const double keep = param[i];
                param[i] = keep + h;
                const double up = loss(layer, x);
                param[i] = keep - h;
                const double dn = loss(layer, x);
                param[i] = keep;
                const double fd = (up - dn) / (2 * h);
                const double tol = 1e-5 * std::max(1.0, std::abs(fd));
                CHECK(std::abs(grad[i] - fd) < tol);
            }
        };
        check_fd(layer.coef(), layer.coef_grad());
        check_fd(layer.mu(), layer.mu_grad());
        check_fd(layer.omega(), layer.omega_grad());

        for (std::size_t i = 0; i < n_in; ++i) {
            auto xp = x;
            xp[i] += h;
            const double up = loss(layer, xp);
            xp[i] = x[i] - h;
            const double dn = loss(layer, xp);
            const double fd = (up - dn) / (2 * h);
            CHECK(std::abs(gx[i] - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("clamped inputs get zero spline-path input gradient") {
    KanLayer layer = random_layer(1, 1, 55);
    std::fill(layer.mu().begin(), layer.mu().end(), 0.0);  // isolate the spline path
    layer.forward({1.7});
    const auto gx = layer.backward({1.0});
    CHECK(gx[0] == 0.0);
}

TEST_CASE("forward is linear in spline coefficients when mu is zero") {
    KanLayer layer = random_layer(4, 3, 66);
    std::fill(layer.mu().begin(), layer.mu().end(), 0.0);
    Rng rng(67);
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);

    std::vector<double> d1(layer.coef().size()), d2(layer.coef().size());
    for (auto& v : d1) v = rng.normal();
    for (auto& v : d2) v = rng.normal();

    auto eval_with = [&](const std::vector<double>& d) {
        layer.coef() = d;
        return layer.forward(x);
    };
    const auto out1 = eval_with(d1);
    const auto out2 = eval_with(d2);
    std::vector<double> dsum(d1.size());
    for (std::size_t i = 0; i < d1.size(); ++i) dsum[i] = 2.0 * d1[i] + 3.0 * d2[i];
    const auto out_sum = eval_with(dsum);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(out_sum[j] == doctest::Approx(2.0 * out1[j] + 3.0 * out2[j]).epsilon(1e-10));
}

TEST_CASE("perturbing one coefficient only moves phi inside its support") {
    BSplineBasis basis(3, 5);
    KanEdge edge;
    edge.coef.assign(basis.count(), 0.0);
    edge.mu = 0.0;
    edge.omega_w = 1.0;
    const std::size_t target = 4;
    KanEdge bumped = edge;
    bumped.coef[target] = 1.0;
    // Support of B_i spans knots [t_i, t_{i+order+1}].
    const auto& knots = basis.knots();
    const double lo = knots[target];
    const double hi = knots[target + basis.order() + 1];
    for (int i = 0; i <= 400; ++i) {
        const double x = -1.0 + 2.0 * i / 400.0;
        const double delta = phi_eval(bumped, basis, x) - phi_eval(edge, basis, x);
        if (x < lo || x > hi)
            CHECK(delta == 0.0);
    }
}
