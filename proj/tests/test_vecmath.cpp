#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "jointkge/vecmath.hpp"

using namespace jointkge;

namespace {

Vec random_vec(std::mt19937_64& rng, size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vec v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// central-difference derivative of a scalar function of one vector component
template <typename F>
double central_diff(F f, Vec& x, size_t k, double eps = 1e-6) {
    const double saved = x[k];
    x[k] = saved + eps;
    const double fp = f();
    x[k] = saved - eps;
    const double fm = f();
    x[k] = saved;
    return (fp - fm) / (2.0 * eps);
}

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-8});
}

}  // namespace

TEST_CASE("elementwise primitives") {
    Vec a{1.0, 2.0, 3.0}, b{4.0, -1.0, 0.5};
    REQUIRE(add(a, b) == Vec{5.0, 1.0, 3.5});
    REQUIRE(sub(a, b) == Vec{-3.0, 3.0, 2.5});
    REQUIRE(scale(a, 2.0) == Vec{2.0, 4.0, 6.0});
    REQUIRE(elementwise_mul(a, b) == Vec{4.0, -2.0, 1.5});
    REQUIRE(concat(a, b).size() == 6);
    REQUIRE_THROWS_AS(add(a, Vec{1.0}), std::invalid_argument);
}

TEST_CASE("sum_rows matches naive loop") {
    std::vector<Vec> rows{{1.0, 2.0}, {3.0, 4.0}, {-1.0, 0.0}};
    REQUIRE(sum_rows(rows) == Vec{3.0, 6.0});
    REQUIRE_THROWS_AS(sum_rows({}), std::invalid_argument);
}

TEST_CASE("sigmoid and softmax identity points") {
    REQUIRE(sigmoid(0.0) == 0.5);
    const Vec u = softmax(Vec{1.5, 1.5, 1.5, 1.5});
    for (double x : u) REQUIRE(x == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("softmax normalization and range on random inputs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<size_t> len(1, 12);
        const Vec x = random_vec(rng, len(rng), -20.0, 20.0);
        const Vec y = softmax(x);
        double sum = 0.0;
        for (double v : y) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
            sum += v;
        }
        REQUIRE(std::fabs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("distance values") {
    Vec h{1.0, 0.0}, r{0.0, 1.0}, t{0.0, 0.0};
    const Vec u = sub(add(h, r), t);
    REQUIRE(sq_l2_dist(u, Vec{0.0, 0.0}) == 2.0);
    REQUIRE(l1_dist(u, Vec{0.0, 0.0}) == 2.0);
}

TEST_CASE("sq_l2_dist backward is 2(u-v)") {
    Vec u{1.0, -2.0, 0.5}, v{0.0, 1.0, 0.5};
    Vec du, dv;
    sq_l2_dist_backward(u, v, 1.0, du, dv);
    REQUIRE(du == Vec{2.0, -6.0, 0.0});
    REQUIRE(dv == Vec{-2.0, 6.0, 0.0});
}

TEST_CASE("backward passes match central differences") {
    std::mt19937_64 rng(42);
    const size_t n = 5, m = 4;

    SECTION("sq_l2_dist and l1_dist") {
        Vec u = random_vec(rng, n), v = random_vec(rng, n);
        Vec du, dv;
        sq_l2_dist_backward(u, v, 1.0, du, dv);
        for (size_t k = 0; k < n; ++k) {
            const double num = central_diff([&] { return sq_l2_dist(u, v); }, u, k);
            REQUIRE(rel_err(du[k], num) < 1e-6);
        }
        Vec du1, dv1;
        l1_dist_backward(u, v, 1.0, du1, dv1);
        for (size_t k = 0; k < n; ++k) {
            const double num = central_diff([&] { return l1_dist(u, v); }, u, k);
            REQUIRE(rel_err(du1[k], num) < 1e-6);
        }
    }

    SECTION("matvec") {
        Vec w = random_vec(rng, m * n), x = random_vec(rng, n);
        const Vec dy = random_vec(rng, m);
        Vec dw(m * n, 0.0), dx;
        matvec_backward({w.data(), w.size()}, m, n, x, dy, {dw.data(), dw.size()}, dx);
        auto loss = [&] { return dot(matvec({w.data(), w.size()}, m, n, x), dy); };
        for (size_t k = 0; k < n; ++k)
            REQUIRE(rel_err(dx[k], central_diff(loss, x, k)) < 1e-6);
        for (size_t k = 0; k < m * n; ++k)
            REQUIRE(rel_err(dw[k], central_diff(loss, w, k)) < 1e-6);
    }

    SECTION("sigmoid, tanh, softmax") {
        Vec x = random_vec(rng, n);
        const Vec dy = random_vec(rng, n);

        Vec y = sigmoid(x), dx;
        sigmoid_backward(y, dy, dx);
        for (size_t k = 0; k < n; ++k) {
            const double num = central_diff([&] { return dot(sigmoid(x), dy); }, x, k);
            REQUIRE(rel_err(dx[k], num) < 1e-6);
        }

        Vec yt = tanh_vec(x), dxt;
        tanh_backward(yt, dy, dxt);
        for (size_t k = 0; k < n; ++k) {
            const double num = central_diff([&] { return dot(tanh_vec(x), dy); }, x, k);
            REQUIRE(rel_err(dxt[k], num) < 1e-6);
        }

        Vec ys = softmax(x), dxs;
        softmax_backward(ys, dy, dxs);
        for (size_t k = 0; k < n; ++k) {
            const double num = central_diff([&] { return dot(softmax(x), dy); }, x, k);
            REQUIRE(rel_err(dxs[k], num) < 1e-6);
        }
    }
}
