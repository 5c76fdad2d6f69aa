#include "chanflow/errors.hpp"
#include "chanflow/flux_carrier.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace chanflow;

namespace {

double quintic(double s) { return s <= 0 ? 1.0 : s >= 1 ? 0.0 : 1.0 - (10 * s * s * s - 15 * std::pow(s, 4) + 6 * std::pow(s, 5)); }
double quintic_d(double s) { return s <= 0 || s >= 1 ? 0.0 : -30.0 * s * s * (1 - s) * (1 - s); }

}  // namespace

TEST_CASE("stream function at the band ends and at a reference point") {
    const auto p = ChannelProfile::straight(1.0);
    CarrierParams c;
    CHECK(stream_G({0.0, 0.0}, c, p) == 0.0);
    CHECK(stream_G({0.0, 1.0 - 1e-12}, c, p) == doctest::Approx(1.0));
    const double sigma = 1.0 + 0.5 * std::log(0.2 / 0.8);
    CHECK(sigma == doctest::Approx(0.30685).epsilon(1e-4));
    CHECK(stream_G({3.0, 0.8}, c, p) == doctest::Approx(quintic(sigma)).epsilon(1e-14));
}

TEST_CASE("velocity at the reference point and outside the support") {
    const auto p = ChannelProfile::straight(1.0);
    CarrierParams c;
    const double sigma = 1.0 + 0.5 * std::log(0.25);
    const Vec2 g = velocity_g({0.0, 0.8}, c, p);
    CHECK(g[0] == doctest::Approx(0.5 * quintic_d(sigma) * (-1.0 / 0.2 - 1.0 / 0.8)).epsilon(1e-13));
    CHECK(g[0] == doctest::Approx(4.24).epsilon(1e-3));
    CHECK(g[1] == 0.0);
    const Vec2 z = velocity_g({0.0, -0.3}, c, p);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    const Mat2 m = grad_g({0.0, -0.3}, c, p);
    for (const auto& row : m)
        for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("straight channels carry no transverse velocity") {
    const auto p = ChannelProfile::straight(1.0);
    CarrierParams c;
    for (double x2 = 0.0; x2 < 1.0; x2 += 0.01) CHECK(velocity_g({1.0, x2}, c, p)[1] == 0.0);
}

TEST_CASE("analytic gradient is divergence free and matches finite differences") {
    for (const auto& p : {ChannelProfile::power_law(1.0, 0.5), ChannelProfile::straight_outlet(0.5, 0.0, 2.0),
                          ChannelProfile::linear_widen(1.0, 0.5)}) {
        CarrierParams c;
        c.phi = 1.3;
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 100; ++k) {
            const double x1 = -8.0 + 16.0 * u(rng);
            const WallSample w = p.eval(x1);
            const double x2 = w.mid() + w.width() * (0.25 + 0.24 * u(rng));
            const Mat2 m = grad_g({x1, x2}, c, p);
            CHECK(std::abs(m[0][0] + m[1][1]) <= 1e-10 * (1.0 + std::abs(m[0][0])));
        }
        CHECK(gradient_fd_error(c, p, {-8, 8}, 200, 3) <= 1e-6);
    }
}

TEST_CASE("support band of the straight carrier") {
    const auto p = ChannelProfile::straight(1.0);
    CarrierParams c;
    for (double x2 = -1.0; x2 <= 1.0; x2 += 1e-3) {
        const Vec2 g = velocity_g({0.0, x2}, c, p);
        if (g[0] != 0.0 || g[1] != 0.0) {
            CHECK(x2 >= 0.5 - 1e-12);
            CHECK(x2 <= 1.0);
        }
    }
    const auto rep = support_and_bounds_report(c, p, {-10, 10}, 2000, 5);
    CHECK(rep.violations == 0);
    const auto longer = support_and_bounds_report(c, p, {-40, 40}, 2000, 5);
    CHECK(longer.sup_f_g == doctest::Approx(rep.sup_f_g).epsilon(1e-3));
}

TEST_CASE("slice flux") {
    CarrierParams c;
    CHECK(slice_flux(c, ChannelProfile::straight(1.0), 2.0) == doctest::Approx(1.0).epsilon(1e-10));
    c.phi = 0.0;
    CHECK(slice_flux(c, ChannelProfile::straight(1.0), 2.0) == 0.0);

    c.phi = 3.7;
    const auto p = ChannelProfile::power_law(1.0, 0.5);
    CHECK(std::abs(slice_flux(c, p, 12.0) - 3.7) <= 1e-8);
    // Independent oracle: composite Simpson of g1 across the whole slice.
    const WallSample w = p.eval(12.0);
    const int n = 200000;
    const double h = w.width() / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double wt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        acc += wt * velocity_g({12.0, w.f1 + k * h}, c, p)[0];
    }
    CHECK(std::abs(acc * h / 3.0 - 3.7) <= 1e-8);
}

TEST_CASE("Hardy constant of the carrier shrinks with epsilon") {
    // |g| <= Φ sup|μ′| ε (1/A + 1/B) <= 2 Φ sup|μ′| ε / A with A <= B, so the
    // one-dimensional Hardy inequality caps the constant at 4 (2 sup|μ′| ε)².
    const double mu_prime = 15.0 / 8.0;
    CarrierParams c;
    const auto p = ChannelProfile::straight(1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.5, 0.25, 0.125, 0.0625}) {
        c.epsilon = eps;
        const double h = slice_hardy_constant(c, p, 0.0);
        CHECK(h < prev);
        CHECK(h <= 4.0 * std::pow(2.0 * mu_prime * eps, 2));
        // Near the wall only 1/A matters: the bound tightens to 4 (sup|μ′| ε)².
        CHECK(h <= 4.0 * std::pow(mu_prime * eps, 2));
        prev = h;
    }
}

TEST_CASE("carrier parameters are range checked") {
    CarrierParams c;
    c.epsilon = 1.5;
    CHECK_THROWS_WITH_AS(c.check(), doctest::Contains("epsilon ∈ (0,1)"), ValidationError);
    c.epsilon = 0.5;
    c.phi = -1.0;
    CHECK_THROWS_AS(c.check(), ValidationError);
}

TEST_CASE("exp-bump cutoff is a smooth step") {
    const Cutoff cut(CutoffKind::ExpBump);
    CHECK(cut(0.0) == 1.0);
    CHECK(cut(1.0) == 0.0);
    CHECK(cut(0.5) == doctest::Approx(0.5));
    const double h = 1e-5;
    const Jet j = cut.eval(0.3);
    CHECK(j.d1 == doctest::Approx((cut(0.3 + h) - cut(0.3 - h)) / (2 * h)).epsilon(1e-7));
}
