#include "chanflow/errors.hpp"
#include "chanflow/geometry.hpp"
#include "chanflow/grid.hpp"

#include <doctest.h>

#include <cmath>

using namespace chanflow;

TEST_CASE("straight channel metrics") {
    const auto m = validate(ChannelProfile::straight(1.0), {-10, 10});
    CHECK(m.d_lower == doctest::Approx(2.0));
    CHECK(m.d_upper == doctest::Approx(2.0));
    CHECK(m.beta == doctest::Approx(0.0));
    CHECK(m.gamma == doctest::Approx(0.0));
    CHECK(m.beta_star == doctest::Approx(1.0));
}

TEST_CASE("power-law slope and curvature bounds match an independent scan") {
    const auto m = validate(ChannelProfile::power_law(1.0, 0.5), {0, 100});
    // f2 = (1+t)^{1/2}, f = 2 f2; scan f2' and |f2'' f| on a fine grid.
    double beta = 0.0, gamma = 0.0;
    for (int k = 0; k <= 200000; ++k) {
        const double t = 100.0 * k / 200000.0;
        beta = std::max(beta, 0.5 / std::sqrt(1.0 + t));
        gamma = std::max(gamma, 0.25 * std::pow(1.0 + t, -1.5) * 2.0 * std::sqrt(1.0 + t));
    }
    CHECK(m.beta == doctest::Approx(beta).epsilon(1e-9));
    CHECK(m.gamma == doctest::Approx(gamma).epsilon(1e-6));
    CHECK(m.beta_star == doctest::Approx(0.5));
}

TEST_CASE("touching walls are rejected") {
    const auto p = ChannelProfile::custom("-abs(t)", "abs(t)");
    CHECK_THROWS_AS(validate(p, {-1, 1}), AssumptionViolation);
}

TEST_CASE("weight integrals against closed forms") {
    CHECK(weight_integral(ChannelProfile::straight(1.0), 0, 3.0, -5.0 / 3.0) ==
          doctest::Approx(3.0 * std::pow(2.0, -5.0 / 3.0)).epsilon(1e-12));
    for (double T : {1.0, 10.0, 1000.0}) {
        CHECK(weight_integral(ChannelProfile::power_law(1.0, 0.5), 0, T, -3.0) ==
              doctest::Approx(0.25 * (1.0 - 1.0 / std::sqrt(1.0 + T))).epsilon(1e-11));
    }
    CHECK(weight_integral(ChannelProfile::power_law(1.0, 0.5), 2.0, 2.0, -3.0) == 0.0);
}

TEST_CASE("k-map of the straight channel") {
    const KMap km(ChannelProfile::straight(1.0), 1.0);
    for (double t : {-3.0, 0.5, 7.0}) CHECK(km.h(t) == doctest::Approx(std::pow(2.0, 5.0 / 3.0) * t).epsilon(1e-12));
    const HValues v = km.at(0.0);
    CHECK(v.h == doctest::Approx(0.0));
    CHECK(v.h_right == doctest::Approx(-2.0));
    CHECK(v.h_right < 0.0);
}

TEST_CASE("windows of length beta* f keep the width within a factor") {
    const auto p = ChannelProfile::power_law(1.0, 0.5);
    const double bs = validate(p, {-200, 200}).beta_star;
    for (double t : {0.0, 1.0, 5.0, 30.0, 100.0}) {
        const double ft = p.width(t);
        for (int k = 0; k <= 400; ++k) {
            const double xi = t - bs * ft + 2.0 * bs * ft * k / 400.0;
            CHECK(p.width(xi) >= 0.5 * ft - 1e-12);
            CHECK(p.width(xi) <= 1.5 * ft + 1e-12);
        }
    }
}

TEST_CASE("classification of the three reference profiles") {
    const auto s = classify(ChannelProfile::straight(1.0));
    CHECK(s.k_case == KRangeCase::BothInfinite);
    CHECK(s.left.cond_divergent_tail);
    CHECK(s.right.cond_divergent_tail);

    const auto fast = classify(ChannelProfile::power_law(1.0, 0.7));
    CHECK(fast.k_case == KRangeCase::BothFinite);
    CHECK_FALSE(fast.uniqueness_hypotheses());

    const auto slow = classify(ChannelProfile::power_law(1.0, 0.5));
    CHECK(slow.k_case == KRangeCase::BothInfinite);
    CHECK(slow.uniqueness_hypotheses());
}

TEST_CASE("mapped grid area and wall mapping") {
    const Grid g = make_grid(ChannelProfile::straight(1.0), 0, 1, 16, 8);
    CHECK(g.integrate(std::vector<double>(g.size(), 1.0)) == doctest::Approx(2.0).epsilon(1e-12));
    const Grid h = make_grid(ChannelProfile::custom("-(1+t)", "1+t"), 0, 1, 16, 8);
    CHECK(h.integrate(std::vector<double>(h.size(), 1.0)) == doctest::Approx(3.0).epsilon(1e-12));
    for (int i = 0; i <= h.nx; ++i) CHECK(h.x2(i, h.ny) == h.walls[i].f2);
    CHECK_THROWS_AS(make_grid(ChannelProfile::straight(1.0), 0, 1, 4, 8), DegenerateGrid);
}

TEST_CASE("expressions differentiate exactly") {
    const Expression e("exp(2*t) + t^3");
    const Jet j = e.eval(0.5);
    CHECK(j.v == doctest::Approx(std::exp(1.0) + 0.125));
    CHECK(j.d1 == doctest::Approx(2.0 * std::exp(1.0) + 0.75));
    CHECK(j.d2 == doctest::Approx(4.0 * std::exp(1.0) + 3.0));
}
