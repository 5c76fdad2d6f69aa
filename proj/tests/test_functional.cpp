#include "chanflow/errors.hpp"
#include "chanflow/functional_inequalities.hpp"

#include <doctest.h>

#include <cmath>

using namespace chanflow;

TEST_CASE("Poincare constant of a straight strip") {
    // Width 2, Dirichlet walls, natural ends: λ = π²/4.
    const auto e = poincare_m1(ChannelProfile::straight(1.0), 0, 6, {48, 32});
    CHECK(e.value == doctest::Approx(2.0 / M_PI).epsilon(0.005));
    CHECK(e.consistent);
    CHECK(e.scaling_constant == doctest::Approx(1.0 / M_PI).epsilon(0.005));  // M1 / sup f
}

TEST_CASE("Poincare constant of the unit square with Dirichlet ends") {
    const auto e = poincare_m1(ChannelProfile::straight(0.5), 0, 1, {32, 32}, EndCondition::Dirichlet);
    CHECK(e.value == doctest::Approx(1.0 / (M_PI * std::sqrt(2.0))).epsilon(0.005));
}

TEST_CASE("slice Poincare constant") {
    const auto e = poincare_m0(ChannelProfile::straight(1.0), 0, 4, {16, 128});
    CHECK(e.value == doctest::Approx(1.0 / M_PI).epsilon(0.005));
    // On a widening channel the sup over slices stays at 1/π after dividing by f.
    const auto w = poincare_m0(ChannelProfile::linear_widen(1.0, 0.2), 0, 4, {16, 128});
    CHECK(w.value == doctest::Approx(1.0 / M_PI).epsilon(0.01));
}

TEST_CASE("Sobolev ratio scales like the square root of a dilation") {
    const auto small = sobolev_m4(ChannelProfile::straight(1.0), 0, 4, {24, 12}, 7, 4);
    const auto big = sobolev_m4(ChannelProfile::straight(2.0), 0, 8, {24, 12}, 7, 4);
    CHECK(small.value > 0.0);
    CHECK(big.value / small.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-4));
}

TEST_CASE("Bogovskii constant of the unit square") {
    const auto prof = ChannelProfile::straight(0.5);
    const auto coarse = bogovskii_m5(make_grid(prof, 0, 1, 8, 8), 4, 3, 40);
    const auto fine = bogovskii_m5(make_grid(prof, 0, 1, 16, 16), 4, 3, 40);
    MESSAGE("M5 " << coarse.value << " -> " << fine.value);
    CHECK(std::abs(fine.value - coarse.value) / fine.value < 0.05);
    const auto bound = decomposition_m5_bound({Rect{0, 1, -0.5, 0.5}});
    CHECK(bound.single_piece);
    CHECK(fine.value <= bound.bound);
}

TEST_CASE("Bogovskii solve rejects data with nonzero mean") {
    const Grid g = make_grid(ChannelProfile::straight(0.5), 0, 1, 8, 8);
    std::vector<double> w(g.size(), 1.0);
    CHECK_THROWS_AS(bogovskii_solve(g, w), NonZeroMean);
    const auto s = bogovskii_solve(g, sign_probe(g));
    CHECK(s.grad_norm > 0.0);
    CHECK(s.w_norm > 0.0);
}

TEST_CASE("star-shaped decomposition bound") {
    CHECK(union_area({Rect{0, 2, 0, 2}, Rect{1, 3, 1, 3}}) == doctest::Approx(7.0));
    CHECK(union_area({Rect{0, 1, 0, 1}, Rect{2, 3, 0, 1}}) == doctest::Approx(2.0));
    const auto apart = decomposition_m5_bound({Rect{0, 1, 0, 1}, Rect{2, 3, 0, 1}});
    CHECK(std::isinf(apart.bound));
    const auto two = decomposition_m5_bound({Rect{0, 2, 0, 1}, Rect{1.5, 3.5, 0, 1}});
    CHECK(std::isfinite(two.bound));
    CHECK(two.r == doctest::Approx(0.5));
}

TEST_CASE("constants CSV row") {
    ConstantEstimate e;
    e.value = 0.5;
    e.domain = "straight";
    const std::string row = csv_row(e);
    CHECK(row.rfind("M1,", 0) == 0);
    CHECK(csv_header_constants().rfind("name,value", 0) == 0);
}
