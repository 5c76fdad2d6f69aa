#include "chanflow/errors.hpp"
#include "chanflow/estimate_harness.hpp"

#include <doctest.h>

#include <cmath>

using namespace chanflow;

namespace {

GridPolicy small_policy() {
    GridPolicy p;
    p.cells_per_length = 10.0;
    p.ny = 24;
    return p;
}

const Check* find_check(const std::vector<Check>& checks, const std::string& name) {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace

TEST_CASE("growth quantities of a straight channel") {
    // Poiseuille flow in a width-2 channel: D(t) = 3 t Φ², I(t) = t / 4.
    CarrierParams c;
    const auto r = growth_scan(ChannelProfile::straight(1.0), c, {2.0, 4.0}, small_policy());
    REQUIRE(r.rows.size() == 2);
    for (const auto& row : r.rows) {
        CHECK(row.I == doctest::Approx(row.t / 4.0).epsilon(1e-9));
        CHECK(row.lower_ratio == doctest::Approx(12.0).epsilon(0.02));
    }
    CHECK(all_pass(r.checks));
}

TEST_CASE("growth windows must stay inside the truncation") {
    CarrierParams c;
    const FlowState s = solve_steady(ChannelProfile::straight(1.0), c, -4, 4, 64, 16);
    CHECK_THROWS_AS(growth_from_state(s, {1.0, 3.5}), OutOfRange);
}

TEST_CASE("decay profile of a straight channel") {
    CarrierParams c;
    c.phi = 0.8;
    const auto r = decay_scan(ChannelProfile::straight(1.0), c, {2.0, 3.0, 4.0}, small_policy());
    CHECK(r.hypotheses_met);
    REQUIRE_FALSE(r.slices.empty());
    for (const auto& s : r.slices) CHECK(s.sup_u_f == doctest::Approx(1.5 * c.phi).epsilon(0.01));
    CHECK(all_pass(r.checks));
}

TEST_CASE("zero flux gives zero growth and decay quantities") {
    CarrierParams c;
    c.phi = 0.0;
    const auto g = growth_scan(ChannelProfile::power_law(1.0, 0.5), c, {1.0, 2.0}, small_policy());
    for (const auto& row : g.rows) {
        CHECK(row.D == 0.0);
        CHECK(std::isnan(row.lower_ratio));
    }
    const auto d = decay_scan(ChannelProfile::power_law(1.0, 0.5), c, {1.0, 2.0}, small_policy());
    for (const auto& s : d.slices) CHECK(s.sup_u_f == 0.0);
}

TEST_CASE("uniqueness probe on a straight channel") {
    CarrierParams c;
    c.phi = 0.1;
    const auto r = uniqueness_probe(ChannelProfile::straight(1.0), c, -5, 5, 100, 16);
    CHECK(r.unique);
    CHECK(r.l2_distance <= 1e-6);
    CHECK(r.dirichlet_distance <= 1e-6);

    c.phi = 0.0;
    const auto z = uniqueness_probe(ChannelProfile::straight(1.0), c, -5, 5, 64, 16);
    CHECK(z.l2_distance == 0.0);
    CHECK(z.unique);
}

TEST_CASE("uniqueness scan over flux values") {
    CarrierParams c;
    const auto scan = uniqueness_threshold(ChannelProfile::straight(1.0), c, {0.5, 0.0, 0.2}, -4, 4, 64, 16);
    REQUIRE(scan.reports.size() == 3);
    CHECK(scan.reports.front().phi == 0.0);
    CHECK(scan.stop_reason.empty());
    CHECK(scan.threshold == 0.5);
}

TEST_CASE("Poiseuille profile and outlet convergence") {
    const WallSample w{-1.0, 1.0};
    CHECK(poiseuille_u1(2.0, w, 0.0) == doctest::Approx(1.5));
    CHECK(poiseuille_u1(2.0, w, 1.0) == doctest::Approx(0.0));

    CarrierParams c;
    c.phi = 0.5;
    const auto r = poiseuille_convergence(ChannelProfile::straight_outlet(0.5, 0.0, 2.0), c, 0.0, {5.0, 10.0},
                                          small_policy());
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].error < 0.05 * r.rows[0].d_plus);
    CHECK(all_pass(r.checks));
    CHECK_THROWS(poiseuille_convergence(ChannelProfile::power_law(1.0, 0.5), c, 0.0, {5.0}, small_policy()));
}

TEST_CASE("weighted energy inequality and its comparison verdict") {
    CarrierParams c;
    const auto prof = ChannelProfile::straight(1.0);
    const FlowState s = solve_steady(prof, c, -10, 10, 160, 16);
    const auto r = hat_energy_inequality(s, {0.5, 1.0, 1.5, 2.0});
    CHECK(r.monotone);
    CHECK_FALSE(r.trivial);
    REQUIRE(r.conclusion.has_value());
    CHECK(r.conclusion->verdict == Verdict::Dominated);
    for (std::size_t k = 0; k < r.t.size(); ++k) {
        const double rhs = r.c11 * (r.dy[k] + std::pow(r.dy[k], 1.5)) + r.c12 * r.J[k];
        CHECK(r.y[k] <= rhs);
    }
    const auto* verdict = find_check(r.checks, "comparison verdict");
    REQUIRE(verdict != nullptr);
    CHECK(verdict->pass);

    const FlowState w = solve_steady(ChannelProfile::linear_widen(1.0, 0.3), c, -6, 6, 96, 16);
    CHECK_THROWS_AS(hat_energy_inequality(w, {0.5, 1.0, 1.5, 2.0}), HypothesisNotMet);
}

TEST_CASE("threshold validation") {
    HarnessThresholds t;
    t.spread_bound = 0.5;
    CHECK_THROWS_AS(t.check(), ValidationError);
}
