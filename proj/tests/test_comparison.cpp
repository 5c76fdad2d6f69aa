#include "chanflow/comparison.hpp"
#include "chanflow/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace chanflow;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) v[k] = a + (b - a) * k / (n - 1);
    return v;
}

/// Linear Ψ(s) = s, δ₁ = 1/2, φ = 4 e^{t/2} and sampled z.
ComparisonProblem linear_problem(double T, const std::function<double(double)>& z) {
    ComparisonProblem p;
    p.psi = PsiSpec::separable(1.0, 0.0, 2.0);
    p.delta1 = 0.5;
    p.t0 = 0.0;
    p.T = T;
    p.t = linspace(0.0, T, 201);
    for (double t : p.t) p.z.push_back(z(t));
    p.phi = [](double t) { return 4.0 * std::exp(0.5 * t); };
    p.dphi = [](double t) { return 2.0 * std::exp(0.5 * t); };
    return p;
}

}  // namespace

TEST_CASE("Psi construction and inverse") {
    CHECK_THROWS_AS(PsiSpec::separable(0.0, 0.0, 2.0), ValidationError);
    CHECK_THROWS_AS(PsiSpec::separable(1.0, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(PsiSpec::separable(-1.0, 1.0, 2.0), ValidationError);
    const auto psi = PsiSpec::separable(1.0, 1.0, 1.5);
    CHECK(psi(0.0, 4.0) == doctest::Approx(12.0));
    for (double y : {1e-6, 0.3, 12.0, 1e6}) CHECK(psi(0.0, psi.inverse(0.0, y)) == doctest::Approx(y).epsilon(1e-12));
    CHECK(psi.inverse(0.0, 0.0) == 0.0);

    const auto tab = PsiSpec::tabulated({0.0, 1.0}, {0.0, 1.0, 2.0}, {{0.0, 1.0, 2.0}, {0.0, 2.0, 4.0}});
    CHECK(tab(0.5, 1.0) == doctest::Approx(1.5));
    CHECK(tab(0.0, 3.0) == doctest::Approx(3.0));
    CHECK(tab.inverse(1.0, 3.0) == doctest::Approx(1.5));
    CHECK_THROWS_AS(PsiSpec::tabulated({0.0}, {0.0, 1.0}, {{0.0, 0.0}}), ValidationError);
}

TEST_CASE("comparison conclusion on exponential examples") {
    SUBCASE("z = 2 e^{t/2} is dominated") {
        const auto c = comparison_conclude(linear_problem(5.0, [](double t) { return 2.0 * std::exp(0.5 * t); }));
        CHECK(c.verdict == Verdict::Dominated);
        CHECK(c.max_excess < 0.0);
        CHECK(c.report.nontrivial);
    }
    SUBCASE("z = e^t with T below 2 ln 4 is dominated") {
        const auto c = comparison_conclude(linear_problem(2.0, [](double t) { return std::exp(t); }));
        CHECK(c.verdict == Verdict::Dominated);
    }
    SUBCASE("z = e^t with T above 2 ln 4 fails at the endpoint") {
        const auto c = comparison_conclude(linear_problem(3.0, [](double t) { return std::exp(t); }));
        CHECK(c.verdict == Verdict::HypothesisFailed);
        CHECK(c.failed == "endpoint");
        CHECK(c.report.z_bound);
        CHECK(c.report.majorant);
    }
    SUBCASE("the zero function is trivially dominated") {
        const auto c = comparison_conclude(linear_problem(5.0, [](double) { return 0.0; }));
        CHECK(c.verdict == Verdict::Dominated);
        CHECK_FALSE(c.report.nontrivial);
    }
    SUBCASE("a majorant that grows too fast fails the second hypothesis") {
        auto p = linear_problem(5.0, [](double t) { return std::exp(0.5 * t); });
        p.phi = [](double t) { return std::exp(t); };
        p.dphi = [](double t) { return std::exp(t); };
        const auto c = comparison_conclude(p);
        CHECK(c.verdict == Verdict::HypothesisFailed);
        CHECK(c.failed == "majorant");
    }
}

TEST_CASE("comparison rejects non-monotone samples") {
    auto p = linear_problem(2.0, [](double t) { return 2.0 - t; });
    CHECK_THROWS_AS(comparison_conclude(p), NonMonotoneSamples);
    p.t = {0.0, 1.0, 1.0, 2.0};
    p.z = {0.0, 1.0, 2.0, 3.0};
    CHECK_THROWS_AS(comparison_conclude(p), NonMonotoneSamples);
}

TEST_CASE("majorant ODE against closed forms") {
    const auto lin = PsiSpec::separable(1.0, 0.0, 2.0);
    const auto s = solve_majorant(lin, 0.5, 1.0, 0.0, 5.0);
    double err = 0.0;
    for (std::size_t k = 0; k < s.t.size(); ++k) err = std::max(err, std::abs(s.phi[k] / std::exp(0.5 * s.t[k]) - 1.0));
    CHECK(err <= 1e-8);
    CHECK(majorant_residual(s, lin, 0.5) <= 1e-8);

    // Ψ(s) = s²: φ′ = (δ₁φ)^{1/2} gives φ = (1 + t √δ₁ / 2)².
    const auto sq = PsiSpec::separable(0.0, 1.0, 2.0);
    const auto q = solve_majorant(sq, 0.5, 1.0, 0.0, 4.0);
    err = 0.0;
    for (std::size_t k = 0; k < q.t.size(); ++k) {
        const double exact = std::pow(1.0 + q.t[k] * std::sqrt(0.5) / 2.0, 2);
        err = std::max(err, std::abs(q.phi[k] / exact - 1.0));
    }
    CHECK(err <= 1e-8);
    CHECK(majorant_residual(q, sq, 0.5) <= 1e-8);

    const auto sat = PsiSpec::separable(1.0, 1.0, 1.5);
    CHECK(majorant_residual(solve_majorant(sat, 0.5, 1.0, 0.0, 5.0, 1e-2), sat, 0.5) <= 1e-8);
}

TEST_CASE("blow-up exponent of power-type functions") {
    const auto psi = PsiSpec::separable(0.0, 1.0, 1.5);
    const auto t = linspace(0.5, 50.0, 400);
    std::vector<double> cube, square;
    for (double x : t) {
        cube.push_back(x * x * x);
        square.push_back(x * x);
    }
    const auto c = blowup_rate(t, cube, psi);
    CHECK(c.critical == doctest::Approx(3.0));
    CHECK(c.exponent == doctest::Approx(3.0).epsilon(1e-3));
    CHECK(c.hypothesis_holds);
    CHECK(c.consistent);

    // z = t²: (2t)^{3/2} >= t² only up to t = 8.
    const auto s = blowup_rate(t, square, psi);
    CHECK(s.exponent == doctest::Approx(2.0).epsilon(1e-3));
    CHECK_FALSE(s.hypothesis_holds);
    CHECK(s.first_failure_t == doctest::Approx(8.0).epsilon(0.02));
    CHECK_FALSE(s.consistent);

    CHECK_THROWS_AS(blowup_rate(linspace(0.0, 1.0, 5), {0, 1, 2, 3, 4}, psi), InsufficientTail);
}

TEST_CASE("random separable instances never violate the lemma") {
    const auto r = fuzz_comparison(100, 11);
    CHECK(r.instances == 100);
    CHECK(r.lemma_violations == 0);
    CHECK(r.dominated + r.hypothesis_failed == 100);
    CHECK(r.dominated > 0);
}

TEST_CASE("comparison problem from CSV") {
    const auto path = std::filesystem::temp_directory_path() / "chanflow_cmp_test.csv";
    {
        std::ofstream out(path);
        out << "# sample\nt,z,phi\n";
        for (double t : linspace(0.0, 4.0, 41)) out << t << "," << std::exp(0.5 * t) << "," << 4.0 * std::exp(0.25 * t) << "\n";
    }
    const auto p = load_problem_csv(path.string(), PsiSpec::separable(1.0, 0.0, 2.0), 0.5);
    CHECK(p.t.size() == 41);
    CHECK(p.T == doctest::Approx(4.0));
    CHECK(comparison_conclude(p).verdict == Verdict::Dominated);
    {
        std::ofstream out(path);
        out << "time,value\n0,1\n";
    }
    CHECK_THROWS_AS(load_problem_csv(path.string(), PsiSpec::separable(1.0, 0.0, 2.0), 0.5), ParseError);
    std::filesystem::remove(path);
}
