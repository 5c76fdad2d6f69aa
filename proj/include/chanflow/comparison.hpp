#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace chanflow {

/// Ψ(t, s): increasing in s, Ψ(t, 0) = 0, unbounded in s.
///  - Separable: c1 s + c2 s^m (coefficients >= 0, m > 1).
///  - TimeDependent: bilinear table over (t, s), s-grid starting at 0 with
///    value 0, extended linearly beyond the last s.
class PsiSpec {
public:
    enum class Kind { Separable, TimeDependent };

    static PsiSpec separable(double c1, double c2, double m);
    static PsiSpec tabulated(std::vector<double> t, std::vector<double> s,
                             std::vector<std::vector<double>> values);

    Kind kind() const noexcept { return kind_; }
    double c1() const noexcept { return c1_; }
    double c2() const noexcept { return c2_; }
    double m() const noexcept { return m_; }

    double operator()(double t, double s) const;
    /// Solves Ψ(t, s) = y for s >= 0 by bracket expansion and TOMS 748.
    /// Throws RootBracketFailure when no bracket is found.
    double inverse(double t, double y) const;

private:
    Kind kind_ = Kind::Separable;
    double c1_ = 0.0, c2_ = 0.0, m_ = 2.0;
    std::vector<double> tt_, ss_;
    std::vector<std::vector<double>> table_;
};

/// z is given by samples; φ either in closed form (with optional derivative)
/// or by samples (with optional derivative samples).
struct ComparisonProblem {
    PsiSpec psi = PsiSpec::separable(1.0, 0.0, 2.0);
    double delta1 = 0.5;
    std::vector<double> t, z;
    std::function<double(double)> phi, dphi;
    std::vector<double> phi_t, phi_v, phi_dv;
    double t0 = 0.0, T = 1.0;
};

struct HypothesisReport {
    int grid_points = 0;
    double margin_z = 0.0;  ///< min of (Ψ(z′) + (1−δ₁)φ − z) / scale; >= −tol means the z bound holds
    double margin_phi = 0.0;  ///< min of (φ − Ψ(φ′)/δ₁) / scale
    double worst_t_z = 0.0, worst_t_phi = 0.0;
    bool z_bound = false;   ///< z <= Ψ(z′) + (1−δ₁)φ on the grid
    bool majorant = false;  ///< Ψ(φ′)/δ₁ <= φ on the grid
    bool endpoint = false;    ///< z(T) <= φ(T)
    bool nontrivial = false;  ///< max z > 0
    double tolerance = 1e-6;
};

/// Builds a monotone interpolant of z (PCHIP), differentiates it and checks
/// both inequalities on the union of the sample times and a 2001-point grid.
/// Throws NonMonotoneSamples if times are not strictly increasing or z is
/// negative or decreasing.
HypothesisReport check_hypotheses(const ComparisonProblem& problem, double tolerance = 1e-6);

enum class Verdict { Dominated, HypothesisFailed };

struct Conclusion {
    Verdict verdict = Verdict::HypothesisFailed;
    std::string failed;       ///< "z-bound", "majorant" or "endpoint" when the hypotheses fail
    double max_excess = 0.0;  ///< max (z − φ) over the grid (<= 0 when dominated)
    HypothesisReport report;
};

/// Dominated when every hypothesis holds and z <= φ on the whole grid. Throws
/// LemmaViolation if z > φ somewhere although the hypotheses hold.
Conclusion comparison_conclude(const ComparisonProblem& problem, double tolerance = 1e-6);
std::string to_string(const Conclusion& c);

struct MajorantSamples {
    std::vector<double> t, phi, dphi;
};

/// φ′ = Ψ⁻¹(δ₁ φ) from φ(t0) = φ0 by classical RK4 with step <= dt.
MajorantSamples solve_majorant(const PsiSpec& psi, double delta1, double phi0, double t0, double T,
                               double dt = 1e-3);

/// max over samples of |φ − Ψ(φ′)/δ₁| / φ with φ′ from fourth-order finite
/// differences of the samples (uniform step assumed).
double majorant_residual(const MajorantSamples& s, const PsiSpec& psi, double delta1);

struct BlowupFit {
    double exponent = 0.0;
    double critical = 0.0;          ///< m / (m − 1)
    int tail_samples = 0;
    bool hypothesis_holds = false;  ///< z <= Ψ(z′) on the fitted tail
    double first_failure_t = 0.0;   ///< first tail time where z > Ψ(z′); 0 if none
    bool nontrivial = false;
    /// exponent >= critical − tolerance (meaningful only when the hypothesis holds)
    bool consistent = false;
};

/// Log-log least-squares fit of z on the last decade [T/10, T] of the samples.
/// Throws InsufficientTail with fewer than 10 samples there.
BlowupFit blowup_rate(const std::vector<double>& t, const std::vector<double>& z, const PsiSpec& psi,
                      double tolerance = 0.05);

/// Tail surrogates for the liminf alternatives: min of z/φ and of z/z̃ over the last decade.
struct TailDiagnostics {
    double liminf_z_over_phi = 0.0;
    double last_z_over_ztilde = 0.0;
};
TailDiagnostics tail_diagnostics(const std::vector<double>& t, const std::vector<double>& z,
                                 const std::function<double(double)>& phi,
                                 const std::function<double(double)>& z_tilde);

struct FuzzReport {
    int instances = 0;
    int dominated = 0;
    int hypothesis_failed = 0;
    int lemma_violations = 0;
    std::string first_violation;
};

/// Random separable instances with φ from solve_majorant and z = c φ,
/// c ∈ [0, 1 − δ₁]. Counts verdicts; a LemmaViolation is counted, not rethrown.
FuzzReport fuzz_comparison(int instances, std::uint64_t seed);

/// Loads columns t, z[, phi] from CSV text (header required, '#' lines skipped).
ComparisonProblem load_problem_csv(const std::string& path, const PsiSpec& psi, double delta1);

}  // namespace chanflow
