#pragma once

#include "chanflow/expression.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace chanflow {

enum class ProfileFamily { Straight, LinearWiden, PowerLaw, StraightOutlet, Custom };

std::string to_string(ProfileFamily family);
std::optional<ProfileFamily> family_from_string(const std::string& name);
std::vector<std::string> known_families();

/// Both walls and their first two derivatives at one abscissa.
struct WallSample {
    double f1 = 0, f2 = 0;
    double df1 = 0, df2 = 0;
    double ddf1 = 0, ddf2 = 0;

    double width() const { return f2 - f1; }
    double dwidth() const { return df2 - df1; }
    double ddwidth() const { return ddf2 - ddf1; }
    double mid() const { return 0.5 * (f1 + f2); }
    double dmid() const { return 0.5 * (df1 + df2); }
    double ddmid() const { return 0.5 * (ddf1 + ddf2); }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Channel Ω = {f1(x1) < x2 < f2(x1)} described by closed-form walls.
///
/// Families (all symmetric about x2 = 0 except Custom):
///  - Straight(d0):             f2 = d0
///  - LinearWiden(d0, s):       f2 = d0 + s (sqrt(1 + t^2) - 1)
///  - PowerLaw(d0, alpha):      f2 = d0 (1 + |t|)^alpha
///  - StraightOutlet(A, k, w):  f2 = 1 + A B((k - t) / w), B(s) = 64 s^3 (1 - s)^3 on [0, 1]
///  - Custom(expr1, expr2):     f1, f2 parsed expressions in t
/// with f1 = -f2 for the symmetric families.
class ChannelProfile {
public:
    static ChannelProfile straight(double half_width);
    static ChannelProfile linear_widen(double half_width, double slope);
    static ChannelProfile power_law(double half_width, double alpha);
    static ChannelProfile straight_outlet(double amplitude, double k, double bump_width);
    static ChannelProfile custom(const std::string& f1, const std::string& f2);

    WallSample eval(double t) const;
    double width(double t) const { return eval(t).width(); }

    ProfileFamily family() const noexcept { return family_; }
    const std::map<std::string, double>& params() const noexcept { return params_; }
    /// Points where the walls are only piecewise smooth; quadrature splits there.
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    /// Short descriptor, e.g. "power_law(d0=1,alpha=0.5)".
    std::string id() const;

private:
    using WallFn = std::function<Jet(double)>;
    ChannelProfile(ProfileFamily family, std::map<std::string, double> params, WallFn upper,
                   WallFn lower, std::vector<double> breakpoints, std::string label = {});

    ProfileFamily family_;
    std::map<std::string, double> params_;
    WallFn upper_, lower_;
    std::vector<double> breakpoints_;
    std::string label_;
};

/// Range of k(t) = ∫_0^t f^{-5/3}: which ends of the real line k reaches.
enum class KRangeCase { BothInfinite, BothFinite, FiniteLeft, FiniteRight };
std::string to_string(KRangeCase c);

struct ChannelMetrics {
    Interval window;
    double d_lower = 0.0;   ///< inf f on the window
    double d_upper = 0.0;   ///< sup f on the window
    double beta = 0.0;      ///< sup |f_i'|
    double beta_star = 1.0; ///< 1 / (4 max(beta, 1/4))
    double gamma = 0.0;     ///< sup |f_i'' f|
    std::optional<KRangeCase> k_range_case;
    std::optional<double> t_star;  ///< sup{t > 0 : h_L(t) >= h_R(t)}, k range all of R
    std::optional<double> t_hat;   ///< sup{t > 0 : h_R(t) <= 0}, k range (-L, inf)
};

/// Checks the standing hypotheses on `window` by dense sampling (4096 points)
/// plus golden-section refinement, and computes the derived constants.
/// Throws AssumptionViolation when width, slope or curvature bounds fail.
ChannelMetrics validate(const ChannelProfile& profile, Interval window);

/// ∫_a^b f(ξ)^p dξ by adaptive Gauss-Kronrod; a <= b.
double weight_integral(const ChannelProfile& profile, double a, double b, double p);

/// Divergence test for one tail of ∫ f^p.
struct TailIntegral {
    bool finite = false;
    double limit = 0.0;  ///< extrapolated ∫_0^{±∞} f^p when finite (signed like k)
};

struct UniquenessCheck {
    bool f3_integral_infinite = false;  ///< |∫_0^{±∞} f^{-3}| = ∞
    bool slope_vanishes = false;        ///< f'(t) -> 0
    bool tail_ratio_vanishes = false;   ///< sup f' / (tail ∫ f^-3)^{1/2} -> 0
    bool cond_divergent_tail = false;
    bool cond_convergent_tail = false;
    bool satisfied() const { return cond_divergent_tail || cond_convergent_tail; }
};

struct Classification {
    KRangeCase k_case = KRangeCase::BothInfinite;
    TailIntegral k_left, k_right;         ///< tails of ∫ f^{-5/3}
    UniquenessCheck left, right;
    /// Uniqueness/decay hypotheses hold at both ends (each end one of the two forms).
    bool uniqueness_hypotheses() const { return left.satisfied() && right.satisfied(); }
};

/// Numerically classifies both tails of ∫ f^{-5/3} from partial integrals on
/// geometric windows and evaluates the uniqueness hypotheses. Throws
/// Inconclusive when the partial integrals do not settle within the budget.
Classification classify(const ChannelProfile& profile);

/// k(t) = ∫_0^t f^{-5/3} and its inverse h, plus the shifted ends h_L, h_R.
struct HValues {
    double h = 0.0;
    double h_left = 0.0;   ///< h_L(t) = h(-t) + β* f(h(-t))
    double h_right = 0.0;  ///< h_R(t) = h(t) - β* f(h(t))
};

class KMap {
public:
    KMap(ChannelProfile profile, double beta_star);
    /// Uses precomputed tail limits to report OutOfRange without a bracket search.
    KMap(ChannelProfile profile, double beta_star, const Classification& classification);

    double k(double t) const;
    /// Inverse of k by bracketed root finding. Throws OutOfRange outside the range of k.
    double h(double t) const;
    HValues at(double t) const;
    double beta_star() const noexcept { return beta_star_; }
    const ChannelProfile& profile() const noexcept { return profile_; }

private:
    ChannelProfile profile_;
    double beta_star_;
    std::optional<double> k_min_, k_max_;
};

/// Convenience wrapper matching the h-parameterization operation.
HValues h_parameterization(const ChannelProfile& profile, const ChannelMetrics& metrics, double t);

}  // namespace chanflow
