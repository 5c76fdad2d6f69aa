#include "chanflow/geometry.hpp"

#include "chanflow/errors.hpp"
#include "quadrature.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace chanflow {

namespace {

Jet constant_jet(double v) { return {v, 0.0, 0.0}; }

Jet negate(const Jet& j) { return {-j.v, -j.d1, -j.d2}; }

// 64 s^3 (1-s)^3 on [0,1], zero outside; C^2 with peak 1 at s = 1/2.
Jet bump(double s) {
    if (s <= 0.0 || s >= 1.0) return {};
    const double q = s * (1.0 - s);
    const double dq = 1.0 - 2.0 * s;
    return {64.0 * q * q * q, 192.0 * q * q * dq, 192.0 * (2.0 * q * dq * dq - 2.0 * q * q)};
}

double golden_max(const std::function<double(double)>& fn, double lo, double hi) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = fn(c), fd = fn(d);
    for (int it = 0; it < 80 && b - a > 1e-14 * (1.0 + std::abs(a)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = fn(d);
        }
    }
    return std::max({fc, fd, fn(lo), fn(hi)});
}

// Sampled extremum plus golden-section refinement in the neighbouring cells.
double refined_max(const std::function<double(double)>& fn, Interval w, int samples) {
    double best = -std::numeric_limits<double>::infinity();
    int best_k = 0;
    const double dt = w.length() / (samples - 1);
    for (int k = 0; k < samples; ++k) {
        const double v = fn(w.lo + k * dt);
        if (!std::isfinite(v)) {
            throw AssumptionViolation("non-finite profile quantity at t = " +
                                      std::to_string(w.lo + k * dt));
        }
        if (v > best) {
            best = v;
            best_k = k;
        }
    }
    if (samples < 3 || dt <= 0.0) return best;
    const double lo = w.lo + std::max(best_k - 1, 0) * dt;
    const double hi = w.lo + std::min(best_k + 1, samples - 1) * dt;
    return std::max(best, golden_max(fn, lo, hi));
}

constexpr int kWindowBudget = 48;
constexpr double kMinWidthRatio = 1e-6;

// Increments of ∫ f^p over [0,1], [1,2], [2,4], ... on one side (sign = ±1).
std::vector<double> octave_increments(const ChannelProfile& profile, double p, double sign) {
    std::vector<double> inc;
    inc.reserve(kWindowBudget + 1);
    auto integrand = [&](double t) { return std::pow(profile.width(t), p); };
    double lo = 0.0, hi = 1.0;
    for (int n = 0; n <= kWindowBudget; ++n) {
        const double a = sign > 0 ? lo : -hi;
        const double b = sign > 0 ? hi : -lo;
        inc.push_back(detail::integrate(integrand, a, b, profile.breakpoints()));
        lo = hi;
        hi *= 2.0;
    }
    return inc;
}

TailIntegral tail_test(const std::vector<double>& inc, double sign, const std::string& what) {
    double partial = 0.0;
    for (double v : inc) partial += v;
    const std::size_t n = inc.size();
    // vanishing increments: converged
    if (inc.back() <= 1e-15 * partial || !std::isfinite(partial)) {
        if (!std::isfinite(partial)) throw Inconclusive(what + ": partial integrals not finite");
        return {true, sign * partial};
    }
    constexpr int kLast = 6;
    bool all_small = true, all_large = true;
    double r_last = 0.0;
    for (std::size_t m = n - kLast; m < n; ++m) {
        const double r = inc[m] / inc[m - 1];
        all_small = all_small && r <= 0.95;
        all_large = all_large && r >= 0.985;
        r_last = r;
    }
    if (all_small) return {true, sign * (partial + inc.back() * r_last / (1.0 - r_last))};
    if (all_large) return {false, sign * std::numeric_limits<double>::infinity()};
    std::ostringstream os;
    os << what << ": octave ratio " << r_last << " neither clearly below nor above 1";
    throw Inconclusive(os.str());
}

UniquenessCheck uniqueness_side(const ChannelProfile& profile, double sign) {
    UniquenessCheck u;
    const auto inc3 = octave_increments(profile, -3.0, sign);
    const TailIntegral i3 = tail_test(inc3, sign, "tail of f^-3");
    u.f3_integral_infinite = !i3.finite;

    // per-octave slope sup |f'| and outward slope sup s f'
    const int windows = static_cast<int>(inc3.size());
    std::vector<double> abs_slope(windows), out_slope(windows);
    double lo = 0.0, hi = 1.0;
    for (int n = 0; n < windows; ++n) {
        double a_max = 0.0, o_max = 0.0;
        for (int q = 0; q <= 32; ++q) {
            const double tau = sign * (lo + (hi - lo) * q / 32.0);
            const double fp = profile.eval(tau).dwidth();
            a_max = std::max(a_max, std::abs(fp));
            o_max = std::max(o_max, sign * fp);
        }
        abs_slope[n] = a_max;
        out_slope[n] = o_max;
        lo = hi;
        hi *= 2.0;
    }

    // f' -> 0: tiny or decaying geometrically across the last octaves
    {
        const int last = windows - 1, first = windows - 9;
        if (abs_slope[last] < 1e-10) {
            u.slope_vanishes = true;
        } else if (abs_slope[first] > 0.0) {
            const double per_octave =
                std::log2(abs_slope[last] / abs_slope[first]) / static_cast<double>(last - first);
            u.slope_vanishes = per_octave < -0.02;
        }
    }

    if (i3.finite) {
        // tails ∫_{2^n}^∞ f^-3 with a geometric remainder
        std::vector<double> tail(windows + 1, 0.0);
        const double r = inc3[windows - 1] / inc3[windows - 2];
        tail[windows] = r < 1.0 ? inc3[windows - 1] * r / (1.0 - r) : 0.0;
        for (int n = windows - 1; n >= 0; --n) tail[n] = tail[n + 1] + inc3[n];
        std::vector<double> sup_out(windows, 0.0);
        double running = 0.0;
        for (int n = windows - 1; n >= 0; --n) {
            running = std::max(running, out_slope[n]);
            sup_out[n] = running;
        }
        // window n covers [2^{n-1}, 2^n], so the tail from t = 2^{n-1} is tail[n]
        const int first = windows - 20, last = windows - 6;
        auto ratio = [&](int n) { return sup_out[n] / std::sqrt(tail[n]); };
        if (ratio(last) < 1e-10) {
            u.tail_ratio_vanishes = true;
        } else if (ratio(first) > 0.0) {
            const double per_octave =
                std::log2(ratio(last) / ratio(first)) / static_cast<double>(last - first);
            u.tail_ratio_vanishes = per_octave < -0.02;
        }
    }
    u.cond_divergent_tail = u.f3_integral_infinite && u.slope_vanishes;
    u.cond_convergent_tail = !u.f3_integral_infinite && u.tail_ratio_vanishes;
    return u;
}

}  // namespace

std::string to_string(ProfileFamily family) {
    switch (family) {
    case ProfileFamily::Straight: return "straight";
    case ProfileFamily::LinearWiden: return "linear_widen";
    case ProfileFamily::PowerLaw: return "power_law";
    case ProfileFamily::StraightOutlet: return "straight_outlet";
    case ProfileFamily::Custom: return "custom";
    }
    return "?";
}

std::optional<ProfileFamily> family_from_string(const std::string& name) {
    for (auto f : {ProfileFamily::Straight, ProfileFamily::LinearWiden, ProfileFamily::PowerLaw,
                   ProfileFamily::StraightOutlet, ProfileFamily::Custom}) {
        if (to_string(f) == name) return f;
    }
    return std::nullopt;
}

std::vector<std::string> known_families() {
    return {"straight", "linear_widen", "power_law", "straight_outlet", "custom"};
}

std::string to_string(KRangeCase c) {
    switch (c) {
    case KRangeCase::BothInfinite: return "both_infinite";
    case KRangeCase::BothFinite: return "both_finite";
    case KRangeCase::FiniteLeft: return "finite_left";
    case KRangeCase::FiniteRight: return "finite_right";
    }
    return "?";
}

ChannelProfile::ChannelProfile(ProfileFamily family, std::map<std::string, double> params,
                               WallFn upper, WallFn lower, std::vector<double> breakpoints,
                               std::string label)
    : family_(family), params_(std::move(params)), upper_(std::move(upper)),
      lower_(std::move(lower)), breakpoints_(std::move(breakpoints)), label_(std::move(label)) {}

ChannelProfile ChannelProfile::straight(double d0) {
    if (!(d0 > 0.0)) throw AssumptionViolation("straight: half-width must be positive");
    auto up = [d0](double) { return constant_jet(d0); };
    auto lo = [d0](double) { return constant_jet(-d0); };
    return ChannelProfile(ProfileFamily::Straight, {{"d0", d0}}, up, lo, {});
}

ChannelProfile ChannelProfile::linear_widen(double d0, double s) {
    if (!(d0 > 0.0)) throw AssumptionViolation("linear_widen: half-width must be positive");
    if (!(s >= 0.0)) throw AssumptionViolation("linear_widen: slope must be nonnegative");
    auto up = [d0, s](double t) {
        const double r = std::sqrt(1.0 + t * t);
        return Jet{d0 + s * (r - 1.0), s * t / r, s / (r * r * r)};
    };
    auto lo = [up](double t) { return negate(up(t)); };
    return ChannelProfile(ProfileFamily::LinearWiden, {{"d0", d0}, {"slope", s}}, up, lo, {});
}

ChannelProfile ChannelProfile::power_law(double d0, double alpha) {
    if (!(d0 > 0.0)) throw AssumptionViolation("power_law: half-width must be positive");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw AssumptionViolation("power_law: alpha must lie in [0,1)");
    auto up = [d0, alpha](double t) {
        // right derivative at the kink t = 0
        const double sg = t < 0.0 ? -1.0 : 1.0;
        const double base = 1.0 + std::abs(t);
        return Jet{d0 * std::pow(base, alpha), d0 * alpha * sg * std::pow(base, alpha - 1.0),
                   d0 * alpha * (alpha - 1.0) * std::pow(base, alpha - 2.0)};
    };
    auto lo = [up](double t) { return negate(up(t)); };
    return ChannelProfile(ProfileFamily::PowerLaw, {{"d0", d0}, {"alpha", alpha}}, up, lo, {0.0});
}

ChannelProfile ChannelProfile::straight_outlet(double amplitude, double k, double w) {
    if (!(w > 0.0)) throw AssumptionViolation("straight_outlet: bump width must be positive");
    if (!(amplitude > -1.0)) throw AssumptionViolation("straight_outlet: amplitude must exceed -1");
    auto up = [amplitude, k, w](double t) {
        const Jet b = bump((k - t) / w);
        return Jet{1.0 + amplitude * b.v, -amplitude * b.d1 / w, amplitude * b.d2 / (w * w)};
    };
    auto lo = [up](double t) { return negate(up(t)); };
    return ChannelProfile(ProfileFamily::StraightOutlet,
                          {{"amplitude", amplitude}, {"k", k}, {"width", w}}, up, lo, {k - w, k});
}

ChannelProfile ChannelProfile::custom(const std::string& f1, const std::string& f2) {
    Expression lower(f1), upper(f2);
    auto up = [upper](double t) { return upper.eval(t); };
    auto lo = [lower](double t) { return lower.eval(t); };
    std::vector<double> bps;
    if (f1.find("abs") != std::string::npos || f2.find("abs") != std::string::npos) bps.push_back(0.0);
    return ChannelProfile(ProfileFamily::Custom, {}, up, lo, bps, "f1=" + f1 + ";f2=" + f2);
}

WallSample ChannelProfile::eval(double t) const {
    const Jet u = upper_(t);
    const Jet l = lower_(t);
    return {l.v, u.v, l.d1, u.d1, l.d2, u.d2};
}

std::string ChannelProfile::id() const {
    std::ostringstream os;
    os << to_string(family_) << "(";
    if (family_ == ProfileFamily::Custom) {
        os << label_;
    } else {
        bool first = true;
        for (const auto& [k, v] : params_) {
            os << (first ? "" : ",") << k << "=" << v;
            first = false;
        }
    }
    os << ")";
    return os.str();
}

double weight_integral(const ChannelProfile& profile, double a, double b, double p) {
    if (a > b) throw std::invalid_argument("weight_integral: a must not exceed b");
    if (a == b) return 0.0;
    return detail::integrate([&](double t) { return std::pow(profile.width(t), p); }, a, b,
                             profile.breakpoints());
}

ChannelMetrics validate(const ChannelProfile& profile, Interval window) {
    if (!std::isfinite(window.lo) || !std::isfinite(window.hi) || window.hi < window.lo) {
        throw std::invalid_argument("validate: window must be a finite interval");
    }
    constexpr int kSamples = 4096;
    ChannelMetrics m;
    m.window = window;

    m.d_lower = -refined_max([&](double t) { return -profile.width(t); }, window, kSamples);
    m.d_upper = refined_max([&](double t) { return profile.width(t); }, window, kSamples);
    // A width below 1e-6 of the maximum is indistinguishable from touching walls
    // at the resolution of the sampled search.
    if (!(m.d_lower > kMinWidthRatio * m.d_upper)) {
        std::ostringstream os;
        os << "channel width inf f = " << m.d_lower << " (sup f = " << m.d_upper
           << ") on [" << window.lo << ", " << window.hi << "]: walls touch";
        throw AssumptionViolation(os.str());
    }
    m.beta = refined_max(
        [&](double t) {
            const auto s = profile.eval(t);
            return std::max(std::abs(s.df1), std::abs(s.df2));
        },
        window, kSamples);
    m.gamma = refined_max(
        [&](double t) {
            const auto s = profile.eval(t);
            return std::max(std::abs(s.ddf1), std::abs(s.ddf2)) * s.width();
        },
        window, kSamples);
    if (!std::isfinite(m.beta)) throw AssumptionViolation("wall slope unbounded on window");
    if (!std::isfinite(m.gamma)) throw AssumptionViolation("sup |f_i'' f| unbounded on window");
    m.beta_star = 1.0 / (4.0 * std::max(m.beta, 0.25));

    try {
        const Classification c = classify(profile);
        m.k_range_case = c.k_case;
        const KMap kmap(profile, m.beta_star, c);
        namespace bt = boost::math::tools;
        auto solve_increasing = [&](const std::function<double(double)>& g) -> std::optional<double> {
            double hi = 1.0;
            for (int it = 0; it < 80 && g(hi) < 0.0; ++it) hi *= 2.0;
            if (g(hi) < 0.0) return std::nullopt;
            std::uintmax_t iters = 200;
            auto [lo_r, hi_r] = bt::toms748_solve(g, 0.0, hi, bt::eps_tolerance<double>(45), iters);
            return 0.5 * (lo_r + hi_r);
        };
        try {
            if (c.k_case == KRangeCase::BothInfinite) {
                m.t_star = solve_increasing([&](double t) {
                    const HValues v = kmap.at(t);
                    return v.h_right - v.h_left;
                });
            } else if (c.k_case == KRangeCase::FiniteLeft) {
                m.t_hat = solve_increasing([&](double t) { return kmap.at(t).h_right; });
            } else if (c.k_case == KRangeCase::FiniteRight) {
                m.t_hat = solve_increasing([&](double t) { return -kmap.at(t).h_left; });
            }
        } catch (const OutOfRange&) {
        }
    } catch (const Inconclusive&) {
        // left unset; reported as unknown
    }
    return m;
}

Classification classify(const ChannelProfile& profile) {
    Classification c;
    c.k_right = tail_test(octave_increments(profile, -5.0 / 3.0, +1.0), +1.0, "right tail of f^-5/3");
    c.k_left = tail_test(octave_increments(profile, -5.0 / 3.0, -1.0), -1.0, "left tail of f^-5/3");
    if (!c.k_left.finite && !c.k_right.finite) c.k_case = KRangeCase::BothInfinite;
    else if (c.k_left.finite && c.k_right.finite) c.k_case = KRangeCase::BothFinite;
    else if (c.k_left.finite) c.k_case = KRangeCase::FiniteLeft;
    else c.k_case = KRangeCase::FiniteRight;
    c.right = uniqueness_side(profile, +1.0);
    c.left = uniqueness_side(profile, -1.0);
    return c;
}

KMap::KMap(ChannelProfile profile, double beta_star)
    : profile_(std::move(profile)), beta_star_(beta_star) {}

KMap::KMap(ChannelProfile profile, double beta_star, const Classification& c)
    : profile_(std::move(profile)), beta_star_(beta_star) {
    if (c.k_left.finite) k_min_ = c.k_left.limit;
    if (c.k_right.finite) k_max_ = c.k_right.limit;
}

double KMap::k(double t) const {
    return t >= 0.0 ? weight_integral(profile_, 0.0, t, -5.0 / 3.0)
                    : -weight_integral(profile_, t, 0.0, -5.0 / 3.0);
}

double KMap::h(double t) const {
    if (t == 0.0) return 0.0;
    if ((k_max_ && t >= *k_max_) || (k_min_ && t <= *k_min_)) {
        std::ostringstream os;
        os << "t = " << t << " outside the range of k";
        throw OutOfRange(os.str());
    }
    const double sign = t > 0.0 ? 1.0 : -1.0;
    const double target = std::abs(t);
    auto g = [&](double x) { return sign * k(sign * x) - target; };
    double lo = 0.0, hi = 1.0;
    int it = 0;
    while (g(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++it > 60) {
            std::ostringstream os;
            os << "t = " << t << " beyond the reachable range of k";
            throw OutOfRange(os.str());
        }
    }
    namespace bt = boost::math::tools;
    std::uintmax_t iters = 200;
    auto [a, b] = bt::toms748_solve(g, lo, hi, bt::eps_tolerance<double>(48), iters);
    return sign * 0.5 * (a + b);
}

HValues KMap::at(double t) const {
    HValues v;
    v.h = h(t);
    const double hm = t == 0.0 ? 0.0 : h(-t);
    v.h_left = hm + beta_star_ * profile_.width(hm);
    v.h_right = v.h - beta_star_ * profile_.width(v.h);
    return v;
}

HValues h_parameterization(const ChannelProfile& profile, const ChannelMetrics& metrics, double t) {
    return KMap(profile, metrics.beta_star).at(t);
}

}  // namespace chanflow
