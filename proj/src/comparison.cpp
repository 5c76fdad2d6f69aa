#include "chanflow/comparison.hpp"

#include "chanflow/errors.hpp"

#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

namespace chanflow {

PsiSpec PsiSpec::separable(double c1, double c2, double m) {
    if (!(c1 >= 0.0 && c2 >= 0.0) || (c1 == 0.0 && c2 == 0.0)) {
        throw ValidationError("Psi coefficients must be >= 0 and not both zero");
    }
    if (!(m > 1.0)) throw ValidationError("Psi exponent m must exceed 1");
    PsiSpec p;
    p.kind_ = Kind::Separable;
    p.c1_ = c1;
    p.c2_ = c2;
    p.m_ = m;
    return p;
}

PsiSpec PsiSpec::tabulated(std::vector<double> t, std::vector<double> s,
                           std::vector<std::vector<double>> values) {
    if (t.empty() || s.size() < 2 || values.size() != t.size()) {
        throw ValidationError("Psi table: need >= 1 time, >= 2 s-values and one row per time");
    }
    if (s.front() != 0.0) throw ValidationError("Psi table: s-grid must start at 0");
    for (std::size_t k = 1; k < t.size(); ++k)
        if (!(t[k] > t[k - 1])) throw ValidationError("Psi table: times must increase");
    for (std::size_t k = 1; k < s.size(); ++k)
        if (!(s[k] > s[k - 1])) throw ValidationError("Psi table: s-grid must increase");
    for (const auto& row : values) {
        if (row.size() != s.size() || row.front() != 0.0) {
            throw ValidationError("Psi table: each row needs Psi(t,0) = 0 and one value per s");
        }
        for (std::size_t k = 1; k < row.size(); ++k)
            if (!(row[k] > row[k - 1])) throw ValidationError("Psi table: rows must be strictly increasing in s");
    }
    PsiSpec p;
    p.kind_ = Kind::TimeDependent;
    p.tt_ = std::move(t);
    p.ss_ = std::move(s);
    p.table_ = std::move(values);
    return p;
}

double PsiSpec::operator()(double t, double s) const {
    s = std::max(s, 0.0);
    if (kind_ == Kind::Separable) return c1_ * s + c2_ * std::pow(s, m_);
    auto row_value = [&](const std::vector<double>& row) {
        const std::size_t n = ss_.size();
        if (s >= ss_.back()) {
            const double slope = (row[n - 1] - row[n - 2]) / (ss_[n - 1] - ss_[n - 2]);
            return row[n - 1] + slope * (s - ss_.back());
        }
        const auto it = std::upper_bound(ss_.begin(), ss_.end(), s);
        const std::size_t k = static_cast<std::size_t>(it - ss_.begin()) - 1;
        const double w = (s - ss_[k]) / (ss_[k + 1] - ss_[k]);
        return (1.0 - w) * row[k] + w * row[k + 1];
    };
    if (t <= tt_.front()) return row_value(table_.front());
    if (t >= tt_.back()) return row_value(table_.back());
    const auto it = std::upper_bound(tt_.begin(), tt_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - tt_.begin()) - 1;
    const double w = (t - tt_[k]) / (tt_[k + 1] - tt_[k]);
    return (1.0 - w) * row_value(table_[k]) + w * row_value(table_[k + 1]);
}

double PsiSpec::inverse(double t, double y) const {
    if (!(y > 0.0)) return 0.0;
    auto g = [&](double s) { return (*this)(t, s) - y; };
    double lo = 0.0, hi = 1.0;
    int it = 0;
    while (g(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++it > 2000) {
            std::ostringstream os;
            os << "no bracket for Psi(" << t << ", s) = " << y;
            throw RootBracketFailure(os.str());
        }
    }
    while (lo == 0.0 && hi > 1e-300 && g(0.5 * hi) > 0.0) hi *= 0.5;
    std::uintmax_t iters = 300;
    namespace bt = boost::math::tools;
    auto [a, b] = bt::toms748_solve(g, lo, hi, bt::eps_tolerance<double>(53), iters);
    return 0.5 * (a + b);
}

namespace {

void check_samples(const std::vector<double>& t, const std::vector<double>& v, const std::string& what,
                   bool nondecreasing) {
    if (t.size() != v.size()) throw NonMonotoneSamples(what + ": times and values differ in length");
    if (t.size() < 4) throw NonMonotoneSamples(what + ": need at least 4 samples");
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (k > 0 && !(t[k] > t[k - 1])) {
            throw NonMonotoneSamples(what + ": times not strictly increasing at index " + std::to_string(k));
        }
        if (v[k] < 0.0 || !std::isfinite(v[k])) {
            throw NonMonotoneSamples(what + ": negative or non-finite value at index " + std::to_string(k));
        }
        if (nondecreasing && k > 0 && v[k] < v[k - 1]) {
            throw NonMonotoneSamples(what + ": decreasing at t = " + std::to_string(t[k]));
        }
    }
}

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
using Hermite = boost::math::interpolators::cubic_hermite<std::vector<double>>;

struct Fn {
    std::function<double(double)> v, d;
};

/// Wraps an interpolant so that evaluation points off the sample range by
/// rounding are clamped to it.
template <class Ip>
Fn clamped(std::shared_ptr<Ip> ip, double lo, double hi, bool nonnegative_slope) {
    auto in = [lo, hi](double x) { return std::clamp(x, lo, hi); };
    return {[ip, in](double x) { return (*ip)(in(x)); },
            [ip, in, nonnegative_slope](double x) {
                const double d = ip->prime(in(x));
                return nonnegative_slope ? std::max(0.0, d) : d;
            }};
}

Fn make_z(const ComparisonProblem& p) {
    check_samples(p.t, p.z, "z", true);
    auto ip = std::make_shared<Pchip>(std::vector<double>(p.t), std::vector<double>(p.z));
    return clamped(ip, p.t.front(), p.t.back(), true);
}

Fn make_phi(const ComparisonProblem& p) {
    if (p.phi) {
        Fn f;
        f.v = p.phi;
        if (p.dphi) {
            f.d = p.dphi;
        } else {
            auto phi = p.phi;
            f.d = [phi](double x) {
                const double h = 1e-4 * std::max(1.0, std::abs(x));
                return (-phi(x + 2 * h) + 8 * phi(x + h) - 8 * phi(x - h) + phi(x - 2 * h)) / (12 * h);
            };
        }
        return f;
    }
    check_samples(p.phi_t, p.phi_v, "phi", true);
    if (!p.phi_dv.empty()) {
        if (p.phi_dv.size() != p.phi_t.size()) throw NonMonotoneSamples("phi: derivative samples length mismatch");
        auto ip = std::make_shared<Hermite>(std::vector<double>(p.phi_t), std::vector<double>(p.phi_v),
                                            std::vector<double>(p.phi_dv));
        return clamped(ip, p.phi_t.front(), p.phi_t.back(), false);
    }
    auto ip = std::make_shared<Pchip>(std::vector<double>(p.phi_t), std::vector<double>(p.phi_v));
    return clamped(ip, p.phi_t.front(), p.phi_t.back(), false);
}

std::vector<double> check_grid(const ComparisonProblem& p) {
    if (!(p.T > p.t0)) throw std::invalid_argument("comparison problem needs T > t0");
    const double span = p.T - p.t0;
    if (p.t.front() > p.t0 + 1e-12 * span || p.t.back() < p.T - 1e-12 * span) {
        throw std::invalid_argument("z samples must cover [t0, T]");
    }
    std::vector<double> g;
    for (int k = 0; k <= 2000; ++k) g.push_back(p.t0 + span * k / 2000.0);
    for (double x : p.t)
        if (x >= p.t0 && x <= p.T) g.push_back(x);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

double rel(double lhs, double rhs) {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    return (rhs - lhs) / scale;
}

}  // namespace

HypothesisReport check_hypotheses(const ComparisonProblem& p, double tol) {
    if (!(p.delta1 > 0.0 && p.delta1 < 1.0)) throw ValidationError("delta1 ∈ (0,1)");
    const Fn z = make_z(p);
    const Fn phi = make_phi(p);
    const auto grid = check_grid(p);
    HypothesisReport r;
    r.tolerance = tol;
    r.grid_points = static_cast<int>(grid.size());
    r.margin_z = r.margin_phi = std::numeric_limits<double>::infinity();
    for (double t : grid) {
        const double zv = z.v(t), pv = phi.v(t);
        const double m1 = rel(zv, p.psi(t, z.d(t)) + (1.0 - p.delta1) * pv);
        const double m2 = rel(p.psi(t, phi.d(t)) / p.delta1, pv);
        if (m1 < r.margin_z) {
            r.margin_z = m1;
            r.worst_t_z = t;
        }
        if (m2 < r.margin_phi) {
            r.margin_phi = m2;
            r.worst_t_phi = t;
        }
    }
    r.z_bound = r.margin_z >= -tol;
    r.majorant = r.margin_phi >= -tol;
    r.endpoint = rel(z.v(p.T), phi.v(p.T)) >= -tol;
    r.nontrivial = *std::max_element(p.z.begin(), p.z.end()) > 0.0;
    return r;
}

Conclusion comparison_conclude(const ComparisonProblem& p, double tol) {
    Conclusion c;
    c.report = check_hypotheses(p, tol);
    const Fn z = make_z(p);
    const Fn phi = make_phi(p);
    const auto grid = check_grid(p);
    c.max_excess = -std::numeric_limits<double>::infinity();
    double worst_rel = std::numeric_limits<double>::infinity();
    double worst_t = p.t0;
    for (double t : grid) {
        const double zv = z.v(t), pv = phi.v(t);
        c.max_excess = std::max(c.max_excess, zv - pv);
        const double m = rel(zv, pv);
        if (m < worst_rel) {
            worst_rel = m;
            worst_t = t;
        }
    }
    if (!c.report.z_bound) c.failed = "z-bound";
    else if (!c.report.majorant) c.failed = "majorant";
    else if (!c.report.endpoint) c.failed = "endpoint";
    if (!c.failed.empty()) {
        c.verdict = Verdict::HypothesisFailed;
        return c;
    }
    if (worst_rel < -tol) {
        std::ostringstream os;
        os << "z exceeds phi at t = " << worst_t << " (relative " << -worst_rel << ") although both inequalities "
           << "and the endpoint condition hold";
        throw LemmaViolation(os.str());
    }
    c.verdict = Verdict::Dominated;
    return c;
}

std::string to_string(const Conclusion& c) {
    return c.verdict == Verdict::Dominated ? "Dominated" : "HypothesisFailed(" + c.failed + ")";
}

MajorantSamples solve_majorant(const PsiSpec& psi, double delta1, double phi0, double t0, double T, double dt) {
    if (!(phi0 > 0.0)) throw ValidationError("majorant needs phi0 > 0");
    if (!(delta1 > 0.0 && delta1 < 1.0)) throw ValidationError("delta1 ∈ (0,1)");
    if (!(T > t0) || !(dt > 0.0)) throw std::invalid_argument("majorant needs T > t0 and dt > 0");
    const int n = static_cast<int>(std::ceil((T - t0) / dt - 1e-9));
    const double h = (T - t0) / n;
    auto rhs = [&](double t, double y) { return psi.inverse(t, delta1 * y); };
    MajorantSamples s;
    s.t.reserve(n + 1);
    double y = phi0;
    for (int k = 0; k <= n; ++k) {
        const double t = t0 + k * h;
        s.t.push_back(t);
        s.phi.push_back(y);
        s.dphi.push_back(rhs(t, y));
        if (k == n) break;
        const double k1 = s.dphi.back();
        const double k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
        const double k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
        const double k4 = rhs(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return s;
}

double majorant_residual(const MajorantSamples& s, const PsiSpec& psi, double delta1) {
    const std::size_t n = s.t.size();
    if (n < 5) throw InsufficientTail("majorant residual needs at least 5 samples");
    const double h = s.t[1] - s.t[0];
    const auto& f = s.phi;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d;
        if (i >= 2 && i + 2 < n) {
            d = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
        } else if (i < 2) {
            d = (-25.0 * f[i] + 48.0 * f[i + 1] - 36.0 * f[i + 2] + 16.0 * f[i + 3] - 3.0 * f[i + 4]) / (12.0 * h);
        } else {
            d = (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4]) / (12.0 * h);
        }
        worst = std::max(worst, std::abs(f[i] - psi(s.t[i], d) / delta1) / std::max(std::abs(f[i]), 1e-300));
    }
    return worst;
}

BlowupFit blowup_rate(const std::vector<double>& t, const std::vector<double>& z, const PsiSpec& psi,
                      double tolerance) {
    if (psi.kind() != PsiSpec::Kind::Separable) {
        throw ValidationError("blowup_rate needs a separable Psi with a power bound c0 s^m");
    }
    check_samples(t, z, "z", true);
    BlowupFit fit;
    fit.critical = psi.m() / (psi.m() - 1.0);
    fit.nontrivial = *std::max_element(z.begin(), z.end()) > 0.0;
    const double T = t.back();
    std::vector<double> lx, ly;
    std::vector<double> tail_t;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] >= T / 10.0 && t[k] > 0.0 && z[k] > 0.0) {
            lx.push_back(std::log(t[k]));
            ly.push_back(std::log(z[k]));
            tail_t.push_back(t[k]);
        }
    }
    fit.tail_samples = static_cast<int>(lx.size());
    if (fit.tail_samples < 10) {
        throw InsufficientTail(std::to_string(fit.tail_samples) + " positive samples in the last decade (need 10)");
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
    }
    fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    const Pchip ip{std::vector<double>(t), std::vector<double>(z)};
    fit.hypothesis_holds = true;
    for (double x : tail_t) {
        const double zv = ip(x);
        const double rhs = psi(x, std::max(0.0, ip.prime(x)));
        if (rel(zv, rhs) < -1e-6) {
            fit.hypothesis_holds = false;
            fit.first_failure_t = x;
            break;
        }
    }
    fit.consistent = fit.exponent >= fit.critical - tolerance;
    return fit;
}

TailDiagnostics tail_diagnostics(const std::vector<double>& t, const std::vector<double>& z,
                                 const std::function<double(double)>& phi,
                                 const std::function<double(double)>& z_tilde) {
    TailDiagnostics d;
    d.liminf_z_over_phi = std::numeric_limits<double>::infinity();
    const double T = t.back();
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < T / 10.0) continue;
        const double p = phi(t[k]);
        if (p > 0.0) d.liminf_z_over_phi = std::min(d.liminf_z_over_phi, z[k] / p);
    }
    const double zt = z_tilde(T);
    d.last_z_over_ztilde = zt > 0.0 ? z.back() / zt : std::numeric_limits<double>::infinity();
    return d;
}

FuzzReport fuzz_comparison(int instances, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FuzzReport rep;
    for (int q = 0; q < instances; ++q) {
        const double c1 = u(rng) < 0.2 ? 0.0 : 2.0 * u(rng);
        const double c2 = c1 == 0.0 ? 0.1 + 2.0 * u(rng) : 2.0 * u(rng);
        const double m = 1.1 + 1.9 * u(rng);
        const double delta1 = 0.05 + 0.9 * u(rng);
        const double phi0 = 0.1 + 9.9 * u(rng);
        const double T = 0.5 + 4.5 * u(rng);
        const double c = (1.0 - delta1) * u(rng);
        const PsiSpec psi = PsiSpec::separable(c1, c2, m);
        const MajorantSamples s = solve_majorant(psi, delta1, phi0, 0.0, T, 1e-2);

        ComparisonProblem p;
        p.psi = psi;
        p.delta1 = delta1;
        p.t0 = 0.0;
        p.T = s.t.back();
        p.phi_t = s.t;
        p.phi_v = s.phi;
        p.phi_dv = s.dphi;
        const std::size_t stride = std::max<std::size_t>(1, s.t.size() / 200);
        for (std::size_t k = 0; k < s.t.size(); k += stride) {
            p.t.push_back(s.t[k]);
            p.z.push_back(c * s.phi[k]);
        }
        if (p.t.back() != s.t.back()) {
            p.t.push_back(s.t.back());
            p.z.push_back(c * s.phi.back());
        }
        ++rep.instances;
        try {
            const Conclusion cc = comparison_conclude(p);
            if (cc.verdict == Verdict::Dominated) ++rep.dominated;
            else ++rep.hypothesis_failed;
        } catch (const LemmaViolation& e) {
            if (rep.lemma_violations++ == 0) rep.first_violation = e.what();
        }
    }
    return rep;
}

ComparisonProblem load_problem_csv(const std::string& path, const PsiSpec& psi, double delta1) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open comparison CSV '" + path + "'");
    std::string line;
    std::vector<std::string> header;
    int lineno = 0;
    ComparisonProblem p;
    p.psi = psi;
    p.delta1 = delta1;
    int ct = -1, cz = -1, cp = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell.erase(0, cell.find_first_not_of(" \t\r"));
            cell.erase(cell.find_last_not_of(" \t\r") + 1);
            cells.push_back(cell);
        }
        if (header.empty()) {
            header = cells;
            for (int k = 0; k < static_cast<int>(cells.size()); ++k) {
                if (cells[k] == "t") ct = k;
                else if (cells[k] == "z") cz = k;
                else if (cells[k] == "phi") cp = k;
            }
            if (ct < 0 || cz < 0) throw ParseError(lineno, "CSV header needs columns t and z");
            continue;
        }
        try {
            p.t.push_back(std::stod(cells.at(ct)));
            p.z.push_back(std::stod(cells.at(cz)));
            if (cp >= 0) {
                p.phi_t.push_back(p.t.back());
                p.phi_v.push_back(std::stod(cells.at(cp)));
            }
        } catch (const std::exception&) {
            throw ParseError(lineno, "malformed numeric row");
        }
    }
    if (p.t.empty()) throw ParseError(lineno, "no data rows");
    p.t0 = p.t.front();
    p.T = p.t.back();
    return p;
}

}  // namespace chanflow
