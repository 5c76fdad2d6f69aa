#include "chanflow/flux_carrier.hpp"

#include "chanflow/errors.hpp"
#include "quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace chanflow {

std::string to_string(CutoffKind kind) {
    return kind == CutoffKind::Quintic ? "quintic" : "exp_bump";
}

Jet Cutoff::eval(double t) const {
    if (t <= 0.0) return {1.0, 0.0, 0.0};
    if (t >= 1.0) return {0.0, 0.0, 0.0};
    if (kind_ == CutoffKind::Quintic) {
        const double s = 1.0 - t;
        return {1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t), -30.0 * t * t * s * s,
                -60.0 * t * s * (1.0 - 2.0 * t)};
    }
    // S = a / (a + b), μ = 1 − S
    const double s = 1.0 - t;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / s);
    const double da = a / (t * t), db = -b / (s * s);
    const double dda = a * (1.0 / (t * t * t * t) - 2.0 / (t * t * t));
    const double ddb = b * (1.0 / (s * s * s * s) - 2.0 / (s * s * s));
    const double D = a + b, dD = da + db;
    const double N = da * b - a * db, dN = dda * b - a * ddb;
    return {1.0 - a / D, -N / (D * D), -(dN * D - 2.0 * N * dD) / (D * D * D)};
}

void CarrierParams::check() const {
    if (!(phi >= 0.0) || !std::isfinite(phi)) throw ValidationError("flux must be finite and >= 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon ∈ (0,1)");
}

CarrierValue carrier_at(double x2, const WallSample& w, const CarrierParams& p) {
    CarrierValue c;
    const double A = w.f2 - x2;
    const double B = x2 - w.mid();
    if (B <= 0.0) return c;
    if (A <= 0.0) {
        c.G = p.phi;
        return c;
    }
    const double eps = p.epsilon;
    c.sigma = 1.0 + eps * (std::log(A) - std::log(B));
    const Jet mu = p.cutoff.eval(c.sigma);
    c.G = p.phi * mu.v;
    if (c.sigma <= 0.0 || c.sigma >= 1.0) return c;
    c.in_band = true;

    const double iA = 1.0 / A, iB = 1.0 / B;
    const double s2 = eps * (-iA - iB);
    const double s1 = eps * (w.df2 * iA + w.dmid() * iB);
    const double s22 = eps * (-iA * iA + iB * iB);
    const double s12 = eps * (w.df2 * iA * iA - w.dmid() * iB * iB);
    const double s11 = eps * (w.ddf2 * iA - w.df2 * w.df2 * iA * iA + w.ddmid() * iB +
                              w.dmid() * w.dmid() * iB * iB);
    const double P = p.phi;
    c.g = {P * mu.d1 * s2, -P * mu.d1 * s1};
    const double d1g1 = P * (mu.d2 * s1 * s2 + mu.d1 * s12);
    const double d2g1 = P * (mu.d2 * s2 * s2 + mu.d1 * s22);
    const double d1g2 = -P * (mu.d2 * s1 * s1 + mu.d1 * s11);
    c.grad = {{{d1g1, d2g1}, {d1g2, -d1g1}}};
    return c;
}

double stream_G(Point x, const CarrierParams& params, const ChannelProfile& profile) {
    return carrier_at(x[1], profile.eval(x[0]), params).G;
}

Vec2 velocity_g(Point x, const CarrierParams& params, const ChannelProfile& profile) {
    return carrier_at(x[1], profile.eval(x[0]), params).g;
}

Mat2 grad_g(Point x, const CarrierParams& params, const ChannelProfile& profile) {
    return carrier_at(x[1], profile.eval(x[0]), params).grad;
}

namespace {

// Split points of [f1, f2] resolving the band near the upper wall.
std::vector<double> band_breaks(const WallSample& w, double eps) {
    const double f = w.width();
    const double e = std::exp(-1.0 / eps);
    const double a_min = e * f / (2.0 * (1.0 + e));
    std::vector<double> pts{w.f1, w.mid(), w.mid() + 0.25 * f};
    for (double A = 0.125 * f; A > a_min; A *= 0.5) pts.push_back(w.f2 - A);
    pts.push_back(w.f2 - a_min);
    pts.push_back(w.f2);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace

double slice_flux(const CarrierParams& params, const ChannelProfile& profile, double x1) {
    const WallSample w = profile.eval(x1);
    const auto pts = band_breaks(w, params.epsilon);
    auto g1 = [&](double x2) { return carrier_at(x2, w, params).g[0]; };
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g1, pts[k], pts[k + 1],
                                                                             15, 1e-14);
    }
    return sum;
}

double slice_hardy_constant(const CarrierParams& params, const ChannelProfile& profile, double x1) {
    if (params.phi == 0.0) return 0.0;
    const WallSample w = profile.eval(x1);
    const double f = w.width();
    const double e = std::exp(-1.0 / params.epsilon);
    const double a_end = 1e-2 * e * f / (2.0 * (1.0 + e));

    std::vector<double> x;
    const double lo_end = w.mid() + 0.25 * f;
    for (int k = 0; k < 40; ++k) x.push_back(w.f1 + (lo_end - w.f1) * k / 40.0);
    const int graded = 240;
    const double q = std::pow(a_end / (0.25 * f), 1.0 / graded);
    for (int k = 0; k <= graded; ++k) x.push_back(w.f2 - 0.25 * f * std::pow(q, k));
    x.push_back(w.f2);

    const int ne = static_cast<int>(x.size()) - 1;
    const int ni = ne - 1;  // interior nodes 1..ne-1
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ni, ni), M = Eigen::MatrixXd::Zero(ni, ni);
    const double gp[3] = {0.5 - std::sqrt(0.15), 0.5, 0.5 + std::sqrt(0.15)};
    const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    for (int el = 0; el < ne; ++el) {
        const double h = x[el + 1] - x[el];
        const int n0 = el - 1, n1 = el;  // interior numbering
        double m00 = 0, m01 = 0, m11 = 0;
        for (int q3 = 0; q3 < 3; ++q3) {
            const double s = gp[q3];
            const Vec2 g = carrier_at(x[el] + s * h, w, params).g;
            const double g2 = (g[0] * g[0] + g[1] * g[1]) / (params.phi * params.phi);
            m00 += gw[q3] * h * g2 * (1 - s) * (1 - s);
            m01 += gw[q3] * h * g2 * (1 - s) * s;
            m11 += gw[q3] * h * g2 * s * s;
        }
        auto add = [&](int r, int c, double kv, double mv) {
            if (r < 0 || c < 0 || r >= ni || c >= ni) return;
            K(r, c) += kv;
            M(r, c) += mv;
        };
        add(n0, n0, 1.0 / h, m00);
        add(n1, n1, 1.0 / h, m11);
        add(n0, n1, -1.0 / h, m01);
        add(n1, n0, -1.0 / h, m01);
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(M, K, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenFailure("slice Hardy eigenproblem failed");
    return es.eigenvalues().maxCoeff();
}

double gradient_fd_error(const CarrierParams& params, const ChannelProfile& profile, Interval window,
                         int samples, std::uint64_t seed) {
    params.check();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(window.lo, window.hi);
    std::uniform_real_distribution<double> uu(0.05, 0.95);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double x1 = ux(rng);
        const WallSample w = profile.eval(x1);
        const double r = std::exp(-uu(rng) / params.epsilon);
        const double B = 0.5 * w.width() / (1.0 + r);
        const double x2 = w.mid() + B;
        const double h = 2e-4 * std::min(B, w.f2 - x2);
        const Mat2 exact = grad_g({x1, x2}, params, profile);
        Mat2 fd{};
        for (int dir = 0; dir < 2; ++dir) {
            auto at = [&](double k) {
                Point p{x1, x2};
                p[dir] += k * h;
                return velocity_g(p, params, profile);
            };
            const Vec2 m2 = at(-2), m1 = at(-1), p1 = at(1), p2 = at(2);
            for (int i = 0; i < 2; ++i) fd[i][dir] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
        }
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                num += (fd[i][j] - exact[i][j]) * (fd[i][j] - exact[i][j]);
                den += exact[i][j] * exact[i][j];
            }
        if (den > 0.0) worst = std::max(worst, std::sqrt(num / den));
    }
    return worst;
}

CarrierReport support_and_bounds_report(const CarrierParams& params, const ChannelProfile& profile,
                                        Interval window, int samples, std::uint64_t seed) {
    params.check();
    CarrierReport rep;
    rep.samples = samples;
    const double eps = params.epsilon;
    const double e = std::exp(-1.0 / eps);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(window.lo, window.hi);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    constexpr double rel = 1e-12;

    for (int s = 0; s < samples; ++s) {
        const double x1 = ux(rng);
        const WallSample w = profile.eval(x1);
        const double f = w.width();
        // r = A/B log-uniform on the support band [e^{-1/ε}, 1]
        const double r = std::exp(-ur(rng) / eps);
        const double B = 0.5 * f / (1.0 + r);
        const double x2 = w.mid() + B;
        const CarrierValue c = carrier_at(x2, w, params);
        const double A = w.f2 - x2;
        std::ostringstream bad;
        if (A > B * (1 + rel) || B > std::exp(1.0 / eps) * A * (1 + rel)) {
            bad << "A <= B <= e^{1/eps} A";
        } else if (B < 0.25 * f * (1 - rel) || B > 0.5 * f / (1.0 + e) * (1 + rel)) {
            bad << "f/4 <= x2 - fbar <= f/(2(1+e^{-1/eps}))";
        } else if (A < e * 0.25 * f * (1 - rel)) {
            bad << "f2 - x2 >= e^{-1/eps} f/4";
        }
        if (!bad.str().empty()) {
            if (rep.violations++ == 0) {
                bad << " at (" << x1 << ", " << x2 << ")";
                rep.first_violation = bad.str();
            }
        }
        const double gn = std::hypot(c.g[0], c.g[1]);
        double gg = 0.0;
        for (const auto& row : c.grad)
            for (double v : row) gg += v * v;
        gg = std::sqrt(gg);
        rep.sup_f_g = std::max(rep.sup_f_g, f * gn);
        rep.sup_f2_grad = std::max(rep.sup_f2_grad, f * f * gg);
        rep.max_div = std::max(rep.max_div, std::abs(c.grad[0][0] + c.grad[1][1]) / (1.0 + gg));
    }
    // points outside the band must carry no velocity
    for (int s = 0; s < samples / 10; ++s) {
        const double x1 = ux(rng);
        const WallSample w = profile.eval(x1);
        const double f = w.width();
        const bool near_wall = s % 2 == 0;
        const double x2 = near_wall ? w.f2 - ur(rng) * e * f / 8.0 : w.f1 + ur(rng) * 0.5 * f;
        const CarrierValue c = carrier_at(x2, w, params);
        if (c.g[0] != 0.0 || c.g[1] != 0.0) {
            if (rep.violations++ == 0) {
                std::ostringstream os;
                os << "g != 0 outside the support band at (" << x1 << ", " << x2 << ")";
                rep.first_violation = os.str();
            }
        }
    }
    if (rep.violations > 0) {
        throw BoundViolation(std::to_string(rep.violations) + " violations; first: " +
                             rep.first_violation);
    }

    // window integrals; the band integral is taken in the σ variable, where it is smooth
    auto slice_energy = [&](double x1) {
        const WallSample w = profile.eval(x1);
        const double f = w.width();
        auto integrand = [&](double sigma) {
            const double r = std::exp((sigma - 1.0) / eps);
            const double x2 = w.mid() + 0.5 * f / (1.0 + r);
            const double dx2 = 0.5 * f * (r / eps) / ((1.0 + r) * (1.0 + r));
            const CarrierValue c = carrier_at(x2, w, params);
            double gg = 0.0;
            for (const auto& row : c.grad)
                for (double v : row) gg += v * v;
            const double g2 = c.g[0] * c.g[0] + c.g[1] * c.g[1];
            return (gg + g2 * g2) * dx2;
        };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 10,
                                                                             1e-10);
    };
    rep.energy_integral = detail::integrate(slice_energy, window.lo, window.hi, profile.breakpoints(), 1e-9);
    rep.weight_integral = weight_integral(profile, window.lo, window.hi, -3.0);
    rep.energy_ratio = rep.weight_integral > 0.0 ? rep.energy_integral / rep.weight_integral : 0.0;

    for (int k = 0; k <= 10; ++k) {
        const double x1 = window.lo + window.length() * k / 10.0;
        rep.flux_error = std::max(rep.flux_error, std::abs(slice_flux(params, profile, x1) - params.phi));
    }
    for (int k = 0; k <= 4; ++k) {
        const double x1 = window.lo + window.length() * k / 4.0;
        rep.hardy_constant = std::max(rep.hardy_constant, slice_hardy_constant(params, profile, x1));
    }
    rep.coercive = params.phi * std::sqrt(rep.hardy_constant) < 0.5;
    return rep;
}

}  // namespace chanflow
