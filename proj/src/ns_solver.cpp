#include "chanflow/ns_solver.hpp"

#include "chanflow/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace chanflow {

std::string to_string(LinearSolverKind kind) {
    return kind == LinearSolverKind::BandedDirect ? "banded_direct" : "krylov_ilu";
}

void SolverConfig::check() const {
    if (!(tol > 0.0)) throw ValidationError("solver tol must be > 0");
    if (!(relax > 0.0 && relax <= 1.0)) throw ValidationError("relax ∈ (0,1]");
    if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// ---------------------------------------------------------------------------
// Stencils in mapped coordinates

/// 9-point coefficients of the physical Laplacian at interior node k,
/// indexed [di + 1][dj + 1].
struct Stencil {
    double c[3][3] = {};
};

Stencil laplacian_stencil(const Grid& g, int i, int j) {
    const int k = g.index(i, j);
    const double f = g.width(i);
    const double ex = g.eta_x[k], exx = g.eta_xx[k];
    const double alpha = ex * ex + 1.0 / (f * f);
    const double cxx = 1.0 / (g.dxi * g.dxi);
    const double cyy = alpha / (g.deta * g.deta);
    const double cxy = ex / (2.0 * g.dxi * g.deta);
    const double cy = exx / (2.0 * g.deta);
    Stencil s;
    s.c[0][1] = cxx;
    s.c[2][1] = cxx;
    s.c[1][0] = cyy - cy;
    s.c[1][2] = cyy + cy;
    s.c[1][1] = -2.0 * cxx - 2.0 * cyy;
    s.c[2][2] = cxy;
    s.c[0][0] = cxy;
    s.c[2][0] = -cxy;
    s.c[0][2] = -cxy;
    return s;
}

/// Coefficients of U ∂ξ + V ∂η at interior node k with contravariant
/// velocity U = u1, V = u1 η_x + u2 / f; hybrid upwinding per direction.
Stencil convection_stencil(const Grid& g, int i, int j, double u1, double u2, bool hybrid) {
    const int k = g.index(i, j);
    const double f = g.width(i);
    const double ex = g.eta_x[k];
    const double alpha = ex * ex + 1.0 / (f * f);
    const double U = u1;
    const double V = u1 * ex + u2 / f;
    Stencil s;
    if (hybrid && std::abs(U) * g.dxi > 2.0) {
        if (U > 0) {
            s.c[1][1] += U / g.dxi;
            s.c[0][1] -= U / g.dxi;
        } else {
            s.c[2][1] += U / g.dxi;
            s.c[1][1] -= U / g.dxi;
        }
    } else {
        s.c[2][1] += U / (2.0 * g.dxi);
        s.c[0][1] -= U / (2.0 * g.dxi);
    }
    if (hybrid && std::abs(V) * g.deta > 2.0 * alpha) {
        if (V > 0) {
            s.c[1][1] += V / g.deta;
            s.c[1][0] -= V / g.deta;
        } else {
            s.c[1][2] += V / g.deta;
            s.c[1][1] -= V / g.deta;
        }
    } else {
        s.c[1][2] += V / (2.0 * g.deta);
        s.c[1][0] -= V / (2.0 * g.deta);
    }
    return s;
}

double apply(const Grid& g, const Stencil& s, const std::vector<double>& v, int i, int j) {
    double r = 0.0;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) r += s.c[di + 1][dj + 1] * v[g.index(i + di, j + dj)];
    return r;
}

double wall_alpha(const Grid& g, int i, int j) {
    const double ex = g.eta_x[g.index(i, j)];
    const double f = g.width(i);
    return ex * ex + 1.0 / (f * f);
}

// ---------------------------------------------------------------------------
// Coupled (ψ, ω) system; ψ_n at 2n, ω_n at 2n + 1.

class Workspace {
public:
    Workspace(const Grid& grid, const CarrierParams& params, const SolverConfig& config)
        : g_(grid), params_(params), config_(config) {
        const int n = g_.size();
        end_psi_.assign(n, 0.0);
        end_omega_.assign(n, 0.0);
        for (int i : {0, g_.nx}) {
            for (int j = 0; j <= g_.ny; ++j) {
                const CarrierValue c = carrier_at(g_.x2(i, j), g_.walls[i], params_);
                end_psi_[g_.index(i, j)] = c.G;
                end_omega_[g_.index(i, j)] = c.vorticity();
            }
        }
        // walls carry ψ exactly 0 and Φ, also at the corners
        for (int i : {0, g_.nx}) {
            end_psi_[g_.index(i, 0)] = 0.0;
            end_psi_[g_.index(i, g_.ny)] = params_.phi;
        }
    }

    /// Solves with convection from (u1, u2); empty vectors mean Stokes.
    Eigen::VectorXd solve(const std::vector<double>& u1, const std::vector<double>& u2) {
        assemble(u1, u2);
        Eigen::VectorXd x;
        if (config_.linear_solver == LinearSolverKind::BandedDirect) {
            if (!analyzed_) {
                lu_.analyzePattern(A_);
                analyzed_ = true;
            }
            lu_.factorize(A_);
            if (lu_.info() != Eigen::Success) {
                throw LinearSolveFailure("sparse LU factorization failed: " + lu_.lastErrorMessage());
            }
            x = lu_.solve(rhs_);
        } else {
            Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it;
            it.preconditioner().setDroptol(1e-6);
            it.preconditioner().setFillfactor(20);
            it.setTolerance(1e-13);
            it.setMaxIterations(5000);
            it.compute(A_);
            x = it.solve(rhs_);
            if (it.info() != Eigen::Success) {
                std::ostringstream os;
                os << "BiCGSTAB/ILUT stopped at relative error " << it.error() << " after "
                   << it.iterations() << " iterations";
                throw LinearSolveFailure(os.str());
            }
        }
        if (!x.allFinite()) throw LinearSolveFailure("non-finite solution of the coupled system");
        return x;
    }

    const std::vector<double>& end_psi() const { return end_psi_; }
    const std::vector<double>& end_omega() const { return end_omega_; }

private:
    void assemble(const std::vector<double>& u1, const std::vector<double>& u2) {
        const int nx = g_.nx, ny = g_.ny;
        const int n = g_.size();
        const bool stokes = u1.empty();
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(n) * 20);
        rhs_ = Eigen::VectorXd::Zero(2 * n);
        auto P = [](int k) { return 2 * k; };
        auto W = [](int k) { return 2 * k + 1; };
        const double h2 = 2.0 * g_.deta * g_.deta;

        for (int i = 0; i <= nx; ++i) {
            for (int j = 0; j <= ny; ++j) {
                const int k = g_.index(i, j);
                if (i == 0 || i == nx) {
                    t.emplace_back(P(k), P(k), 1.0);
                    t.emplace_back(W(k), W(k), 1.0);
                    rhs_[P(k)] = end_psi_[k];
                    rhs_[W(k)] = end_omega_[k];
                    continue;
                }
                if (j == 0 || j == ny) {
                    const int s = j == 0 ? 1 : -1;
                    const int k1 = g_.index(i, j + s), k2 = g_.index(i, j + 2 * s);
                    const double al = wall_alpha(g_, i, j);
                    t.emplace_back(P(k), P(k), 1.0);
                    rhs_[P(k)] = j == 0 ? 0.0 : params_.phi;
                    t.emplace_back(W(k), W(k), 1.0);
                    t.emplace_back(W(k), P(k), -7.0 * al / h2);
                    t.emplace_back(W(k), P(k1), 8.0 * al / h2);
                    t.emplace_back(W(k), P(k2), -1.0 * al / h2);
                    continue;
                }
                const Stencil L = laplacian_stencil(g_, i, j);
                Stencil C;
                if (!stokes) C = convection_stencil(g_, i, j, u1[k], u2[k], config_.hybrid_upwind);
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        const int m = g_.index(i + di, j + dj);
                        const double lc = L.c[di + 1][dj + 1];
                        t.emplace_back(P(k), P(m), lc);
                        t.emplace_back(W(k), W(m), lc - C.c[di + 1][dj + 1]);
                    }
                }
                t.emplace_back(P(k), W(k), 1.0);
            }
        }
        A_.resize(2 * n, 2 * n);
        A_.setFromTriplets(t.begin(), t.end());
    }

    const Grid& g_;
    CarrierParams params_;
    SolverConfig config_;
    std::vector<double> end_psi_, end_omega_;
    SpMat A_;
    Eigen::VectorXd rhs_;
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
    bool analyzed_ = false;
};

void unpack(const Eigen::VectorXd& x, FlowState& s, double relax) {
    const int n = s.grid.size();
    s.psi.resize(n, 0.0);
    s.omega.resize(n, 0.0);
    for (int k = 0; k < n; ++k) {
        s.psi[k] = relax * x[2 * k] + (1.0 - relax) * s.psi[k];
        s.omega[k] = relax * x[2 * k + 1] + (1.0 - relax) * s.omega[k];
    }
}

double step_into(FlowState& s, Workspace& ws, const SolverConfig& config) {
    const Eigen::VectorXd x = ws.solve(s.u1, s.u2);
    unpack(x, s, config.relax);
    update_velocity(s);
    return transport_residual(s, config.hybrid_upwind);
}

// One-sided / central first derivatives of a nodal field in ξ and η.
std::pair<double, double> mapped_derivs(const Grid& g, const std::vector<double>& v, int i, int j) {
    double dx, dy;
    if (i == 0) dx = (-3.0 * v[g.index(0, j)] + 4.0 * v[g.index(1, j)] - v[g.index(2, j)]) / (2.0 * g.dxi);
    else if (i == g.nx)
        dx = (3.0 * v[g.index(i, j)] - 4.0 * v[g.index(i - 1, j)] + v[g.index(i - 2, j)]) / (2.0 * g.dxi);
    else dx = (v[g.index(i + 1, j)] - v[g.index(i - 1, j)]) / (2.0 * g.dxi);
    if (j == 0) dy = (-3.0 * v[g.index(i, 0)] + 4.0 * v[g.index(i, 1)] - v[g.index(i, 2)]) / (2.0 * g.deta);
    else if (j == g.ny)
        dy = (3.0 * v[g.index(i, j)] - 4.0 * v[g.index(i, j - 1)] + v[g.index(i, j - 2)]) / (2.0 * g.deta);
    else dy = (v[g.index(i, j + 1)] - v[g.index(i, j - 1)]) / (2.0 * g.deta);
    return {dx, dy};
}

/// Physical gradient (∂1, ∂2) of a nodal field.
std::vector<std::array<double, 2>> physical_gradient(const Grid& g, const std::vector<double>& v) {
    std::vector<std::array<double, 2>> out(g.size());
    for (int i = 0; i <= g.nx; ++i) {
        const double f = g.width(i);
        for (int j = 0; j <= g.ny; ++j) {
            const int k = g.index(i, j);
            const auto [vx, vy] = mapped_derivs(g, v, i, j);
            out[k] = {vx + g.eta_x[k] * vy, vy / f};
        }
    }
    return out;
}

/// f_i ∫ q dη per column, trapezoidal in η.
std::vector<double> slice_integrals(const Grid& g, const std::vector<double>& q) {
    std::vector<double> s(g.cols(), 0.0);
    for (int i = 0; i <= g.nx; ++i) {
        double acc = 0.0;
        for (int j = 0; j <= g.ny; ++j) {
            const double w = (j == 0 || j == g.ny) ? 0.5 : 1.0;
            acc += w * q[g.index(i, j)];
        }
        s[i] = acc * g.deta * g.width(i);
    }
    return s;
}

/// ∫_{lo}^{hi} of the piecewise-linear interpolant of column values s, times weight.
double integrate_columns(const Grid& g, const std::vector<double>& s, double lo, double hi,
                         const SliceWeight* weight) {
    lo = std::max(lo, g.a);
    hi = std::min(hi, g.b);
    if (!(hi > lo)) return 0.0;
    auto interp = [&](int i, double x) {
        const double t = (x - g.xi[i]) / (g.xi[i + 1] - g.xi[i]);
        return (1.0 - t) * s[i] + t * s[i + 1];
    };
    const int i0 = std::clamp(static_cast<int>(std::floor((lo - g.a) / g.dxi)), 0, g.nx - 1);
    double total = 0.0;
    for (int i = i0; i < g.nx && g.xi[i] < hi; ++i) {
        const double l = std::max(lo, g.xi[i]);
        const double r = std::min(hi, g.xi[i + 1]);
        if (!(r > l)) continue;
        if (!weight) {
            total += (r - l) * 0.5 * (interp(i, l) + interp(i, r));
            continue;
        }
        std::vector<double> pts{l, r};
        for (double bp : weight->breakpoints)
            if (bp > l && bp < r) pts.push_back(bp);
        std::sort(pts.begin(), pts.end());
        for (std::size_t q = 0; q + 1 < pts.size(); ++q) {
            const double x0 = pts[q], x1 = pts[q + 1], xm = 0.5 * (x0 + x1);
            total += (x1 - x0) / 6.0 *
                     (weight->value(x0) * interp(i, x0) + 4.0 * weight->value(xm) * interp(i, xm) +
                      weight->value(x1) * interp(i, x1));
        }
    }
    return total;
}

std::vector<double> grad_square(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
    const auto ga = physical_gradient(g, a);
    const auto gb = physical_gradient(g, b);
    std::vector<double> q(g.size());
    for (int k = 0; k < g.size(); ++k) {
        q[k] = ga[k][0] * ga[k][0] + ga[k][1] * ga[k][1] + gb[k][0] * gb[k][0] + gb[k][1] * gb[k][1];
    }
    return q;
}

std::pair<std::vector<double>, std::vector<double>> perturbation(const FlowState& s) {
    const Grid& g = s.grid;
    std::vector<double> v1(g.size()), v2(g.size());
    for (int i = 0; i <= g.nx; ++i) {
        for (int j = 0; j <= g.ny; ++j) {
            const int k = g.index(i, j);
            const CarrierValue c = carrier_at(g.x2(i, j), g.walls[i], s.params);
            v1[k] = s.u1[k] - c.g[0];
            v2[k] = s.u2[k] - c.g[1];
        }
    }
    return {v1, v2};
}

FlowState blank_state(const Grid& grid, const CarrierParams& params) {
    FlowState s;
    s.grid = grid;
    s.params = params;
    const int n = grid.size();
    s.psi.assign(n, 0.0);
    s.omega.assign(n, 0.0);
    s.u1.assign(n, 0.0);
    s.u2.assign(n, 0.0);
    return s;
}

FlowState picard_loop(FlowState s, const SolverConfig& config, int& iterations, double& best) {
    Workspace ws(s.grid, s.params, config);
    double r = transport_residual(s, config.hybrid_upwind);
    if (s.residual_history.empty() || s.residual_history.back().iteration != iterations)
        s.residual_history.push_back({iterations, r});
    best = std::min(best, r);
    for (int it = 0; it < config.max_iter && !(r < config.tol); ++it) {
        r = step_into(s, ws, config);
        ++iterations;
        s.residual_history.push_back({iterations, r});
        if (!std::isfinite(r)) throw NonConvergence(best, iterations);
        best = std::min(best, r);
    }
    s.converged = r < config.tol;
    if (!s.converged) throw NonConvergence(best, iterations);
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------

void update_velocity(FlowState& s) {
    const Grid& g = s.grid;
    const int n = g.size();
    s.u1.assign(n, 0.0);
    s.u2.assign(n, 0.0);
    for (int i = 1; i < g.nx; ++i) {
        const double f = g.width(i);
        for (int j = 1; j < g.ny; ++j) {
            const int k = g.index(i, j);
            const double pe = (s.psi[g.index(i, j + 1)] - s.psi[g.index(i, j - 1)]) / (2.0 * g.deta);
            const double px = (s.psi[g.index(i + 1, j)] - s.psi[g.index(i - 1, j)]) / (2.0 * g.dxi);
            s.u1[k] = pe / f;
            s.u2[k] = -(px + g.eta_x[k] * pe);
        }
    }
    for (int i : {0, g.nx}) {
        for (int j = 1; j < g.ny; ++j) {
            const CarrierValue c = carrier_at(g.x2(i, j), g.walls[i], s.params);
            s.u1[g.index(i, j)] = c.g[0];
            s.u2[g.index(i, j)] = c.g[1];
        }
    }
}

double transport_residual(const FlowState& s, bool hybrid) {
    const Grid& g = s.grid;
    double defect = 0.0, lap = 0.0, conv = 0.0, om = 0.0;
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 1; j < g.ny; ++j) {
            const int k = g.index(i, j);
            const double l = apply(g, laplacian_stencil(g, i, j), s.omega, i, j);
            const double c = apply(g, convection_stencil(g, i, j, s.u1[k], s.u2[k], hybrid), s.omega, i, j);
            defect = std::max(defect, std::abs(l - c));
            lap = std::max(lap, std::abs(l));
            conv = std::max(conv, std::abs(c));
            om = std::max(om, std::abs(s.omega[k]));
        }
    }
    const double scale = std::max({lap, conv, om});
    return scale > 0.0 ? defect / scale : 0.0;
}

FlowState solve_stokes(const Grid& grid, const CarrierParams& params, const ChannelProfile&,
                       const SolverConfig& config) {
    params.check();
    config.check();
    FlowState s = blank_state(grid, params);
    Workspace ws(s.grid, params, config);
    const Eigen::VectorXd x = ws.solve({}, {});
    unpack(x, s, 1.0);
    update_velocity(s);
    s.residual_history.push_back({0, transport_residual(s, config.hybrid_upwind)});
    s.converged = true;
    return s;
}

std::pair<FlowState, double> picard_step(const FlowState& state, const CarrierParams& params,
                                         const ChannelProfile&, const SolverConfig& config) {
    params.check();
    config.check();
    FlowState s = state;
    s.params = params;
    Workspace ws(s.grid, params, config);
    const double r = step_into(s, ws, config);
    const int it = s.residual_history.empty() ? 1 : s.residual_history.back().iteration + 1;
    s.residual_history.push_back({it, r});
    s.converged = r < config.tol;
    return {std::move(s), r};
}

FlowState solve_from(FlowState initial, const SolverConfig& config) {
    config.check();
    int iterations = initial.residual_history.empty() ? 0 : initial.residual_history.back().iteration;
    double best = std::numeric_limits<double>::infinity();
    initial.converged = false;
    return picard_loop(std::move(initial), config, iterations, best);
}

FlowState solve_steady(const ChannelProfile& profile, const CarrierParams& params, double a, double b,
                       int nx, int ny, const SolverConfig& config) {
    params.check();
    config.check();
    const Grid grid = make_grid(profile, a, b, nx, ny);
    std::vector<double> stages;
    for (double c : config.continuation)
        if (c > 0.0 && c < params.phi) stages.push_back(c);
    std::sort(stages.begin(), stages.end());
    stages.push_back(params.phi);

    int iterations = 0;
    double best = std::numeric_limits<double>::infinity();
    FlowState s;
    double prev_phi = 0.0;
    for (std::size_t q = 0; q < stages.size(); ++q) {
        CarrierParams p = params;
        p.phi = stages[q];
        if (q == 0) {
            s = solve_stokes(grid, p, profile, config);
        } else {
            const double scale = prev_phi > 0.0 ? p.phi / prev_phi : 1.0;
            for (auto* v : {&s.psi, &s.omega, &s.u1, &s.u2})
                for (double& x : *v) x *= scale;
            s.params = p;
        }
        best = std::numeric_limits<double>::infinity();
        s = picard_loop(std::move(s), config, iterations, best);
        prev_phi = p.phi;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Energies and derived quantities

double dirichlet_energy(const FlowState& s, double a_prime, double b_prime) {
    if (b_prime < a_prime) throw std::invalid_argument("dirichlet_energy: a' must not exceed b'");
    const auto q = grad_square(s.grid, s.u1, s.u2);
    return integrate_columns(s.grid, slice_integrals(s.grid, q), a_prime, b_prime, nullptr);
}

double window_integral(const Grid& grid, const std::vector<double>& q, double a_prime, double b_prime) {
    if (b_prime < a_prime) throw std::invalid_argument("window_integral: a' must not exceed b'");
    if (static_cast<int>(q.size()) != grid.size()) throw std::invalid_argument("window_integral: size mismatch");
    return integrate_columns(grid, slice_integrals(grid, q), a_prime, b_prime, nullptr);
}

double perturbation_energy(const FlowState& s, double a_prime, double b_prime) {
    if (b_prime < a_prime) throw std::invalid_argument("perturbation_energy: a' must not exceed b'");
    const auto [v1, v2] = perturbation(s);
    const auto q = grad_square(s.grid, v1, v2);
    return integrate_columns(s.grid, slice_integrals(s.grid, q), a_prime, b_prime, nullptr);
}

double weighted_energy(const FlowState& s, const SliceWeight& weight) {
    const auto [v1, v2] = perturbation(s);
    const auto q = grad_square(s.grid, v1, v2);
    return integrate_columns(s.grid, slice_integrals(s.grid, q), s.grid.a, s.grid.b, &weight);
}

SliceWeight zeta_hat(const KMap& kmap, double t) {
    const HValues v = kmap.at(t);
    const double hp = v.h;
    const double hm = t == 0.0 ? 0.0 : kmap.h(-t);
    const double fp = kmap.profile().width(hp);
    const double fm = kmap.profile().width(hm);
    const double bs = kmap.beta_star();
    SliceWeight w;
    w.value = [=](double x) {
        if (x < hm || x > hp) return 0.0;
        return std::max(0.0, std::min({bs, (hp - x) / fp, (x - hm) / fm}));
    };
    w.breakpoints = {hm, hp, v.h_left, v.h_right, (hp * fm + hm * fp) / (fm + fp)};
    return w;
}

std::vector<std::array<double, 4>> velocity_gradient(const FlowState& s) {
    const auto g1 = physical_gradient(s.grid, s.u1);
    const auto g2 = physical_gradient(s.grid, s.u2);
    std::vector<std::array<double, 4>> out(s.grid.size());
    for (int k = 0; k < s.grid.size(); ++k) out[k] = {g1[k][0], g1[k][1], g2[k][0], g2[k][1]};
    return out;
}

std::vector<double> slice_fluxes(const FlowState& s) {
    // midpoint rule with face velocities u1 = (ψ_{j+1} − ψ_j) / (f Δη)
    const Grid& g = s.grid;
    std::vector<double> out(g.cols(), 0.0);
    for (int i = 0; i <= g.nx; ++i) {
        double acc = 0.0;
        for (int j = 0; j < g.ny; ++j) acc += s.psi[g.index(i, j + 1)] - s.psi[g.index(i, j)];
        out[i] = acc;
    }
    return out;
}

std::vector<double> nodal_slice_fluxes(const FlowState& s) { return slice_integrals(s.grid, s.u1); }

double max_divergence(const FlowState& s) {
    const Grid& g = s.grid;
    const auto du = velocity_gradient(s);
    double m = 0.0;
    for (int i = 2; i + 2 <= g.nx; ++i)
        for (int j = 1; j < g.ny; ++j) {
            const auto& d = du[g.index(i, j)];
            m = std::max(m, std::abs(d[0] + d[3]));
        }
    return m;
}

namespace {

/// Δu − u·∇u per node, with Δu = (−∂2ω, ∂1ω).
std::vector<std::array<double, 2>> momentum_forcing(const FlowState& s) {
    const auto du = velocity_gradient(s);
    const auto dw = physical_gradient(s.grid, s.omega);
    std::vector<std::array<double, 2>> F(s.grid.size());
    for (std::size_t k = 0; k < F.size(); ++k) {
        F[k] = {-dw[k][1] - (s.u1[k] * du[k][0] + s.u2[k] * du[k][1]),
                dw[k][0] - (s.u1[k] * du[k][2] + s.u2[k] * du[k][3])};
    }
    return F;
}

}  // namespace

double carrier_energy(const Grid& g, const CarrierParams& params) {
    std::vector<double> q(g.size());
    for (int i = 0; i <= g.nx; ++i)
        for (int j = 0; j <= g.ny; ++j) {
            const CarrierValue c = carrier_at(g.x2(i, j), g.walls[i], params);
            double grad2 = 0.0;
            for (const auto& row : c.grad)
                for (double v : row) grad2 += v * v;
            const double g2 = c.g[0] * c.g[0] + c.g[1] * c.g[1];
            q[g.index(i, j)] = grad2 + g2 * g2;
        }
    return window_integral(g, q, g.a, g.b);
}

double energy_inequality_ratio(const FlowState& s) {
    const double rhs = carrier_energy(s.grid, s.params);
    if (rhs == 0.0) return 0.0;
    return perturbation_energy(s, s.grid.a, s.grid.b) / rhs;
}

double momentum_residual(const FlowState& s, const std::vector<double>& p, double a_prime, double b_prime) {
    const Grid& g = s.grid;
    const auto F = momentum_forcing(s);
    const auto dp = physical_gradient(g, p);
    double worst = 0.0, scale = 0.0;
    for (int i = 2; i + 2 <= g.nx; ++i) {
        if (g.xi[i] < a_prime || g.xi[i] > b_prime) continue;
        for (int j = 1; j < g.ny; ++j) {
            const int k = g.index(i, j);
            worst = std::max(worst, std::hypot(dp[k][0] - F[k][0], dp[k][1] - F[k][1]));
            scale = std::max(scale, std::hypot(F[k][0], F[k][1]));
        }
    }
    return scale > 0.0 ? worst / scale : 0.0;
}

std::vector<double> pressure_recover(const FlowState& s) {
    const Grid& g = s.grid;
    const int n = g.size();
    const auto F = momentum_forcing(s);
    // unknowns: nodes 1..n-1 (node 0 pinned to zero)
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n) * 14);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
    auto add_triangle = [&](int a, int b, int c) {
        const int ids[3] = {a, b, c};
        double x[3], y[3];
        for (int q = 0; q < 3; ++q) {
            const int i = ids[q] / (g.ny + 1), j = ids[q] % (g.ny + 1);
            x[q] = g.x1(i);
            y[q] = g.x2(i, j);
        }
        const double det = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]);
        const double area = 0.5 * std::abs(det);
        if (area <= 0.0) return;
        // ∇φ_q = (y_{q+1} − y_{q+2}, x_{q+2} − x_{q+1}) / det
        double gx[3], gy[3];
        for (int q = 0; q < 3; ++q) {
            gx[q] = (y[(q + 1) % 3] - y[(q + 2) % 3]) / det;
            gy[q] = (x[(q + 2) % 3] - x[(q + 1) % 3]) / det;
        }
        const double fx = (F[a][0] + F[b][0] + F[c][0]) / 3.0;
        const double fy = (F[a][1] + F[b][1] + F[c][1]) / 3.0;
        for (int p = 0; p < 3; ++p) {
            if (ids[p] == 0) continue;
            rhs[ids[p] - 1] += area * (fx * gx[p] + fy * gy[p]);
            for (int q = 0; q < 3; ++q) {
                if (ids[q] == 0) continue;
                t.emplace_back(ids[p] - 1, ids[q] - 1, area * (gx[p] * gx[q] + gy[p] * gy[q]));
            }
        }
    };
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const int k00 = g.index(i, j), k10 = g.index(i + 1, j);
            const int k11 = g.index(i + 1, j + 1), k01 = g.index(i, j + 1);
            add_triangle(k00, k10, k11);
            add_triangle(k00, k11, k01);
        }
    }
    SpMat K(n - 1, n - 1);
    K.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw LinearSolveFailure("pressure LDLT factorization failed");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !x.allFinite()) throw LinearSolveFailure("pressure solve failed");
    std::vector<double> p(n, 0.0);
    for (int k = 1; k < n; ++k) p[k] = x[k - 1];
    double area = 0.0, mean = 0.0;
    for (int k = 0; k < n; ++k) {
        area += g.weight[k];
        mean += g.weight[k] * p[k];
    }
    mean /= area;
    for (double& v : p) v -= mean;
    return p;
}

}  // namespace chanflow
