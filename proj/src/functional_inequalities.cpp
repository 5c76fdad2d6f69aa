#include "chanflow/functional_inequalities.hpp"

#include "chanflow/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

namespace chanflow {

std::string to_string(ConstantName n) {
    switch (n) {
    case ConstantName::M0: return "M0";
    case ConstantName::M1: return "M1";
    case ConstantName::M4: return "M4";
    case ConstantName::M5: return "M5";
    }
    return "?";
}

std::string to_string(EstimateMethod m) {
    switch (m) {
    case EstimateMethod::Eigen: return "eigen";
    case EstimateMethod::RayleighAscent: return "rayleigh_ascent";
    case EstimateMethod::InfSup: return "inf_sup";
    case EstimateMethod::Decomposition: return "decomposition";
    }
    return "?";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

std::string domain_label(const ChannelProfile& p, double a, double b) {
    std::ostringstream os;
    os << p.id() << "[" << a << "," << b << "]";
    return os.str();
}

// ---------------------------------------------------------------------------
// Physical triangulation of a grid: each cell split along (i,j)-(i+1,j+1).

struct Triangle {
    int v[3];
    double x[3], y[3];
    double det;  // twice the signed area
    double area() const { return 0.5 * std::abs(det); }
    // gradient of barycentric λ_q
    double gx(int q) const { return (y[(q + 1) % 3] - y[(q + 2) % 3]) / det; }
    double gy(int q) const { return (x[(q + 2) % 3] - x[(q + 1) % 3]) / det; }
};

std::vector<Triangle> triangulate(const Grid& g) {
    std::vector<Triangle> tris;
    tris.reserve(2 * g.nx * g.ny);
    auto make = [&](int a, int b, int c) {
        Triangle t;
        const int ids[3] = {a, b, c};
        for (int q = 0; q < 3; ++q) {
            t.v[q] = ids[q];
            const int i = ids[q] / (g.ny + 1), j = ids[q] % (g.ny + 1);
            t.x[q] = g.x1(i);
            t.y[q] = g.x2(i, j);
        }
        t.det = (t.x[1] - t.x[0]) * (t.y[2] - t.y[0]) - (t.x[2] - t.x[0]) * (t.y[1] - t.y[0]);
        tris.push_back(t);
    };
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            make(g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1));
            make(g.index(i, j), g.index(i + 1, j + 1), g.index(i, j + 1));
        }
    return tris;
}

/// P1 stiffness and consistent mass on the full node set.
void assemble_p1(const std::vector<Triangle>& tris, int n, SpMat& K, SpMat& M) {
    std::vector<Triplet> tk, tm;
    tk.reserve(tris.size() * 9);
    tm.reserve(tris.size() * 9);
    for (const auto& t : tris) {
        const double A = t.area();
        for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) {
                tk.emplace_back(t.v[p], t.v[q], A * (t.gx(p) * t.gx(q) + t.gy(p) * t.gy(q)));
                tm.emplace_back(t.v[p], t.v[q], A * (p == q ? 2.0 : 1.0) / 12.0);
            }
    }
    K.resize(n, n);
    M.resize(n, n);
    K.setFromTriplets(tk.begin(), tk.end());
    M.setFromTriplets(tm.begin(), tm.end());
}

/// Restriction to free dofs: returns the map full -> reduced (−1 for fixed).
std::vector<int> free_map(const Grid& g, bool ends_fixed, int& nfree) {
    std::vector<int> map(g.size(), -1);
    nfree = 0;
    for (int i = 0; i <= g.nx; ++i)
        for (int j = 0; j <= g.ny; ++j) {
            const bool fixed = j == 0 || j == g.ny || (ends_fixed && (i == 0 || i == g.nx));
            if (!fixed) map[g.index(i, j)] = nfree++;
        }
    return map;
}

SpMat restrict_matrix(const SpMat& A, const std::vector<int>& map, int nfree) {
    std::vector<Triplet> t;
    for (int c = 0; c < A.outerSize(); ++c)
        for (SpMat::InnerIterator it(A, c); it; ++it) {
            const int r = map[it.row()], cc = map[it.col()];
            if (r >= 0 && cc >= 0) t.emplace_back(r, cc, it.value());
        }
    SpMat R(nfree, nfree);
    R.setFromTriplets(t.begin(), t.end());
    return R;
}

double sup_width(const ChannelProfile& p, double a, double b) {
    double m = 0.0;
    for (int k = 0; k <= 2000; ++k) m = std::max(m, p.width(a + (b - a) * k / 2000.0));
    return m;
}

double m1_value(const ChannelProfile& profile, double a, double b, Resolution res, EndCondition ends) {
    const Grid g = make_grid(profile, a, b, res.nx, res.ny);
    const auto tris = triangulate(g);
    SpMat K, M;
    assemble_p1(tris, g.size(), K, M);
    int nfree = 0;
    const auto map = free_map(g, ends == EndCondition::Dirichlet, nfree);
    const SpMat Kr = restrict_matrix(K, map, nfree);
    const SpMat Mr = restrict_matrix(M, map, nfree);
    Eigen::SimplicialLDLT<SpMat> ldlt(Kr);
    if (ldlt.info() != Eigen::Success) throw EigenFailure("M1: stiffness factorization failed");

    Eigen::VectorXd x(nfree);
    for (int i = 0; i <= g.nx; ++i)
        for (int j = 0; j <= g.ny; ++j) {
            const int r = map[g.index(i, j)];
            if (r < 0) continue;
            double v = std::sin(std::numbers::pi * g.eta[j]);
            if (ends == EndCondition::Dirichlet) v *= std::sin(std::numbers::pi * (g.xi[i] - a) / (b - a));
            x[r] = v;
        }
    double lambda = 0.0, prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXd y = ldlt.solve(Mr * x);
        const double num = y.dot(Kr * y), den = y.dot(Mr * y);
        lambda = num / den;
        x = y / std::sqrt(den);
        if (std::abs(lambda - prev) <= 1e-8 * lambda) return 1.0 / std::sqrt(lambda);
        prev = lambda;
    }
    throw EigenFailure("M1: inverse iteration did not reach 1e-8 in 500 steps");
}

}  // namespace

ConstantEstimate poincare_m1(const ChannelProfile& profile, double a, double b, Resolution res,
                             EndCondition ends, bool self_check) {
    ConstantEstimate e;
    e.name = ConstantName::M1;
    e.method = EstimateMethod::Eigen;
    e.domain = domain_label(profile, a, b);
    e.resolution = res;
    e.value = m1_value(profile, a, b, res, ends);
    e.self_consistency = std::numeric_limits<double>::quiet_NaN();
    if (self_check) {
        const double coarse = m1_value(profile, a, b, {std::max(8, res.nx / 2), std::max(8, res.ny / 2)}, ends);
        e.self_consistency = std::abs(e.value - coarse) / e.value;
        e.consistent = e.self_consistency < 0.05;
    }
    e.scaling_constant = e.value / sup_width(profile, a, b);
    e.note = ends == EndCondition::Natural ? "walls dirichlet, ends natural" : "all dirichlet (diagnostic)";
    return e;
}

ConstantEstimate poincare_m0(const ChannelProfile& profile, double a, double b, Resolution res) {
    if (res.ny < 8 || res.nx < 1) throw DegenerateGrid("M0 needs at least 8 elements per slice");
    ConstantEstimate e;
    e.name = ConstantName::M0;
    e.method = EstimateMethod::Eigen;
    e.domain = domain_label(profile, a, b);
    e.resolution = res;
    const int n = res.ny - 1;
    double best = 0.0, best_coarse = 0.0;
    for (int s = 0; s <= res.nx; ++s) {
        const double x1 = res.nx == 0 ? a : a + (b - a) * s / res.nx;
        const double f = profile.width(x1);
        auto slice = [&](int elems) {
            // lumped mass: symmetric tridiagonal D^{-1/2} K D^{-1/2}, D = h I
            const double h = f / elems;
            const int m = elems - 1;
            Eigen::VectorXd diag = Eigen::VectorXd::Constant(m, 2.0 / (h * h));
            Eigen::VectorXd sub = Eigen::VectorXd::Constant(std::max(m - 1, 0), -1.0 / (h * h));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
            if (es.info() != Eigen::Success) throw EigenFailure("M0: slice eigenproblem failed");
            const double mu = es.eigenvalues().minCoeff();
            return 1.0 / (f * std::sqrt(mu));
        };
        best = std::max(best, slice(n + 1));
        best_coarse = std::max(best_coarse, slice((n + 1) / 2));
    }
    e.value = best;
    e.self_consistency = std::abs(best - best_coarse) / best;
    e.consistent = e.self_consistency < 0.05;
    e.scaling_constant = std::numeric_limits<double>::quiet_NaN();
    e.note = "sup over " + std::to_string(res.nx + 1) + " slices";
    return e;
}

// ---------------------------------------------------------------------------
// L4 embedding

namespace {

struct AscentResult {
    double ratio = 0.0;
    int improved_starts = 0;
};

AscentResult m4_ascent(const ChannelProfile& profile, double a, double b, Resolution res,
                       std::uint64_t seed, int starts) {
    const Grid g = make_grid(profile, a, b, res.nx, res.ny);
    const auto tris = triangulate(g);
    SpMat K, M;
    assemble_p1(tris, g.size(), K, M);
    int nfree = 0;
    const auto map = free_map(g, false, nfree);
    const SpMat Kr = restrict_matrix(K, map, nfree);
    // lumped mass for the quartic term
    Eigen::VectorXd m = Eigen::VectorXd::Zero(nfree);
    {
        const Eigen::VectorXd lumped = M * Eigen::VectorXd::Ones(g.size());
        for (int k = 0; k < g.size(); ++k)
            if (map[k] >= 0) m[map[k]] = lumped[k];
    }
    Eigen::SimplicialLDLT<SpMat> ldlt(Kr);
    if (ldlt.info() != Eigen::Success) throw AscentStagnation("M4: stiffness factorization failed");

    auto ratio = [&](const Eigen::VectorXd& w) {
        const double q = (m.array() * w.array().pow(4)).sum();
        return std::pow(q, 0.25) / std::sqrt(w.dot(Kr * w));
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    AscentResult out;
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd w(nfree);
        for (int k = 0; k < nfree; ++k) w[k] = u(rng);
        // smooth the random start once so the ascent begins from an H1 field
        w = ldlt.solve(m.asDiagonal() * w);
        w /= std::sqrt(w.dot(Kr * w));
        const double r0 = ratio(w);
        double r = r0;
        for (int it = 0; it < 2000; ++it) {
            Eigen::VectorXd y = ldlt.solve((m.array() * w.array().cube()).matrix());
            y /= std::sqrt(y.dot(Kr * y));
            const double rn = ratio(y);
            w = y;
            const bool done = std::abs(rn - r) <= 1e-10 * rn;
            r = rn;
            if (done) break;
        }
        if (r > r0) ++out.improved_starts;
        out.ratio = std::max(out.ratio, r);
    }
    return out;
}

}  // namespace

ConstantEstimate sobolev_m4(const ChannelProfile& profile, double a, double b, Resolution res,
                            std::uint64_t seed, int starts) {
    ConstantEstimate e;
    e.name = ConstantName::M4;
    e.method = EstimateMethod::RayleighAscent;
    e.domain = domain_label(profile, a, b);
    e.resolution = res;
    const AscentResult fine = m4_ascent(profile, a, b, res, seed, starts);
    if (fine.improved_starts == 0 || !(fine.ratio > 0.0)) {
        std::ostringstream os;
        os << "no start improved; best ratio " << fine.ratio;
        throw AscentStagnation(os.str());
    }
    e.value = fine.ratio;
    const AscentResult coarse = m4_ascent(profile, a, b, {std::max(8, res.nx / 2), std::max(8, res.ny / 2)},
                                          seed, std::max(4, starts / 4));
    e.self_consistency = std::abs(fine.ratio - coarse.ratio) / fine.ratio;
    e.consistent = e.self_consistency < 0.05;
    const double area = weight_integral(profile, a, b, 1.0);
    const double m1 = sup_width(profile, a, b) / std::numbers::pi;
    const double scale = std::sqrt(m1 / (b - a) + 1.0) * std::pow(area, 0.25);
    e.scaling_constant = e.value / scale;
    e.note = "lower bound; best of " + std::to_string(starts) + " starts";
    return e;
}

// ---------------------------------------------------------------------------
// Divergence problem

double union_area(const std::vector<Rect>& rects) {
    std::vector<double> xs, ys;
    for (const auto& r : rects) {
        if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) continue;
        xs.push_back(r.x0);
        xs.push_back(r.x1);
        ys.push_back(r.y0);
        ys.push_back(r.y1);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double cx = 0.5 * (xs[i] + xs[i + 1]), cy = 0.5 * (ys[j] + ys[j + 1]);
            for (const auto& r : rects) {
                if (cx > r.x0 && cx < r.x1 && cy > r.y0 && cy < r.y1) {
                    area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
                    break;
                }
            }
        }
    return area;
}

DecompositionBound decomposition_m5_bound(const std::vector<Rect>& d) {
    if (d.empty()) throw std::invalid_argument("decomposition_m5_bound: empty decomposition");
    const std::size_t N = d.size();
    DecompositionBound out;
    out.single_piece = N == 1;
    auto intersect = [](const Rect& p, const Rect& q) {
        return Rect{std::max(p.x0, q.x0), std::min(p.x1, q.x1), std::max(p.y0, q.y0), std::min(p.y1, q.y1)};
    };
    double prod = 1.0;
    double cd = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        if (k + 1 == N) {
            cd = std::max(cd, 2.0 * prod);
            break;
        }
        const std::vector<Rect> hat(d.begin() + static_cast<long>(k) + 1, d.end());
        std::vector<Rect> tilde;
        for (const auto& r : hat) tilde.push_back(intersect(d[k], r));
        const double a_tilde = union_area(tilde);
        const double a_hat = union_area(hat);
        if (!(a_tilde > 0.0)) {
            out.c_d = std::numeric_limits<double>::infinity();
            out.bound = out.c_d;
            return out;
        }
        cd = std::max(cd, (1.0 + std::sqrt(d[k].area() / a_tilde)) * prod);
        prod *= 1.0 + std::sqrt((a_hat - a_tilde) / a_tilde);
    }
    out.c_d = cd;
    // diameter: largest corner-to-corner distance
    double r0 = 0.0, r = std::numeric_limits<double>::infinity();
    for (const auto& p : d) {
        r = std::min(r, 0.5 * std::min(p.x1 - p.x0, p.y1 - p.y0));
        for (const auto& q : d)
            for (double xa : {p.x0, p.x1})
                for (double ya : {p.y0, p.y1})
                    for (double xb : {q.x0, q.x1})
                        for (double yb : {q.y0, q.y1}) r0 = std::max(r0, std::hypot(xa - xb, ya - yb));
    }
    out.r0 = r0;
    out.r = r;
    const double q = r0 / r;
    out.bound = cd * q * q * (1.0 + q);
    return out;
}

namespace {

/// Taylor–Hood P2–P1 saddle system with factorization reused across right-hand sides.
class TaylorHood {
public:
    explicit TaylorHood(const Grid& g) : g_(g), tris_(triangulate(g)) {
        nv_ = g.size();
        // edge dofs
        std::unordered_map<long long, int> edge_id;
        auto key = [&](int p, int q) { return static_cast<long long>(std::min(p, q)) * nv_ + std::max(p, q); };
        edges_.reserve(tris_.size() * 3);
        for (auto& t : tris_) {
            std::array<int, 3> e{};
            for (int q = 0; q < 3; ++q) {
                const int p0 = t.v[(q + 1) % 3], p1 = t.v[(q + 2) % 3];  // edge opposite vertex q
                auto [it, inserted] = edge_id.emplace(key(p0, p1), nv_ + static_cast<int>(edges_.size()));
                if (inserted) edges_.push_back({p0, p1});
                e[q] = it->second;
            }
            tri_edges_.push_back(e);
        }
        ndof_ = nv_ + static_cast<int>(edges_.size());

        // boundary velocity dofs
        auto side = [&](int v, int which) {
            const int i = v / (g.ny + 1), j = v % (g.ny + 1);
            switch (which) {
            case 0: return i == 0;
            case 1: return i == g.nx;
            case 2: return j == 0;
            default: return j == g.ny;
            }
        };
        std::vector<char> bnd(ndof_, 0);
        for (int v = 0; v < nv_; ++v)
            for (int s = 0; s < 4; ++s) bnd[v] |= side(v, s);
        for (std::size_t e = 0; e < edges_.size(); ++e)
            for (int s = 0; s < 4; ++s) bnd[nv_ + e] |= side(edges_[e][0], s) && side(edges_[e][1], s);
        vmap_.assign(ndof_, -1);
        nfree_ = 0;
        for (int d = 0; d < ndof_; ++d)
            if (!bnd[d]) vmap_[d] = nfree_++;

        assemble();
    }

    /// Solves for nodal P1 w with zero mean; returns ‖∇a‖², λ (P1, full length) and a.
    void solve(const Eigen::VectorXd& w, double& grad2, Eigen::VectorXd& lambda, Eigen::VectorXd& a) const {
        const int nu = 2 * nfree_, np = nv_ - 1;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu + np);
        const Eigen::VectorXd mw = Mp_ * w;
        rhs.tail(np) = mw.tail(np);
        const Eigen::VectorXd x = lu_.solve(rhs);
        if (lu_.info() != Eigen::Success || !x.allFinite()) throw SaddleSolveFailure("saddle solve failed");
        a = x.head(nu);
        grad2 = a.dot(K2_ * a);
        lambda = Eigen::VectorXd::Zero(nv_);
        lambda.tail(np) = x.tail(np);
    }

    double mass_norm2(const Eigen::VectorXd& w) const { return w.dot(Mp_ * w); }
    double mean_integral(const Eigen::VectorXd& w) const { return ones_mass_.dot(w); }
    double area() const { return ones_mass_.sum(); }
    Eigen::VectorXd project_mean_zero(const Eigen::VectorXd& w) const {
        return w - Eigen::VectorXd::Constant(w.size(), mean_integral(w) / area());
    }
    int free_velocity() const { return nfree_; }
    const std::vector<int>& vmap() const { return vmap_; }
    int ndof() const { return ndof_; }

private:
    void assemble() {
        // barycentric coordinates of the edge midpoints (opposite vertex q has λ_q = 0)
        static const double mid[3][3] = {{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}};
        std::vector<Triplet> tk, tb, tm;
        for (std::size_t ti = 0; ti < tris_.size(); ++ti) {
            const Triangle& t = tris_[ti];
            const double A = t.area();
            int dof[6];
            for (int q = 0; q < 3; ++q) {
                dof[q] = t.v[q];
                dof[3 + q] = tri_edges_[ti][q];
            }
            for (int qp = 0; qp < 3; ++qp) {
                const double* L = mid[qp];
                const double w = A / 3.0;
                // P2 gradients at this point
                double gx[6], gy[6];
                for (int q = 0; q < 3; ++q) {
                    gx[q] = (4.0 * L[q] - 1.0) * t.gx(q);
                    gy[q] = (4.0 * L[q] - 1.0) * t.gy(q);
                    const int r = (q + 1) % 3, s = (q + 2) % 3;  // edge opposite q joins r and s
                    gx[3 + q] = 4.0 * (L[s] * t.gx(r) + L[r] * t.gx(s));
                    gy[3 + q] = 4.0 * (L[s] * t.gy(r) + L[r] * t.gy(s));
                }
                for (int p = 0; p < 6; ++p) {
                    for (int q = 0; q < 6; ++q) {
                        tk.emplace_back(dof[p], dof[q], w * (gx[p] * gx[q] + gy[p] * gy[q]));
                    }
                    // B(q_r, component c of dof p) = ∫ λ_r ∂_c φ_p
                    for (int r = 0; r < 3; ++r) {
                        tb.emplace_back(t.v[r], 2 * dof[p], w * L[r] * gx[p]);
                        tb.emplace_back(t.v[r], 2 * dof[p] + 1, w * L[r] * gy[p]);
                    }
                }
                for (int r = 0; r < 3; ++r)
                    for (int s = 0; s < 3; ++s) tm.emplace_back(t.v[r], t.v[s], w * L[r] * L[s]);
            }
        }
        SpMat Ks(ndof_, ndof_), B(nv_, 2 * ndof_);
        Ks.setFromTriplets(tk.begin(), tk.end());
        B.setFromTriplets(tb.begin(), tb.end());
        Mp_.resize(nv_, nv_);
        Mp_.setFromTriplets(tm.begin(), tm.end());
        ones_mass_ = Mp_ * Eigen::VectorXd::Ones(nv_);

        const int nu = 2 * nfree_, np = nv_ - 1;
        std::vector<Triplet> ts, tk2;
        for (int c = 0; c < Ks.outerSize(); ++c)
            for (SpMat::InnerIterator it(Ks, c); it; ++it) {
                const int r = vmap_[it.row()], cc = vmap_[it.col()];
                if (r < 0 || cc < 0) continue;
                for (int comp = 0; comp < 2; ++comp) {
                    ts.emplace_back(2 * r + comp, 2 * cc + comp, it.value());
                    tk2.emplace_back(2 * r + comp, 2 * cc + comp, it.value());
                }
            }
        for (int c = 0; c < B.outerSize(); ++c)
            for (SpMat::InnerIterator it(B, c); it; ++it) {
                const int prow = static_cast<int>(it.row());
                if (prow == 0) continue;  // λ_0 pinned
                const int d = static_cast<int>(it.col()) / 2, comp = static_cast<int>(it.col()) % 2;
                const int r = vmap_[d];
                if (r < 0) continue;
                ts.emplace_back(nu + prow - 1, 2 * r + comp, it.value());
                ts.emplace_back(2 * r + comp, nu + prow - 1, it.value());
            }
        SpMat S(nu + np, nu + np);
        S.setFromTriplets(ts.begin(), ts.end());
        K2_.resize(nu, nu);
        K2_.setFromTriplets(tk2.begin(), tk2.end());
        lu_.analyzePattern(S);
        lu_.factorize(S);
        if (lu_.info() != Eigen::Success) throw SaddleSolveFailure("saddle factorization failed: " + lu_.lastErrorMessage());
    }

    const Grid& g_;
    std::vector<Triangle> tris_;
    int nv_ = 0, ndof_ = 0, nfree_ = 0;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 3>> tri_edges_;
    std::vector<int> vmap_;
    SpMat Mp_, K2_;
    Eigen::VectorXd ones_mass_;
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

void require_mean_zero(const TaylorHood& th, const Eigen::VectorXd& w) {
    const double mean = th.mean_integral(w);
    const double scale = std::sqrt(th.mass_norm2(w) * th.area());
    if (std::abs(mean) > 1e-10 * std::max(scale, 1e-300)) {
        std::ostringstream os;
        os << "∫w = " << mean << " (relative " << mean / scale << ")";
        throw NonZeroMean(os.str());
    }
}

double bogovskii_estimate(const Grid& g, int probes, std::uint64_t seed, int power_iterations) {
    TaylorHood th(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double best = 0.0;
    Eigen::VectorXd w_best;
    auto ratio_of = [&](const Eigen::VectorXd& w, Eigen::VectorXd& lambda) {
        double grad2;
        Eigen::VectorXd a;
        th.solve(w, grad2, lambda, a);
        return std::sqrt(grad2 / th.mass_norm2(w));
    };
    std::vector<Eigen::VectorXd> starts;
    {
        const auto sp = sign_probe(g);
        starts.push_back(th.project_mean_zero(Eigen::Map<const Eigen::VectorXd>(sp.data(), static_cast<long>(sp.size()))));
    }
    for (int p = 0; p < probes; ++p) {
        Eigen::VectorXd w(g.size());
        for (int k = 0; k < g.size(); ++k) w[k] = u(rng);
        starts.push_back(th.project_mean_zero(w));
    }
    Eigen::VectorXd lambda;
    for (const auto& w : starts) {
        const double r = ratio_of(w, lambda);
        if (r > best) {
            best = r;
            w_best = w;
        }
    }
    // power iteration on w ↦ −λ(w)
    Eigen::VectorXd w = w_best;
    double prev = best;
    for (int it = 0; it < power_iterations; ++it) {
        ratio_of(w, lambda);
        w = th.project_mean_zero(-lambda);
        w /= std::sqrt(th.mass_norm2(w));
        const double r = ratio_of(w, lambda);
        best = std::max(best, r);
        if (std::abs(r - prev) <= 1e-9 * r) break;
        prev = r;
    }
    return best;
}

}  // namespace

std::vector<double> sign_probe(const Grid& g) {
    std::vector<double> w(g.size());
    const double mid = 0.5 * (g.a + g.b);
    for (int i = 0; i <= g.nx; ++i)
        for (int j = 0; j <= g.ny; ++j) w[g.index(i, j)] = g.xi[i] < mid ? 1.0 : (g.xi[i] > mid ? -1.0 : 0.0);
    return w;
}

BogovskiiSolution bogovskii_solve(const Grid& grid, const std::vector<double>& wv) {
    TaylorHood th(grid);
    const Eigen::Map<const Eigen::VectorXd> w(wv.data(), static_cast<long>(wv.size()));
    require_mean_zero(th, w);
    BogovskiiSolution out;
    out.w_norm = std::sqrt(th.mass_norm2(w));
    out.a1.assign(th.ndof(), 0.0);
    out.a2.assign(th.ndof(), 0.0);
    if (out.w_norm == 0.0) return out;
    double grad2;
    Eigen::VectorXd lambda, a;
    th.solve(w, grad2, lambda, a);
    out.grad_norm = std::sqrt(grad2);
    for (int d = 0; d < th.ndof(); ++d) {
        const int r = th.vmap()[d];
        if (r < 0) continue;
        out.a1[d] = a[2 * r];
        out.a2[d] = a[2 * r + 1];
    }
    return out;
}

ConstantEstimate bogovskii_m5(const Grid& grid, int probes, std::uint64_t seed, int power_iterations) {
    ConstantEstimate e;
    e.name = ConstantName::M5;
    e.method = EstimateMethod::InfSup;
    e.domain = domain_label(grid.profile(), grid.a, grid.b);
    e.resolution = {grid.nx, grid.ny};
    e.value = bogovskii_estimate(grid, probes, seed, power_iterations);
    const Grid coarse = make_grid(grid.profile(), grid.a, grid.b, std::max(8, grid.nx / 2), std::max(8, grid.ny / 2));
    const double vc = bogovskii_estimate(coarse, probes, seed, power_iterations);
    e.self_consistency = std::abs(e.value - vc) / e.value;
    e.consistent = e.self_consistency < 0.05;
    e.scaling_constant = std::numeric_limits<double>::quiet_NaN();
    e.note = "taylor-hood p2-p1; " + std::to_string(probes) + " probes + power iteration";
    return e;
}

std::string csv_header_constants() {
    return "name,value,method,domain,nx,ny,self_consistency,scaling_constant,note";
}

std::string csv_row(const ConstantEstimate& e) {
    std::ostringstream os;
    os << std::setprecision(10) << to_string(e.name) << ',' << e.value << ',' << to_string(e.method) << ",\""
       << e.domain << "\"," << e.resolution.nx << ',' << e.resolution.ny << ',' << e.self_consistency << ','
       << e.scaling_constant << ",\"" << e.note << '"';
    return os.str();
}

}  // namespace chanflow
