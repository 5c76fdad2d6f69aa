#pragma once

#include "chanflow/geometry.hpp"
#include "chanflow/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace chanflow {

enum class ConstantName { M0, M1, M4, M5 };
enum class EstimateMethod { Eigen, RayleighAscent, InfSup, Decomposition };
std::string to_string(ConstantName n);
std::string to_string(EstimateMethod m);

struct Resolution {
    int nx = 64;
    int ny = 64;
};

struct ConstantEstimate {
    ConstantName name = ConstantName::M1;
    double value = 0.0;
    std::string domain;          ///< profile id and [a, b]
    EstimateMethod method = EstimateMethod::Eigen;
    Resolution resolution;
    /// Relative change against a half-resolution rerun; NaN when not computed.
    double self_consistency = 0.0;
    bool consistent = true;      ///< self_consistency < 5%
    /// Ratio to the scaling law (M1/‖f‖∞, M4/[(b−a)⁻¹M1 + 1]^{1/2}|Ω|^{1/4}); NaN if none.
    double scaling_constant = 0.0;
    std::string note;
};

enum class EndCondition { Natural, Dirichlet };

/// M1 = λ_min^{−1/2} of the P1 Laplacian on Ω_{a,b} (walls Dirichlet, ends
/// natural or, in diagnostic mode, Dirichlet), by inverse iteration to 1e−8.
/// Throws EigenFailure when the iteration stagnates.
ConstantEstimate poincare_m1(const ChannelProfile& profile, double a, double b, Resolution res,
                             EndCondition ends = EndCondition::Natural, bool self_check = true);

/// M0 = sup over slices of sup_w ‖w/f‖ / ‖∂2 w‖ (w = 0 on both walls), from
/// the lumped P1 slice eigenproblem; res.nx slices, res.ny elements per slice.
ConstantEstimate poincare_m0(const ChannelProfile& profile, double a, double b, Resolution res);

/// Best ratio ‖w‖_{L⁴} / ‖∇w‖_{L²} over wall-vanishing P1 fields found by the
/// normalized ascent w ← K⁻¹(m w³) from `starts` random starts. A lower bound
/// on M4 by construction. Throws AscentStagnation if no start makes progress.
ConstantEstimate sobolev_m4(const ChannelProfile& profile, double a, double b, Resolution res,
                            std::uint64_t seed = 1, int starts = 16);

/// Axis-aligned rectangle [x0, x1] × [y0, y1].
struct Rect {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    double area() const { return (x1 - x0) * (y1 - y0); }
};

struct DecompositionBound {
    double c_d = 0.0;
    double r0 = 0.0;     ///< diameter of the union
    double r = 0.0;      ///< smallest inscribed radius over the pieces
    double bound = 0.0;  ///< C_D (R0/R)² (1 + R0/R); +∞ when two pieces fail to overlap
    bool single_piece = false;  ///< N = 1: the k = N factor is taken as 2
};

/// Star-shaped decomposition bound for a union of rectangles in the given
/// order (each rectangle is star-like w.r.t. its inscribed disc).
DecompositionBound decomposition_m5_bound(const std::vector<Rect>& pieces);

/// Area of a union of rectangles (coordinate compression).
double union_area(const std::vector<Rect>& rects);

/// Sign-pattern probe for bogovskii_m5: +1 on the left half of [a, b], −1 on the right.
std::vector<double> sign_probe(const Grid& grid);

/// Bogovskii constant by Taylor–Hood P2–P1 on the grid's physical
/// triangulation: min ‖∇a‖ subject to div a = w, a = 0 on ∂D, for `probes`
/// random mean-zero w plus the sign pattern, then power iteration on
/// w ↦ −λ(w) for the largest ratio ‖∇a‖/‖w‖.
/// Throws SaddleSolveFailure, NonZeroMean (for user probes).
ConstantEstimate bogovskii_m5(const Grid& grid, int probes = 8, std::uint64_t seed = 1,
                              int power_iterations = 60);

struct BogovskiiSolution {
    double grad_norm = 0.0;  ///< ‖∇a‖
    double w_norm = 0.0;     ///< ‖w‖
    std::vector<double> a1, a2;  ///< P2 nodal values, vertices first then edge midpoints
};

/// Single solve for nodal P1 data w (must have mean zero, else NonZeroMean).
BogovskiiSolution bogovskii_solve(const Grid& grid, const std::vector<double>& w);

/// CSV row: name,value,method,domain,nx,ny,self_consistency,scaling_constant,note
std::string csv_header_constants();
std::string csv_row(const ConstantEstimate& e);

}  // namespace chanflow
