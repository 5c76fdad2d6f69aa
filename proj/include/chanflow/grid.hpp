#pragma once

#include "chanflow/geometry.hpp"

#include <memory>
#include <vector>

namespace chanflow {

/// Uniform grid in mapped coordinates ξ = x1 ∈ [a, b], η = (x2 − f1(ξ)) / f(ξ) ∈ [0, 1].
///
/// Node (i, j), 0 <= i <= nx, 0 <= j <= ny, has flat index i * (ny + 1) + j.
/// Column data (walls, width) is stored per i; metric terms per node.
class Grid {
public:
    double a = 0.0, b = 1.0;
    int nx = 0, ny = 0;
    double dxi = 0.0, deta = 0.0;

    std::vector<double> xi;          ///< ξ_i
    std::vector<double> eta;         ///< η_j
    std::vector<WallSample> walls;   ///< wall data at ξ_i
    std::vector<double> eta_x;       ///< ∂η/∂x1 = −(f1′ + η f′) / f
    std::vector<double> eta_xx;      ///< ∂²η/∂x1²
    std::vector<double> weight;      ///< quadrature weight (includes the Jacobian f)

    const ChannelProfile& profile() const { return *profile_; }

    int cols() const noexcept { return nx + 1; }
    int rows() const noexcept { return ny + 1; }
    int size() const noexcept { return (nx + 1) * (ny + 1); }
    int index(int i, int j) const noexcept { return i * (ny + 1) + j; }

    double width(int i) const { return walls[i].width(); }
    double x1(int i) const { return xi[i]; }
    double x2(int i, int j) const { return walls[i].f1 + eta[j] * walls[i].width(); }

    /// Σ weight · values.
    double integrate(const std::vector<double>& values) const;

private:
    friend Grid make_grid(const ChannelProfile&, double, double, int, int);
    std::shared_ptr<const ChannelProfile> profile_;
};

/// Builds the mapped grid. ξ-weights are ∫ hat_i(ξ) f(ξ) dξ computed adaptively,
/// η-weights trapezoidal, so integrating 1 reproduces ∫_a^b f.
/// Throws DegenerateGrid when nx < 8, ny < 8 or b <= a.
Grid make_grid(const ChannelProfile& profile, double a, double b, int nx, int ny);

}  // namespace chanflow
