#pragma once

#include "chanflow/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace chanflow {

enum class CutoffKind { Quintic, ExpBump };
std::string to_string(CutoffKind kind);

/// Smooth step with μ = 1 on (−∞, 0] and μ = 0 on [1, ∞).
///  - Quintic: 1 − (10t³ − 15t⁴ + 6t⁵), C².
///  - ExpBump: 1 − e^{−1/t} / (e^{−1/t} + e^{−1/(1−t)}), C^∞.
class Cutoff {
public:
    explicit Cutoff(CutoffKind kind = CutoffKind::Quintic) : kind_(kind) {}
    CutoffKind kind() const noexcept { return kind_; }
    /// μ, μ′, μ″ at t.
    Jet eval(double t) const;
    double operator()(double t) const { return eval(t).v; }

private:
    CutoffKind kind_;
};

struct CarrierParams {
    double phi = 1.0;      ///< flux Φ >= 0
    double epsilon = 0.5;  ///< ε ∈ (0, 1)
    Cutoff cutoff{};
    /// Throws ValidationError unless Φ >= 0 and ε ∈ (0, 1).
    void check() const;
};

using Point = std::array<double, 2>;
using Vec2 = std::array<double, 2>;
/// m[i][j] = ∂_j g_i.
using Mat2 = std::array<std::array<double, 2>, 2>;

/// Everything the carrier provides at one point.
struct CarrierValue {
    double G = 0.0;
    Vec2 g{};
    Mat2 grad{};
    double sigma = 0.0;    ///< cutoff argument 1 + ε ln(A/B); meaningful where B > 0
    bool in_band = false;  ///< 0 < σ < 1: derivatives of μ may be nonzero
    double vorticity() const { return grad[1][0] - grad[0][1]; }
};

/// Closed-form evaluation given the wall data at x1. The stream function is
/// G = Φ μ(σ), σ = 1 + ε (ln(f2 − x2) − ln(x2 − f̄)), and G = 0 for x2 <= f̄.
CarrierValue carrier_at(double x2, const WallSample& w, const CarrierParams& params);

double stream_G(Point x, const CarrierParams& params, const ChannelProfile& profile);
Vec2 velocity_g(Point x, const CarrierParams& params, const ChannelProfile& profile);
Mat2 grad_g(Point x, const CarrierParams& params, const ChannelProfile& profile);

/// ∫ g1 dx2 across the slice at x1 by Gauss-Kronrod on geometrically graded
/// pieces of the support band; equals Φ up to quadrature error.
double slice_flux(const CarrierParams& params, const ChannelProfile& profile, double x1);

struct CarrierReport {
    int samples = 0;
    int violations = 0;            ///< sampled support points breaking the band inequalities
    std::string first_violation;
    double sup_f_g = 0.0;          ///< sup f |g|
    double sup_f2_grad = 0.0;      ///< sup f² |∇g| (Frobenius)
    double energy_integral = 0.0;  ///< ∫ |∇g|² + |g|⁴ over the window
    double weight_integral = 0.0;  ///< ∫ f⁻³ over the window
    double energy_ratio = 0.0;     ///< energy_integral / weight_integral
    double max_div = 0.0;          ///< max |∂1g1 + ∂2g2| / (1 + |∇g|)
    double flux_error = 0.0;       ///< max |slice_flux − Φ| on sampled slices
    /// Sup over slices of ∫ g² w² / ∫ |∂2 w|² (w = 0 on the walls), divided by Φ².
    double hardy_constant = 0.0;
    /// Φ √hardy_constant < 1/2: the carrier term is dominated by half the Dirichlet form.
    bool coercive = false;
};

/// Samples the support band at random points and checks
///   A <= B <= e^{1/ε} A,   f/4 <= B <= f / (2(1 + e^{−1/ε})),   A >= e^{−1/ε} f / 4
/// with A = f2 − x2, B = x2 − f̄; collects the size constants listed above.
/// Throws BoundViolation when any sampled point breaks an inequality.
CarrierReport support_and_bounds_report(const CarrierParams& params, const ChannelProfile& profile,
                                        Interval window, int samples = 10000,
                                        std::uint64_t seed = 1);

/// Max over random band points (σ ∈ [0.05, 0.95]) of |∇g − ∇_h g| / |∇g|, with
/// ∇_h the fourth-order central difference of velocity_g at step 2e−4 min(A, B).
double gradient_fd_error(const CarrierParams& params, const ChannelProfile& profile, Interval window,
                         int samples = 200, std::uint64_t seed = 1);

/// Largest ratio ∫ g² w² dx2 / ∫ (w′)² dx2 over w vanishing on both walls of the
/// slice at x1, divided by Φ² (P1 elements on a wall-graded mesh).
double slice_hardy_constant(const CarrierParams& params, const ChannelProfile& profile, double x1);

}  // namespace chanflow
