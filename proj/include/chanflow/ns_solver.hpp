#pragma once

#include "chanflow/flux_carrier.hpp"
#include "chanflow/geometry.hpp"
#include "chanflow/grid.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace chanflow {

enum class LinearSolverKind { BandedDirect, KrylovILU };
std::string to_string(LinearSolverKind kind);

struct SolverConfig {
    double tol = 1e-9;                ///< relative vorticity-transport residual
    int max_iter = 200;
    double relax = 1.0;               ///< under-relaxation in (0, 1]
    std::vector<double> continuation; ///< intermediate flux values, solved in increasing order
    LinearSolverKind linear_solver = LinearSolverKind::BandedDirect;
    /// Switch a direction to first-order upwind where the cell Péclet number exceeds 2.
    bool hybrid_upwind = true;
    /// Throws ValidationError on tol <= 0, relax outside (0, 1] or max_iter < 1.
    void check() const;
};

struct ResidualEntry {
    int iteration = 0;
    double residual = 0.0;
};

/// Discrete fields on a mapped grid; all arrays use Grid::index.
struct FlowState {
    Grid grid;
    CarrierParams params;
    std::vector<double> psi, omega, u1, u2;
    std::optional<std::vector<double>> p;
    bool converged = false;
    std::vector<ResidualEntry> residual_history;

    double phi() const { return params.phi; }
};

/// Linear Stokes problem in ψ–ω form: Δψ = −ω, Δω = 0 with second-order wall
/// vorticity, ψ = 0 / Φ on the walls, ψ = G and ω = −ΔG on the ends.
FlowState solve_stokes(const Grid& grid, const CarrierParams& params, const ChannelProfile& profile,
                       const SolverConfig& config = {});

/// One Picard iteration with convection lagged at the current velocity:
/// solves Δψ + ω = 0, Δω − u·∇ω = 0 as one sparse system, under-relaxes,
/// recomputes u. Returns the new state and its vorticity-transport residual.
std::pair<FlowState, double> picard_step(const FlowState& state, const CarrierParams& params,
                                         const ChannelProfile& profile, const SolverConfig& config);

/// Stokes start, then Picard iterations through the continuation values up to
/// params.phi. Throws NonConvergence(best residual, iterations) on failure.
FlowState solve_steady(const ChannelProfile& profile, const CarrierParams& params, double a, double b,
                       int nx, int ny, const SolverConfig& config = {});

/// Picard iterations from an arbitrary initial state (same grid, same flux).
FlowState solve_from(FlowState initial, const SolverConfig& config);

/// max |L_h ω − u·∇ω| over interior nodes, relative to the largest of the
/// three norms involved; 0 for the zero field.
double transport_residual(const FlowState& state, bool hybrid_upwind = true);

/// Rebuilds u from ψ (interior central differences, u = 0 on walls, u = g on ends).
void update_velocity(FlowState& state);

/// ∫_{Ω_{a',b'}} |∇u|² dx. Slice integrals are trapezoidal in η and the
/// resulting piecewise-linear slice profile is integrated exactly, so the
/// energy is additive over adjacent intervals.
double dirichlet_energy(const FlowState& state, double a_prime, double b_prime);

/// ∫_{Ω_{a',b'}} q dx for nodal q, using the same slice rule as the energies.
double window_integral(const Grid& grid, const std::vector<double>& q, double a_prime, double b_prime);

/// Same for v = u − g.
double perturbation_energy(const FlowState& state, double a_prime, double b_prime);

/// Piecewise-linear weight in x1 (with its kinks) for weighted energies.
struct SliceWeight {
    std::function<double(double)> value;
    std::vector<double> breakpoints;
};

/// ζ̂(x1, t) built from h(±t), h_L, h_R: a trapezoid of height β* with ramps of
/// slope 1/f(h(±t)); when the ramps overlap the minimum is taken.
SliceWeight zeta_hat(const KMap& kmap, double t);

/// ∫ weight(x1) |∇v|² dx with v = u − g (analytic ∇g at the nodes).
double weighted_energy(const FlowState& state, const SliceWeight& weight);

/// Per-node gradient of u: {∂1u1, ∂2u1, ∂1u2, ∂2u2}.
std::vector<std::array<double, 4>> velocity_gradient(const FlowState& state);

/// Pressure from the momentum balance ∇p = Δu − u·∇u, as the least-squares P1
/// fit on the physical triangulation (weak Neumann problem), mean zero.
std::vector<double> pressure_recover(const FlowState& state);

/// max |∇p − (Δu − u·∇u)| over interior nodes with a' <= x1 <= b', relative
/// to max |Δu − u·∇u| there.
double momentum_residual(const FlowState& state, const std::vector<double>& p, double a_prime, double b_prime);

/// ∫_{Ω_{a,b}} (|∇g|² + |g|⁴) dx over the whole truncation.
double carrier_energy(const Grid& grid, const CarrierParams& params);

/// ‖∇v‖² on Ω_{a,b} divided by carrier_energy; 0 when Φ = 0.
double energy_inequality_ratio(const FlowState& state);

/// Slice flux ∫ u1 dx2 at every ξ-line by the midpoint rule on face
/// velocities (ψ_{j+1} − ψ_j) / (f Δη): the conservative discrete flux.
std::vector<double> slice_fluxes(const FlowState& state);

/// Trapezoid in η of the nodal u1; differs from the conservative flux by O(Δη²).
std::vector<double> nodal_slice_fluxes(const FlowState& state);

/// Max |∂1u1 + ∂2u2| over interior nodes at least two columns from the ends
/// (the end columns carry the analytic carrier, not differenced ψ).
double max_divergence(const FlowState& state);

}  // namespace chanflow
