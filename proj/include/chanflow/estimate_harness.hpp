#pragma once

#include "chanflow/comparison.hpp"
#include "chanflow/flux_carrier.hpp"
#include "chanflow/geometry.hpp"
#include "chanflow/ns_solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace chanflow {

/// Empirical bounds that turn "bounded" into a pass/fail at desk scale.
struct HarnessThresholds {
    double spread_bound = 3.0;        ///< max/min of D/(1+I)
    double lower_ratio_min = 0.5;     ///< min of D/(Φ² I)
    double decay_ratio_bound = 4.0;   ///< max/min of f·sup|u| and of windowed energies
    double plateau_fraction = 0.1;    ///< E(2T) − E(T) <= fraction · E(T)
    double plateau_floor = 1e-4;      ///< absolute allowance per Φ² and unit length
    double uniqueness_tol = 1e-6;
    double near_wall_delta = 0.1;     ///< near-wall band width as a fraction of f
    void check() const;
};

/// How the harness sizes its truncated domain and grid.
struct GridPolicy {
    double cells_per_length = 12.0;  ///< ξ-cells per unit of x1
    int ny = 48;
    double extra_margin = 1.0;       ///< added to β*·f beyond the outermost t
    int min_nx = 64;
};

/// One named pass/fail line. Informational checks never fail a report.
struct Check {
    std::string name;
    bool pass = false;
    bool informational = false;
    double value = 0.0;
    double bound = 0.0;
    std::string detail;
};

bool all_pass(const std::vector<Check>& checks);

struct GrowthRow {
    double t = 0.0;
    double D = 0.0;             ///< ‖∇u‖² on Ω_t
    double I = 0.0;             ///< ∫_{−t}^{t} f⁻³
    double upper_ratio = 0.0;   ///< D / (1 + I)
    double lower_ratio = 0.0;   ///< D / (Φ² I); NaN when Φ = 0
    double local_energy = 0.0;  ///< ‖∇u‖² on Ω_{t−β*f(t), t}, times f²(t)
};

struct GrowthReport {
    std::string profile_id;
    double phi = 0.0;
    double a = 0.0, b = 0.0;
    int nx = 0, ny = 0;
    int iterations = 0;
    std::vector<GrowthRow> rows;
    std::vector<Check> checks;
};

struct DecayRow {
    double x1 = 0.0;
    double f = 0.0;
    double sup_u_f = 0.0;
    double interior = 0.0;   ///< sup over δf <= dist(x, ∂Ω), times f
    double near_wall = 0.0;  ///< sup over dist(x, ∂Ω) < δf, times f
};

struct DecayReport {
    std::string profile_id;
    double phi = 0.0;
    bool hypotheses_met = false;  ///< uniqueness/decay hypotheses hold at both ends
    std::string hypothesis_note;
    std::vector<DecayRow> slices;
    std::vector<double> t;                ///< window end points
    std::vector<double> windowed_energy;  ///< ‖∇u‖²_{Ω_{t−β*f(t),t}} f²(t)
    std::vector<Check> checks;
};

/// Truncation [−T, T] with T = t_max + β* f(t_max) + margin, and a solve on it.
FlowState harness_solve(const ChannelProfile& profile, const CarrierParams& params, double t_max,
                        const GridPolicy& policy, const SolverConfig& config);

/// Growth quantities from a solved state; every t must keep β*·f(t) inside the truncation.
GrowthReport growth_from_state(const FlowState& state, const std::vector<double>& t_list,
                               const HarnessThresholds& thresholds = {});

/// One solve on the largest window, then D(t), I(t) and the ratio verdicts.
GrowthReport growth_scan(const ChannelProfile& profile, const CarrierParams& params,
                         const std::vector<double>& t_list, const GridPolicy& policy = {},
                         const SolverConfig& config = {}, const HarnessThresholds& thresholds = {});

/// Slices x1 ∈ [t_list.front(), t_list.back()] and windowed energies at each t.
/// Verdicts are informational when the hypotheses fail; with `strict` that
/// case throws HypothesisNotMet instead.
DecayReport decay_from_state(const FlowState& state, const std::vector<double>& t_list,
                             const HarnessThresholds& thresholds = {}, bool strict = false);

DecayReport decay_scan(const ChannelProfile& profile, const CarrierParams& params,
                       const std::vector<double>& t_list, const GridPolicy& policy = {},
                       const SolverConfig& config = {}, const HarnessThresholds& thresholds = {},
                       bool strict = false);

struct PoiseuilleRow {
    double T = 0.0;
    double error = 0.0;       ///< ‖u − U‖²_{H¹} over k < x1 < T
    double d_plus = 0.0;      ///< ‖∇u‖² over k < x1 < T
    double scaled_d_plus = 0.0;  ///< T⁻³ d_plus
};

struct PoiseuilleReport {
    std::string profile_id;
    double phi = 0.0;
    double k = 0.0;
    std::vector<PoiseuilleRow> rows;
    std::vector<Check> checks;
};

/// Flux-Φ Poiseuille profile of a straight slice: (3Φ / 2f)(1 − s²), s = 2(x2 − f̄)/f.
double poiseuille_u1(double phi, const WallSample& w, double x2);

/// Solves on [k − w − margin, T_max + margin] and measures u against the outlet
/// Poiseuille flow on k < x1 < T for each T. Requires a profile that is
/// straight for x1 > k (StraightOutlet, or Straight with k given).
PoiseuilleReport poiseuille_convergence(const ChannelProfile& profile, const CarrierParams& params, double k,
                                        const std::vector<double>& T_list, const GridPolicy& policy = {},
                                        const SolverConfig& config = {},
                                        const HarnessThresholds& thresholds = {});

struct UniquenessReport {
    std::string profile_id;
    double phi = 0.0;
    double l2_distance = 0.0;         ///< ‖u_a − u_b‖ / ‖u_a‖ (0 when both vanish)
    double dirichlet_distance = 0.0;  ///< same in the Dirichlet seminorm
    bool unique = false;
    std::vector<Check> checks;
};

/// Two solves: from the Stokes field, and from the Stokes stream function plus
/// a random smooth perturbation (20% of max |ψ|) vanishing on the boundary.
UniquenessReport uniqueness_probe(const ChannelProfile& profile, const CarrierParams& params, double a,
                                  double b, int nx, int ny, std::uint64_t seed = 1,
                                  const SolverConfig& config = {}, const HarnessThresholds& thresholds = {});

/// Uniqueness probes over increasing flux values. The observed threshold is
/// the largest scanned Φ up to which every probe agreed; the scan stops at the
/// first disagreement or non-convergence.
struct UniquenessScan {
    std::string profile_id;
    std::vector<UniquenessReport> reports;  ///< one per probed Φ, in scan order
    std::string stop_reason;                ///< empty when every probe agreed
    double threshold = 0.0;                 ///< NaN when the first probe already disagreed
};

UniquenessScan uniqueness_threshold(const ChannelProfile& profile, const CarrierParams& params,
                                    std::vector<double> phi_values, double a, double b, int nx, int ny,
                                    std::uint64_t seed = 1, const SolverConfig& config = {},
                                    const HarnessThresholds& thresholds = {});

struct HatEnergyReport {
    std::string profile_id;
    double phi = 0.0;
    std::vector<double> t, y, dy, J;  ///< ŷ, ŷ′ and ∫_{h(−t)}^{h(t)} f⁻³
    double c11 = 0.0, c12 = 0.0;      ///< ŷ <= C11(ŷ′ + ŷ′^{3/2}) + C12 J on the samples
    double c13 = 0.0, c14 = 0.0;      ///< majorant φ = C13 + C14 J
    bool monotone = false;
    bool trivial = false;             ///< ŷ ≡ 0; nothing to compare
    std::optional<Conclusion> conclusion;
    std::vector<Check> checks;
};

/// Weighted-energy inequality on one solved state and its comparison verdict.
/// Needs at least 4 increasing t with [h(−t), h(t)] inside the truncation.
/// Throws HypothesisNotMet unless k ranges over all of ℝ.
HatEnergyReport hat_energy_inequality(const FlowState& state, const std::vector<double>& t_list);

}  // namespace chanflow
