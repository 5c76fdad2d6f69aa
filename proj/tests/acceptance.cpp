// Acceptance suite: one PASS/FAIL line per criterion, plus indented detail
// lines. Exits 0 once every criterion has been evaluated.

#include "chanflow/comparison.hpp"
#include "chanflow/errors.hpp"
#include "chanflow/estimate_harness.hpp"
#include "chanflow/flux_carrier.hpp"
#include "chanflow/functional_inequalities.hpp"
#include "chanflow/ns_solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace chanflow;
namespace fs = std::filesystem;

namespace {

/// Sub-result of a criterion: one printed line, all must hold.
struct Item {
    std::string text;
    bool pass = false;
};

class Criterion {
public:
    explicit Criterion(std::string title) : title_(std::move(title)) {}

    void item(bool pass, const std::string& text) { items_.push_back({text, pass}); }
    void note(const std::string& text) { notes_.push_back(text); }

    bool pass() const {
        if (items_.empty()) return false;
        for (const auto& i : items_)
            if (!i.pass) return false;
        return true;
    }

    void print(int number, double seconds) const {
        std::printf("criterion %d: %s  %s  (%.1f s)\n", number, pass() ? "PASS" : "FAIL", title_.c_str(), seconds);
        for (const auto& i : items_) std::printf("    [%s] %s\n", i.pass ? "ok" : "FAIL", i.text.c_str());
        for (const auto& n : notes_) std::printf("    note: %s\n", n.c_str());
        std::fflush(stdout);
    }

private:
    std::string title_;
    std::vector<Item> items_;
    std::vector<std::string> notes_;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

/// Power-law profile f = 2 (1 + |t|)^{1/2}.
ChannelProfile power_law() { return ChannelProfile::power_law(1.0, 0.5); }

// ----------------------------------------------------------------------------

void poiseuille_recovery(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    CarrierParams p;
    const FlowState s = solve_steady(ChannelProfile::straight(1.0), p, -10, 10, 512, 64);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    // Velocity error away from the truncation ends (β* f = 2 from each end).
    auto error_within = [&s](double reach) {
        double err = 0.0;
        for (int i = 0; i <= s.grid.nx; ++i) {
            if (std::abs(s.grid.xi[i]) > reach) continue;
            for (int j = 0; j <= s.grid.ny; ++j) {
                const double y = s.grid.x2(i, j);
                err = std::max(err, std::abs(s.u1[s.grid.index(i, j)] - 0.75 * (1.0 - y * y)));
            }
        }
        return err;
    };
    const double err = error_within(8.0);
    c.item(s.converged, "Picard iteration converged");
    c.item(err <= 1e-3, fmt("max |u1 - 3/4 (1 - x2^2)| on |x1| <= 8: %.3g (bound 1e-3)", err));
    const double e = dirichlet_energy(s, 0, 10);
    c.item(std::abs(e - 15.0) <= 0.3, fmt("Dirichlet energy on Omega_{0,10}: %.6g (target 15 +- 2%%)", e));
    c.item(secs <= 120.0, fmt("solve time %.1f s (bound 120 s)", secs));
    const double inner = dirichlet_energy(s, 0, 8);
    c.note(fmt("energy on Omega_{0,8}: %.6g, i.e. %.6g per unit length (analytic 1.5)", inner, inner / 8.0));
    c.note(fmt("energy on Omega_{8,10} next to the truncated end: %.6g", e - inner));
    c.note(fmt("max velocity error on |x1| <= 5: %.3g, on the whole domain: %.3g", error_within(5.0), error_within(10.0)));
    c.note("u = g on the ends leaves a Stokes end layer decaying like exp(-4.2 d) over the distance d to an end");
}

void carrier_integrity(Criterion& c) {
    const std::vector<ChannelProfile> profiles{ChannelProfile::straight(1.0), power_law(),
                                               ChannelProfile::straight_outlet(0.5, 0.0, 2.0)};
    CarrierParams p;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> x(-20.0, 20.0);
    double flux_err = 0.0;
    int slices = 0;
    for (int k = 0; k < 50; ++k) {
        const auto& prof = profiles[k % profiles.size()];
        flux_err = std::max(flux_err, std::abs(slice_flux(p, prof, x(rng)) - p.phi));
        ++slices;
    }
    c.item(flux_err <= 1e-8, fmt("slice flux error over %.0f random slices: %.3g (bound 1e-8)", slices, flux_err));

    double fd = 0.0;
    int violations = 0, samples = 0;
    for (const auto& prof : profiles) {
        fd = std::max(fd, gradient_fd_error(p, prof, {-20.0, 20.0}, 200, 7));
        try {
            const auto r = support_and_bounds_report(p, prof, {-20.0, 20.0}, 10000, 7);
            violations += r.violations;
            samples += r.samples;
        } catch (const BoundViolation& e) {
            ++violations;
            c.note(e.what());
        }
    }
    c.item(fd <= 1e-6, fmt("analytic gradient vs fourth-order differences: %.3g (bound 1e-6)", fd));
    c.item(violations == 0, fmt("support bounds: %.0f violations in %.0f sampled points", violations, samples));
}

void growth_law(Criterion& c) {
    CarrierParams p;
    const auto r = growth_scan(power_law(), p, {5, 10, 20, 40});
    for (const auto& row : r.rows)
        c.note(fmt("t = %.0f: D/(1+I) = %.4g, D/(Phi^2 I) = %.4g", row.t, row.upper_ratio, row.lower_ratio));
    for (const auto& ch : r.checks)
        if (!ch.informational) c.item(ch.pass, ch.name + fmt(": %.4g (bound %.4g)", ch.value, ch.bound));
    c.note(fmt("truncation [%.4g, %.4g], grid %.0f x ", r.a, r.b, r.nx) + std::to_string(r.ny));
}

void pointwise_decay(Criterion& c) {
    CarrierParams p;
    std::vector<double> t;
    for (double x = 10; x <= 40; x += 2.5) t.push_back(x);
    const auto r = decay_scan(power_law(), p, t);
    c.item(r.hypotheses_met, "decay hypotheses hold at both ends" + (r.hypothesis_note.empty() ? "" : ": " + r.hypothesis_note));
    for (const auto& ch : r.checks) {
        if (ch.name.rfind("max/min", 0) == 0) c.item(ch.pass, ch.name + fmt(": %.4g (bound %.4g)", ch.value, ch.bound));
        else c.note(ch.name + fmt(": %.4g", ch.value));
    }
}

void comparison_toolkit(Criterion& c) {
    // Saturator z = t³/(108 C²) solves z = 2C (z′)^{3/2}: Ψ = C s^{3/2}, δ₁ = 1/2.
    const double C = 0.7;
    const auto psi = PsiSpec::separable(0.0, C, 1.5);
    MajorantSamples sat;
    for (int k = 0; k <= 2000; ++k) {
        const double t = 1.0 + 9.0 * k / 2000.0;
        sat.t.push_back(t);
        sat.phi.push_back(t * t * t / (108.0 * C * C));
    }
    const double closed = majorant_residual(sat, psi, 0.5);
    c.item(closed <= 1e-8, fmt("saturator residual (closed form): %.3g (bound 1e-8)", closed));

    const MajorantSamples ode = solve_majorant(psi, 0.5, 1.0 / (108.0 * C * C), 1.0, 10.0);
    double dev = 0.0;
    for (std::size_t k = 0; k < ode.t.size(); ++k) {
        const double exact = std::pow(ode.t[k], 3) / (108.0 * C * C);
        dev = std::max(dev, std::abs(ode.phi[k] - exact) / exact);
    }
    c.item(dev <= 1e-8, fmt("majorant ODE from z(1) vs saturator: %.3g (bound 1e-8)", dev));

    const auto fz = fuzz_comparison(1000, 99);
    c.item(fz.lemma_violations == 0,
           fmt("fuzz: %.0f instances, %.0f dominated, %.0f lemma violations", fz.instances, fz.dominated,
               fz.lemma_violations));

    std::vector<double> t, z;
    for (int k = 1; k <= 500; ++k) {
        t.push_back(0.1 * k);
        z.push_back(std::pow(0.1 * k, 3));
    }
    const auto fit = blowup_rate(t, z, psi);
    c.item(std::abs(fit.exponent - 3.0) <= 0.05, fmt("blow-up exponent of t^3: %.6g (3 +- 0.05)", fit.exponent));
}

void functional_constants(Criterion& c) {
    const auto m1 = poincare_m1(ChannelProfile::straight(1.0), 0, 4, {256, 256}, EndCondition::Natural, false);
    c.item(std::abs(m1.value / (2.0 / M_PI) - 1.0) <= 0.02, fmt("strip M1 at 257x257: %.6g (2/pi = %.6g)", m1.value, 2.0 / M_PI));
    const auto m1w = poincare_m1(ChannelProfile::straight(2.0), 0, 4, {128, 128}, EndCondition::Natural, false);
    const auto m1n = poincare_m1(ChannelProfile::straight(1.0), 0, 4, {128, 128}, EndCondition::Natural, false);
    const double ratio = m1w.value / m1n.value;
    c.item(std::abs(ratio - 2.0) <= 0.04, fmt("M1 ratio for doubled width: %.6g (2 +- 2%%)", ratio));

    const auto m0s = poincare_m0(ChannelProfile::straight(1.0), 0, 4, {32, 256});
    const auto m0p = poincare_m0(power_law(), -10, 10, {64, 256});
    c.item(std::abs(m0s.value * M_PI - 1.0) <= 0.02, fmt("slicewise M0 (straight): %.6g (1/pi = %.6g)", m0s.value, 1.0 / M_PI));
    c.item(std::abs(m0p.value / m0s.value - 1.0) <= 0.05,
           fmt("slicewise M0 (power law): %.6g, relative to straight %.4g", m0p.value, m0p.value / m0s.value));

    const auto square = ChannelProfile::straight(0.5);
    const auto b1 = bogovskii_m5(make_grid(square, 0, 1, 12, 12));
    const auto b2 = bogovskii_m5(make_grid(square, 0, 1, 24, 24));
    const double change = std::abs(b2.value - b1.value) / b2.value;
    c.item(change < 0.05, fmt("M5 unit square: %.5g -> %.5g, change %.3g (bound 5%%)", b1.value, b2.value, change));
    const auto bound1 = decomposition_m5_bound({Rect{0, 1, -0.5, 0.5}});
    c.item(b2.value <= bound1.bound, fmt("M5 unit square %.5g <= decomposition bound %.5g", b2.value, bound1.bound));
    const auto bar = bogovskii_m5(make_grid(square, 0, 2, 24, 12));
    const auto bound2 = decomposition_m5_bound({Rect{0, 1.25, -0.5, 0.5}, Rect{0.75, 2, -0.5, 0.5}});
    c.item(bar.value <= bound2.bound, fmt("M5 2x1 rectangle %.5g <= two-piece bound %.5g", bar.value, bound2.bound));
}

void uniqueness(Criterion& c) {
    CarrierParams p;
    p.phi = 0.1;
    const auto r = uniqueness_probe(ChannelProfile::straight(1.0), p, -10, 10, 200, 32);
    c.item(std::max(r.l2_distance, r.dirichlet_distance) <= 1e-6,
           fmt("Phi = 0.1: relative distances %.3g (L2), %.3g (Dirichlet)", r.l2_distance, r.dirichlet_distance));
    p.phi = 0.0;
    const auto z = uniqueness_probe(ChannelProfile::straight(1.0), p, -10, 10, 200, 32);
    c.item(z.l2_distance == 0.0 && z.dirichlet_distance == 0.0,
           fmt("Phi = 0: distances %.3g, %.3g (exact zero required)", z.l2_distance, z.dirichlet_distance));
}

void truncation_independence(Criterion& c) {
    CarrierParams p;
    for (const auto& prof : {ChannelProfile::straight(1.0), power_law()}) {
        const FlowState s10 = solve_steady(prof, p, -10, 10, 400, 32);
        const FlowState s20 = solve_steady(prof, p, -20, 20, 800, 32);
        const double e10 = dirichlet_energy(s10, -5, 5), e20 = dirichlet_energy(s20, -5, 5);
        const double rel = std::abs(e10 - e20) / e20;
        c.item(rel <= 0.01, prof.id() + fmt(": energy on Omega_5 %.8g vs %.8g, relative %.3g (bound 1%%)", e10, e20, rel));
    }
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void determinism(Criterion& c) {
    const fs::path root = fs::temp_directory_path() / "chanflow_acceptance_determinism";
    fs::remove_all(root);
    const std::string cli = CHANFLOW_CLI_PATH, scenario = CHANFLOW_DATA_DIR "/determinism.ini";
    const std::vector<std::string> commands{"solve", "growth-scan", "comparison"};
    int compared = 0, differing = 0;
    for (const auto& cmd : commands) {
        for (const char* run : {"run1", "run2"}) {
            const std::string line = "\"" + cli + "\" " + cmd + " --scenario \"" + scenario + "\" --out \"" +
                                     (root / run).string() + "\" --quiet";
            const int rc = std::system(line.c_str());
            if (rc != 0) c.note(cmd + " exited with status " + std::to_string(rc));
        }
        for (const auto& entry : fs::directory_iterator(root / "run1" / cmd)) {
            if (entry.path().extension() != ".csv") continue;
            const fs::path other = root / "run2" / cmd / entry.path().filename();
            ++compared;
            if (!fs::exists(other) || read_bytes(entry.path()) != read_bytes(other)) {
                ++differing;
                c.note("differs: " + cmd + "/" + entry.path().filename().string());
            }
        }
    }
    c.item(compared > 0 && differing == 0,
           fmt("%.0f CSV files compared across two runs, %.0f differ", compared, differing));
    fs::remove_all(root);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
        {"Poiseuille recovery", poiseuille_recovery},
        {"carrier integrity", carrier_integrity},
        {"growth law on the power-law channel", growth_law},
        {"pointwise decay on the power-law channel", pointwise_decay},
        {"comparison toolkit", comparison_toolkit},
        {"functional constants", functional_constants},
        {"uniqueness probe", uniqueness},
        {"truncation independence", truncation_independence},
        {"determinism", determinism},
    };
    int passed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Criterion c(criteria[k].first);
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[k].second(c);
        } catch (const std::exception& e) {
            c.item(false, std::string("error: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        c.print(static_cast<int>(k + 1), secs);
        if (c.pass()) ++passed;
    }
    std::printf("acceptance: %d of %zu criteria pass\n", passed, criteria.size());
    return 0;
}
