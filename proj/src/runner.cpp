#include "chanflow/runner.hpp"

#include "chanflow/comparison.hpp"
#include "chanflow/errors.hpp"
#include "chanflow/report_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

namespace chanflow {

namespace fs = std::filesystem;

std::vector<std::string> command_names() {
    return {"carrier-check", "solve", "growth-scan", "decay-scan", "poiseuille", "constants", "comparison", "report"};
}

namespace {

using Num = std::string;
Num N(double v) { return format_number(v); }

/// Runs fn(0..n−1) on up to `threads` workers; results keep index order and
/// the first exception (by index) is rethrown.
template <class T>
std::vector<T> parallel_map(int n, int threads, const std::function<T(int)>& fn) {
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < n; k = next++) {
            try {
                out[k] = fn(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int workers = std::max(1, std::min(threads, n));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<double> flux_values(const Scenario& s) {
    return s.phi_list.empty() ? std::vector<double>{s.carrier.phi} : s.phi_list;
}

/// Collects artifacts of one command and writes verdicts and manifest last.
class Artifacts {
public:
    Artifacts(const Scenario& s, const RunOptions& o, std::string command)
        : scenario_(s), command_(std::move(command)) {
        root_ = o.out_dir.empty() ? fs::path(s.out_dir) : fs::path(o.out_dir);
        dir_ = root_ / command_;
        fs::create_directories(dir_);
    }
    const fs::path& root() const { return root_; }
    void csv(const std::string& name, const CsvTable& t) { put(name, t.str()); }
    void svg(const std::string& name, const Plot& p) {
        if (scenario_.svg) put(name, render_svg(p));
    }
    void file(const fs::path& p) { files_.push_back(p); }
    void checks(const std::vector<Check>& c) { checks_.insert(checks_.end(), c.begin(), c.end()); }
    const std::vector<Check>& all_checks() const { return checks_; }
    int finish(std::ostream& out, bool quiet) {
        csv("verdicts.csv", checks_table(command_, checks_));
        write_manifest(dir_, command_, scenario_.source_path, scenario_.source_text, files_);
        if (!quiet) {
            for (const auto& c : checks_) {
                out << (c.informational ? (c.pass ? "INFO " : "INFO-FAIL ") : (c.pass ? "PASS " : "FAIL ")) << c.name
                    << "  value=" << N(c.value) << " bound=" << N(c.bound);
                if (!c.detail.empty()) out << "  (" << c.detail << ")";
                out << "\n";
            }
            out << "artifacts: " << dir_.string() << "\n";
        }
        return all_pass(checks_) ? kExitPass : kExitFail;
    }
    fs::path path(const std::string& name) const { return dir_ / name; }

private:
    void put(const std::string& name, const std::string& content) {
        const fs::path p = dir_ / name;
        write_file_atomic(p, content);
        files_.push_back(p);
    }
    const Scenario& scenario_;
    std::string command_;
    fs::path root_, dir_;
    std::vector<fs::path> files_;
    std::vector<Check> checks_;
};

Check check(std::string name, bool pass, double value, double bound, std::string detail = {},
            bool informational = false) {
    return Check{std::move(name), pass, informational, value, bound, std::move(detail)};
}

// ---------------------------------------------------------------------------

void carrier_check(const Scenario& s, Artifacts& art) {
    const ChannelProfile profile = s.profile.build();
    const Interval window{s.a, s.b};
    (void)validate(profile, window);
    const CarrierReport rep = support_and_bounds_report(s.carrier, profile, window, 10000, s.seed);
    const double grad_err = gradient_fd_error(s.carrier, profile, window, 200, s.seed);

    CsvTable slices{"carrier_slices", {"x1", "width", "flux", "flux_error"}, {}};
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> ux(s.a, s.b);
    std::vector<double> xs(50);
    for (double& x : xs) x = ux(rng);
    std::sort(xs.begin(), xs.end());
    double flux_err = 0.0;
    Series fx{"slice flux - Phi", {}, {}, true};
    for (double x : xs) {
        const double q = slice_flux(s.carrier, profile, x);
        flux_err = std::max(flux_err, std::abs(q - s.carrier.phi));
        slices.add({N(x), N(profile.width(x)), N(q), N(q - s.carrier.phi)});
        fx.x.push_back(x);
        fx.y.push_back(q - s.carrier.phi);
    }
    art.csv("carrier_slices.csv", slices);
    CsvTable summary{"carrier_summary", {"quantity", "value"}, {}};
    summary.add({"samples", std::to_string(rep.samples)});
    summary.add({"violations", std::to_string(rep.violations)});
    summary.add({"sup_f_g", N(rep.sup_f_g)});
    summary.add({"sup_f2_grad", N(rep.sup_f2_grad)});
    summary.add({"energy_integral", N(rep.energy_integral)});
    summary.add({"weight_integral", N(rep.weight_integral)});
    summary.add({"energy_ratio", N(rep.energy_ratio)});
    summary.add({"max_div", N(rep.max_div)});
    summary.add({"hardy_constant", N(rep.hardy_constant)});
    summary.add({"gradient_fd_error", N(grad_err)});
    art.csv("carrier_summary.csv", summary);
    art.svg("carrier_flux.svg", Plot{"slice flux error", "x1", "flux - Phi", {fx}});

    const double flux_tol = 1e-8 * std::max(1.0, s.carrier.phi);
    art.checks({
        check("support bounds", rep.violations == 0, rep.violations, 0, rep.first_violation),
        check("slice flux = Phi", flux_err <= flux_tol, flux_err, flux_tol),
        check("grad g vs finite differences", grad_err <= 1e-6, grad_err, 1e-6),
        check("div g", rep.max_div <= 1e-8, rep.max_div, 1e-8),
        check("carrier coercivity", rep.coercive, s.carrier.phi * std::sqrt(rep.hardy_constant), 0.5,
              "Phi sqrt(hardy) < 1/2", true),
    });
}

void solve(const Scenario& s, Artifacts& art) {
    const ChannelProfile profile = s.profile.build();
    (void)validate(profile, {s.a, s.b});
    const FlowState st = solve_steady(profile, s.carrier, s.a, s.b, s.nx, s.ny, s.solver);
    art.csv("residuals.csv", residual_table(st));

    const Grid& g = st.grid;
    const auto flux = slice_fluxes(st);
    CsvTable cols{"solve_slices", {"x1", "width", "flux", "sup_u", "f_sup_u"}, {}};
    Series decay{"f sup|u|", {}, {}};
    double flux_err = 0.0;
    for (int i = 0; i <= g.nx; ++i) {
        double sup = 0.0;
        for (int j = 0; j <= g.ny; ++j) {
            const int k = g.index(i, j);
            sup = std::max(sup, std::hypot(st.u1[k], st.u2[k]));
        }
        flux_err = std::max(flux_err, std::abs(flux[i] - st.phi()));
        cols.add({N(g.xi[i]), N(g.width(i)), N(flux[i]), N(sup), N(sup * g.width(i))});
        decay.x.push_back(g.xi[i]);
        decay.y.push_back(sup * g.width(i));
    }
    art.csv("slices.csv", cols);
    Series res{"residual", {}, {}};
    for (const auto& e : st.residual_history) {
        res.x.push_back(e.iteration);
        res.y.push_back(e.residual);
    }
    art.svg("residuals.svg", Plot{"Picard residual", "iteration", "residual", {res}, false, true});
    art.svg("slices.svg", Plot{"f(x1) sup|u|", "x1", "f sup|u|", {decay}});
    if (s.fields) {
        write_field_file(st, art.path("field.txt"));
        art.file(art.path("field.txt"));
    }
    std::vector<Check> unique_checks;
    if (!s.phi_list.empty()) {
        const UniquenessScan scan = uniqueness_threshold(profile, s.carrier, s.phi_list, s.a, s.b, s.nx, s.ny,
                                                         s.seed, s.solver, s.thresholds);
        CsvTable u{"uniqueness", {"phi", "l2_distance", "dirichlet_distance", "unique"}, {}};
        for (const auto& r : scan.reports)
            u.add({N(r.phi), N(r.l2_distance), N(r.dirichlet_distance), r.unique ? "1" : "0"});
        art.csv("uniqueness.csv", u);
        unique_checks.push_back(check("observed uniqueness threshold", scan.stop_reason.empty(), scan.threshold,
                                      *std::max_element(s.phi_list.begin(), s.phi_list.end()),
                                      scan.stop_reason.empty() ? "all probes agree" : scan.stop_reason, true));
    }
    const double div = max_divergence(st);
    const double flux_tol = 1e-8 * std::max(1.0, st.phi());
    art.checks({
        check("converged", st.converged, st.residual_history.empty() ? 0.0 : st.residual_history.back().residual,
              s.solver.tol),
        check("discrete flux = Phi", flux_err <= flux_tol, flux_err, flux_tol),
        check("interior divergence", div <= 1e-6 * std::max(1.0, st.phi()), div, 1e-6, "", true),
        check("energy inequality ratio C0", true, energy_inequality_ratio(st), 0.0,
              "|grad v|^2 / int(|grad g|^2 + |g|^4)", true),
    });
    art.checks(unique_checks);
}

void growth(const Scenario& s, const RunOptions& o, Artifacts& art) {
    const ChannelProfile profile = s.profile.build();
    const auto phis = flux_values(s);
    const auto reports = parallel_map<GrowthReport>(static_cast<int>(phis.size()), o.threads, [&](int k) {
        CarrierParams p = s.carrier;
        p.phi = phis[k];
        return growth_scan(profile, p, s.t_list, s.policy, s.solver, s.thresholds);
    });
    CsvTable t{"growth", {"phi", "t", "D", "I", "D_over_1pI", "D_over_phi2I", "local_energy_f2"}, {}};
    Plot plot{"D(t) against 1 + I(t)", "1 + I", "D", {}, true, true};
    for (const auto& r : reports) {
        Series sr{"Phi=" + N(r.phi), {}, {}};
        for (const auto& row : r.rows) {
            t.add({N(r.phi), N(row.t), N(row.D), N(row.I), N(row.upper_ratio), N(row.lower_ratio),
                   N(row.local_energy)});
            sr.x.push_back(1.0 + row.I);
            sr.y.push_back(row.D);
        }
        plot.series.push_back(sr);
        auto checks = r.checks;
        for (auto& c : checks) c.name = "Phi=" + N(r.phi) + ": " + c.name;
        art.checks(checks);
    }
    art.csv("growth.csv", t);
    art.svg("growth.svg", plot);
}

void decay(const Scenario& s, const RunOptions& o, Artifacts& art) {
    const ChannelProfile profile = s.profile.build();
    const auto phis = flux_values(s);
    const auto reports = parallel_map<DecayReport>(static_cast<int>(phis.size()), o.threads, [&](int k) {
        CarrierParams p = s.carrier;
        p.phi = phis[k];
        return decay_scan(profile, p, s.decay_t, s.policy, s.solver, s.thresholds);
    });
    CsvTable sl{"decay_slices", {"phi", "x1", "width", "f_sup_u", "interior", "near_wall"}, {}};
    CsvTable win{"decay_windows", {"phi", "t", "windowed_energy_f2"}, {}};
    Plot plot{"f(x1) sup|u|", "x1", "f sup|u|", {}};
    for (const auto& r : reports) {
        Series sr{"Phi=" + N(r.phi), {}, {}};
        for (const auto& row : r.slices) {
            sl.add({N(r.phi), N(row.x1), N(row.f), N(row.sup_u_f), N(row.interior), N(row.near_wall)});
            sr.x.push_back(row.x1);
            sr.y.push_back(row.sup_u_f);
        }
        for (std::size_t k = 0; k < r.t.size(); ++k) win.add({N(r.phi), N(r.t[k]), N(r.windowed_energy[k])});
        plot.series.push_back(sr);
        auto checks = r.checks;
        for (auto& c : checks) c.name = "Phi=" + N(r.phi) + ": " + c.name;
        art.checks(checks);
    }
    art.csv("decay_slices.csv", sl);
    art.csv("decay_windows.csv", win);
    art.svg("decay.svg", plot);
}

void poiseuille(const Scenario& s, Artifacts& art) {
    const ChannelProfile profile = s.profile.build();
    const PoiseuilleReport r =
        poiseuille_convergence(profile, s.carrier, s.outlet_k, s.T_list, s.policy, s.solver, s.thresholds);
    CsvTable t{"poiseuille", {"T", "H1_error_sq", "D_plus", "T3_scaled_D_plus"}, {}};
    Series e{"E(T)", {}, {}};
    for (const auto& row : r.rows) {
        t.add({N(row.T), N(row.error), N(row.d_plus), N(row.scaled_d_plus)});
        e.x.push_back(row.T);
        e.y.push_back(row.error);
    }
    art.csv("poiseuille.csv", t);
    art.svg("poiseuille.svg", Plot{"E(T) = |u - U|^2 in H1 on (k, T)", "T", "E(T)", {e}});
    art.checks(r.checks);
}

void constants(const Scenario& s, Artifacts& art) {
    const ChannelProfile profile = s.profile.build();
    (void)validate(profile, {s.a, s.b});
    const Resolution res = s.constants_resolution;
    std::vector<ConstantEstimate> est;
    est.push_back(poincare_m1(profile, s.a, s.b, res));
    est.push_back(poincare_m0(profile, s.a, s.b, res));
    est.push_back(sobolev_m4(profile, s.a, s.b, res, s.seed));
    est.push_back(bogovskii_m5(make_grid(profile, s.a, s.b, std::max(8, res.nx / 2), std::max(8, res.ny / 2)), 8,
                               s.seed));
    CsvTable t{"constants",
               {"name", "value", "method", "domain", "nx", "ny", "self_consistency", "scaling_constant", "note"},
               {}};
    for (const auto& e : est) {
        t.add({to_string(e.name), N(e.value), to_string(e.method), e.domain, std::to_string(e.resolution.nx),
               std::to_string(e.resolution.ny), N(e.self_consistency), N(e.scaling_constant), e.note});
        art.checks({check(to_string(e.name) + " self-consistency", e.consistent, e.self_consistency, 0.05,
                          std::isnan(e.self_consistency) ? "not computed" : "", std::isnan(e.self_consistency))});
    }
    art.csv("constants.csv", t);
}

void comparison(const Scenario& s, Artifacts& art) {
    const auto& c = s.comparison;
    const PsiSpec psi = PsiSpec::separable(c.c1, c.c2, c.m);
    const MajorantSamples m = solve_majorant(psi, c.delta1, c.phi0, 0.0, c.T);
    const double resid = majorant_residual(m, psi, c.delta1);
    CsvTable t{"majorant", {"t", "phi", "dphi"}, {}};
    Series ph{"phi", {}, {}};
    for (std::size_t k = 0; k < m.t.size(); k += 10) {
        t.add({N(m.t[k]), N(m.phi[k]), N(m.dphi[k])});
        ph.x.push_back(m.t[k]);
        ph.y.push_back(m.phi[k]);
    }
    art.csv("majorant.csv", t);
    art.checks({check("majorant residual", resid <= 1e-8, resid, 1e-8)});

    const FuzzReport fz = fuzz_comparison(c.fuzz_instances, s.seed);
    CsvTable f{"fuzz", {"instances", "dominated", "hypothesis_failed", "lemma_violations"}, {}};
    f.add({std::to_string(fz.instances), std::to_string(fz.dominated), std::to_string(fz.hypothesis_failed),
           std::to_string(fz.lemma_violations)});
    art.csv("fuzz.csv", f);
    art.checks({check("fuzz LemmaViolation count", fz.lemma_violations == 0, fz.lemma_violations, 0,
                      fz.first_violation)});

    Plot plot{"majorant and samples", "t", "value", {ph}};
    if (!c.csv.empty()) {
        fs::path p = c.csv;
        if (p.is_relative() && !s.source_path.empty()) p = fs::path(s.source_path).parent_path() / p;
        ComparisonProblem prob = load_problem_csv(p.string(), psi, c.delta1);
        if (prob.phi_t.empty()) {
            // No φ column: compare against the majorant started at the first z value (or φ0).
            const double phi0 = std::max(c.phi0, prob.z.front());
            const MajorantSamples mm = solve_majorant(psi, c.delta1, phi0, prob.t0, prob.T);
            prob.phi_t = mm.t;
            prob.phi_v = mm.phi;
            prob.phi_dv = mm.dphi;
        }
        const Conclusion con = comparison_conclude(prob);
        CsvTable v{"comparison_verdict", {"verdict", "failed", "max_excess", "margin_z", "margin_phi"}, {}};
        v.add({con.verdict == Verdict::Dominated ? "Dominated" : "HypothesisFailed", con.failed, N(con.max_excess),
               N(con.report.margin_z), N(con.report.margin_phi)});
        art.csv("comparison.csv", v);
        plot.series.push_back(Series{"z samples", prob.t, prob.z, true});
        art.checks({check("lemma applied", true, con.max_excess, 0.0, to_string(con), true)});
    }
    art.svg("majorant.svg", plot);
}

void report(Artifacts& art) {
    CsvTable t = aggregate_verdicts(art.root());
    t.rows.erase(std::remove_if(t.rows.begin(), t.rows.end(), [](const auto& r) { return r[0] == "report"; }),
                 t.rows.end());
    art.csv("summary.csv", t);
    int fails = 0;
    for (const auto& row : t.rows)
        if (row[3] == "FAIL") ++fails;
    art.checks({check("aggregated verdicts", fails == 0, fails, 0, std::to_string(t.rows.size()) + " rows")});
}

}  // namespace

int run_command(const std::string& command, const Scenario& s, const RunOptions& o, std::ostream& out,
                std::ostream& err) {
    const auto names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end()) {
        err << "error: unknown command '" << command << "'\n";
        return kExitError;
    }
    try {
        Artifacts art(s, o, command);
        if (command == "carrier-check") carrier_check(s, art);
        else if (command == "solve") solve(s, art);
        else if (command == "growth-scan") growth(s, o, art);
        else if (command == "decay-scan") decay(s, o, art);
        else if (command == "poiseuille") poiseuille(s, art);
        else if (command == "constants") constants(s, art);
        else if (command == "comparison") comparison(s, art);
        else report(art);
        return art.finish(out, o.quiet);
    } catch (const std::exception& e) {
        err << "error in " << command << " (scenario " << s.name << "): " << e.what() << "\n";
    }
    return kExitError;
}

}  // namespace chanflow
