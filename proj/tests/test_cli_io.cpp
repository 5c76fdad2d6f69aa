#include "chanflow/errors.hpp"
#include "chanflow/report_io.hpp"
#include "chanflow/runner.hpp"
#include "chanflow/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace chanflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("chanflow_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> error_messages(const std::string& text) {
    try {
        parse_scenario_text(text, "<test>", false);
    } catch (const ScenarioErrors& e) {
        return e.messages();
    }
    return {};
}

}  // namespace

TEST_CASE("scenario defaults and values") {
    const Scenario d = parse_scenario_text("", "<empty>", false);
    CHECK(d.profile.family == "straight");
    CHECK(d.carrier.phi == 1.0);
    CHECK(d.carrier.epsilon == 0.5);
    CHECK(d.nx == 256);

    const Scenario s = parse_scenario_text(
        "[scenario]\nname = pl\n[profile]\nfamily = power_law\nd0 = 1\nalpha = 0.5\n"
        "[carrier]\nphi = 0.5, 1, 2\ncutoff = exp_bump\n[harness]\nt_list = 2, 4\n",
        "<test>", false);
    CHECK(s.name == "pl");
    CHECK(s.profile.build().family() == ProfileFamily::PowerLaw);
    CHECK(s.phi_list == std::vector<double>{0.5, 1.0, 2.0});
    CHECK(s.carrier.cutoff.kind() == CutoffKind::ExpBump);
    CHECK(s.t_list == std::vector<double>{2.0, 4.0});
}

TEST_CASE("scenario errors are collected") {
    const auto eps = error_messages("[carrier]\nepsilon = 1.5\n");
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].find("epsilon") != std::string::npos);

    const auto fam = error_messages("[profile]\nfamily = spiral\n");
    REQUIRE(fam.size() == 1);
    CHECK(fam[0].find("power_law") != std::string::npos);

    const auto many = error_messages("[solver]\nnx = abc\nbogus = 1\n[nowhere]\nx = 1\n[carrier]\nphi = -1\n");
    CHECK(many.size() >= 4);

    try {
        parse_scenario_text("[carrier]\nphi 1\n", "<test>", false);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("environment overrides file values") {
    ::setenv("CHANFLOW_CARRIER_PHI", "3.5", 1);
    const Scenario s = parse_scenario_text("[carrier]\nphi = 1\n", "<test>", true);
    CHECK(s.carrier.phi == 3.5);
    const Scenario t = parse_scenario_text("[carrier]\nphi = 1\n", "<test>", false);
    CHECK(t.carrier.phi == 1.0);
    ::unsetenv("CHANFLOW_CARRIER_PHI");
}

TEST_CASE("CSV round trip") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
    CHECK(std::stod(format_number(M_PI)) == M_PI);
    const fs::path dir = scratch("csv");
    CsvTable t{"demo", {"x", "label"}, {}};
    t.add({format_number(2.5), "a,b"});
    t.add({format_number(-1e-20), "plain"});
    write_file_atomic(dir / "t.csv", t.str());
    const CsvTable r = read_csv(dir / "t.csv");
    CHECK(r.schema == "demo");
    CHECK(r.columns == t.columns);
    CHECK(r.rows == t.rows);
    CHECK(slurp(dir / "t.csv").rfind("# schema: chanflow.demo v1\n", 0) == 0);
}

TEST_CASE("SHA-256 digest") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("field file round trip") {
    CarrierParams c;
    const FlowState s = solve_steady(ChannelProfile::straight(1.0), c, -2, 2, 16, 8);
    const fs::path dir = scratch("field");
    write_field_file(s, dir / "field.txt");
    const FieldFile f = read_field_file(dir / "field.txt");
    CHECK(f.nx == 16);
    CHECK(f.ny == 8);
    CHECK(f.a == -2.0);
    CHECK(f.phi == 1.0);
    CHECK(f.psi == s.psi);
    CHECK(f.u1 == s.u1);
    std::ofstream(dir / "bad.txt") << "something else\n";
    CHECK_THROWS_AS(read_field_file(dir / "bad.txt"), ParseError);
}

TEST_CASE("SVG output is self-contained") {
    Plot p{"demo", "x", "y", {Series{"line", {0, 1, 2}, {1, 2, 4}}}};
    p.log_y = true;
    const std::string svg = render_svg(p);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("<script") == std::string::npos);
    CHECK(render_svg(p) == svg);
}

TEST_CASE("command runner: artifacts, manifest and exit codes") {
    const fs::path dir = scratch("runner");
    Scenario s = parse_scenario_text("[scenario]\nname = t\n[carrier]\nphi = 1\n", "<test>", false);
    RunOptions o;
    o.out_dir = dir.string();
    o.quiet = true;
    std::ostringstream out, err;
    CHECK(run_command("carrier-check", s, o, out, err) == kExitPass);
    CHECK(fs::exists(dir / "carrier-check" / "carrier_summary.csv"));
    CHECK(fs::exists(dir / "carrier-check" / "verdicts.csv"));
    CHECK(fs::exists(dir / "carrier-check" / "manifest.json"));
    CHECK(read_csv(dir / "carrier-check" / "verdicts.csv").schema == "verdicts");

    CHECK(run_command("report", s, o, out, err) == kExitPass);
    const CsvTable summary = read_csv(dir / "report" / "summary.csv");
    CHECK_FALSE(summary.rows.empty());

    Scenario bad = parse_scenario_text(
        "[profile]\nfamily = custom\nf1 = -abs(t)\nf2 = abs(t)\n[harness]\nt_list = 1, 2\n", "<test>", false);
    std::ostringstream err2;
    CHECK(run_command("growth-scan", bad, o, out, err2) == kExitError);
    CHECK(err2.str().find("AssumptionViolation") != std::string::npos);

    CHECK(run_command("no-such-command", s, o, out, err) == kExitError);
}
