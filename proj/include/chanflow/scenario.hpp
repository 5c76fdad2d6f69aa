#pragma once

#include "chanflow/errors.hpp"
#include "chanflow/estimate_harness.hpp"
#include "chanflow/flux_carrier.hpp"
#include "chanflow/functional_inequalities.hpp"
#include "chanflow/geometry.hpp"
#include "chanflow/ns_solver.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace chanflow {

/// Family name plus numeric parameters, or two wall expressions for `custom`.
struct ProfileSpec {
    std::string family = "straight";
    std::map<std::string, double> params;
    std::string f1, f2;
    ChannelProfile build() const;
};

struct ComparisonSpec {
    double c1 = 1.0, c2 = 1.0, m = 1.5;
    double delta1 = 0.5;
    double phi0 = 1.0;
    double T = 5.0;
    std::string csv;   ///< optional t,z[,phi] input; relative to the scenario file
    int fuzz_instances = 200;
};

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    ProfileSpec profile;
    CarrierParams carrier;
    std::vector<double> phi_list;  ///< extra flux values fanned out by scans; empty = carrier.phi only
    SolverConfig solver;
    double a = -10.0, b = 10.0;
    int nx = 256, ny = 32;
    HarnessThresholds thresholds;
    GridPolicy policy;
    std::vector<double> t_list{5, 10, 20, 40};
    std::vector<double> decay_t{10, 15, 20, 25, 30, 35, 40};
    std::vector<double> T_list{10, 20, 40};
    double outlet_k = 0.0;
    Resolution constants_resolution{64, 64};
    ComparisonSpec comparison;
    std::string out_dir = "out";
    bool svg = true;
    bool fields = false;
    std::string source_path;  ///< file the scenario was read from
    std::string source_text;  ///< its exact bytes (hashed into the manifest)
};

/// Every error found while reading a scenario, in file order.
class ScenarioErrors : public Error {
public:
    explicit ScenarioErrors(std::vector<std::string> messages);
    const std::vector<std::string>& messages() const noexcept { return messages_; }

private:
    std::vector<std::string> messages_;
};

/// Environment variables CHANFLOW_<SECTION>_<KEY> override file values.
inline constexpr const char* kEnvPrefix = "CHANFLOW_";

/// Reads an INI scenario (sections [scenario] [profile] [carrier] [solver]
/// [harness] [comparison] [output]). Syntax errors throw ParseError with the
/// line; otherwise all unknown keys, malformed values and failed range checks
/// are collected and thrown together as ScenarioErrors.
Scenario parse_scenario(const std::string& path, bool use_environment = true);

/// Same from text; `origin` names the source in messages.
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<text>",
                             bool use_environment = true);

/// All keys the grammar accepts, as "section.key".
std::vector<std::string> scenario_keys();

std::vector<double> parse_list(const std::string& text);

}  // namespace chanflow
