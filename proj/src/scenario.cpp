#include "chanflow/scenario.hpp"

#include "chanflow/errors.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace chanflow {

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    return boost::algorithm::join(parts, sep);
}

struct FamilyParams {
    std::vector<std::string> names;
    std::vector<double> defaults;
};

const std::map<std::string, FamilyParams>& family_table() {
    static const std::map<std::string, FamilyParams> table{
        {"straight", {{"d0"}, {1.0}}},
        {"linear_widen", {{"d0", "slope"}, {1.0, 0.5}}},
        {"power_law", {{"d0", "alpha"}, {1.0, 0.5}}},
        {"straight_outlet", {{"amplitude", "k", "width"}, {0.5, 0.0, 2.0}}},
        {"custom", {{}, {}}},
    };
    return table;
}

double to_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

long to_long(const std::string& s) {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

bool to_bool(const std::string& s) {
    const std::string v = boost::algorithm::to_lower_copy(s);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw std::invalid_argument("expected true/false");
}

using Setter = std::function<void(Scenario&, const std::string&)>;

/// Grammar: section -> key -> setter. Profile parameters are handled apart
/// because the valid keys depend on the family.
const std::map<std::string, std::map<std::string, Setter>>& grammar() {
    static const std::map<std::string, std::map<std::string, Setter>> g{
        {"scenario",
         {
             {"name", [](Scenario& s, const std::string& v) { s.name = v; }},
             {"seed", [](Scenario& s, const std::string& v) {
                  const long x = to_long(v);
                  if (x < 0) throw std::invalid_argument("seed >= 0");
                  s.seed = static_cast<std::uint64_t>(x);
              }},
         }},
        {"carrier",
         {
             {"phi", [](Scenario& s, const std::string& v) {
                  const auto l = parse_list(v);
                  if (l.empty()) throw std::invalid_argument("empty");
                  s.carrier.phi = l.front();
                  s.phi_list = l.size() > 1 ? l : std::vector<double>{};
              }},
             {"epsilon", [](Scenario& s, const std::string& v) { s.carrier.epsilon = to_double(v); }},
             {"cutoff", [](Scenario& s, const std::string& v) {
                  if (v == "quintic") s.carrier.cutoff = Cutoff(CutoffKind::Quintic);
                  else if (v == "exp_bump") s.carrier.cutoff = Cutoff(CutoffKind::ExpBump);
                  else throw std::invalid_argument("expected quintic or exp_bump");
              }},
         }},
        {"solver",
         {
             {"tol", [](Scenario& s, const std::string& v) { s.solver.tol = to_double(v); }},
             {"max_iter", [](Scenario& s, const std::string& v) { s.solver.max_iter = static_cast<int>(to_long(v)); }},
             {"relax", [](Scenario& s, const std::string& v) { s.solver.relax = to_double(v); }},
             {"continuation", [](Scenario& s, const std::string& v) { s.solver.continuation = parse_list(v); }},
             {"linear_solver", [](Scenario& s, const std::string& v) {
                  if (v == "banded_direct") s.solver.linear_solver = LinearSolverKind::BandedDirect;
                  else if (v == "krylov_ilu") s.solver.linear_solver = LinearSolverKind::KrylovILU;
                  else throw std::invalid_argument("expected banded_direct or krylov_ilu");
              }},
             {"hybrid_upwind", [](Scenario& s, const std::string& v) { s.solver.hybrid_upwind = to_bool(v); }},
             {"a", [](Scenario& s, const std::string& v) { s.a = to_double(v); }},
             {"b", [](Scenario& s, const std::string& v) { s.b = to_double(v); }},
             {"nx", [](Scenario& s, const std::string& v) { s.nx = static_cast<int>(to_long(v)); }},
             {"ny", [](Scenario& s, const std::string& v) { s.ny = static_cast<int>(to_long(v)); }},
         }},
        {"harness",
         {
             {"t_list", [](Scenario& s, const std::string& v) { s.t_list = parse_list(v); }},
             {"decay_t", [](Scenario& s, const std::string& v) { s.decay_t = parse_list(v); }},
             {"T_list", [](Scenario& s, const std::string& v) { s.T_list = parse_list(v); }},
             {"outlet_k", [](Scenario& s, const std::string& v) { s.outlet_k = to_double(v); }},
             {"spread_bound", [](Scenario& s, const std::string& v) { s.thresholds.spread_bound = to_double(v); }},
             {"lower_ratio_min", [](Scenario& s, const std::string& v) { s.thresholds.lower_ratio_min = to_double(v); }},
             {"decay_ratio_bound",
              [](Scenario& s, const std::string& v) { s.thresholds.decay_ratio_bound = to_double(v); }},
             {"plateau_fraction",
              [](Scenario& s, const std::string& v) { s.thresholds.plateau_fraction = to_double(v); }},
             {"plateau_floor", [](Scenario& s, const std::string& v) { s.thresholds.plateau_floor = to_double(v); }},
             {"uniqueness_tol", [](Scenario& s, const std::string& v) { s.thresholds.uniqueness_tol = to_double(v); }},
             {"near_wall_delta",
              [](Scenario& s, const std::string& v) { s.thresholds.near_wall_delta = to_double(v); }},
             {"cells_per_length",
              [](Scenario& s, const std::string& v) { s.policy.cells_per_length = to_double(v); }},
             {"policy_ny", [](Scenario& s, const std::string& v) { s.policy.ny = static_cast<int>(to_long(v)); }},
             {"extra_margin", [](Scenario& s, const std::string& v) { s.policy.extra_margin = to_double(v); }},
             {"constants_nx",
              [](Scenario& s, const std::string& v) { s.constants_resolution.nx = static_cast<int>(to_long(v)); }},
             {"constants_ny",
              [](Scenario& s, const std::string& v) { s.constants_resolution.ny = static_cast<int>(to_long(v)); }},
         }},
        {"comparison",
         {
             {"c1", [](Scenario& s, const std::string& v) { s.comparison.c1 = to_double(v); }},
             {"c2", [](Scenario& s, const std::string& v) { s.comparison.c2 = to_double(v); }},
             {"m", [](Scenario& s, const std::string& v) { s.comparison.m = to_double(v); }},
             {"delta1", [](Scenario& s, const std::string& v) { s.comparison.delta1 = to_double(v); }},
             {"phi0", [](Scenario& s, const std::string& v) { s.comparison.phi0 = to_double(v); }},
             {"T", [](Scenario& s, const std::string& v) { s.comparison.T = to_double(v); }},
             {"csv", [](Scenario& s, const std::string& v) { s.comparison.csv = v; }},
             {"fuzz_instances",
              [](Scenario& s, const std::string& v) { s.comparison.fuzz_instances = static_cast<int>(to_long(v)); }},
         }},
        {"output",
         {
             {"dir", [](Scenario& s, const std::string& v) { s.out_dir = v; }},
             {"svg", [](Scenario& s, const std::string& v) { s.svg = to_bool(v); }},
             {"fields", [](Scenario& s, const std::string& v) { s.fields = to_bool(v); }},
         }},
    };
    return g;
}

std::string env_name(const std::string& section, const std::string& key) {
    return boost::algorithm::to_upper_copy(std::string(kEnvPrefix) + section + "_" + key);
}

void validate_scenario(Scenario& s, std::vector<std::string>& errors) {
    auto guard = [&](const std::string& field, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            const std::string tag = "ValidationError: ";
            if (msg.rfind(tag, 0) == 0) msg = msg.substr(tag.size());
            errors.push_back(field + ": " + msg);
        } catch (const std::exception& e) {
            errors.push_back(field + ": " + e.what());
        }
    };
    guard("carrier", [&] { s.carrier.check(); });
    for (double p : s.phi_list)
        if (!(p >= 0.0)) errors.push_back("carrier.phi: every flux value must be >= 0");
    guard("solver", [&] { s.solver.check(); });
    guard("harness", [&] { s.thresholds.check(); });
    if (!(s.b > s.a)) errors.push_back("solver.b: must exceed solver.a");
    if (s.nx < 8 || s.ny < 8) errors.push_back("solver.nx/ny: at least 8 cells each");
    if (!(s.policy.cells_per_length > 0.0)) errors.push_back("harness.cells_per_length: must be positive");
    if (s.policy.ny < 8) errors.push_back("harness.policy_ny: at least 8");
    if (s.constants_resolution.nx < 4 || s.constants_resolution.ny < 4) {
        errors.push_back("harness.constants_nx/ny: at least 4");
    }
    auto increasing = [&](const std::vector<double>& v, const std::string& field) {
        if (v.empty()) errors.push_back(field + ": must not be empty");
        for (std::size_t k = 1; k < v.size(); ++k)
            if (!(v[k] > v[k - 1])) {
                errors.push_back(field + ": must be strictly increasing");
                break;
            }
    };
    increasing(s.t_list, "harness.t_list");
    increasing(s.decay_t, "harness.decay_t");
    increasing(s.T_list, "harness.T_list");
    if (!(s.comparison.delta1 > 0.0 && s.comparison.delta1 < 1.0)) errors.push_back("comparison.delta1: ∈ (0,1)");
    if (!(s.comparison.m > 1.0)) errors.push_back("comparison.m: must exceed 1");
    if (s.comparison.fuzz_instances < 1) errors.push_back("comparison.fuzz_instances: at least 1");
    if (s.out_dir.empty()) errors.push_back("output.dir: must not be empty");
    if (family_table().count(s.profile.family)) guard("profile", [&] { (void)s.profile.build(); });
}

}  // namespace

ScenarioErrors::ScenarioErrors(std::vector<std::string> messages)
    : Error("ValidationError", join(messages, "; ")), messages_(std::move(messages)) {}

ChannelProfile ProfileSpec::build() const {
    if (family == "straight") return ChannelProfile::straight(params.at("d0"));
    if (family == "linear_widen") return ChannelProfile::linear_widen(params.at("d0"), params.at("slope"));
    if (family == "power_law") return ChannelProfile::power_law(params.at("d0"), params.at("alpha"));
    if (family == "straight_outlet") {
        return ChannelProfile::straight_outlet(params.at("amplitude"), params.at("k"), params.at("width"));
    }
    if (family == "custom") {
        if (f1.empty() || f2.empty()) throw ValidationError("custom profile needs f1 and f2");
        return ChannelProfile::custom(f1, f2);
    }
    throw ValidationError("unknown family '" + family + "'; known: " + join(known_families(), ", "));
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, text, boost::algorithm::is_any_of(","));
    std::vector<double> out;
    for (auto& p : parts) {
        boost::algorithm::trim(p);
        if (p.empty()) continue;
        out.push_back(to_double(p));
    }
    return out;
}

std::vector<std::string> scenario_keys() {
    std::vector<std::string> keys;
    for (const auto& [section, entries] : grammar())
        for (const auto& [key, setter] : entries) keys.push_back(section + "." + key);
    keys.push_back("profile.family");
    keys.push_back("profile.f1");
    keys.push_back("profile.f2");
    std::set<std::string> params;
    for (const auto& [family, fp] : family_table())
        for (const auto& n : fp.names) params.insert(n);
    for (const auto& n : params) keys.push_back("profile." + n);
    return keys;
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin, bool use_environment) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(static_cast<int>(e.line()), e.message());
    }

    Scenario s;
    s.source_path = origin;
    s.source_text = text;
    std::vector<std::string> errors;

    // Collect raw values, then let the environment override them.
    std::map<std::string, std::map<std::string, std::string>> raw;
    for (const auto& [section, node] : tree) {
        if (node.empty() && !node.data().empty()) {
            errors.push_back(section + ": key outside any section");
            continue;
        }
        for (const auto& [key, value] : node) raw[section][key] = boost::algorithm::trim_copy(value.data());
    }
    if (use_environment) {
        for (const auto& full : scenario_keys()) {
            const auto dot = full.find('.');
            const std::string section = full.substr(0, dot), key = full.substr(dot + 1);
            if (const char* v = std::getenv(env_name(section, key).c_str())) raw[section][key] = v;
        }
    }

    const auto& g = grammar();
    for (const auto& [section, entries] : raw) {
        if (section == "profile") continue;
        const auto sec = g.find(section);
        if (sec == g.end()) {
            errors.push_back("[" + section + "]: unknown section");
            continue;
        }
        for (const auto& [key, value] : entries) {
            const auto it = sec->second.find(key);
            if (it == sec->second.end()) {
                errors.push_back(section + "." + key + ": unknown key");
                continue;
            }
            try {
                it->second(s, value);
            } catch (const std::exception& e) {
                errors.push_back(section + "." + key + ": invalid value '" + value + "' (" + e.what() + ")");
            }
        }
    }

    // Profile: the family decides which parameters are allowed.
    const auto& prof = raw["profile"];
    if (auto it = prof.find("family"); it != prof.end()) s.profile.family = it->second;
    const auto fam = family_table().find(s.profile.family);
    if (fam == family_table().end()) {
        errors.push_back("profile.family: unknown family '" + s.profile.family + "'; known: " +
                         join(known_families(), ", "));
    } else {
        for (std::size_t k = 0; k < fam->second.names.size(); ++k)
            s.profile.params[fam->second.names[k]] = fam->second.defaults[k];
        for (const auto& [key, value] : prof) {
            if (key == "family") continue;
            if (s.profile.family == "custom" && (key == "f1" || key == "f2")) {
                (key == "f1" ? s.profile.f1 : s.profile.f2) = value;
                continue;
            }
            if (!s.profile.params.count(key)) {
                errors.push_back("profile." + key + ": not a parameter of family " + s.profile.family);
                continue;
            }
            try {
                s.profile.params[key] = to_double(value);
            } catch (const std::exception&) {
                errors.push_back("profile." + key + ": invalid number '" + value + "'");
            }
        }
    }

    validate_scenario(s, errors);
    if (!errors.empty()) throw ScenarioErrors(std::move(errors));
    return s;
}

Scenario parse_scenario(const std::string& path, bool use_environment) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path, use_environment);
}

}  // namespace chanflow
