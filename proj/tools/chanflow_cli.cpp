// Command-line entry point: chanflow_cli <command> --scenario FILE [options]

#include "chanflow/errors.hpp"
#include "chanflow/runner.hpp"
#include "chanflow/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
    using namespace chanflow;

    CLI::App app{"Steady channel-flow laboratory: carrier checks, solves, estimate scans and reports"};
    app.require_subcommand(1, 1);

    std::string scenario_path, out_dir, grid;
    int threads = 1;
    bool quiet = false;
    for (const auto& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name, "run " + name);
        sub->add_option("--scenario", scenario_path, "scenario INI file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
        sub->add_option("--threads", threads, "worker threads for flux fan-out")->check(CLI::PositiveNumber);
        sub->add_option("--grid", grid, "grid override nx,ny (solver grid and harness ny)");
        sub->add_flag("--quiet", quiet, "print nothing on success");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    Scenario scenario;
    try {
        scenario = parse_scenario(scenario_path);
        if (!grid.empty()) {
            const auto v = parse_list(grid);
            if (v.size() != 2 || v[0] < 8 || v[1] < 8 || v[0] != int(v[0]) || v[1] != int(v[1])) {
                throw ValidationError("--grid expects two integers >= 8 as nx,ny");
            }
            scenario.nx = static_cast<int>(v[0]);
            scenario.ny = static_cast<int>(v[1]);
            scenario.policy.ny = scenario.ny;
        }
    } catch (const ScenarioErrors& e) {
        std::cerr << "scenario " << scenario_path << " has " << e.messages().size() << " error(s):\n";
        for (const auto& m : e.messages()) std::cerr << "  " << m << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "scenario " << scenario_path << ": " << e.what() << "\n";
        return kExitError;
    }

    RunOptions options;
    options.out_dir = out_dir;
    options.threads = threads;
    options.quiet = quiet;
    std::ostringstream sink;
    return run_command(command, scenario, options, quiet ? sink : std::cout, std::cerr);
}
