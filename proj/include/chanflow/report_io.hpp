#pragma once

#include "chanflow/estimate_harness.hpp"
#include "chanflow/ns_solver.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace chanflow {

inline constexpr int kCsvSchemaVersion = 1;

/// Table written as: "# schema: chanflow.<schema> v<version>", a header row,
/// then data rows. Numbers are formatted with format_number, so equal inputs
/// give equal bytes.
struct CsvTable {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string str() const;
};

/// Shortest round-trip decimal form ("%.17g" trimmed to the first exact one).
std::string format_number(double v);

/// Parses a CSV written by CsvTable (or any headed CSV with '#' comments).
CsvTable read_csv(const std::filesystem::path& path);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);

struct Series {
    std::string name;
    std::vector<double> x, y;
    bool scatter = false;
};

struct Plot {
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
    bool log_x = false, log_y = false;
};

/// Self-contained SVG line/scatter plot (no external fonts or scripts).
std::string render_svg(const Plot& plot);

/// Text field file: "key value" header lines up to "data", then one row per
/// node (row-major in Grid::index order) with psi omega u1 u2.
void write_field_file(const FlowState& state, const std::filesystem::path& path);

struct FieldFile {
    std::string profile_id;
    double a = 0, b = 0, phi = 0, epsilon = 0;
    int nx = 0, ny = 0;
    std::vector<double> psi, omega, u1, u2;
};
FieldFile read_field_file(const std::filesystem::path& path);

CsvTable residual_table(const FlowState& state);
CsvTable checks_table(const std::string& command, const std::vector<Check>& checks);

/// Manifest JSON: command, scenario path and hash, SHA-256 of every output,
/// a combined hash over scenario and outputs, library versions and a UTC
/// timestamp. Written atomically.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const std::string& scenario_path,
                    const std::string& scenario_text, const std::vector<std::filesystem::path>& outputs);

/// Merges <root>/*/verdicts.csv into one table (directories in name order).
CsvTable aggregate_verdicts(const std::filesystem::path& root);

}  // namespace chanflow
