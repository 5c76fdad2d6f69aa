#include "chanflow/report_io.hpp"

#include "chanflow/errors.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace chanflow {

namespace fs = std::filesystem;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("CSV row width differs from header");
    rows.push_back(std::move(row));
}

namespace {

std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string CsvTable::str() const {
    std::ostringstream os;
    os << "# schema: chanflow." << schema << " v" << kCsvSchemaVersion << "\n";
    for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << quote(columns[k]);
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << quote(row[k]);
        os << "\n";
    }
    return os.str();
}

CsvTable read_csv(const fs::path& path) {
    std::istringstream in(read_all(path));
    CsvTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "# schema: chanflow.";
            if (line.rfind(tag, 0) == 0) t.schema = line.substr(tag.size(), line.rfind(" v") - tag.size());
            continue;
        }
        auto cells = split_csv(line);
        if (t.columns.empty()) {
            t.columns = std::move(cells);
        } else {
            if (cells.size() != t.columns.size()) throw ParseError(lineno, "row width differs from header");
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream os;
    for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
    return os.str();
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string render_svg(const Plot& plot) {
    const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    auto tx = [&](double x) { return plot.log_x ? std::log10(x) : x; };
    auto ty = [&](double y) { return plot.log_y ? std::log10(y) : y; };
    auto usable = [&](double x, double y) {
        return std::isfinite(tx(x)) && std::isfinite(ty(y)) && (!plot.log_x || x > 0) && (!plot.log_y || y > 0);
    };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : plot.series)
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
            if (!usable(s.x[k], s.y[k])) continue;
            x0 = std::min(x0, tx(s.x[k]));
            x1 = std::max(x1, tx(s.x[k]));
            y0 = std::min(y0, ty(s.y[k]));
            y1 = std::max(y1, ty(s.y[k]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double py = 0.05 * (y1 - y0);
    y0 -= py;
    y1 += py;
    auto sx = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
    auto sy = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };
    auto label = [](double v, bool log) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", log ? std::pow(10.0, v) : v);
        return std::string(buf);
    };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(plot.title)
       << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        const double px = L + (W - L - R) * k / 4.0, pyy = H - B - (H - T - B) * k / 4.0;
        os << "<text x=\"" << fmt2(px) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
           << xml_escape(label(xv, plot.log_x)) << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << fmt2(pyy + 4) << "\" text-anchor=\"end\">"
           << xml_escape(label(yv, plot.log_y)) << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xml_escape(plot.xlabel)
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2
       << ")\">" << xml_escape(plot.ylabel) << "</text>\n";
    for (std::size_t q = 0; q < plot.series.size(); ++q) {
        const auto& s = plot.series[q];
        const char* c = colors[q % 6];
        if (s.scatter) {
            for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
                if (usable(s.x[k], s.y[k]))
                    os << "<circle cx=\"" << fmt2(sx(s.x[k])) << "\" cy=\"" << fmt2(sy(s.y[k]))
                       << "\" r=\"3\" fill=\"" << c << "\"/>\n";
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k)
                if (usable(s.x[k], s.y[k])) os << fmt2(sx(s.x[k])) << "," << fmt2(sy(s.y[k])) << " ";
            os << "\"/>\n";
        }
        os << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 16 * q << "\" fill=\"" << c << "\">"
           << xml_escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Field files

void write_field_file(const FlowState& s, const fs::path& path) {
    const Grid& g = s.grid;
    std::ostringstream os;
    os << "chanflow-field v1\n";
    os << "profile " << g.profile().id() << "\n";
    os << "a " << format_number(g.a) << "\nb " << format_number(g.b) << "\n";
    os << "nx " << g.nx << "\nny " << g.ny << "\n";
    os << "phi " << format_number(s.params.phi) << "\nepsilon " << format_number(s.params.epsilon) << "\n";
    os << "data psi omega u1 u2\n";
    for (int k = 0; k < g.size(); ++k) {
        os << format_number(s.psi[k]) << ' ' << format_number(s.omega[k]) << ' ' << format_number(s.u1[k]) << ' '
           << format_number(s.u2[k]) << '\n';
    }
    write_file_atomic(path, os.str());
}

FieldFile read_field_file(const fs::path& path) {
    std::istringstream in(read_all(path));
    std::string line;
    int lineno = 1;
    if (!std::getline(in, line) || line != "chanflow-field v1") throw ParseError(1, "not a chanflow field file");
    FieldFile f;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "data") break;
        std::string rest;
        std::getline(ls >> std::ws, rest);
        try {
            if (key == "profile") f.profile_id = rest;
            else if (key == "a") f.a = std::stod(rest);
            else if (key == "b") f.b = std::stod(rest);
            else if (key == "nx") f.nx = std::stoi(rest);
            else if (key == "ny") f.ny = std::stoi(rest);
            else if (key == "phi") f.phi = std::stod(rest);
            else if (key == "epsilon") f.epsilon = std::stod(rest);
            else throw ParseError(lineno, "unknown header key '" + key + "'");
        } catch (const std::logic_error&) {
            throw ParseError(lineno, "bad value for '" + key + "'");
        }
    }
    const int n = (f.nx + 1) * (f.ny + 1);
    for (int k = 0; k < n; ++k) {
        double p, o, u, v;
        if (!(in >> p >> o >> u >> v)) throw ParseError(lineno + k + 1, "truncated field data");
        f.psi.push_back(p);
        f.omega.push_back(o);
        f.u1.push_back(u);
        f.u2.push_back(v);
    }
    return f;
}

CsvTable residual_table(const FlowState& s) {
    CsvTable t{"residuals", {"iteration", "residual"}, {}};
    for (const auto& e : s.residual_history) t.add({std::to_string(e.iteration), format_number(e.residual)});
    return t;
}

CsvTable checks_table(const std::string& command, const std::vector<Check>& checks) {
    CsvTable t{"verdicts", {"command", "check", "verdict", "value", "bound", "detail"}, {}};
    for (const auto& c : checks) {
        const std::string v = c.informational ? (c.pass ? "INFO-PASS" : "INFO-FAIL") : (c.pass ? "PASS" : "FAIL");
        t.add({command, c.name, v, format_number(c.value), format_number(c.bound), c.detail});
    }
    return t;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& scenario_path,
                    const std::string& scenario_text, const std::vector<fs::path>& outputs) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["scenario"] = {{"path", scenario_path}, {"sha256", sha256_hex(scenario_text)}};
    std::string combined = sha256_hex(scenario_text);
    auto files = nlohmann::ordered_json::array();
    std::vector<fs::path> sorted = outputs;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& p : sorted) {
        const std::string digest = sha256_hex(read_all(p));
        files.push_back({{"file", fs::relative(p, dir).generic_string()}, {"sha256", digest}});
        combined += digest;
    }
    j["outputs"] = files;
    j["combined_sha256"] = sha256_hex(combined);
    j["versions"] = {
        {"chanflow", "1.0.0"},
        {"csv_schema", kCsvSchemaVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"openssl", OPENSSL_VERSION_TEXT},
    };
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream ts;
    ts << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    j["timestamp"] = ts.str();
    write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

CsvTable aggregate_verdicts(const fs::path& root) {
    CsvTable out{"summary", {"run", "command", "check", "verdict", "value", "bound", "detail"}, {}};
    if (!fs::is_directory(root)) throw ValidationError("no such directory '" + root.string() + "'");
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && fs::exists(e.path() / "verdicts.csv")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        const CsvTable t = read_csv(d / "verdicts.csv");
        for (const auto& row : t.rows) {
            std::vector<std::string> r{d.filename().string()};
            r.insert(r.end(), row.begin(), row.end());
            if (r.size() == out.columns.size()) out.add(std::move(r));
        }
    }
    return out;
}

}  // namespace chanflow
