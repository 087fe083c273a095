#include "surfsig/cli_io.hpp"

#include "surfsig/free_lie.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace surfsig {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

int log_verbosity() {
    const char* v = std::getenv("SURFSIG_LOG");
    return v ? std::atoi(v) : 0;
}

}  // namespace

// ---- run configuration ------------------------------------------------

InputKind input_kind_of(const std::string& name) {
    if (name == "grid-csv") return InputKind::grid_csv;
    if (name == "grid-json") return InputKind::grid_json;
    if (name == "path-csv") return InputKind::path_csv;
    if (name == "linear-matrix-json") return InputKind::linear_matrix_json;
    throw std::invalid_argument("unknown input kind '" + name + "'");
}

const char* input_kind_name(InputKind k) {
    switch (k) {
        case InputKind::grid_csv: return "grid-csv";
        case InputKind::grid_json: return "grid-json";
        case InputKind::path_csv: return "path-csv";
        case InputKind::linear_matrix_json: return "linear-matrix-json";
    }
    return "?";
}

int max_level() { return 5; }

void validate(const RunConfig& c) {
    if (c.n < 1) throw std::invalid_argument("config: need n >= 1");
    if (c.level < 2 || c.level > max_level())
        throw std::invalid_argument("config: level must be between 2 and " +
                                    std::to_string(max_level()));
    if (c.rect.s1 < 0 || c.rect.s2 < 0 || c.rect.t1 > 1 || c.rect.t2 > 1 ||
        c.rect.s1 > c.rect.t1 || c.rect.s2 > c.rect.t2)
        throw std::invalid_argument("config: rectangle must sit inside [0,1]^2");
    if (c.quadrature != "auto" && c.quadrature != "symbolic" && c.quadrature != "midpoint")
        throw std::invalid_argument("config: unknown quadrature id '" + c.quadrature + "'");
    if (!(c.tol > 0)) throw std::invalid_argument("config: tolerance must be positive");
    if (c.n_max < 1) throw std::invalid_argument("config: iteration cap must be at least 1");
}

// ---- ingestion ---------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

bool nonfinite_token(std::string t) {
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!t.empty() && (t[0] == '+' || t[0] == '-')) t.erase(0, 1);
    return t == "nan" || t == "inf" || t == "infinity";
}

Rat value_token(const std::string& tok, const std::string& where) {
    if (nonfinite_token(tok))
        throw IngestError(IngestCode::bad_number, "non-finite value '" + tok + "' " + where);
    try {
        return rat_parse(tok);
    } catch (const std::invalid_argument&) {
        throw IngestError(IngestCode::bad_number, "bad value '" + tok + "' " + where);
    }
}

long int_token(const std::string& tok, const std::string& where) {
    try {
        size_t used = 0;
        long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw IngestError(IngestCode::format, "bad integer '" + tok + "' " + where);
    }
}

SurfaceGrid grid_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        rows.push_back(split_csv(line));
    }
    if (rows.empty()) throw IngestError(IngestCode::format, "empty grid file");
    if (rows[0].size() != 3)
        throw IngestError(IngestCode::format, "grid header must be 'm1,m2,n'");
    long m1 = int_token(rows[0][0], "in the header");
    long m2 = int_token(rows[0][1], "in the header");
    long n = int_token(rows[0][2], "in the header");
    if (m1 < 1 || m2 < 1 || n < 1)
        throw IngestError(IngestCode::format, "grid header must declare positive m1, m2, n");

    SurfaceGrid g;
    g.m1 = static_cast<int>(m1);
    g.m2 = static_cast<int>(m2);
    g.n = static_cast<int>(n);
    g.node.assign(m1 + 1, std::vector<std::vector<Rat>>(m2 + 1));
    std::vector<std::vector<char>> seen(m1 + 1, std::vector<char>(m2 + 1, 0));

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (static_cast<long>(f.size()) != 2 + n)
            throw IngestError(IngestCode::shape_mismatch,
                              "row " + std::to_string(r) + " has " + std::to_string(f.size()) +
                                  " fields, expected " + std::to_string(2 + n));
        long a = int_token(f[0], "in row " + std::to_string(r));
        long b = int_token(f[1], "in row " + std::to_string(r));
        if (a < 0 || a > m1 || b < 0 || b > m2)
            throw IngestError(IngestCode::shape_mismatch,
                              "node (" + std::to_string(a) + "," + std::to_string(b) +
                                  ") outside the declared grid");
        if (seen[a][b])
            throw IngestError(IngestCode::duplicate_node, "duplicate node (" + std::to_string(a) +
                                                              "," + std::to_string(b) + ")");
        seen[a][b] = 1;
        std::string where =
            "at node (" + std::to_string(a) + "," + std::to_string(b) + ")";
        std::vector<Rat> x(n);
        for (long i = 0; i < n; ++i) x[i] = value_token(f[2 + i], where);
        g.node[a][b] = std::move(x);
    }
    for (long a = 0; a <= m1; ++a)
        for (long b = 0; b <= m2; ++b)
            if (!seen[a][b])
                throw IngestError(IngestCode::missing_node, "incomplete grid at (" +
                                                                std::to_string(a) + "," +
                                                                std::to_string(b) + ")");
    return g;
}

Rat value_json(const json& j, const std::string& where) {
    if (j.is_string()) return value_token(j.get<std::string>(), where);
    if (j.is_number_integer()) return Rat(j.get<long>());
    if (j.is_number_float()) {
        double d = j.get<double>();
        if (!std::isfinite(d))
            throw IngestError(IngestCode::bad_number, "non-finite value " + where);
        return rat_of_double(d);
    }
    throw IngestError(IngestCode::bad_number, "value is not a number " + where);
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IngestError(IngestCode::format, std::string("bad JSON: ") + e.what());
    }
}

SurfaceGrid grid_from_json(const std::string& text) {
    json j = parse_json(text);
    if (!j.is_object() || !j.contains("m1") || !j.contains("m2") || !j.contains("n") ||
        !j.contains("nodes"))
        throw IngestError(IngestCode::format, "grid JSON needs keys m1, m2, n, nodes");
    SurfaceGrid g;
    try {
        g.m1 = j["m1"].get<int>();
        g.m2 = j["m2"].get<int>();
        g.n = j["n"].get<int>();
    } catch (const json::exception&) {
        throw IngestError(IngestCode::format, "grid JSON sizes must be integers");
    }
    if (g.m1 < 1 || g.m2 < 1 || g.n < 1)
        throw IngestError(IngestCode::format, "grid JSON must declare positive m1, m2, n");
    const json& nodes = j["nodes"];
    if (!nodes.is_array() || static_cast<int>(nodes.size()) > g.m1 + 1)
        throw IngestError(IngestCode::shape_mismatch,
                          "nodes must hold " + std::to_string(g.m1 + 1) + " columns");
    if (static_cast<int>(nodes.size()) < g.m1 + 1)
        throw IngestError(IngestCode::missing_node, "incomplete grid at (" +
                                                        std::to_string(nodes.size()) + ",0)");
    g.node.assign(g.m1 + 1, std::vector<std::vector<Rat>>(g.m2 + 1));
    for (int a = 0; a <= g.m1; ++a) {
        const json& col = nodes[a];
        if (!col.is_array() || static_cast<int>(col.size()) > g.m2 + 1)
            throw IngestError(IngestCode::shape_mismatch,
                              "column " + std::to_string(a) + " is not a node list");
        if (static_cast<int>(col.size()) < g.m2 + 1)
            throw IngestError(IngestCode::missing_node,
                              "incomplete grid at (" + std::to_string(a) + "," +
                                  std::to_string(col.size()) + ")");
        for (int b = 0; b <= g.m2; ++b) {
            const json& pt = col[b];
            std::string where =
                "at node (" + std::to_string(a) + "," + std::to_string(b) + ")";
            if (!pt.is_array() || static_cast<int>(pt.size()) != g.n)
                throw IngestError(IngestCode::shape_mismatch, "node is not an n-vector " + where);
            std::vector<Rat> x(g.n);
            for (int i = 0; i < g.n; ++i) x[i] = value_json(pt[i], where);
            g.node[a][b] = std::move(x);
        }
    }
    return g;
}

LinearSurface linear_from_json(const std::string& text) {
    json j = parse_json(text);
    if (!j.is_object() || !j.contains("M") || !j["M"].is_array() || j["M"].empty())
        throw IngestError(IngestCode::format, "linear surface JSON needs a nonempty matrix M");
    LinearSurface X;
    int row = 0;
    for (const json& r : j["M"]) {
        if (!r.is_array() || r.size() != 2)
            throw IngestError(IngestCode::shape_mismatch,
                              "row " + std::to_string(row) + " of M must have 2 entries");
        std::string where = "in row " + std::to_string(row) + " of M";
        X.M.push_back({value_json(r[0], where), value_json(r[1], where)});
        ++row;
    }
    return X;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(IngestCode::file_io, "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

SurfaceInput ingest_surface_text(const std::string& text, InputKind kind) {
    switch (kind) {
        case InputKind::grid_csv: return grid_from_csv(text);
        case InputKind::grid_json: return grid_from_json(text);
        case InputKind::linear_matrix_json: return linear_from_json(text);
        case InputKind::path_csv: break;
    }
    throw std::invalid_argument("ingest_surface: path-csv is not a surface kind");
}

SurfaceInput ingest_surface(const std::string& path, InputKind kind) {
    return ingest_surface_text(read_file(path), kind);
}

PLPath ingest_path_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    PLPath p;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto f = split_csv(line);
        if (!p.points.empty() && f.size() != p.points[0].size())
            throw IngestError(IngestCode::shape_mismatch,
                              "row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                                  " fields, expected " + std::to_string(p.points[0].size()));
        std::vector<Rat> x(f.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            x[i] = value_token(f[i], "in row " + std::to_string(row));
        p.points.push_back(std::move(x));
        ++row;
    }
    if (p.points.empty()) throw IngestError(IngestCode::format, "empty path file");
    return p;
}

PLPath ingest_path(const std::string& path) { return ingest_path_text(read_file(path)); }

std::string render_surface(const SurfaceInput& s, InputKind kind) {
    if (kind == InputKind::grid_csv) {
        const auto& g = std::get<SurfaceGrid>(s);
        std::ostringstream out;
        out << g.m1 << "," << g.m2 << "," << g.n << "\n";
        for (int a = 0; a <= g.m1; ++a)
            for (int b = 0; b <= g.m2; ++b) {
                out << a << "," << b;
                for (const Rat& v : g.node[a][b]) out << "," << rat_str(v);
                out << "\n";
            }
        return out.str();
    }
    if (kind == InputKind::grid_json) {
        const auto& g = std::get<SurfaceGrid>(s);
        ordered j;
        j["m1"] = g.m1;
        j["m2"] = g.m2;
        j["n"] = g.n;
        ordered nodes = ordered::array();
        for (int a = 0; a <= g.m1; ++a) {
            ordered col = ordered::array();
            for (int b = 0; b <= g.m2; ++b) {
                ordered pt = ordered::array();
                for (const Rat& v : g.node[a][b]) pt.push_back(rat_str(v));
                col.push_back(std::move(pt));
            }
            nodes.push_back(std::move(col));
        }
        j["nodes"] = std::move(nodes);
        return j.dump(1) + "\n";
    }
    if (kind == InputKind::linear_matrix_json) {
        const auto& X = std::get<LinearSurface>(s);
        ordered rows = ordered::array();
        for (const auto& r : X.M) rows.push_back(ordered::array({rat_str(r[0]), rat_str(r[1])}));
        ordered j;
        j["M"] = std::move(rows);
        return j.dump(1) + "\n";
    }
    throw std::invalid_argument("render_surface: path-csv is not a surface kind");
}

std::string render_path(const PLPath& p) {
    std::ostringstream out;
    for (const auto& x : p.points) {
        for (std::size_t i = 0; i < x.size(); ++i) out << (i ? "," : "") << rat_str(x[i]);
        out << "\n";
    }
    return out.str();
}

// ---- coefficient reports ----------------------------------------------

namespace {

// every number passes through here exactly once, so floating mode quantizes
// at report build time and rendering stays lossless afterwards
Rat report_value(const Rat& v, NumberMode mode) {
    return mode == NumberMode::exact ? v : rat_of_double(to_double(v));
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string d17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// a rational in exact mode, a 17-digit JSON number in floating mode
std::string value_text(const Rat& v, NumberMode mode) {
    if (mode == NumberMode::exact) return "\"" + rat_str(v) + "\"";
    return d17(to_double(v));
}

void append_value_array(std::string& s, const std::vector<Rat>& vs, NumberMode mode) {
    s += "[";
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) s += ", ";
        s += value_text(vs[i], mode);
    }
    s += "]";
}

}  // namespace

CoefficientReport surface_report(const CrossedModuleContext& ctx, const OmegaValue& om,
                                 NumberMode mode) {
    if (om.h.n != ctx.n || om.h.level != ctx.level)
        throw std::invalid_argument("surface_report: value does not match the context");
    CoefficientReport r;
    r.n = ctx.n;
    r.level = ctx.level;
    r.mode = mode;
    r.tag = om.tag;
    r.rect = om.rect;
    r.has_rect = true;
    for (int p = 2; p <= ctx.level; ++p) {
        ReportLevel lv;
        lv.level = p;
        const auto& free = ctx.free_columns(p);
        for (std::size_t i = 0; i < free.size(); ++i) {
            const Rat& c = om.h.comps[p][i];
            if (c == 0) continue;
            lv.coefficients.push_back({preh_str(ctx.basis(p)[free[i]]), report_value(c, mode)});
        }
        if (!lv.coefficients.empty()) r.levels.push_back(std::move(lv));
    }
    return r;
}

CoefficientReport path_report(const TensorSeries& logsig, const LieBasis& basis,
                              NumberMode mode) {
    auto coords = first_kind_coordinates(logsig, basis);
    CoefficientReport r;
    r.n = basis.n;
    r.level = basis.level;
    r.mode = mode;
    r.tag = Provenance::quadrature;
    for (int p = 1; p <= basis.level; ++p) {
        ReportLevel lv;
        lv.level = p;
        for (const auto& e : basis.levels[p - 1]) {
            auto it = coords.find(e.name);
            if (it == coords.end() || it->second == 0) continue;
            lv.coefficients.push_back({e.name, report_value(it->second, mode)});
        }
        if (!lv.coefficients.empty()) r.levels.push_back(std::move(lv));
    }
    return r;
}

std::string render_report(const CoefficientReport& r) {
    std::string s = "{\n";
    s += "  \"n\": " + std::to_string(r.n) + ",\n";
    s += "  \"level\": " + std::to_string(r.level) + ",\n";
    s += std::string("  \"mode\": \"") + (r.mode == NumberMode::exact ? "exact" : "float") +
         "\",\n";
    s += std::string("  \"provenance\": \"") + provenance_name(r.tag) + "\",\n";
    if (r.has_rect) {
        s += "  \"rect\": [\"" + rat_str(r.rect.s1) + "\", \"" + rat_str(r.rect.s2) + "\", \"" +
             rat_str(r.rect.t1) + "\", \"" + rat_str(r.rect.t2) + "\"],\n";
    }
    s += "  \"levels\": [";
    for (std::size_t k = 0; k < r.levels.size(); ++k) {
        const auto& lv = r.levels[k];
        s += k ? ",\n" : "\n";
        s += "    {\"level\": " + std::to_string(lv.level) + ", \"coefficients\": [\n";
        for (std::size_t i = 0; i < lv.coefficients.size(); ++i) {
            const auto& e = lv.coefficients[i];
            s += "      {\"basis\": \"" + json_escape(e.basis) +
                 "\", \"value\": " + value_text(e.value, r.mode) + "}";
            s += (i + 1 < lv.coefficients.size()) ? ",\n" : "\n";
        }
        s += "    ]}";
    }
    s += r.levels.empty() ? "]" : "\n  ]";
    if (!r.stokes.empty() || !r.chen.empty()) {
        s += ",\n  \"defects\": {\"stokes\": ";
        append_value_array(s, r.stokes, r.mode);
        s += ", \"chen\": ";
        append_value_array(s, r.chen, r.mode);
        s += "}";
    }
    s += "\n}\n";
    return s;
}

namespace {

Rat report_value_of_json(const json& j) {
    if (j.is_string()) return rat_parse(j.get<std::string>());
    if (j.is_number()) return rat_of_double(j.get<double>());
    throw std::invalid_argument("parse_report: coefficient is neither string nor number");
}

std::vector<Rat> value_array_of_json(const json& j) {
    std::vector<Rat> out;
    for (const auto& v : j) out.push_back(report_value_of_json(v));
    return out;
}

}  // namespace

CoefficientReport parse_report(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("parse_report: ") + e.what());
    }
    if (!j.is_object() || !j.contains("levels") || !j["levels"].is_array())
        throw std::invalid_argument("parse_report: missing levels array");
    CoefficientReport r;
    r.n = j.value("n", 0);
    r.level = j.value("level", 0);
    std::string mode = j.value("mode", "exact");
    if (mode != "exact" && mode != "float")
        throw std::invalid_argument("parse_report: unknown mode '" + mode + "'");
    r.mode = mode == "exact" ? NumberMode::exact : NumberMode::floating;
    std::string prov = j.value("provenance", "quadrature");
    bool known = false;
    for (Provenance t : {Provenance::quadrature, Provenance::assembled, Provenance::lifted,
                         Provenance::sewn})
        if (prov == provenance_name(t)) {
            r.tag = t;
            known = true;
        }
    if (!known) throw std::invalid_argument("parse_report: unknown provenance '" + prov + "'");
    if (j.contains("rect")) {
        const json& rect = j["rect"];
        if (!rect.is_array() || rect.size() != 4)
            throw std::invalid_argument("parse_report: rect must have 4 entries");
        r.rect = make_rect(report_value_of_json(rect[0]), report_value_of_json(rect[1]),
                           report_value_of_json(rect[2]), report_value_of_json(rect[3]));
        r.has_rect = true;
    }
    for (const json& lv : j["levels"]) {
        ReportLevel out;
        out.level = lv.at("level").get<int>();
        if (out.level > r.level)
            throw std::invalid_argument("parse_report: level block above the truncation level");
        for (const json& e : lv.at("coefficients"))
            out.coefficients.push_back(
                {e.at("basis").get<std::string>(), report_value_of_json(e.at("value"))});
        r.levels.push_back(std::move(out));
    }
    if (j.contains("defects")) {
        r.stokes = value_array_of_json(j["defects"].value("stokes", json::array()));
        r.chen = value_array_of_json(j["defects"].value("chen", json::array()));
    }
    return r;
}

int parse_surface_basis(const CrossedModuleContext& ctx, int level, const std::string& label) {
    if (level < 2 || level > ctx.level)
        throw std::invalid_argument("parse_surface_basis: level out of range");
    int idx = ctx.index_of(level, preh_parse(label, ctx.n));
    if (idx < 0)
        throw std::invalid_argument("parse_surface_basis: '" + label +
                                    "' is not a degree-" + std::to_string(level) + " generator");
    return idx;
}

std::pair<int, int> parse_path_basis(const LieBasis& basis, const std::string& name) {
    for (int p = 1; p <= basis.level; ++p) {
        const auto& entries = basis.levels[p - 1];
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].name == name) return {p, static_cast<int>(i)};
    }
    throw std::invalid_argument("parse_path_basis: '" + name + "' is not a basis bracketing");
}

// ---- subcommands --------------------------------------------------------

namespace {

int surface_dim(const SurfaceInput& s) {
    return std::holds_alternative<LinearSurface>(s) ? std::get<LinearSurface>(s).dim()
                                                    : std::get<SurfaceGrid>(s).n;
}

void write_artifact(const RunConfig& cfg, const std::string& text, std::ostream& out) {
    if (cfg.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot write '" + cfg.out + "'");
    f << text;
}

// data-bearing subcommands take n from the file; an explicit --n must agree
void resolve_n(RunConfig& cfg, bool n_given, int data_n) {
    if (n_given && cfg.n != data_n)
        throw std::invalid_argument("--n " + std::to_string(cfg.n) + " does not match the " +
                                    std::to_string(data_n) + "-dimensional input");
    cfg.n = data_n;
}

// the development the run asks for: symbolic quadrature on linear surfaces,
// cell assembly (or midpoint quadrature) on grids; fills cross-check
// residuals when both assembly orders were requested
OmegaValue compute_omega(const RunConfig& cfg, const SurfaceInput& s,
                         const CrossedModuleContext& ctx, std::vector<Rat>* chen) {
    if (std::holds_alternative<LinearSurface>(s)) {
        if (cfg.quadrature == "midpoint")
            throw std::invalid_argument("quadrature 'midpoint' applies to sampled grids");
        const auto& X = std::get<LinearSurface>(s);
        if (cfg.both_orders) {
            OmegaValue row = chen_assemble(X, cfg.rect, 4, 4, ctx, AssemblyOrder::row_major);
            OmegaValue col = chen_assemble(X, cfg.rect, 4, 4, ctx, AssemblyOrder::column_major);
            if (chen) chen->push_back(h_distance(ctx, row.h, col.h));
            return row;
        }
        return omega_quadrature(X, cfg.rect, ctx);
    }
    const auto& X = std::get<SurfaceGrid>(s);
    if (cfg.quadrature == "symbolic")
        throw std::invalid_argument("quadrature 'symbolic' applies to linear surfaces");
    if (cfg.quadrature == "midpoint") return omega_quadrature(X, cfg.rect, ctx);
    if (cfg.both_orders) {
        OmegaValue row = chen_assemble(X, cfg.rect, ctx, AssemblyOrder::row_major);
        OmegaValue col = chen_assemble(X, cfg.rect, ctx, AssemblyOrder::column_major);
        if (chen) chen->push_back(h_distance(ctx, row.h, col.h));
        return row;
    }
    return chen_assemble(X, cfg.rect, ctx, cfg.assembly);
}

int cmd_dims(RunConfig cfg, std::ostream& out) {
    validate(cfg);
    auto ctx = build_context(cfg.n, cfg.level);
    std::string s = "{\n  \"n\": " + std::to_string(cfg.n) +
                    ",\n  \"level\": " + std::to_string(cfg.level) + ",\n  \"rows\": [\n";
    auto rows = dimension_table(ctx);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const DimRow& r = rows[i];
        s += "    {\"level\": " + std::to_string(r.level) +
             ", \"free_lie\": " + std::to_string(r.fl) + ", \"full\": " + std::to_string(r.full) +
             ", \"relations\": " + std::to_string(r.relations) +
             ", \"quotient\": " + std::to_string(r.quotient) +
             ", \"shape_i\": " + std::to_string(r.count_i) +
             ", \"shape_j\": " + std::to_string(r.count_j) + "}";
        s += (i + 1 < rows.size()) ? ",\n" : "\n";
    }
    s += "  ]\n}\n";
    write_artifact(cfg, s, out);
    return 0;
}

int cmd_basis(RunConfig cfg, std::ostream& out) {
    validate(cfg);
    auto ctx = build_context(cfg.n, cfg.level);
    std::string s = "{\n  \"n\": " + std::to_string(cfg.n) +
                    ",\n  \"level\": " + std::to_string(cfg.level) + ",\n  \"levels\": [\n";
    for (int p = 2; p <= cfg.level; ++p) {
        s += "    {\"level\": " + std::to_string(p) + ", \"reduced\": [";
        const auto& free = ctx.free_columns(p);
        for (std::size_t i = 0; i < free.size(); ++i) {
            if (i) s += ", ";
            s += "\"" + json_escape(preh_str(ctx.basis(p)[free[i]])) + "\"";
        }
        s += "], \"kernel\": [";
        const auto& kl = ctx.kernel_labels(p);
        for (std::size_t i = 0; i < kl.size(); ++i) {
            if (i) s += ", ";
            s += "\"" + json_escape(kl[i]) + "\"";
        }
        s += "]";
        if (ctx.has_display(p)) {
            s += ", \"display\": [";
            const auto& dl = ctx.display_labels(p);
            for (std::size_t i = 0; i < dl.size(); ++i) {
                if (i) s += ", ";
                s += "\"" + json_escape(dl[i]) + "\"";
            }
            s += "]";
        }
        s += "}";
        s += (p < cfg.level) ? ",\n" : "\n";
    }
    s += "  ]\n}\n";
    write_artifact(cfg, s, out);
    return 0;
}

int cmd_logsig_surface(RunConfig cfg, bool n_given, std::ostream& out) {
    auto s = ingest_surface(cfg.input, cfg.kind);
    resolve_n(cfg, n_given, surface_dim(s));
    validate(cfg);
    auto ctx = build_context(cfg.n, cfg.level);
    std::vector<Rat> chen;
    OmegaValue om = compute_omega(cfg, s, ctx, &chen);
    CoefficientReport rep = surface_report(ctx, om, cfg.mode);
    for (const Rat& c : chen) rep.chen.push_back(report_value(c, cfg.mode));
    write_artifact(cfg, render_report(rep), out);
    return 0;
}

int cmd_logsig_path(RunConfig cfg, bool n_given, std::ostream& out) {
    PLPath p = ingest_path(cfg.input);
    resolve_n(cfg, n_given, path_dim(p));
    validate(cfg);
    LieBasis basis = lyndon_basis(cfg.n, cfg.level);
    TensorSeries ls = path_logsig(p, cfg.n, cfg.level);
    write_artifact(cfg, render_report(path_report(ls, basis, cfg.mode)), out);
    return 0;
}

int cmd_verify_stokes(RunConfig cfg, bool n_given, std::ostream& out) {
    auto s = ingest_surface(cfg.input, cfg.kind);
    resolve_n(cfg, n_given, surface_dim(s));
    validate(cfg);
    auto ctx = build_context(cfg.n, cfg.level);
    std::vector<Rat> chen;
    OmegaValue om = compute_omega(cfg, s, ctx, &chen);
    std::vector<Rat> defects = std::holds_alternative<LinearSurface>(s)
                                   ? stokes_check(om, std::get<LinearSurface>(s), ctx)
                                   : stokes_check(om, std::get<SurfaceGrid>(s), ctx);
    CoefficientReport rep = surface_report(ctx, om, cfg.mode);
    for (const Rat& d : defects) rep.stokes.push_back(report_value(d, cfg.mode));
    for (const Rat& c : chen) rep.chen.push_back(report_value(c, cfg.mode));
    write_artifact(cfg, render_report(rep), out);
    return 0;
}

// residuals: row vs column assembly, then a two-piece horizontal and
// vertical reglue against the one-shot value, all with the group Chen rule
int cmd_verify_chen(RunConfig cfg, bool n_given, std::ostream& out) {
    auto s = ingest_surface(cfg.input, cfg.kind);
    resolve_n(cfg, n_given, surface_dim(s));
    validate(cfg);
    auto ctx = build_context(cfg.n, cfg.level);
    const Rect& r = cfg.rect;
    std::vector<Rat> chen;
    OmegaValue whole;
    if (std::holds_alternative<LinearSurface>(s)) {
        const auto& X = std::get<LinearSurface>(s);
        whole = chen_assemble(X, r, 4, 4, ctx, AssemblyOrder::row_major);
        OmegaValue col = chen_assemble(X, r, 4, 4, ctx, AssemblyOrder::column_major);
        chen.push_back(h_distance(ctx, whole.h, col.h));
        auto bd = linear_boundary(X, ctx);
        Rat xm = (r.s1 + r.t1) / 2, ym = (r.s2 + r.t2) / 2;
        HElement left = chen_assemble(X, make_rect(r.s1, r.s2, xm, r.t2), 2, 4, ctx).h;
        HElement right = chen_assemble(X, make_rect(xm, r.s2, r.t1, r.t2), 2, 4, ctx).h;
        HElement glued = bch_h(ctx, exp_action(ctx, bd({r.s1, r.s2}, {xm, r.s2}), right), left);
        chen.push_back(h_distance(ctx, glued, whole.h));
        HElement bot = chen_assemble(X, make_rect(r.s1, r.s2, r.t1, ym), 4, 2, ctx).h;
        HElement top = chen_assemble(X, make_rect(r.s1, ym, r.t1, r.t2), 4, 2, ctx).h;
        glued = bch_h(ctx, bot, exp_action(ctx, bd({r.s1, r.s2}, {r.s1, ym}), top));
        chen.push_back(h_distance(ctx, glued, whole.h));
    } else {
        const auto& X = std::get<SurfaceGrid>(s);
        whole = chen_assemble(X, r, ctx, AssemblyOrder::row_major);
        OmegaValue col = chen_assemble(X, r, ctx, AssemblyOrder::column_major);
        chen.push_back(h_distance(ctx, whole.h, col.h));
        auto bd = grid_boundary(X, ctx);
        // cut on the cell boundary nearest the middle so the pieces assemble
        auto cell_index = [](const Rat& x, const Rat& w) {
            Rat q = x / w;
            if (q.get_den() != 1)
                throw std::invalid_argument("verify-chen: rectangle must align with the grid");
            return q.get_num().get_si();
        };
        long a0 = cell_index(r.s1, X.cell_w()), a1 = cell_index(r.t1, X.cell_w());
        long b0 = cell_index(r.s2, X.cell_h()), b1 = cell_index(r.t2, X.cell_h());
        if (a1 - a0 < 2 || b1 - b0 < 2)
            throw std::invalid_argument("verify-chen: rectangle must span at least 2x2 cells");
        Rat xm = X.cell_w() * ((a0 + a1) / 2);
        Rat ym = X.cell_h() * ((b0 + b1) / 2);
        HElement left = chen_assemble(X, make_rect(r.s1, r.s2, xm, r.t2), ctx).h;
        HElement right = chen_assemble(X, make_rect(xm, r.s2, r.t1, r.t2), ctx).h;
        HElement glued = bch_h(ctx, exp_action(ctx, bd({r.s1, r.s2}, {xm, r.s2}), right), left);
        chen.push_back(h_distance(ctx, glued, whole.h));
        HElement bot = chen_assemble(X, make_rect(r.s1, r.s2, r.t1, ym), ctx).h;
        HElement top = chen_assemble(X, make_rect(r.s1, ym, r.t1, r.t2), ctx).h;
        glued = bch_h(ctx, bot, exp_action(ctx, bd({r.s1, r.s2}, {r.s1, ym}), top));
        chen.push_back(h_distance(ctx, glued, whole.h));
    }
    CoefficientReport rep = surface_report(ctx, whole, cfg.mode);
    for (const Rat& c : chen) rep.chen.push_back(report_value(c, cfg.mode));
    write_artifact(cfg, render_report(rep), out);
    return 0;
}

// exhaustive audit of the refinement functional on the scale-3 dyadic grid:
// every split must be balanced, strictly contracting, and leave no piece
// smaller than 2/27 of the whole
std::string subcontrol_audit() {
    SubcontrolParams sp = default_subcontrol();
    long rects = 0;
    bool balanced = true, contracting = true, small_ok = true;
    Rat min_frac = 1;
    double max_sum_ratio = 0.0;
    for (long x0 = 0; x0 < 8; ++x0)
        for (long x1 = x0 + 1; x1 <= 8; ++x1)
            for (long y0 = 0; y0 < 8; ++y0)
                for (long y1 = y0 + 1; y1 <= 8; ++y1) {
                    DyadicRect d = make_dyadic(3, x0, y0, x1, y1);
                    auto [a, b] = midway_partition(d);
                    Rect rr = dyadic_rect(d), ra = dyadic_rect(a), rb = dyadic_rect(b);
                    ++rects;
                    if (!is_balanced(rr, ra, rb)) balanced = false;
                    if (compare_sqrt_sum(subcontrol_sq(sp, ra), subcontrol_sq(sp, rb),
                                         subcontrol_sq(sp, rr)) >= 0)
                        contracting = false;
                    Rat frac = ra.area() < rb.area() ? ra.area() / rr.area()
                                                     : rb.area() / rr.area();
                    if (frac < min_frac) min_frac = frac;
                    if (frac <= rq(2, 27)) small_ok = false;
                    double ratio = (subcontrol_eval(sp, ra) + subcontrol_eval(sp, rb)) /
                                   subcontrol_eval(sp, rr);
                    if (ratio > max_sum_ratio) max_sum_ratio = ratio;
                }
    std::string s = "{\"theta\": \"" + rat_str(sp.theta) + "\", \"lambda\": \"" +
                    rat_str(sp.lambda) + "\", \"zeta\": \"" + rat_str(sp.zeta) +
                    "\", \"ecc\": \"" + rat_str(sp.ecc) + "\", \"rects\": " +
                    std::to_string(rects) + ", \"balanced\": " + (balanced ? "true" : "false") +
                    ", \"contracting\": " + (contracting ? "true" : "false") +
                    ", \"pieces_above_2_27\": " + (small_ok ? "true" : "false") +
                    ", \"min_piece_fraction\": \"" + rat_str(min_frac) +
                    "\", \"max_sum_ratio\": " + d17(max_sum_ratio) + "}";
    return s;
}

int cmd_sew_demo(RunConfig cfg, bool n_given, std::ostream& out, std::ostream& err) {
    auto s = ingest_surface(cfg.input, cfg.kind);
    resolve_n(cfg, n_given, surface_dim(s));
    validate(cfg);
    auto ctx = build_context(cfg.n, cfg.level);
    DyadicRect dr = to_dyadic(cfg.rect);
    SewResult res;
    if (std::holds_alternative<LinearSurface>(s)) {
        const auto& X = std::get<LinearSurface>(s);
        res = sew_2d(linear_germ(X, ctx), linear_boundary(X, ctx), dr, ctx, cfg.tol, cfg.n_max,
                     /*translation_invariant=*/true);
    } else {
        const auto& X = std::get<SurfaceGrid>(s);
        res = sew_2d(grid_germ(X, ctx), grid_boundary(X, ctx), dr, ctx, cfg.tol, cfg.n_max);
    }
    if (log_verbosity() > 0)
        err << "# sew-demo: " << res.diag.iterations << " refinements, "
            << (res.diag.converged ? "converged" : "not converged") << "\n";
    std::string s_out = "{\n  \"n\": " + std::to_string(cfg.n) +
                        ",\n  \"level\": " + std::to_string(cfg.level) +
                        ",\n  \"tol\": " + d17(cfg.tol) +
                        ",\n  \"n_max\": " + std::to_string(cfg.n_max) +
                        ",\n  \"iterations\": " + std::to_string(res.diag.iterations) +
                        ",\n  \"converged\": " + (res.diag.converged ? "true" : "false") +
                        ",\n  \"table\": [\n";
    for (std::size_t i = 0; i < res.diag.distances.size(); ++i) {
        s_out += "    {\"n\": " + std::to_string(i + 1) +
                 ", \"distance\": " + d17(res.diag.distances[i]);
        if (i > 0) s_out += ", \"ratio\": " + d17(res.diag.ratios[i - 1]);
        s_out += "}";
        s_out += (i + 1 < res.diag.distances.size()) ? ",\n" : "\n";
    }
    s_out += "  ],\n  \"subcontrol\": " + subcontrol_audit() + "\n}\n";
    write_artifact(cfg, s_out, out);
    return res.diag.converged ? 0 : 2;
}

int cmd_lift(RunConfig cfg, bool n_given, std::ostream& out, std::ostream& err) {
    auto s = ingest_surface(cfg.input, cfg.kind);
    if (!std::holds_alternative<LinearSurface>(s))
        throw std::invalid_argument("lift expects a linear surface input");
    const auto& X = std::get<LinearSurface>(s);
    resolve_n(cfg, n_given, X.dim());
    validate(cfg);
    if (cfg.level < 3) throw std::invalid_argument("lift needs a target level of at least 3");
    auto ctx = build_context(cfg.n, cfg.level);
    auto low_ctx = build_context(cfg.n, 2);
    LevelData low = linear_level_data(X, low_ctx, ctx);
    SewDiagnostics diag;
    OmegaValue om = extend_level(low, to_dyadic(cfg.rect), ctx, cfg.tol, cfg.n_max,
                                 /*translation_invariant=*/true, &diag);
    if (log_verbosity() > 0)
        err << "# lift: " << diag.iterations << " refinements, "
            << (diag.converged ? "converged" : "not converged") << "\n";
    if (!diag.converged) {
        err << "lift did not converge within " << cfg.n_max << " refinements (last distance "
            << (diag.distances.empty() ? 0.0 : diag.distances.back()) << ")\n";
        return 2;
    }
    write_artifact(cfg, render_report(surface_report(ctx, om, cfg.mode)), out);
    return 0;
}

}  // namespace

// ---- the command line ---------------------------------------------------

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"log-signatures of two-parameter surfaces"};
    app.name("surfsig");
    app.require_subcommand(1);

    RunConfig cfg;
    std::string kind_arg, rect_arg, assembly_arg, linear_arg;

    struct Flags {
        bool exact = false, floating = false;
    } flag;

    auto add_nl = [&](CLI::App* sub) {
        sub->add_option("--n", cfg.n, "state space dimension");
        sub->add_option("--level", cfg.level, "truncation level");
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out, "output file (default: stdout)");
        sub->add_flag("--exact", flag.exact, "report exact rationals (default)");
        sub->add_flag("--float", flag.floating, "report doubles");
    };
    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--input", cfg.input, "data file");
        sub->add_option("--kind", kind_arg,
                        "grid-csv | grid-json | path-csv | linear-matrix-json");
        sub->add_option("--linear", linear_arg, "shorthand for --input F --kind linear-matrix-json");
        sub->add_option("--rect", rect_arg, "rectangle s1,s2,t1,t2 (default unit square)");
    };
    auto add_assembly = [&](CLI::App* sub) {
        sub->add_option("--assembly", assembly_arg, "row | column | both");
    };
    auto add_iter = [&](CLI::App* sub) {
        sub->add_option("--tol", cfg.tol, "refinement stopping tolerance");
        sub->add_option("--nmax", cfg.n_max, "refinement cap");
    };

    CLI::App* dims = app.add_subcommand("dims", "dimension table of the graded quotient");
    CLI::App* basis = app.add_subcommand("basis", "reduced, kernel, and display basis labels");
    CLI::App* lp = app.add_subcommand("logsig-path", "log-signature of a piecewise-linear path");
    CLI::App* ls = app.add_subcommand("logsig-surface", "surface development over a rectangle");
    CLI::App* vs = app.add_subcommand("verify-stokes",
                                      "development vs boundary log-signature, per level");
    CLI::App* vc = app.add_subcommand("verify-chen", "assembly order and two-piece residuals");
    CLI::App* sd = app.add_subcommand("sew-demo", "refinement distances and subcontrol audit");
    CLI::App* lf = app.add_subcommand("lift", "extend a level-2 development to the target level");
    for (CLI::App* sub : {dims, basis, lp, ls, vs, vc, sd, lf}) {
        add_nl(sub);
        add_common(sub);
    }
    lp->add_option("--input", cfg.input, "path-csv data file")->required();
    for (CLI::App* sub : {ls, vs, vc, sd, lf}) add_data(sub);
    add_assembly(ls);
    add_assembly(vs);
    add_iter(sd);
    add_iter(lf);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const std::string& name) {
        const CLI::Option* o = sub->get_option_no_throw(name);
        return o && o->count() > 0;
    };
    try {
        if (flag.exact && flag.floating)
            throw std::invalid_argument("choose one of --exact / --float, not both");
        cfg.mode = flag.floating ? NumberMode::floating : NumberMode::exact;
        if (!linear_arg.empty()) {
            if (!cfg.input.empty())
                throw std::invalid_argument("--linear and --input are alternatives");
            cfg.input = linear_arg;
            cfg.kind = InputKind::linear_matrix_json;
        } else if (given("--kind")) {
            cfg.kind = input_kind_of(kind_arg);
        }
        if (!rect_arg.empty()) {
            auto f = split_csv(rect_arg);
            if (f.size() != 4)
                throw std::invalid_argument("--rect needs four comma-separated numbers");
            cfg.rect = make_rect(rat_parse(f[0]), rat_parse(f[1]), rat_parse(f[2]),
                                 rat_parse(f[3]));
        }
        if (given("--assembly")) {
            if (assembly_arg == "row") {
                cfg.assembly = AssemblyOrder::row_major;
            } else if (assembly_arg == "column") {
                cfg.assembly = AssemblyOrder::column_major;
            } else if (assembly_arg == "both") {
                cfg.both_orders = true;
            } else {
                throw std::invalid_argument("--assembly must be row, column, or both");
            }
        }
        bool n_given = given("--n");
        if (sub == dims) return cmd_dims(cfg, out);
        if (sub == basis) return cmd_basis(cfg, out);
        if (sub == lp) {
            cfg.kind = InputKind::path_csv;
            return cmd_logsig_path(cfg, n_given, out);
        }
        if (sub == ls) return cmd_logsig_surface(cfg, n_given, out);
        if (sub == vs) return cmd_verify_stokes(cfg, n_given, out);
        if (sub == vc) return cmd_verify_chen(cfg, n_given, out);
        if (sub == sd) return cmd_sew_demo(cfg, n_given, out, err);
        if (sub == lf) {
            // extension runs deeper than plain sewing; relax the defaults
            if (!given("--tol")) cfg.tol = 1e-9;
            if (!given("--nmax")) cfg.n_max = 80;
            return cmd_lift(cfg, n_given, out, err);
        }
        throw std::invalid_argument("unknown subcommand");
    } catch (const IngestError& e) {
        err << "surfsig: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "surfsig: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        err << "surfsig: " << e.what() << "\n";
        return 1;
    }
}

int run_command(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace surfsig
