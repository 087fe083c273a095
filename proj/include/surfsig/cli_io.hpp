#pragma once

#include "surfsig/sewing.hpp"
#include "surfsig/surface_dev.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace surfsig {

// ---- run configuration ------------------------------------------------

enum class InputKind { grid_csv, grid_json, path_csv, linear_matrix_json };

// "grid-csv" etc.; input_kind_of throws on an unknown name.
InputKind input_kind_of(const std::string& name);
const char* input_kind_name(InputKind k);

// Coefficients are reported either as exact rational strings or as doubles;
// one mode per run, chosen up front and never mixed within a report.
enum class NumberMode { exact, floating };

// Highest truncation level the symbolic pipeline supports end to end.
int max_level();

// Everything a run needs. Built from command-line flags, checked by
// validate() before any computation starts.
struct RunConfig {
    int n = 3;
    int level = 4;
    std::string input;  // empty for subcommands that take no data file
    InputKind kind = InputKind::linear_matrix_json;
    Rect rect = {Rat(0), Rat(0), Rat(1), Rat(1)};
    std::string quadrature = "auto";  // auto | symbolic | midpoint
    AssemblyOrder assembly = AssemblyOrder::row_major;
    bool both_orders = false;  // --assembly both: run row and column, compare
    double tol = 1e-10;
    int n_max = 30;
    NumberMode mode = NumberMode::exact;
    std::string out;  // output file; empty writes to the stream
};

// Throws std::invalid_argument when a field is out of range: n < 1, level
// outside [2, max_level()], a rectangle that leaves [0,1]^2 or is reversed,
// an unknown quadrature id, or nonpositive tolerances.
void validate(const RunConfig& c);

// ---- ingestion ---------------------------------------------------------

// What went wrong while reading a data file; each class of defect keeps its
// own code so callers can tell them apart without string matching.
enum class IngestCode {
    file_io,         // unreadable file
    format,          // malformed CSV/JSON structure
    bad_number,      // unparseable or non-finite value
    shape_mismatch,  // wrong column count or node outside the declared grid
    missing_node,    // incomplete grid
    duplicate_node,  // the same node given twice
};

struct IngestError : std::runtime_error {
    IngestCode code;
    IngestError(IngestCode c, const std::string& what) : std::runtime_error(what), code(c) {}
};

using SurfaceInput = std::variant<SurfaceGrid, LinearSurface>;

// grid-csv is a "m1,m2,n" header then one "a,b,x1,...,xn" row per node, in
// any order but complete; grid-json is {"m1","m2","n","nodes"} with
// nodes[a][b] an n-vector; linear-matrix-json is {"M": [[.,.], ...]} with n
// rows of 2. Numeric entries may be decimals, fractions "p/q", or JSON
// numbers (converted exactly).
SurfaceInput ingest_surface_text(const std::string& text, InputKind kind);
SurfaceInput ingest_surface(const std::string& path, InputKind kind);

// path-csv: one "x1,...,xn" row per point, all rows the same width.
PLPath ingest_path_text(const std::string& text);
PLPath ingest_path(const std::string& path);

// Inverses of the ingesters (values as exact rational strings), so that
// ingest(render(ingest(file))) reproduces the first ingest bit for bit.
std::string render_surface(const SurfaceInput& s, InputKind kind);
std::string render_path(const PLPath& p);

// ---- coefficient reports ----------------------------------------------

struct ReportEntry {
    std::string basis;
    Rat value;
    bool operator==(const ReportEntry&) const = default;
};

struct ReportLevel {
    int level = 0;
    std::vector<ReportEntry> coefficients;  // in basis order, zeros omitted
    bool operator==(const ReportLevel&) const = default;
};

// Machine-readable outcome of a run: the per-level coefficient lists plus
// whatever defect metrics the subcommand computed. In floating mode every
// number is rounded to its double once, here, so rendering and re-parsing
// reproduce the report exactly in either mode.
struct CoefficientReport {
    int n = 0;
    int level = 0;
    NumberMode mode = NumberMode::exact;
    Provenance tag = Provenance::quadrature;
    Rect rect;
    bool has_rect = false;
    std::vector<ReportLevel> levels;  // ascending level
    std::vector<Rat> stokes;          // per-level Stokes defects, index p-1
    std::vector<Rat> chen;            // assembly cross-check residuals
    bool operator==(const CoefficientReport&) const = default;
};

// Coefficients of a surface development in the reduced area basis, labelled
// by the generator strings of crossed_module (levels 2..ctx.level).
CoefficientReport surface_report(const CrossedModuleContext& ctx, const OmegaValue& om,
                                 NumberMode mode);

// Coordinates of the first kind of a path log-signature, labelled by the
// basis bracketings (levels 1..basis.level).
CoefficientReport path_report(const TensorSeries& logsig, const LieBasis& basis, NumberMode mode);

// JSON text with a fixed field order: level blocks ascending, coefficients
// in basis order. Exact rationals are emitted verbatim as strings; floating
// values as JSON numbers with 17 significant digits (enough to round-trip).
std::string render_report(const CoefficientReport& r);

// Parses render_report output back; unknown keys are ignored.
CoefficientReport parse_report(const std::string& json_text);

// Inverses for the emitted basis labels: the index of the generator in
// ctx.basis(level), resp. the (level, index) of the bracketing in the Lie
// basis. Both throw std::invalid_argument for labels that are not in the
// basis.
int parse_surface_basis(const CrossedModuleContext& ctx, int level, const std::string& label);
std::pair<int, int> parse_path_basis(const LieBasis& basis, const std::string& name);

// ---- the command line ---------------------------------------------------

// Subcommands: dims, basis, logsig-path, logsig-surface, verify-stokes,
// verify-chen, sew-demo, lift. Returns 0 on success, 1 on validation or
// input errors, 2 when an iterative subcommand fails to converge. Reports
// go to `out` or to the --out file; diagnostics go to `err`. Set SURFSIG_LOG
// to a positive integer for progress notes on `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, const char* const* argv);  // std::cout / std::cerr

}  // namespace surfsig
