#pragma once

#include "surfsig/crossed_module.hpp"
#include "surfsig/path_dev.hpp"
#include "surfsig/rational.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace surfsig {

// Axis-aligned parameter rectangle [s1,t1] x [s2,t2].
struct Rect {
    Rat s1, s2, t1, t2;

    Rat width() const { return t1 - s1; }
    Rat height() const { return t2 - s2; }
    Rat area() const { return width() * height(); }
    bool operator==(const Rect& o) const = default;
};

Rect make_rect(const Rat& s1, const Rat& s2, const Rat& t1, const Rat& t2);

// X(r,q) = M (r,q)^T for an n x 2 coefficient matrix; every derived quantity
// (Jacobians, edge log-signatures, the full surface development) is exact.
struct LinearSurface {
    std::vector<std::array<Rat, 2>> M;

    int dim() const { return static_cast<int>(M.size()); }
    std::vector<Rat> eval(const Rat& r, const Rat& q) const;
};

// Samples of a surface on a uniform grid of m1 x m2 cells over [0,1]^2: node
// (a,b) sits at (a/m1, b/m2) and carries a point of R^n. Within each cell the
// surface is modelled bilinearly, so cell Jacobians are the constants of the
// interpolant and edge images are node polylines.
struct SurfaceGrid {
    int m1 = 0, m2 = 0, n = 0;
    std::vector<std::vector<std::vector<Rat>>> node;  // node[a][b], (m1+1) x (m2+1)

    Rat cell_w() const { return rq(1, m1); }
    Rat cell_h() const { return rq(1, m2); }
};

// Tabulates f over the nodes of an m1 x m2 grid.
SurfaceGrid sample_grid(const std::function<std::vector<Rat>(const Rat&, const Rat&)>& f, int n,
                        int m1, int m2);
SurfaceGrid sample_grid(const LinearSurface& X, int m1, int m2);

enum class Provenance { quadrature, assembled, lifted, sewn };
const char* provenance_name(Provenance p);

// A surface development together with the rectangle it belongs to and how it
// was obtained.
struct OmegaValue {
    HElement h;
    Rect rect;
    Provenance tag = Provenance::quadrature;
};

// d1X^(i) d2X^(j) - d1X^(j) d2X^(i) for rows i < j (1-based). The grid
// version is the constant Jacobian of cell (a,b)'s bilinear patch (edge
// differences averaged across the cell, i.e. the centre value).
Rat jacobian_minor(const LinearSurface& X, int i, int j);
Rat jacobian_minor(const SurfaceGrid& X, int a, int b, int i, int j);

// The surface log-signature over a rectangle, levels 2..ctx.level, by direct
// integration of the Magnus terms. Linear surfaces are integrated
// symbolically (exact, levels up to 5); grids by one composite midpoint
// Magnus step per cell row. Grid rectangles must be unions of whole cells.
OmegaValue omega_quadrature(const LinearSurface& X, const Rect& r, const CrossedModuleContext& ctx);
OmegaValue omega_quadrature(const SurfaceGrid& X, const Rect& r, const CrossedModuleContext& ctx);

// exp(area integral of the curvature form) over one cell: the level-2-only
// seed that sewing upgrades.
HElement cell_germ(const LinearSurface& X, const Rect& cell, const CrossedModuleContext& ctx);
HElement cell_germ(const SurfaceGrid& X, int a, int b, const CrossedModuleContext& ctx);

enum class AssemblyOrder { row_major, column_major };

// Fold per-cell developments across the rectangle with the horizontal and
// vertical group composition rules (boundary-edge conjugation + bch_h).
// Row-major is canonical; column-major is the cross-check order.
OmegaValue chen_assemble(const SurfaceGrid& X, const Rect& r, const CrossedModuleContext& ctx,
                         AssemblyOrder order = AssemblyOrder::row_major);
OmegaValue chen_assemble(const LinearSurface& X, const Rect& r, int cols, int rows,
                         const CrossedModuleContext& ctx,
                         AssemblyOrder order = AssemblyOrder::row_major);

// Image of the rectangle's boundary, anticlockwise from the bottom-left
// corner (grids walk the boundary nodes; linear surfaces the four corners).
PLPath boundary_path(const LinearSurface& X, const Rect& r);
PLPath boundary_path(const SurfaceGrid& X, const Rect& r);

// Per-level max-coefficient norm of feedback(omega) - log-signature of the
// boundary image, entries for levels 1..ctx.level.
std::vector<Rat> stokes_check(const OmegaValue& om, const LinearSurface& X,
                              const CrossedModuleContext& ctx);
std::vector<Rat> stokes_check(const OmegaValue& om, const SurfaceGrid& X,
                              const CrossedModuleContext& ctx);

// Low-level lift: level 2 by inverting feedback on the boundary
// log-signature (the kernel is trivial there), level 3 by the canonical
// integral. N must be 2 or 3; higher levels go through sewing's extension.
OmegaValue young_lift(const LinearSurface& X, const Rect& r, const CrossedModuleContext& ctx,
                      int N);
OmegaValue young_lift(const SurfaceGrid& X, const Rect& r, const CrossedModuleContext& ctx, int N);

}  // namespace surfsig
