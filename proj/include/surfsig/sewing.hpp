#pragma once

#include "surfsig/crossed_module.hpp"
#include "surfsig/path_dev.hpp"
#include "surfsig/surface_dev.hpp"

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace surfsig {

// Axis-aligned rectangle with corners on the 2^-scale integer grid inside
// [0,1]^2. Stored in canonical form: `scale` is the smallest grid that holds
// all four corners, so two values compare equal iff they are the same set.
// Degenerate (zero-width or zero-height) rectangles are allowed.
struct DyadicRect {
    int scale = 0;
    long x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    long iw() const { return x1 - x0; }
    long ih() const { return y1 - y0; }
    bool operator==(const DyadicRect& o) const = default;
};

// Validates 0 <= x0 <= x1 <= 2^scale (same for y) and canonicalizes the scale.
DyadicRect make_dyadic(int scale, long x0, long y0, long x1, long y1);

// The plain rectangle covered by r, and the reverse embedding. to_dyadic
// rejects corners that do not lie on a power-of-two grid of scale <= 30.
Rect dyadic_rect(const DyadicRect& r);
DyadicRect to_dyadic(const Rect& r);

Rat dyadic_width(const DyadicRect& r);
Rat dyadic_height(const DyadicRect& r);
Rat dyadic_area(const DyadicRect& r);

// Long side over short side, >= 1. Empty when the short side is zero (the
// ratio degenerates); callers treat that as "infinitely eccentric".
std::optional<Rat> eccentricity(const Rect& r);

// Splits r in two along its longer direction: an elementary (1x1) square is
// halved vertically one scale down; otherwise the longer integer extent is
// cut at its midpoint, rounding up for odd extents. The first piece keeps the
// lower-left corner. Throws on zero area.
std::pair<DyadicRect, DyadicRect> midway_partition(const DyadicRect& r);

// True when {a, b} is a two-piece axis split of r whose pieces stay squat:
// max(E(a), E(b)) <= max(3, 2 E(r) / 3). Throws if {a, b} does not partition
// r; returns false when any eccentricity degenerates.
bool is_balanced(const Rect& r, const Rect& a, const Rect& b);

// Rectangle functional F(r) = (ab)^theta when the eccentricity is at most
// `ecc`, a^lambda b^zeta beyond it, with a the long and b the short side.
// Under any balanced split, F(piece A) + F(piece B) < F(whole).
struct SubcontrolParams {
    Rat theta, lambda, zeta;
    Rat ecc;
};

// Validates theta, lambda > 1, zeta >= 0, lambda >= zeta, 2 theta >= lambda +
// zeta, ecc >= 3. Defaults: (3/2, 2, 1, 3).
SubcontrolParams make_subcontrol(const Rat& theta, const Rat& lambda, const Rat& zeta,
                                 const Rat& ecc);
SubcontrolParams default_subcontrol();

double subcontrol_eval(const SubcontrolParams& p, const Rect& r);

// F(r)^2 as an exact rational; meaningful because the half-integer exponents
// make F a single square root. Throws when 2*theta, 2*lambda, 2*zeta are not
// all integers.
Rat subcontrol_sq(const SubcontrolParams& p, const Rect& r);

// Sign of sqrt(p) + sqrt(q) - sqrt(s), decided exactly (all inputs >= 0).
int compare_sqrt_sum(const Rat& p, const Rat& q, const Rat& s);

// Local data for 2D sewing: a germ assigns a group element (log-coordinates)
// to each rectangle, a boundary cocycle assigns the log-signature of the
// surface restricted to a straight planar segment. Both must be built against
// the same truncation context as the sewing call.
using GermFn = std::function<HElement(const Rect&)>;
using BoundaryFn =
    std::function<TensorSeries(const std::array<Rat, 2>& from, const std::array<Rat, 2>& to)>;

// Boundary cocycle of a linear surface: segments map to straight image
// segments, so the log-signature is the image displacement.
BoundaryFn linear_boundary(const LinearSurface& X, const CrossedModuleContext& ctx);

// Boundary cocycle of a sampled grid under cellwise bilinear interpolation.
// Along an axis-aligned segment the interpolant is piecewise linear, so the
// image is an exact polyline; other directions are rejected.
BoundaryFn grid_boundary(const SurfaceGrid& X, const CrossedModuleContext& ctx);

// Germ exp(integral of the level-2 density): the starting guess that sewing
// upgrades to the full development.
GermFn linear_germ(const LinearSurface& X, const CrossedModuleContext& ctx);
GermFn grid_germ(const SurfaceGrid& X, const CrossedModuleContext& ctx);

struct SewDiagnostics {
    std::vector<double> distances;  // per-iteration distance to the previous value
    std::vector<double> ratios;     // successive distance quotients
    int iterations = 0;
    bool converged = false;
};

struct SewResult {
    HElement h;
    SewDiagnostics diag;
};

// Iteratively replaces the germ on ever finer midway splits, gluing the
// pieces back with the group Chen rules (the upper/right piece twisted by the
// boundary log-signature of the lower/left one). Stops when successive values
// are closer than tol or after n_max refinements; running out of iterations
// is reported in the diagnostics, not fatal. The germ must be the identity on
// zero-area rectangles. With translation_invariant set, intermediate values
// are cached by rectangle shape instead of position -- valid whenever germ
// and boundary depend only on displacements, as for a linear surface. The
// shape cache engages only when r has a side of extent 1 at its minimal
// scale (unit square, elementary squares, dyadic strips): midway splits
// preserve that property, and it keeps equal shapes splitting identically.
// Other starts quietly use position keys, whose cost grows with depth.
SewResult sew_2d(const GermFn& germ, const BoundaryFn& boundary, const DyadicRect& r,
                 const CrossedModuleContext& ctx, double tol = 1e-10, int n_max = 30,
                 bool translation_invariant = false);

// 1D counterpart on an interval: germ(s, t) approximates the log-signature of
// a path restriction; dyadic halving plus BCH gluing produces the unique
// multiplicative refinement. The germ must be the identity on trivial
// intervals.
using Germ1D = std::function<TensorSeries(const Rat& s, const Rat& t)>;

struct Sew1DResult {
    TensorSeries g;
    SewDiagnostics diag;
};

Sew1DResult sew_1d(const Germ1D& germ, const Rat& s, const Rat& t, int n, int level,
                   double tol = 1e-10, int n_max = 30);

// A 2-cocycle one level below a target truncation, presented as callables:
// values of the development on rectangles, plus the boundary cocycle at the
// *target* level.
struct LevelData {
    std::function<HElement(const Rect&)> omega;
    BoundaryFn boundary;
};

// Cocycle data of a linear surface at ctx_low, with the boundary taken at
// ctx_full (the level the extension will run at).
LevelData linear_level_data(const LinearSurface& X, const CrossedModuleContext& ctx_low,
                            const CrossedModuleContext& ctx_full);

// Raises a development by one level (or more): the given values are injected
// with the missing top components set to zero and sewn at ctx.level. The
// input is first spot-checked against its own gluing rule on the midway split
// of r; failing that check is an error. Convergence needs more depth than
// plain sewing, hence the larger default n_max.
OmegaValue extend_level(const LevelData& low, const DyadicRect& r,
                        const CrossedModuleContext& ctx, double tol = 1e-9, int n_max = 80,
                        bool translation_invariant = false, SewDiagnostics* diag = nullptr);

}  // namespace surfsig
