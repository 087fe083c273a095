#include "surfsig/sewing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace surfsig {

namespace {

constexpr int kMaxScale = 62;  // integer corners must fit in a long

long pow2(int s) { return 1L << s; }

// floor of an exact rational
long ifloor(const Rat& x) {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return q.get_si();
}

Rat rpow(const Rat& base, long e) {
    if (e < 0) throw std::invalid_argument("rpow: negative exponent");
    Rat acc = 1, b = base;
    for (; e > 0; e >>= 1) {
        if (e & 1) acc *= b;
        b *= b;
    }
    return acc;
}

double gdist(const CrossedModuleContext& ctx, const HElement& a, const HElement& b) {
    return to_double(h_distance(ctx, a, b));
}

}  // namespace

DyadicRect make_dyadic(int scale, long x0, long y0, long x1, long y1) {
    if (scale < 0 || scale > kMaxScale) throw std::invalid_argument("make_dyadic: bad scale");
    long side = pow2(scale);
    if (x0 < 0 || y0 < 0 || x1 > side || y1 > side)
        throw std::invalid_argument("make_dyadic: corners leave the unit square");
    if (x0 > x1 || y0 > y1) throw std::invalid_argument("make_dyadic: negative extent");
    while (scale > 0 && x0 % 2 == 0 && y0 % 2 == 0 && x1 % 2 == 0 && y1 % 2 == 0) {
        x0 /= 2;
        y0 /= 2;
        x1 /= 2;
        y1 /= 2;
        --scale;
    }
    return DyadicRect{scale, x0, y0, x1, y1};
}

Rect dyadic_rect(const DyadicRect& r) {
    long side = pow2(r.scale);
    return make_rect(rq(r.x0, side), rq(r.y0, side), rq(r.x1, side), rq(r.y1, side));
}

DyadicRect to_dyadic(const Rect& r) {
    constexpr int s = 30;
    auto grid = [&](const Rat& c) -> long {
        Rat scaled = c * pow2(s);
        if (scaled.get_den() != 1)
            throw std::invalid_argument("to_dyadic: corner is not on a dyadic grid");
        return scaled.get_num().get_si();
    };
    return make_dyadic(s, grid(r.s1), grid(r.s2), grid(r.t1), grid(r.t2));
}

Rat dyadic_width(const DyadicRect& r) { return rq(r.iw(), pow2(r.scale)); }
Rat dyadic_height(const DyadicRect& r) { return rq(r.ih(), pow2(r.scale)); }
Rat dyadic_area(const DyadicRect& r) { return dyadic_width(r) * dyadic_height(r); }

std::optional<Rat> eccentricity(const Rect& r) {
    Rat w = r.width(), h = r.height();
    Rat a = std::max(w, h), b = std::min(w, h);
    if (b == 0) return std::nullopt;
    return a / b;
}

std::pair<DyadicRect, DyadicRect> midway_partition(const DyadicRect& in) {
    // The parity cases below are only meaningful at the minimal scale: the
    // same rectangle written one scale finer has even extents and would be
    // cut in a different place. Normalize before dispatching.
    DyadicRect r = make_dyadic(in.scale, in.x0, in.y0, in.x1, in.y1);
    if (r.iw() == 0 || r.ih() == 0)
        throw std::invalid_argument("midway_partition: zero-area rectangle");
    long W = r.iw(), H = r.ih();
    if (W == 1 && H == 1) {
        if (r.scale + 1 > kMaxScale)
            throw std::invalid_argument("midway_partition: dyadic scale limit reached");
        long x = 2 * r.x0, y = 2 * r.y0;
        return {make_dyadic(r.scale + 1, x, y, x + 1, y + 2),
                make_dyadic(r.scale + 1, x + 1, y, x + 2, y + 2)};
    }
    if (W >= H) {
        long mid = r.x0 + (W + 1) / 2;  // exact half for even W, the larger piece first
        return {make_dyadic(r.scale, r.x0, r.y0, mid, r.y1),
                make_dyadic(r.scale, mid, r.y0, r.x1, r.y1)};
    }
    long mid = r.y0 + (H + 1) / 2;
    return {make_dyadic(r.scale, r.x0, r.y0, r.x1, mid),
            make_dyadic(r.scale, r.x0, mid, r.x1, r.y1)};
}

bool is_balanced(const Rect& r, const Rect& a, const Rect& b) {
    auto same_y = [](const Rect& u, const Rect& v) { return u.s2 == v.s2 && u.t2 == v.t2; };
    auto same_x = [](const Rect& u, const Rect& v) { return u.s1 == v.s1 && u.t1 == v.t1; };
    bool vertical_cut = same_y(a, r) && same_y(b, r) &&
                        ((a.s1 == r.s1 && a.t1 == b.s1 && b.t1 == r.t1) ||
                         (b.s1 == r.s1 && b.t1 == a.s1 && a.t1 == r.t1));
    bool horizontal_cut = same_x(a, r) && same_x(b, r) &&
                          ((a.s2 == r.s2 && a.t2 == b.s2 && b.t2 == r.t2) ||
                           (b.s2 == r.s2 && b.t2 == a.s2 && a.t2 == r.t2));
    if (!vertical_cut && !horizontal_cut)
        throw std::invalid_argument("is_balanced: not a partition");
    auto ea = eccentricity(a), eb = eccentricity(b), er = eccentricity(r);
    if (!ea || !eb || !er) return false;
    Rat cap = 2 * *er / 3;
    return std::max(*ea, *eb) <= std::max(Rat(3), cap);
}

SubcontrolParams make_subcontrol(const Rat& theta, const Rat& lambda, const Rat& zeta,
                                 const Rat& ecc) {
    if (!(theta > 1) || !(lambda > 1)) throw std::invalid_argument("subcontrol: exponents must exceed 1");
    if (zeta < 0) throw std::invalid_argument("subcontrol: negative short-side exponent");
    if (lambda < zeta) throw std::invalid_argument("subcontrol: long side must dominate");
    if (2 * theta < lambda + zeta)
        throw std::invalid_argument("subcontrol: square branch must dominate the split exponents");
    if (ecc < 3) throw std::invalid_argument("subcontrol: eccentricity threshold below 3");
    return SubcontrolParams{theta, lambda, zeta, ecc};
}

SubcontrolParams default_subcontrol() { return make_subcontrol(rq(3, 2), 2, 1, 3); }

double subcontrol_eval(const SubcontrolParams& p, const Rect& r) {
    Rat w = r.width(), h = r.height();
    double a = to_double(std::max(w, h)), b = to_double(std::min(w, h));
    auto ecc = eccentricity(r);
    if (ecc && *ecc <= p.ecc) return std::pow(a * b, to_double(p.theta));
    return std::pow(a, to_double(p.lambda)) * std::pow(b, to_double(p.zeta));
}

Rat subcontrol_sq(const SubcontrolParams& p, const Rect& r) {
    Rat t2 = 2 * p.theta, l2 = 2 * p.lambda, z2 = 2 * p.zeta;
    if (t2.get_den() != 1 || l2.get_den() != 1 || z2.get_den() != 1)
        throw std::invalid_argument("subcontrol_sq: exponents must be half-integers");
    Rat w = r.width(), h = r.height();
    Rat a = std::max(w, h), b = std::min(w, h);
    auto ipow = [](const Rat& base, const Rat& e) -> Rat {
        long k = e.get_num().get_si();
        return base == 0 && k == 0 ? Rat(1) : rpow(base, k);
    };
    auto ecc = eccentricity(r);
    if (ecc && *ecc <= p.ecc) return ipow(a * b, t2);
    return ipow(a, l2) * ipow(b, z2);
}

int compare_sqrt_sum(const Rat& p, const Rat& q, const Rat& s) {
    if (p < 0 || q < 0 || s < 0)
        throw std::invalid_argument("compare_sqrt_sum: negative radicand");
    Rat t = s - p - q;  // sqrt(p)+sqrt(q) vs sqrt(s)  <=>  2 sqrt(pq) vs t
    if (t < 0) return 1;
    Rat lhs = 4 * p * q, rhs = t * t;
    return lhs > rhs ? 1 : lhs == rhs ? 0 : -1;
}

BoundaryFn linear_boundary(const LinearSurface& X, const CrossedModuleContext& ctx) {
    int n = ctx.n, level = ctx.level;
    return [X, n, level](const std::array<Rat, 2>& from, const std::array<Rat, 2>& to) {
        std::vector<Rat> p = X.eval(from[0], from[1]), q = X.eval(to[0], to[1]);
        std::vector<Rat> delta(p.size());
        for (size_t i = 0; i < p.size(); ++i) delta[i] = q[i] - p[i];
        return segment_logsig(delta, n, level);
    };
}

namespace {

// value of the cellwise bilinear interpolant of a grid at an exact point
std::vector<Rat> bilinear_at(const SurfaceGrid& X, const Rat& x, const Rat& y) {
    if (x < 0 || x > 1 || y < 0 || y > 1)
        throw std::invalid_argument("grid boundary: point outside the sampled square");
    long a = std::min<long>(ifloor(x * X.m1), X.m1 - 1);
    long b = std::min<long>(ifloor(y * X.m2), X.m2 - 1);
    Rat u = x * X.m1 - a, v = y * X.m2 - b;
    std::vector<Rat> out(X.n);
    for (int c = 0; c < X.n; ++c)
        out[c] = (1 - u) * (1 - v) * X.node[a][b][c] + u * (1 - v) * X.node[a + 1][b][c] +
                 (1 - u) * v * X.node[a][b + 1][c] + u * v * X.node[a + 1][b + 1][c];
    return out;
}

}  // namespace

BoundaryFn grid_boundary(const SurfaceGrid& X, const CrossedModuleContext& ctx) {
    int n = ctx.n, level = ctx.level;
    if (X.n != n) throw std::invalid_argument("grid boundary: channel count mismatch");
    return [X, n, level](const std::array<Rat, 2>& from, const std::array<Rat, 2>& to) {
        if (from == to) return ts_zero(n, level);
        if (from[0] != to[0] && from[1] != to[1])
            throw std::invalid_argument("grid boundary: only axis-aligned segments are supported");
        bool horizontal = from[1] == to[1];
        int m = horizontal ? X.m1 : X.m2;
        Rat lo = horizontal ? from[0] : from[1], hi = horizontal ? to[0] : to[1];
        bool fwd = lo < hi;
        if (!fwd) std::swap(lo, hi);
        std::vector<Rat> params{lo};
        for (long k = ifloor(lo * m) + 1; rq(k, m) < hi; ++k)
            if (rq(k, m) > lo) params.push_back(rq(k, m));
        params.push_back(hi);
        if (!fwd) std::reverse(params.begin(), params.end());
        PLPath image;
        for (const Rat& t : params)
            image.points.push_back(horizontal ? bilinear_at(X, t, from[1])
                                              : bilinear_at(X, from[0], t));
        return path_logsig(image, n, level);
    };
}

GermFn linear_germ(const LinearSurface& X, const CrossedModuleContext& ctx) {
    return [X, &ctx](const Rect& r) { return cell_germ(X, r, ctx); };
}

GermFn grid_germ(const SurfaceGrid& X, const CrossedModuleContext& ctx) {
    if (X.n != ctx.n) throw std::invalid_argument("grid germ: channel count mismatch");
    return [X, &ctx](const Rect& r) {
        HElement h = h_zero(ctx);
        Rat area = r.area();
        if (area == 0) return h;
        Rat cx = (r.s1 + r.t1) / 2, cy = (r.s2 + r.t2) / 2;
        long a = std::min<long>(ifloor(cx * X.m1), X.m1 - 1);
        long b = std::min<long>(ifloor(cy * X.m2), X.m2 - 1);
        Rat u = cx * X.m1 - a, v = cy * X.m2 - b;
        std::vector<Rat> d1(X.n), d2(X.n);
        for (int c = 0; c < X.n; ++c) {
            d1[c] = X.m1 * ((1 - v) * (X.node[a + 1][b][c] - X.node[a][b][c]) +
                            v * (X.node[a + 1][b + 1][c] - X.node[a][b + 1][c]));
            d2[c] = X.m2 * ((1 - u) * (X.node[a][b + 1][c] - X.node[a][b][c]) +
                            u * (X.node[a + 1][b + 1][c] - X.node[a + 1][b][c]));
        }
        for (int j = 1; j <= X.n; ++j)
            for (int k = j + 1; k <= X.n; ++k) {
                Rat jac = d1[j - 1] * d2[k - 1] - d1[k - 1] * d2[j - 1];
                if (jac != 0) h = h_add(h, h_scale(area * jac, h_basis(ctx, PreH{"", j, k})));
            }
        return h;
    };
}

namespace {

// One sewing pass: values of the depth-k refinement, memoized so that deeper
// passes reuse shallower subresults. Keys are full positions, or just the
// rectangle shape when germ and boundary are translation invariant.
struct SewEngine {
    const CrossedModuleContext& ctx;
    const GermFn& germ;
    const BoundaryFn& boundary;
    bool by_shape;
    std::map<std::tuple<int, long, long, long, long, int>, HElement> at_pos;
    std::map<std::tuple<Rat, Rat, int, int>, HElement> at_shape;
    std::map<std::array<Rat, 4>, TensorSeries> edges;

    const TensorSeries& edge(const Rat& fx, const Rat& fy, const Rat& tx, const Rat& ty) {
        std::array<Rat, 4> key{fx, fy, tx, ty};
        auto it = edges.find(key);
        if (it == edges.end()) it = edges.emplace(key, boundary({fx, fy}, {tx, ty})).first;
        return it->second;
    }

    HElement eval(const DyadicRect& r, int depth) {
        if (depth == 0) return germ(dyadic_rect(r));
        if (by_shape) {
            auto key = std::make_tuple(dyadic_width(r), dyadic_height(r), r.scale, depth);
            auto it = at_shape.find(key);
            if (it != at_shape.end()) return it->second;
            HElement v = combine(r, depth);
            return at_shape.emplace(key, std::move(v)).first->second;
        }
        auto key = std::make_tuple(r.scale, r.x0, r.y0, r.x1, r.y1, depth);
        auto it = at_pos.find(key);
        if (it != at_pos.end()) return it->second;
        HElement v = combine(r, depth);
        return at_pos.emplace(key, std::move(v)).first->second;
    }

    HElement combine(const DyadicRect& r, int depth) {
        auto [A, B] = midway_partition(r);
        HElement hA = eval(A, depth - 1), hB = eval(B, depth - 1);
        Rect rr = dyadic_rect(r), ra = dyadic_rect(A);
        if (ra.t2 == rr.t2)  // side by side: twist the right piece past A's bottom edge
            return bch_h(ctx, exp_action(ctx, edge(rr.s1, rr.s2, ra.t1, rr.s2), hB), hA);
        // stacked: twist the top piece past A's left edge
        return bch_h(ctx, hA, exp_action(ctx, edge(rr.s1, rr.s2, rr.s1, ra.t2), hB));
    }
};

}  // namespace

SewResult sew_2d(const GermFn& germ, const BoundaryFn& boundary, const DyadicRect& in,
                 const CrossedModuleContext& ctx, double tol, int n_max,
                 bool translation_invariant) {
    DyadicRect r = make_dyadic(in.scale, in.x0, in.y0, in.x1, in.y1);
    Rect rr = dyadic_rect(r);
    if (!h_is_zero(germ(make_rect(rr.s1, rr.s2, rr.s1, rr.t2))) ||
        !h_is_zero(germ(make_rect(rr.s1, rr.s2, rr.t1, rr.s2))))
        throw std::invalid_argument("sew_2d: germ is not the identity on zero-area rectangles");
    SewResult out;
    if (r.iw() == 0 || r.ih() == 0) {
        out.h = h_zero(ctx);
        out.diag.converged = true;
        return out;
    }
    // Shape keys are only safe when every rectangle in the refinement keeps a
    // side of extent 1 at its minimal scale: that side's endpoints are
    // consecutive integers, so one is odd, the minimal scale is forced, and
    // equal shapes always split identically. The property is inherited by
    // midway pieces, so checking the root suffices; anything wider falls back
    // to position keys, which are always correct.
    bool by_shape = translation_invariant && std::min(r.iw(), r.ih()) == 1;
    SewEngine eng{ctx, germ, boundary, by_shape, {}, {}, {}};
    HElement prev = eng.eval(r, 0);
    out.h = prev;
    for (int k = 1; k <= n_max; ++k) {
        HElement cur = eng.eval(r, k);
        double d = gdist(ctx, prev, cur);
        out.diag.distances.push_back(d);
        size_t m = out.diag.distances.size();
        if (m >= 2 && out.diag.distances[m - 2] > 0)
            out.diag.ratios.push_back(d / out.diag.distances[m - 2]);
        out.h = std::move(cur);
        out.diag.iterations = k;
        if (d < tol) {
            out.diag.converged = true;
            break;
        }
        prev = out.h;
    }
    return out;
}

Sew1DResult sew_1d(const Germ1D& germ, const Rat& s, const Rat& t, int n, int level, double tol,
                   int n_max) {
    if (s > t) throw std::invalid_argument("sew_1d: interval is reversed");
    if (!germ(s, s).is_zero() || !germ(t, t).is_zero())
        throw std::invalid_argument("sew_1d: germ is not the identity on trivial intervals");
    Sew1DResult out{ts_zero(n, level), {}};
    if (s == t) {
        out.diag.converged = true;
        return out;
    }
    std::map<std::tuple<Rat, Rat, int>, TensorSeries> memo;
    auto eval = [&](auto&& self, const Rat& a, const Rat& b, int depth) -> TensorSeries {
        if (depth == 0) return germ(a, b);
        auto key = std::make_tuple(a, b, depth);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        Rat mid = (a + b) / 2;
        TensorSeries v = bch_t(self(self, a, mid, depth - 1), self(self, mid, b, depth - 1));
        return memo.emplace(key, std::move(v)).first->second;
    };
    TensorSeries prev = eval(eval, s, t, 0);
    out.g = prev;
    for (int k = 1; k <= n_max; ++k) {
        TensorSeries cur = eval(eval, s, t, k);
        double d = max_abs_coeff_d(bch_t(scale(-1, prev), cur));
        out.diag.distances.push_back(d);
        size_t m = out.diag.distances.size();
        if (m >= 2 && out.diag.distances[m - 2] > 0)
            out.diag.ratios.push_back(d / out.diag.distances[m - 2]);
        out.g = std::move(cur);
        out.diag.iterations = k;
        if (d < tol) {
            out.diag.converged = true;
            break;
        }
        prev = out.g;
    }
    return out;
}

LevelData linear_level_data(const LinearSurface& X, const CrossedModuleContext& ctx_low,
                            const CrossedModuleContext& ctx_full) {
    return LevelData{
        [X, &ctx_low](const Rect& r) { return omega_quadrature(X, r, ctx_low).h; },
        linear_boundary(X, ctx_full)};
}

OmegaValue extend_level(const LevelData& low, const DyadicRect& in,
                        const CrossedModuleContext& ctx, double tol, int n_max,
                        bool translation_invariant, SewDiagnostics* diag) {
    if (ctx.level < 3) throw std::invalid_argument("extend_level: target level must exceed 2");
    DyadicRect r = make_dyadic(in.scale, in.x0, in.y0, in.x1, in.y1);
    Rect rr = dyadic_rect(r);
    if (r.iw() == 0 || r.ih() == 0)
        return OmegaValue{h_zero(ctx), rr, Provenance::sewn};

    HElement probe = low.omega(rr);
    if (probe.n != ctx.n || probe.level < 2 || probe.level >= ctx.level)
        throw std::invalid_argument("extend_level: input data is at the wrong truncation level");

    // The input must glue correctly at its own level before it can seed the
    // next one; spot-check its Chen rule on the midway split.
    CrossedModuleContext low_ctx = build_context(ctx.n, probe.level);
    {
        auto [A, B] = midway_partition(r);
        Rect ra = dyadic_rect(A), rb = dyadic_rect(B);
        HElement hA = low.omega(ra), hB = low.omega(rb);
        HElement combo;
        if (ra.t2 == rr.t2) {
            TensorSeries e = truncate(low.boundary({rr.s1, rr.s2}, {ra.t1, rr.s2}), low_ctx.level);
            combo = bch_h(low_ctx, exp_action(low_ctx, e, hB), hA);
        } else {
            TensorSeries e = truncate(low.boundary({rr.s1, rr.s2}, {rr.s1, ra.t2}), low_ctx.level);
            combo = bch_h(low_ctx, hA, exp_action(low_ctx, e, hB));
        }
        if (gdist(low_ctx, probe, combo) > 1e-8)
            throw std::invalid_argument("extend_level: input data violates its own Chen identity");
    }

    int copy_to = probe.level;
    GermFn germ = [&low, &ctx, copy_to](const Rect& cell) {
        HElement v = low.omega(cell);
        HElement h = h_zero(ctx);
        for (int p = 2; p <= copy_to; ++p) h.comps[p] = v.comps[p];
        return h;
    };
    SewResult sewn = sew_2d(germ, low.boundary, r, ctx, tol, n_max, translation_invariant);
    if (diag) *diag = sewn.diag;
    return OmegaValue{sewn.h, rr, Provenance::sewn};
}

}  // namespace surfsig
