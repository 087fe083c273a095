#include "surfsig/surface_dev.hpp"

#include "surfsig/rat_linalg.hpp"
#include "surfsig/tensor_algebra.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace surfsig {

namespace {

std::vector<Rat> vdiff(const std::vector<Rat>& to, const std::vector<Rat>& from) {
    std::vector<Rat> d(to.size());
    for (std::size_t i = 0; i < to.size(); ++i) d[i] = to[i] - from[i];
    return d;
}

std::vector<Rat> vmid(const std::vector<Rat>& u, const std::vector<Rat>& v) {
    std::vector<Rat> m(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) m[i] = (u[i] + v[i]) * rq(1, 2);
    return m;
}

// Copy a low-truncation series into the context's truncation (words carry
// over unchanged; act insists on matching levels).
TensorSeries relift(const TensorSeries& x, int level) {
    TensorSeries out = ts_zero(x.n, level);
    for (const auto& [w, c] : x.coeff)
        if (static_cast<int>(w.size()) <= level) out.add_to(w, c);
    return out;
}

// ---------------------------------------------------------------------------
// Exact bivariate polynomials over the parameter plane. The two exponent
// slots mean (r, q) while integrating over a rectangle and (q1, q2) inside
// the time-ordered correction; the integration helpers fix the reading.

using Mono = std::pair<int, int>;
using Poly = std::map<Mono, Rat>;

void padd(Poly& a, const Poly& b, const Rat& c) {
    if (c == 0) return;
    for (const auto& [m, v] : b) {
        Rat& slot = a[m];
        slot += c * v;
        if (slot == 0) a.erase(m);
    }
}

Poly pmul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, va] : a)
        for (const auto& [mb, vb] : b) {
            Mono m{ma.first + mb.first, ma.second + mb.second};
            Rat& slot = out[m];
            slot += va * vb;
            if (slot == 0) out.erase(m);
        }
    return out;
}

Rat ipow(const Rat& x, int k) {
    Rat out(1);
    for (int i = 0; i < k; ++i) out *= x;
    return out;
}

// Sparse H- and g-valued polynomial functions: (level, reduced coordinate)
// -> Poly, and tensor word -> Poly.
using PolyH = std::map<std::pair<int, int>, Poly>;
using PolyT = std::map<std::string, Poly>;

void ph_axpy(PolyH& a, const PolyH& b, const Rat& c) {
    for (const auto& [k, p] : b) padd(a[k], p, c);
}

// Matrices of single-word prepends and derived brackets of reduced unit
// vectors, cached; the quotient dimensions are tiny, so dense is fine.
struct Engine {
    const CrossedModuleContext& ctx;
    std::map<std::pair<std::string, int>, RatMat> act_mats;
    std::map<std::array<int, 4>, std::vector<Rat>> db_vecs;

    explicit Engine(const CrossedModuleContext& c) : ctx(c) {}

    const RatMat& act_matrix(const std::string& w, int p) {
        auto key = std::make_pair(w, p);
        auto it = act_mats.find(key);
        if (it != act_mats.end()) return it->second;
        int tp = p + static_cast<int>(w.size());
        int cols = ctx.dim_quotient(p);
        int rows = tp <= ctx.level ? ctx.dim_quotient(tp) : 0;
        RatMat m(rows, cols);
        if (rows > 0) {
            TensorSeries xw = ts_zero(ctx.n, ctx.level);
            xw.add_to(w, Rat(1));
            for (int e = 0; e < cols; ++e) {
                HElement u = h_zero(ctx);
                u.comps[p][e] = 1;
                HElement v = act(ctx, xw, u);
                for (int r = 0; r < rows; ++r) m.at(r, e) = v.comps[tp][r];
            }
        }
        return act_mats.emplace(std::move(key), std::move(m)).first->second;
    }

    const std::vector<Rat>& db_vec(int p, int e, int q, int f) {
        std::array<int, 4> key{p, e, q, f};
        auto it = db_vecs.find(key);
        if (it != db_vecs.end()) return it->second;
        HElement u = h_zero(ctx), v = h_zero(ctx);
        u.comps[p][e] = 1;
        v.comps[q][f] = 1;
        HElement w = derived_bracket(ctx, u, v);
        return db_vecs.emplace(key, w.comps[p + q]).first->second;
    }
};

PolyH act_poly(Engine& E, const PolyT& x, const PolyH& h) {
    PolyH out;
    for (const auto& [w, pw] : x) {
        int len = static_cast<int>(w.size());
        for (const auto& [key, ph] : h) {
            int tp = key.first + len;
            if (tp > E.ctx.level) continue;
            const RatMat& m = E.act_matrix(w, key.first);
            if (m.rows == 0) continue;
            Poly prod = pmul(pw, ph);
            if (prod.empty()) continue;
            for (int r = 0; r < m.rows; ++r) {
                const Rat& c = m.at(r, key.second);
                if (c != 0) padd(out[{tp, r}], prod, c);
            }
        }
    }
    return out;
}

// [A(q1), B(q2)] for inputs that depend on q alone (second slot); the
// output's slots are (q1, q2).
PolyH bracket_two_times(Engine& E, const PolyH& A, const PolyH& B) {
    PolyH out;
    for (const auto& [ka, pa] : A)
        for (const auto& [kb, pb] : B) {
            int tp = ka.first + kb.first;
            if (tp > E.ctx.level) continue;
            const auto& vec = E.db_vec(ka.first, ka.second, kb.first, kb.second);
            Poly a1, b2;
            for (const auto& [m, c] : pa) a1[{m.second, 0}] += c;
            for (const auto& [m, c] : pb) b2[{0, m.second}] += c;
            Poly prod = pmul(a1, b2);
            if (prod.empty()) continue;
            for (int r = 0; r < static_cast<int>(vec.size()); ++r)
                if (vec[r] != 0) padd(out[{tp, r}], prod, vec[r]);
        }
    return out;
}

// integral over [0,w] x [0,h], slots read as (r, q)
void add_rect_integral(HElement& acc, const PolyH& F, const Rat& w, const Rat& h, const Rat& c) {
    for (const auto& [key, p] : F) {
        Rat s(0);
        for (const auto& [m, v] : p)
            s += v * ipow(w, m.first + 1) * ipow(h, m.second + 1) *
                 rq(1, static_cast<long>(m.first + 1) * (m.second + 1));
        if (s != 0) acc.comps[key.first][key.second] += c * s;
    }
}

// integral over 0 < q1 < q2 < h, slots read as (q1, q2)
void add_triangle_integral(HElement& acc, const PolyH& F, const Rat& h, const Rat& c) {
    for (const auto& [key, p] : F) {
        Rat s(0);
        for (const auto& [m, v] : p)
            s += v * ipow(h, m.first + m.second + 2) *
                 rq(1, static_cast<long>(m.first + 1) * (m.first + m.second + 2));
        if (s != 0) acc.comps[key.first][key.second] += c * s;
    }
}

// integrate the first slot over [0,w], leaving a function of q
PolyH r_slice(const PolyH& F, const Rat& w) {
    PolyH out;
    for (const auto& [key, p] : F) {
        Poly q;
        for (const auto& [m, v] : p) {
            Rat& slot = q[{0, m.second}];
            slot += v * ipow(w, m.first + 1) * rq(1, m.first + 1);
            if (slot == 0) q.erase({0, m.second});
        }
        if (!q.empty()) out[key] = std::move(q);
    }
    return out;
}

// Log-signature of the up-then-right hook from the rectangle's base corner
// to (r, q) as a tensor polynomial: bch(q U, r V) where U and V are the
// images of the vertical and horizontal unit directions. Degrees above
// maxdeg never reach the truncation once applied to the curvature form.
PolyT hook_poly(const LinearSurface& X, int maxdeg, int level) {
    int n = X.dim();
    TensorSeries U = ts_zero(n, level), V = ts_zero(n, level);
    for (int i = 0; i < n; ++i) {
        U.add_to(std::string(1, static_cast<char>('1' + i)), X.M[i][1]);
        V.add_to(std::string(1, static_cast<char>('1' + i)), X.M[i][0]);
    }
    PolyT out;
    auto put = [&out](const TensorSeries& t, int er, int eq, const Rat& c) {
        for (const auto& [w, v] : t.coeff) {
            Rat& slot = out[w][{er, eq}];
            slot += c * v;
            if (slot == 0) out[w].erase({er, eq});
        }
    };
    if (maxdeg >= 1) {
        put(U, 0, 1, Rat(1));
        put(V, 1, 0, Rat(1));
    }
    if (maxdeg >= 2) put(commutator(U, V), 1, 1, rq(1, 2));
    if (maxdeg >= 3) {
        put(commutator(U, commutator(U, V)), 1, 2, rq(1, 12));
        put(commutator(V, commutator(V, U)), 2, 1, rq(1, 12));
    }
    return out;
}

// The constant curvature density of a linear surface in reduced level-2
// coordinates.
PolyH beta_linear(const CrossedModuleContext& ctx, const LinearSurface& X) {
    std::vector<Rat> full(ctx.dim_full(2), Rat(0));
    for (int j = 1; j <= ctx.n; ++j)
        for (int k = j + 1; k <= ctx.n; ++k)
            full[ctx.index_of(2, PreH{"", j, k})] = jacobian_minor(X, j, k);
    auto red = ctx.to_reduced(2, ctx.reduce_full(2, std::move(full)));
    PolyH out;
    for (int e = 0; e < static_cast<int>(red.size()); ++e)
        if (red[e] != 0) out[{2, e}][{0, 0}] = red[e];
    return out;
}

void check_surface(int sdim, const CrossedModuleContext& ctx, const char* who) {
    if (sdim != ctx.n)
        throw std::invalid_argument(std::string(who) +
                                    ": surface dimension differs from the context");
}

// Exact development of a linear surface over a w x h rectangle (the value
// only depends on the extent: Jacobians are constant and the hook factors
// are measured from the base corner). The whole truncation is covered by
// the double integral of exp(action of the hook) applied to the curvature
// density plus one time-ordered bracket correction; iterated corrections
// would carry degree at least 6.
HElement omega_linear(const LinearSurface& X, const Rat& w, const Rat& h,
                      const CrossedModuleContext& ctx) {
    HElement acc = h_zero(ctx);
    if (w == 0 || h == 0) return acc;
    Engine E(ctx);
    PolyH beta = beta_linear(ctx, X);
    PolyT hook = hook_poly(X, ctx.level - 2, ctx.level);
    PolyH ek = beta, term = beta;
    for (int k = 1; k <= ctx.level - 2 && !term.empty(); ++k) {
        term = act_poly(E, hook, term);
        for (auto& [key, p] : term)
            for (auto& [m, c] : p) c /= k;
        ph_axpy(ek, term, Rat(1));
    }
    add_rect_integral(acc, ek, w, h, Rat(1));
    if (ctx.level >= 4) {
        PolyH kr = r_slice(ek, w);
        add_triangle_integral(acc, bracket_two_times(E, kr, kr), h, rq(1, 2));
    }
    return acc;
}

// Cell range of a grid-aligned rectangle.
struct CellRange {
    int a0 = 0, b0 = 0, a1 = 0, b1 = 0;
};

CellRange aligned_range(const SurfaceGrid& X, const Rect& r, const char* who) {
    auto snap = [&](const Rat& x, int m) -> int {
        Rat t = x * m;
        if (t.get_den() != 1)
            throw std::invalid_argument(std::string(who) + ": rectangle not aligned to the grid");
        long v = t.get_num().get_si();
        if (v < 0 || v > m)
            throw std::invalid_argument(std::string(who) + ": rectangle leaves the sampled square");
        return static_cast<int>(v);
    };
    CellRange c;
    c.a0 = snap(r.s1, X.m1);
    c.a1 = snap(r.t1, X.m1);
    c.b0 = snap(r.s2, X.m2);
    c.b1 = snap(r.t2, X.m2);
    return c;
}

void check_cell(const SurfaceGrid& X, int a, int b, const char* who) {
    if (a < 0 || b < 0 || a >= X.m1 || b >= X.m2)
        throw std::invalid_argument(std::string(who) + ": cell outside the grid");
}

// Curvature density of one cell as a level-2 element (per unit parameter
// area).
HElement beta_cell(const SurfaceGrid& X, int a, int b, const CrossedModuleContext& ctx) {
    std::vector<Rat> full(ctx.dim_full(2), Rat(0));
    for (int j = 1; j <= ctx.n; ++j)
        for (int k = j + 1; k <= ctx.n; ++k)
            full[ctx.index_of(2, PreH{"", j, k})] = jacobian_minor(X, a, b, j, k);
    HElement out = h_zero(ctx);
    out.comps[2] = ctx.to_reduced(2, ctx.reduce_full(2, std::move(full)));
    return out;
}

// value at the midpoint of the vertical edge between nodes (a,b) and (a,b+1)
std::vector<Rat> edge_mid(const SurfaceGrid& X, int a, int b) {
    return vmid(X.node[a][b], X.node[a][b + 1]);
}

std::vector<Rat> cell_center(const SurfaceGrid& X, int a, int b) {
    return vmid(edge_mid(X, a, b), edge_mid(X, a + 1, b));
}

// Development of a single grid cell: the midpoint value of the hook-action
// integrand times the cell area. (The within-cell time-ordered correction
// vanishes at a single midpoint by antisymmetry of the bracket.)
HElement cell_omega(const SurfaceGrid& X, int a, int b, const CrossedModuleContext& ctx, int hlv) {
    std::vector<Rat> base = X.node[a][b];
    std::vector<Rat> mid = edge_mid(X, a, b);
    TensorSeries hk = bch_t(segment_logsig(vdiff(mid, base), ctx.n, hlv),
                            segment_logsig(vdiff(cell_center(X, a, b), mid), ctx.n, hlv));
    HElement v = exp_action(ctx, relift(hk, ctx.level), beta_cell(X, a, b, ctx));
    return h_scale(X.cell_w() * X.cell_h(), v);
}

}  // namespace

Rect make_rect(const Rat& s1, const Rat& s2, const Rat& t1, const Rat& t2) {
    if (s1 > t1 || s2 > t2)
        throw std::invalid_argument("make_rect: need s1 <= t1 and s2 <= t2");
    return Rect{s1, s2, t1, t2};
}

std::vector<Rat> LinearSurface::eval(const Rat& r, const Rat& q) const {
    std::vector<Rat> x(M.size());
    for (std::size_t i = 0; i < M.size(); ++i) x[i] = M[i][0] * r + M[i][1] * q;
    return x;
}

SurfaceGrid sample_grid(const std::function<std::vector<Rat>(const Rat&, const Rat&)>& f, int n,
                        int m1, int m2) {
    if (n < 1 || m1 < 1 || m2 < 1)
        throw std::invalid_argument("sample_grid: need positive dimensions and cell counts");
    SurfaceGrid g;
    g.m1 = m1;
    g.m2 = m2;
    g.n = n;
    g.node.assign(m1 + 1, std::vector<std::vector<Rat>>(m2 + 1));
    for (int a = 0; a <= m1; ++a)
        for (int b = 0; b <= m2; ++b) {
            g.node[a][b] = f(rq(a, m1), rq(b, m2));
            if (static_cast<int>(g.node[a][b].size()) != n)
                throw std::invalid_argument("sample_grid: sample dimension mismatch");
        }
    return g;
}

SurfaceGrid sample_grid(const LinearSurface& X, int m1, int m2) {
    return sample_grid([&X](const Rat& r, const Rat& q) { return X.eval(r, q); }, X.dim(), m1,
                       m2);
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::quadrature: return "quadrature";
        case Provenance::assembled: return "assembled";
        case Provenance::lifted: return "lifted";
        case Provenance::sewn: return "sewn";
    }
    return "?";
}

Rat jacobian_minor(const LinearSurface& X, int i, int j) {
    if (i < 1 || i >= j || j > X.dim())
        throw std::invalid_argument("jacobian_minor: need rows 1 <= i < j <= n");
    return X.M[i - 1][0] * X.M[j - 1][1] - X.M[j - 1][0] * X.M[i - 1][1];
}

Rat jacobian_minor(const SurfaceGrid& X, int a, int b, int i, int j) {
    if (i < 1 || i >= j || j > X.n)
        throw std::invalid_argument("jacobian_minor: need rows 1 <= i < j <= n");
    check_cell(X, a, b, "jacobian_minor");
    auto d1 = [&](int c) -> Rat {
        return (X.node[a + 1][b][c] - X.node[a][b][c] + X.node[a + 1][b + 1][c] -
                X.node[a][b + 1][c]) *
               rq(X.m1, 2);
    };
    auto d2 = [&](int c) -> Rat {
        return (X.node[a][b + 1][c] - X.node[a][b][c] + X.node[a + 1][b + 1][c] -
                X.node[a + 1][b][c]) *
               rq(X.m2, 2);
    };
    return d1(i - 1) * d2(j - 1) - d1(j - 1) * d2(i - 1);
}

OmegaValue omega_quadrature(const LinearSurface& X, const Rect& r,
                            const CrossedModuleContext& ctx) {
    check_surface(X.dim(), ctx, "omega_quadrature");
    if (ctx.level > 5)
        throw std::invalid_argument(
            "omega_quadrature: direct integration stops at level 5; assemble or sew instead");
    return {omega_linear(X, r.width(), r.height(), ctx), r, Provenance::quadrature};
}

OmegaValue omega_quadrature(const SurfaceGrid& X, const Rect& r, const CrossedModuleContext& ctx) {
    check_surface(X.n, ctx, "omega_quadrature");
    if (ctx.level > 5)
        throw std::invalid_argument(
            "omega_quadrature: direct integration stops at level 5; assemble or sew instead");
    CellRange cr = aligned_range(X, r, "omega_quadrature");
    HElement acc = h_zero(ctx);
    if (cr.a1 == cr.a0 || cr.b1 == cr.b0) return {acc, r, Provenance::quadrature};
    int hlv = std::max(1, ctx.level - 2);
    Rat w = X.cell_w(), h = X.cell_h();
    std::vector<HElement> rows;
    TensorSeries up = ts_zero(ctx.n, hlv);  // left edge, base node up to node (a0, b)
    for (int b = cr.b0; b < cr.b1; ++b) {
        if (b > cr.b0)
            up = bch_t(up, segment_logsig(vdiff(X.node[cr.a0][b], X.node[cr.a0][b - 1]), ctx.n,
                                          hlv));
        std::vector<Rat> pos = edge_mid(X, cr.a0, b);
        TensorSeries cur = bch_t(up, segment_logsig(vdiff(pos, X.node[cr.a0][b]), ctx.n, hlv));
        HElement K = h_zero(ctx);
        for (int a = cr.a0; a < cr.a1; ++a) {
            TensorSeries hook =
                bch_t(cur, segment_logsig(vdiff(cell_center(X, a, b), pos), ctx.n, hlv));
            HElement v = exp_action(ctx, relift(hook, ctx.level), beta_cell(X, a, b, ctx));
            K = h_add(K, h_scale(w, v));
            if (a + 1 < cr.a1) {
                std::vector<Rat> nxt = edge_mid(X, a + 1, b);
                cur = bch_t(cur, segment_logsig(vdiff(nxt, pos), ctx.n, hlv));
                pos = std::move(nxt);
            }
        }
        acc = h_add(acc, h_scale(h, K));
        rows.push_back(std::move(K));
    }
    if (ctx.level >= 4) {
        Rat half_h2 = h * h * rq(1, 2);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = i + 1; j < rows.size(); ++j)
                acc = h_add(acc, h_scale(half_h2, derived_bracket(ctx, rows[i], rows[j])));
    }
    return {acc, r, Provenance::quadrature};
}

HElement cell_germ(const LinearSurface& X, const Rect& cell, const CrossedModuleContext& ctx) {
    check_surface(X.dim(), ctx, "cell_germ");
    HElement out = h_zero(ctx);
    Rat area = cell.area();
    if (area == 0) return out;
    std::vector<Rat> full(ctx.dim_full(2), Rat(0));
    for (int j = 1; j <= ctx.n; ++j)
        for (int k = j + 1; k <= ctx.n; ++k)
            full[ctx.index_of(2, PreH{"", j, k})] = area * jacobian_minor(X, j, k);
    out.comps[2] = ctx.to_reduced(2, ctx.reduce_full(2, std::move(full)));
    return out;
}

HElement cell_germ(const SurfaceGrid& X, int a, int b, const CrossedModuleContext& ctx) {
    check_surface(X.n, ctx, "cell_germ");
    check_cell(X, a, b, "cell_germ");
    return h_scale(X.cell_w() * X.cell_h(), beta_cell(X, a, b, ctx));
}

OmegaValue chen_assemble(const SurfaceGrid& X, const Rect& r, const CrossedModuleContext& ctx,
                         AssemblyOrder order) {
    check_surface(X.n, ctx, "chen_assemble");
    CellRange cr = aligned_range(X, r, "chen_assemble");
    if (cr.a1 == cr.a0 || cr.b1 == cr.b0) return {h_zero(ctx), r, Provenance::assembled};
    int hlv = std::max(1, ctx.level - 2);
    auto seg = [&](const std::vector<Rat>& to, const std::vector<Rat>& from) {
        return segment_logsig(vdiff(to, from), ctx.n, hlv);
    };
    HElement total;
    if (order == AssemblyOrder::row_major) {
        TensorSeries left = ts_zero(ctx.n, hlv);  // left edge of the block below
        for (int b = cr.b0; b < cr.b1; ++b) {
            if (b > cr.b0) left = bch_t(left, seg(X.node[cr.a0][b], X.node[cr.a0][b - 1]));
            HElement row = cell_omega(X, cr.a0, b, ctx, hlv);
            TensorSeries bot = ts_zero(ctx.n, hlv);  // bottom edge of the row block so far
            for (int a = cr.a0 + 1; a < cr.a1; ++a) {
                bot = bch_t(bot, seg(X.node[a][b], X.node[a - 1][b]));
                row = bch_h(ctx, exp_action(ctx, relift(bot, ctx.level),
                                            cell_omega(X, a, b, ctx, hlv)),
                            row);
            }
            total = b == cr.b0
                        ? row
                        : bch_h(ctx, total, exp_action(ctx, relift(left, ctx.level), row));
        }
    } else {
        TensorSeries bot = ts_zero(ctx.n, hlv);  // bottom edge of the block to the left
        for (int a = cr.a0; a < cr.a1; ++a) {
            if (a > cr.a0) bot = bch_t(bot, seg(X.node[a][cr.b0], X.node[a - 1][cr.b0]));
            HElement col = cell_omega(X, a, cr.b0, ctx, hlv);
            TensorSeries left = ts_zero(ctx.n, hlv);  // left edge of the column block so far
            for (int b = cr.b0 + 1; b < cr.b1; ++b) {
                left = bch_t(left, seg(X.node[a][b], X.node[a][b - 1]));
                col = bch_h(ctx, col,
                            exp_action(ctx, relift(left, ctx.level),
                                       cell_omega(X, a, b, ctx, hlv)));
            }
            total = a == cr.a0
                        ? col
                        : bch_h(ctx, exp_action(ctx, relift(bot, ctx.level), col), total);
        }
    }
    return {total, r, Provenance::assembled};
}

OmegaValue chen_assemble(const LinearSurface& X, const Rect& r, int cols, int rows,
                         const CrossedModuleContext& ctx, AssemblyOrder order) {
    check_surface(X.dim(), ctx, "chen_assemble");
    if (cols < 1 || rows < 1)
        throw std::invalid_argument("chen_assemble: need at least one cell in each direction");
    Rat cw = r.width() * rq(1, cols), ch = r.height() * rq(1, rows);
    // exact development of one cell; all cells share it (constant Jacobians,
    // hooks measured from each cell's own corner)
    HElement cell = omega_linear(X, cw, ch, ctx);
    // straight edges: the image log-signature is the plain displacement
    auto hseg = [&](int k) {  // k cells wide, along a horizontal edge
        std::vector<Rat> d(X.dim());
        for (int i = 0; i < X.dim(); ++i) d[i] = X.M[i][0] * cw * k;
        return relift(segment_logsig(d, ctx.n, 1), ctx.level);
    };
    auto vseg = [&](int k) {
        std::vector<Rat> d(X.dim());
        for (int i = 0; i < X.dim(); ++i) d[i] = X.M[i][1] * ch * k;
        return relift(segment_logsig(d, ctx.n, 1), ctx.level);
    };
    HElement total;
    if (order == AssemblyOrder::row_major) {
        for (int b = 0; b < rows; ++b) {
            HElement row = cell;
            for (int a = 1; a < cols; ++a)
                row = bch_h(ctx, exp_action(ctx, hseg(a), cell), row);
            total = b == 0 ? row : bch_h(ctx, total, exp_action(ctx, vseg(b), row));
        }
    } else {
        for (int a = 0; a < cols; ++a) {
            HElement col = cell;
            for (int b = 1; b < rows; ++b)
                col = bch_h(ctx, col, exp_action(ctx, vseg(b), cell));
            total = a == 0 ? col : bch_h(ctx, exp_action(ctx, hseg(a), col), total);
        }
    }
    return {total, r, Provenance::assembled};
}

PLPath boundary_path(const LinearSurface& X, const Rect& r) {
    PLPath p;
    p.points.push_back(X.eval(r.s1, r.s2));
    p.points.push_back(X.eval(r.t1, r.s2));
    p.points.push_back(X.eval(r.t1, r.t2));
    p.points.push_back(X.eval(r.s1, r.t2));
    p.points.push_back(X.eval(r.s1, r.s2));
    return p;
}

PLPath boundary_path(const SurfaceGrid& X, const Rect& r) {
    CellRange c = aligned_range(X, r, "boundary_path");
    PLPath p;
    for (int a = c.a0; a <= c.a1; ++a) p.points.push_back(X.node[a][c.b0]);
    for (int b = c.b0 + 1; b <= c.b1; ++b) p.points.push_back(X.node[c.a1][b]);
    for (int a = c.a1 - 1; a >= c.a0; --a) p.points.push_back(X.node[a][c.b1]);
    for (int b = c.b1 - 1; b >= c.b0; --b) p.points.push_back(X.node[c.a0][b]);
    return p;
}

namespace {

std::vector<Rat> stokes_defects(const TensorSeries& fb, const PLPath& bp, int n, int N) {
    TensorSeries d = sub(fb, path_logsig(bp, n, N));
    std::vector<Rat> out(N);
    for (int p = 1; p <= N; ++p) out[p - 1] = max_abs_coeff(graded_part(d, p));
    return out;
}

}  // namespace

std::vector<Rat> stokes_check(const OmegaValue& om, const LinearSurface& X,
                              const CrossedModuleContext& ctx) {
    check_surface(X.dim(), ctx, "stokes_check");
    return stokes_defects(feedback(ctx, om.h), boundary_path(X, om.rect), ctx.n, ctx.level);
}

std::vector<Rat> stokes_check(const OmegaValue& om, const SurfaceGrid& X,
                              const CrossedModuleContext& ctx) {
    check_surface(X.n, ctx, "stokes_check");
    return stokes_defects(feedback(ctx, om.h), boundary_path(X, om.rect), ctx.n, ctx.level);
}

namespace {

// Shared lift plumbing: level 2 from the boundary (feedback is injective
// there: the class of Z_jk is read off the coefficient of the word jk),
// level 3 copied from the canonical integral.
OmegaValue lift_common(const PLPath& boundary, const HElement* quad, const Rect& r,
                       const CrossedModuleContext& ctx, int N) {
    if (N < 2 || N > 3)
        throw std::invalid_argument(
            "young_lift: only levels 2 and 3 are canonical; higher levels go through the "
            "sewing extension");
    if (ctx.level < N) throw std::invalid_argument("young_lift: context level below the lift");
    HElement out = h_zero(ctx);
    TensorSeries bl = path_logsig(boundary, ctx.n, 2);
    std::vector<Rat> full(ctx.dim_full(2), Rat(0));
    for (int j = 1; j <= ctx.n; ++j)
        for (int k = j + 1; k <= ctx.n; ++k) {
            std::string w{static_cast<char>('0' + j), static_cast<char>('0' + k)};
            full[ctx.index_of(2, PreH{"", j, k})] = bl.at(w);
        }
    out.comps[2] = ctx.to_reduced(2, ctx.reduce_full(2, std::move(full)));
    if (N == 3) out.comps[3] = quad->comps[3];
    return {out, r, Provenance::lifted};
}

}  // namespace

OmegaValue young_lift(const LinearSurface& X, const Rect& r, const CrossedModuleContext& ctx,
                      int N) {
    check_surface(X.dim(), ctx, "young_lift");
    HElement quad;
    if (N == 3) quad = omega_linear(X, r.width(), r.height(), ctx);
    return lift_common(boundary_path(X, r), &quad, r, ctx, N);
}

OmegaValue young_lift(const SurfaceGrid& X, const Rect& r, const CrossedModuleContext& ctx,
                      int N) {
    check_surface(X.n, ctx, "young_lift");
    HElement quad;
    if (N == 3) quad = omega_quadrature(X, r, ctx).h;
    return lift_common(boundary_path(X, r), &quad, r, ctx, N);
}

}  // namespace surfsig
