#include "surfsig/surface_dev.hpp"

#include "surfsig/crossed_module.hpp"

#include "doctest.h"

#include <cmath>
#include <map>
#include <random>
#include <string>

using namespace surfsig;

namespace {

Rat rand_rat(std::mt19937& rng, int num_max = 4, int den_max = 3) {
    std::uniform_int_distribution<int> num(-num_max, num_max);
    std::uniform_int_distribution<int> den(1, den_max);
    return rq(num(rng), den(rng));
}

LinearSurface random_linear(std::mt19937& rng) {
    LinearSurface X;
    X.M.resize(3);
    for (auto& row : X.M) row = {rand_rat(rng), rand_rat(rng)};
    return X;
}

bool h_equal(const HElement& a, const HElement& b) { return h_is_zero(h_sub(a, b)); }

std::map<std::string, Rat> disp_map(const CrossedModuleContext& ctx, const HElement& h, int p) {
    std::map<std::string, Rat> m;
    for (auto& [lab, c] : display_coordinates(ctx, h, p)) m[lab] = c;
    return m;
}

// the closed-form moments of a linear surface over [0,s1] x [0,s2]
struct Moments {
    LinearSurface X;
    Rat s1, s2;

    Rat det(int j, int k) const { return jacobian_minor(X, j, k); }
    Rat xj(int i, int j, int k) const {
        return (s2 * s1 * s1 * X.M[i - 1][0] + s1 * s2 * s2 * X.M[i - 1][1]) * rq(1, 2) *
               det(j, k);
    }
    Rat xxj(int i, int j, int k, int l) const {
        const auto& Mi = X.M[i - 1];
        const auto& Mj = X.M[j - 1];
        Rat m = s2 * s1 * s1 * s1 * Mi[0] * Mj[0] * rq(1, 3) +
                s2 * s2 * s1 * s1 * (Mi[0] * Mj[1] + Mi[1] * Mj[0]) * rq(1, 4) +
                s2 * s2 * s2 * s1 * Mi[1] * Mj[1] * rq(1, 3);
        return m * det(k, l);
    }
    Rat aj(int i, int j, int k, int l) const {
        return s1 * s1 * s2 * s2 * det(i, j) * det(k, l) * rq(-1, 8);
    }
    Rat jj(int i, int j, int k, int l) const {
        return s1 * s1 * s2 * s2 * det(i, j) * det(k, l) * rq(1, 2);
    }
};

}  // namespace

TEST_CASE("jacobian minors") {
    LinearSurface id2;
    id2.M = {{Rat(1), Rat(0)}, {Rat(0), Rat(1)}};
    CHECK(jacobian_minor(id2, 1, 2) == 1);
    LinearSurface sw;
    sw.M = {{Rat(0), Rat(1)}, {Rat(1), Rat(0)}};
    CHECK(jacobian_minor(sw, 1, 2) == -1);
    CHECK_THROWS_AS(jacobian_minor(id2, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(jacobian_minor(id2, 1, 3), std::invalid_argument);

    // X(r,q) = (r, q, rq): the area density of the (1,2) projection is 1,
    // and the mixed ones read off the cell center
    SurfaceGrid g = sample_grid(
        [](const Rat& r, const Rat& q) {
            return std::vector<Rat>{r, q, r * q};
        },
        3, 4, 4);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            CHECK(jacobian_minor(g, a, b, 1, 2) == 1);
            CHECK(jacobian_minor(g, a, b, 1, 3) == rq(2 * a + 1, 8));
            CHECK(jacobian_minor(g, a, b, 2, 3) == -rq(2 * b + 1, 8));
        }
}

TEST_CASE("linear development closed forms at levels 2 and 3") {
    CrossedModuleContext ctx = build_context(3, 3);
    std::mt19937 rng(71);
    for (int trial = 0; trial < 5; ++trial) {
        Rat t1 = rand_rat(rng, 2, 2), t2 = rand_rat(rng, 2, 2);
        Moments m{random_linear(rng), rq(1, 3) + t1 * t1, rq(1, 2) + t2 * t2};
        OmegaValue om = omega_quadrature(m.X, make_rect(0, 0, m.s1, m.s2), ctx);
        CHECK(om.tag == Provenance::quadrature);

        HElement lvl2 = h_zero(ctx);
        for (int j = 1; j <= 3; ++j)
            for (int k = j + 1; k <= 3; ++k)
                lvl2 = h_add(lvl2,
                             h_scale(m.s1 * m.s2 * m.det(j, k), h_basis(ctx, PreH{"", j, k})));
        CHECK(h_equal(h_graded_part(om.h, 2), lvl2));

        auto d = disp_map(ctx, om.h, 3);
        CHECK(d["[1,[1,2]]"] == m.xj(1, 1, 2));
        CHECK(d["[2,[1,2]]"] == m.xj(2, 1, 2));
        CHECK(d["[3,[1,2]]"] == m.xj(3, 1, 2) - m.xj(1, 2, 3));
        CHECK(d["[1,[1,3]]"] == m.xj(1, 1, 3));
        CHECK(d["[2,[1,3]]"] == m.xj(2, 1, 3) + m.xj(1, 2, 3));
        CHECK(d["[3,[1,3]]"] == m.xj(3, 1, 3));
        CHECK(d["[2,[2,3]]"] == m.xj(2, 2, 3));
        CHECK(d["[3,[2,3]]"] == m.xj(3, 2, 3));
        CHECK(d["ker:123"] == m.xj(1, 2, 3));

        // the development of a linear surface depends on the extent only
        OmegaValue shifted =
            omega_quadrature(m.X, make_rect(rq(1, 3), rq(2, 5), rq(1, 3) + m.s1, rq(2, 5) + m.s2),
                             ctx);
        CHECK(h_equal(om.h, shifted.h));
    }
}

TEST_CASE("linear development level-4 coefficient table") {
    CrossedModuleContext ctx = build_context(3, 4);
    std::mt19937 rng(72);
    for (int trial = 0; trial < 5; ++trial) {
        Moments m{random_linear(rng), rq(2, 3), rq(3, 4)};
        if (trial > 0) {
            Rat t1 = rand_rat(rng, 2, 2), t2 = rand_rat(rng, 2, 2);
            m.s1 = rq(1, 4) + t1 * t1;
            m.s2 = rq(1, 5) + t2 * t2;
        }
        OmegaValue om = omega_quadrature(m.X, make_rect(0, 0, m.s1, m.s2), ctx);
        auto d = disp_map(ctx, om.h, 4);
        CHECK(d.size() == 21);

        CHECK(d["[1,[1,[1,2]]]"] == m.xxj(1, 1, 1, 2) * rq(1, 2));
        CHECK(d["[2,[1,[1,2]]]"] == m.xxj(2, 1, 1, 2));
        CHECK(d["[2,[2,[1,2]]]"] == m.xxj(2, 2, 1, 2) * rq(1, 2));
        CHECK(d["[3,[1,[1,2]]]"] == m.xxj(1, 3, 1, 2) - m.xxj(1, 1, 2, 3) * rq(1, 2));
        CHECK(d["[3,[2,[1,2]]]"] == m.xxj(2, 3, 1, 2) - m.xxj(1, 2, 2, 3));
        CHECK(d["[3,[3,[1,2]]]"] == m.xxj(3, 3, 1, 2) * rq(1, 2) - m.xxj(1, 3, 2, 3));
        CHECK(d["[1,[1,[1,3]]]"] == m.xxj(1, 1, 1, 3) * rq(1, 2));
        CHECK(d["[2,[1,[1,3]]]"] == m.xxj(1, 2, 1, 3) + m.xxj(1, 1, 2, 3) * rq(1, 2));
        CHECK(d["[2,[2,[1,3]]]"] == m.xxj(2, 2, 1, 3) * rq(1, 2) + m.xxj(1, 2, 2, 3));
        CHECK(d["[3,[1,[1,3]]]"] == m.xxj(3, 1, 1, 3));
        CHECK(d["[3,[2,[1,3]]]"] == m.xxj(2, 3, 1, 3) + m.xxj(1, 3, 2, 3));
        CHECK(d["[3,[3,[1,3]]]"] == m.xxj(3, 3, 1, 3) * rq(1, 2));
        CHECK(d["[2,[2,[2,3]]]"] == m.xxj(2, 2, 2, 3) * rq(1, 2));
        CHECK(d["[3,[2,[2,3]]]"] == m.xxj(3, 2, 2, 3));
        CHECK(d["[3,[3,[2,3]]]"] == m.xxj(3, 3, 2, 3) * rq(1, 2));

        CHECK(d["[[1,2],[1,3]]"] == m.xxj(1, 2, 1, 3) * rq(1, 2) - m.xxj(1, 3, 1, 2) * rq(1, 2) +
                                        m.xxj(1, 1, 2, 3) + m.aj(1, 2, 1, 3) - m.aj(1, 3, 1, 2) +
                                        m.jj(1, 2, 1, 3) * rq(1, 2) - m.jj(1, 3, 1, 2) * rq(1, 2));
        CHECK(d["[[1,2],[2,3]]"] == m.xxj(1, 2, 2, 3) * rq(3, 2) - m.xxj(2, 3, 1, 2) * rq(1, 2) +
                                        m.aj(1, 2, 2, 3) - m.aj(2, 3, 1, 2) +
                                        m.jj(1, 2, 2, 3) * rq(1, 2) - m.jj(2, 3, 1, 2) * rq(1, 2));
        CHECK(d["[[1,3],[2,3]]"] == m.xxj(1, 3, 2, 3) * rq(1, 2) - m.xxj(2, 3, 1, 3) * rq(1, 2) +
                                        m.aj(1, 3, 2, 3) - m.aj(2, 3, 1, 3) +
                                        m.jj(1, 3, 2, 3) * rq(1, 2) - m.jj(2, 3, 1, 3) * rq(1, 2));

        CHECK(d["ker:1123"] == m.xxj(1, 1, 2, 3) * rq(1, 2));
        CHECK(d["ker:2123"] == m.xxj(1, 2, 2, 3));
        CHECK(d["ker:3123"] == m.xxj(1, 3, 2, 3));
    }
}

TEST_CASE("assembly reproduces the direct development exactly on linear data") {
    CrossedModuleContext ctx = build_context(3, 5);
    std::mt19937 rng(73);
    LinearSurface X = random_linear(rng);
    Rect r = make_rect(0, 0, rq(3, 4), rq(2, 3));
    OmegaValue direct = omega_quadrature(X, r, ctx);

    for (auto [cols, rows] : {std::pair{2, 2}, std::pair{3, 1}, std::pair{1, 3}, std::pair{2, 3}}) {
        OmegaValue rm = chen_assemble(X, r, cols, rows, ctx, AssemblyOrder::row_major);
        OmegaValue cm = chen_assemble(X, r, cols, rows, ctx, AssemblyOrder::column_major);
        CHECK(h_equal(rm.h, direct.h));
        CHECK(h_equal(cm.h, direct.h));
    }

    // the boundary image of the developed value is the boundary signature,
    // with nothing left over at any level
    for (const Rat& defect : stokes_check(direct, X, ctx)) CHECK(defect == 0);
}

TEST_CASE("grid route agrees with the symbolic route on linear data") {
    std::mt19937 rng(74);
    LinearSurface X = random_linear(rng);
    SurfaceGrid g = sample_grid(X, 4, 4);
    Rect whole = make_rect(0, 0, 1, 1);
    Rect part = make_rect(rq(1, 4), rq(1, 2), rq(3, 4), Rat(1));

    CrossedModuleContext c3 = build_context(3, 3);
    // at level 3 the cell-center rule integrates the linear model exactly
    CHECK(h_equal(omega_quadrature(g, whole, c3).h, omega_quadrature(X, whole, c3).h));
    CHECK(h_equal(omega_quadrature(g, part, c3).h, omega_quadrature(X, part, c3).h));
    CHECK(h_equal(chen_assemble(g, whole, c3).h, omega_quadrature(X, whole, c3).h));
    CHECK(h_equal(chen_assemble(g, part, c3).h, omega_quadrature(X, part, c3).h));

    CrossedModuleContext c4 = build_context(3, 4);
    HElement exact = omega_quadrature(X, whole, c4).h;
    SurfaceGrid g8 = sample_grid(X, 8, 8);
    {
        HElement a4 = omega_quadrature(g, whole, c4).h;
        HElement a8 = omega_quadrature(g8, whole, c4).h;
        CHECK(h_equal(h_graded_part(a4, 2), h_graded_part(exact, 2)));
        CHECK(h_equal(h_graded_part(a4, 3), h_graded_part(exact, 3)));
        double e4 = h_norm_d(h_sub(a4, exact)), e8 = h_norm_d(h_sub(a8, exact));
        CHECK(e4 > 0);  // the cell-center rule is not exact at level 4
        CHECK(e8 < e4 / 2);
    }
    {
        HElement a4 = chen_assemble(g, whole, c4).h;
        HElement a8 = chen_assemble(g8, whole, c4).h;
        CHECK(h_equal(h_graded_part(a4, 2), h_graded_part(exact, 2)));
        CHECK(h_equal(h_graded_part(a4, 3), h_graded_part(exact, 3)));
        double e4 = h_norm_d(h_sub(a4, exact)), e8 = h_norm_d(h_sub(a8, exact));
        CHECK(e4 > 0);
        CHECK(e8 < e4 / 2);
    }
}

TEST_CASE("translating the data leaves the development unchanged") {
    CrossedModuleContext ctx = build_context(3, 4);
    std::mt19937 rng(75);
    SurfaceGrid g = sample_grid(
        [&rng](const Rat&, const Rat&) {
            return std::vector<Rat>{rand_rat(rng), rand_rat(rng), rand_rat(rng)};
        },
        3, 3, 3);
    SurfaceGrid shifted = g;
    std::vector<Rat> c{rq(7, 2), rq(-5, 3), rq(11, 4)};
    for (auto& col : shifted.node)
        for (auto& x : col)
            for (int i = 0; i < 3; ++i) x[i] += c[i];

    Rect r = make_rect(0, 0, 1, 1);
    CHECK(h_equal(omega_quadrature(g, r, ctx).h, omega_quadrature(shifted, r, ctx).h));
    CHECK(h_equal(chen_assemble(g, r, ctx).h, chen_assemble(shifted, r, ctx).h));
}

TEST_CASE("row-major and column-major assembly agree exactly through level 4") {
    CrossedModuleContext ctx = build_context(3, 4);
    std::mt19937 rng(76);

    // curved data: random nodes
    SurfaceGrid g = sample_grid(
        [&rng](const Rat&, const Rat&) {
            return std::vector<Rat>{rand_rat(rng), rand_rat(rng), rand_rat(rng)};
        },
        3, 3, 3);
    Rect r = make_rect(0, 0, 1, 1);
    CHECK(h_equal(chen_assemble(g, r, ctx, AssemblyOrder::row_major).h,
                  chen_assemble(g, r, ctx, AssemblyOrder::column_major).h));

    // and the linear-sampled 4x4 case
    SurfaceGrid gl = sample_grid(random_linear(rng), 4, 4);
    CHECK(h_equal(chen_assemble(gl, r, ctx, AssemblyOrder::row_major).h,
                  chen_assemble(gl, r, ctx, AssemblyOrder::column_major).h));

    // sub-rectangle, both orders
    Rect sub = make_rect(rq(1, 4), 0, 1, rq(3, 4));
    CHECK(h_equal(chen_assemble(gl, sub, ctx, AssemblyOrder::row_major).h,
                  chen_assemble(gl, sub, ctx, AssemblyOrder::column_major).h));
}

TEST_CASE("boundary feedback on grids") {
    // the level-2 defect vanishes identically: each cell's area classes
    // integrate to the shoelace areas of its image quadrilateral, and the
    // interior edges cancel
    auto saddle = [](const Rat& r, const Rat& q) {
        return std::vector<Rat>{r, q, r * q};
    };
    Rect whole = make_rect(0, 0, 1, 1);

    CrossedModuleContext ctx = build_context(3, 3);
    std::vector<double> lvl3;
    for (int m : {4, 8, 16}) {
        SurfaceGrid g = sample_grid(saddle, 3, m, m);
        auto defects = stokes_check(omega_quadrature(g, whole, ctx), g, ctx);
        CHECK(defects[0] == 0);
        CHECK(defects[1] == 0);
        lvl3.push_back(defects[2].get_d());
    }
    CHECK(lvl3[0] > 0);
    CHECK(std::log2(lvl3[0] / lvl3[1]) > 1.0);
    CHECK(std::log2(lvl3[1] / lvl3[2]) > 1.0);

    // constant data: everything is zero
    SurfaceGrid flat = sample_grid(
        [](const Rat&, const Rat&) {
            return std::vector<Rat>{Rat(1), Rat(2), Rat(3)};
        },
        3, 2, 2);
    OmegaValue fl = omega_quadrature(flat, whole, ctx);
    CHECK(h_is_zero(fl.h));
    for (const Rat& d : stokes_check(fl, flat, ctx)) CHECK(d == 0);
}

TEST_CASE("assembled and integrated values converge together on curved data") {
    auto saddle = [](const Rat& r, const Rat& q) {
        return std::vector<Rat>{r, q, r * q};
    };
    Rect whole = make_rect(0, 0, 1, 1);

    // Up to level 3 the group law is abelian and the cell hooks enter only
    // through their endpoints, so stitching and integrating give the same
    // element on every grid -- not just in the limit.
    CrossedModuleContext c3 = build_context(3, 3);
    for (int m : {4, 8, 16}) {
        SurfaceGrid g = sample_grid(saddle, 3, m, m);
        CHECK(h_equal(chen_assemble(g, whole, c3).h, omega_quadrature(g, whole, c3).h));
    }

    // At level 4 the two routes bracket partial sums differently; the gap is
    // genuine but shrinks at first order or better under mesh refinement.
    CrossedModuleContext c4 = build_context(3, 4);
    std::vector<double> gap;
    for (int m : {4, 8, 16}) {
        SurfaceGrid g = sample_grid(saddle, 3, m, m);
        gap.push_back(
            h_norm_d(h_sub(chen_assemble(g, whole, c4).h, omega_quadrature(g, whole, c4).h)));
    }
    CHECK(gap[0] > 0);
    CHECK(std::log2(gap[0] / gap[1]) > 1.0);
    CHECK(std::log2(gap[1] / gap[2]) > 1.0);
}

TEST_CASE("boundary lift at levels 2 and 3") {
    CrossedModuleContext ctx = build_context(3, 3);
    std::mt19937 rng(77);
    LinearSurface X = random_linear(rng);
    Rect r = make_rect(0, 0, rq(2, 3), rq(4, 5));

    OmegaValue direct = omega_quadrature(X, r, ctx);
    OmegaValue l3 = young_lift(X, r, ctx, 3);
    CHECK(l3.tag == Provenance::lifted);
    CHECK(h_equal(l3.h, direct.h));

    OmegaValue l2 = young_lift(X, r, ctx, 2);
    CHECK(h_equal(h_graded_part(l2.h, 2), h_graded_part(direct.h, 2)));
    CHECK(h_is_zero(h_graded_part(l2.h, 3)));

    // grids: the level-2 classes come from the boundary, the level-3 ones
    // from the integral, so the lift coincides with the integral route
    SurfaceGrid g = sample_grid(
        [](const Rat& a, const Rat& b) {
            return std::vector<Rat>{a, b, a * b};
        },
        3, 4, 4);
    Rect whole = make_rect(0, 0, 1, 1);
    CHECK(h_equal(young_lift(g, whole, ctx, 3).h, omega_quadrature(g, whole, ctx).h));

    SurfaceGrid flat = sample_grid(
        [](const Rat&, const Rat&) {
            return std::vector<Rat>{Rat(5), Rat(5), Rat(5)};
        },
        3, 2, 2);
    CHECK(h_is_zero(young_lift(flat, whole, ctx, 3).h));

    CHECK_THROWS_AS(young_lift(X, r, ctx, 4), std::invalid_argument);
    CHECK_THROWS_AS(young_lift(X, r, build_context(3, 2), 3), std::invalid_argument);
}

TEST_CASE("surface input validation") {
    CHECK_THROWS_AS(make_rect(1, 0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_grid([](const Rat&, const Rat&) { return std::vector<Rat>{Rat(1)}; },
                                2, 2, 2),
                    std::invalid_argument);

    CrossedModuleContext ctx = build_context(3, 3);
    SurfaceGrid g = sample_grid(
        [](const Rat& a, const Rat& b) {
            return std::vector<Rat>{a, b, a + b};
        },
        3, 4, 4);
    CHECK_THROWS_WITH_AS(omega_quadrature(g, make_rect(0, 0, rq(1, 3), 1), ctx),
                         "omega_quadrature: rectangle not aligned to the grid",
                         std::invalid_argument);
    CHECK_THROWS_AS(chen_assemble(g, make_rect(0, 0, rq(5, 4), 1), ctx), std::invalid_argument);

    // channel count must match the context
    LinearSurface X2;
    X2.M = {{Rat(1), Rat(0)}, {Rat(0), Rat(1)}};
    CHECK_THROWS_AS(omega_quadrature(X2, make_rect(0, 0, 1, 1), ctx), std::invalid_argument);

    // the closed-form route stops at level 5
    CrossedModuleContext c26 = build_context(2, 6);
    CHECK_THROWS_AS(omega_quadrature(X2, make_rect(0, 0, 1, 1), c26), std::invalid_argument);

    LinearSurface X3;
    X3.M = {{Rat(1), Rat(0)}, {Rat(0), Rat(1)}, {Rat(1), Rat(1)}};
    CHECK_THROWS_AS(chen_assemble(X3, make_rect(0, 0, 1, 1), 0, 2, ctx), std::invalid_argument);
}

TEST_CASE("cell germs") {
    CrossedModuleContext ctx = build_context(3, 4);
    std::mt19937 rng(78);
    LinearSurface X = random_linear(rng);

    Rect cell = make_rect(rq(1, 4), rq(1, 2), rq(3, 4), rq(5, 6));
    HElement germ = cell_germ(X, cell, ctx);
    HElement expect = h_zero(ctx);
    for (int j = 1; j <= 3; ++j)
        for (int k = j + 1; k <= 3; ++k)
            expect = h_add(expect, h_scale(cell.area() * jacobian_minor(X, j, k),
                                           h_basis(ctx, PreH{"", j, k})));
    CHECK(h_equal(germ, expect));
    CHECK(h_is_zero(h_graded_part(germ, 3)));
    CHECK(h_is_zero(h_graded_part(germ, 4)));
    CHECK(h_is_zero(cell_germ(X, make_rect(rq(1, 2), 0, rq(1, 2), 1), ctx)));

    LinearSurface zero;
    zero.M = {{Rat(0), Rat(0)}, {Rat(0), Rat(0)}, {Rat(0), Rat(0)}};
    CHECK(h_is_zero(cell_germ(zero, cell, ctx)));

    SurfaceGrid g = sample_grid(X, 4, 4);
    HElement gg = cell_germ(g, 1, 2, ctx);
    HElement ge = h_zero(ctx);
    for (int j = 1; j <= 3; ++j)
        for (int k = j + 1; k <= 3; ++k)
            ge = h_add(ge, h_scale(rq(1, 16) * jacobian_minor(g, 1, 2, j, k),
                                   h_basis(ctx, PreH{"", j, k})));
    CHECK(h_equal(gg, ge));
    CHECK_THROWS_AS(cell_germ(g, 4, 0, ctx), std::invalid_argument);
}
