#include "surfsig/path_dev.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace surfsig;

namespace {

PLPath random_path(std::mt19937& rng, int n, int npts) {
    std::uniform_int_distribution<int> num(-3, 3);
    std::uniform_int_distribution<int> den(1, 3);
    PLPath p;
    for (int k = 0; k < npts; ++k) {
        std::vector<Rat> pt(n);
        for (auto& c : pt) c = rq(num(rng), den(rng));
        p.points.push_back(std::move(pt));
    }
    return p;
}

// append q to p, translated so that q starts at p's endpoint
PLPath concat(const PLPath& p, const PLPath& q) {
    PLPath r = p;
    const auto& base = p.points.back();
    const auto& start = q.points.front();
    for (std::size_t k = 1; k < q.points.size(); ++k) {
        std::vector<Rat> pt(base.size());
        for (std::size_t i = 0; i < base.size(); ++i)
            pt[i] = base[i] + q.points[k][i] - start[i];
        r.points.push_back(std::move(pt));
    }
    return r;
}

}  // namespace

TEST_CASE("segment log-signatures") {
    CHECK(segment_logsig({Rat(0), Rat(0)}, 2, 3).is_zero());
    CHECK(segment_logsig({Rat(1), Rat(0), Rat(0)}, 3, 2) == ts_letter(3, 2, 1));
    TensorSeries d = segment_logsig({Rat(1), Rat(1), Rat(0)}, 3, 2);
    CHECK(d == add(ts_letter(3, 2, 1), ts_letter(3, 2, 2)));
    CHECK_THROWS_AS(segment_logsig({Rat(1)}, 2, 3), std::invalid_argument);
}

TEST_CASE("elbow path and square loop") {
    PLPath elbow{{{Rat(0), Rat(0)}, {Rat(1), Rat(0)}, {Rat(1), Rat(1)}}};
    TensorSeries w = path_logsig(elbow, 2, 2);
    CHECK(w.at("1") == 1);
    CHECK(w.at("2") == 1);
    CHECK(w.at("12") == rq(1, 2));
    CHECK(w.at("21") == rq(-1, 2));

    PLPath square{{{Rat(0), Rat(0)},
                   {Rat(1), Rat(0)},
                   {Rat(1), Rat(1)},
                   {Rat(0), Rat(1)},
                   {Rat(0), Rat(0)}}};
    TensorSeries loop = path_logsig(square, 2, 2);
    CHECK(loop.at("1") == 0);
    CHECK(loop.at("2") == 0);
    CHECK(loop.at("12") == 1);  // area with the 1/2 prefactor convention
    CHECK(signed_area(square, 1, 2) == 1);

    PLPath rev = square;
    std::reverse(rev.points.begin(), rev.points.end());
    CHECK(signed_area(rev, 1, 2) == -1);
    CHECK(path_logsig(concat(square, rev), 2, 2).is_zero());
}

TEST_CASE("chen, backtracking, subdivision") {
    std::mt19937 rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        PLPath p = random_path(rng, 3, 4);
        PLPath q = random_path(rng, 3, 3);
        TensorSeries both = path_logsig(concat(p, q), 3, 4);
        CHECK(both == bch_t(path_logsig(p, 3, 4), path_logsig(q, 3, 4)));

        // immediate backtrack inserted mid-path
        PLPath back = p;
        std::vector<Rat> spur = {rq(5, 2), Rat(-1), rq(1, 3)};
        back.points.insert(back.points.begin() + 2, {spur, p.points[1]});
        CHECK(path_logsig(back, 3, 4) == path_logsig(p, 3, 4));

        // split a segment at an interior rational point
        PLPath split = p;
        std::vector<Rat> mid(3);
        for (int i = 0; i < 3; ++i)
            mid[i] = p.points[1][i] + rq(1, 3) * (p.points[2][i] - p.points[1][i]);
        split.points.insert(split.points.begin() + 2, mid);
        CHECK(path_logsig(split, 3, 4) == path_logsig(p, 3, 4));
    }
}

TEST_CASE("loop areas match level-2 coefficients") {
    std::mt19937 rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        PLPath p = random_path(rng, 3, 5);
        p.points.push_back(p.points.front());  // close the loop
        TensorSeries w = path_logsig(p, 3, 4);
        for (int i = 1; i <= 3; ++i) {
            for (int j = i + 1; j <= 3; ++j) {
                std::string word = {static_cast<char>('0' + i), static_cast<char>('0' + j)};
                CHECK(w.at(word) == signed_area(p, i, j));
            }
        }
    }
    CHECK_THROWS_AS(signed_area(random_path(rng, 3, 2), 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(signed_area(random_path(rng, 3, 2), 1, 4), std::invalid_argument);
}

TEST_CASE("magnus integrator basics") {
    PathSampler still = [](double) {
        return std::make_pair(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 0.0});
    };
    CHECK(magnus_ode_logsig(still, 2, 3, 4).is_zero());

    PathSampler line = [](double t) {
        return std::make_pair(std::vector<double>{t, 2 * t}, std::vector<double>{1.0, 2.0});
    };
    CHECK(magnus_ode_logsig(line, 2, 3, 1) == segment_logsig({Rat(1), Rat(2)}, 2, 3));
    CHECK_THROWS_AS(magnus_ode_logsig(line, 2, 3, 0), std::invalid_argument);
}

TEST_CASE("magnus self-convergence on an arc") {
    PathSampler arc = [](double t) {
        double a = M_PI / 2 * t;
        return std::make_pair(std::vector<double>{std::cos(a), std::sin(a)},
                              std::vector<double>{-M_PI / 2 * std::sin(a), M_PI / 2 * std::cos(a)});
    };
    TensorSeries m16 = magnus_ode_logsig(arc, 2, 4, 16);
    TensorSeries m32 = magnus_ode_logsig(arc, 2, 4, 32);
    TensorSeries m64 = magnus_ode_logsig(arc, 2, 4, 64);
    double e1 = max_abs_coeff_d(sub(m32, m16));
    double e2 = max_abs_coeff_d(sub(m64, m32));
    double order = std::log2(e1 / e2);
    CHECK(order >= 1.9);

    // the fine run should sit near the BCH value of a fine polygonalization
    PLPath poly;
    int m = 64;
    for (int k = 0; k <= m; ++k) {
        double a = M_PI / 2 * k / m;
        poly.points.push_back({rat_of_double(std::cos(a)), rat_of_double(std::sin(a))});
    }
    double gap = max_abs_coeff_d(sub(m64, path_logsig(poly, 2, 4)));
    CHECK(gap < 5e-3);
}
