#include "surfsig/tensor_algebra.hpp"

#include "doctest.h"

#include <random>

using namespace surfsig;

namespace {

// deterministic pseudo-random series with small rational coefficients
TensorSeries random_series(std::mt19937& rng, int n, int level, bool zero_const) {
    std::uniform_int_distribution<int> num(-4, 4);
    std::uniform_int_distribution<int> den(1, 4);
    TensorSeries t = ts_zero(n, level);
    for (const auto& w : [&] {
             std::vector<std::string> ws;
             for (int l = zero_const ? 1 : 0; l <= level; ++l)
                 for (const auto& u : all_words(n, l)) ws.push_back(u);
             return ws;
         }())
        t.add_to(w, rq(num(rng), den(rng)));
    return t;
}

}  // namespace

TEST_CASE("words and basic arithmetic") {
    CHECK(all_words(3, 2).size() == 9);
    TensorSeries a = ts_letter(2, 3, 1);
    TensorSeries b = ts_letter(2, 3, 2);
    TensorSeries ab = concat_product(a, b);
    CHECK(ab.at("12") == 1);
    CHECK(ab.at("21") == 0);
    CHECK(commutator(a, b).at("21") == -1);
    CHECK_THROWS_AS(ts_letter(2, 3, 3), std::invalid_argument);
}

TEST_CASE("concatenation is associative and truncates silently") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        TensorSeries a = random_series(rng, 2, 4, false);
        TensorSeries b = random_series(rng, 2, 4, false);
        TensorSeries c = random_series(rng, 2, 4, false);
        CHECK(concat_product(concat_product(a, b), c) == concat_product(a, concat_product(b, c)));
    }
    // words beyond the level are dropped, not an error
    TensorSeries x = ts_letter(2, 1, 1);
    CHECK(concat_product(x, x).is_zero());
}

TEST_CASE("exp and log are mutually inverse") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        TensorSeries a = random_series(rng, 2, 4, true);
        CHECK(log_t(exp_t(a)) == a);
        TensorSeries g = exp_t(a);
        CHECK(exp_t(log_t(g)) == g);
    }
    TensorSeries bad = ts_one(2, 3);
    CHECK_THROWS_AS(exp_t(bad), std::invalid_argument);
    CHECK_THROWS_AS(log_t(ts_zero(2, 3)), std::invalid_argument);
}

TEST_CASE("bch: unit, inverse, associativity, lowest terms") {
    std::mt19937 rng(13);
    TensorSeries zero3 = ts_zero(3, 4);
    for (int trial = 0; trial < 3; ++trial) {
        TensorSeries a = random_series(rng, 3, 4, true);
        TensorSeries b = random_series(rng, 3, 4, true);
        TensorSeries c = random_series(rng, 3, 4, true);
        CHECK(bch_t(a, zero3) == a);
        CHECK(bch_t(zero3, a) == a);
        CHECK(bch_t(a, scale(-1, a)).is_zero());
        CHECK(bch_t(bch_t(a, b), c) == bch_t(a, bch_t(b, c)));
    }
    // bch(x, y) = x + y + [x,y]/2 at level 2
    TensorSeries x = ts_letter(2, 2, 1);
    TensorSeries y = ts_letter(2, 2, 2);
    TensorSeries z = bch_t(x, y);
    CHECK(z.at("1") == 1);
    CHECK(z.at("2") == 1);
    CHECK(z.at("12") == Rat(1, 2));
    CHECK(z.at("21") == Rat(-1, 2));
}

TEST_CASE("commutator satisfies Jacobi and grading") {
    std::mt19937 rng(17);
    TensorSeries a = random_series(rng, 2, 5, true);
    TensorSeries b = random_series(rng, 2, 5, true);
    TensorSeries c = random_series(rng, 2, 5, true);
    TensorSeries jac = add(add(commutator(a, commutator(b, c)), commutator(b, commutator(c, a))),
                           commutator(c, commutator(a, b)));
    CHECK(jac.is_zero());
    // grading: product of graded parts lands in the right level
    TensorSeries p2 = graded_part(concat_product(a, b), 3);
    for (const auto& [w, coef] : p2.coeff) {
        (void)coef;
        CHECK(w.size() == 3);
    }
}

TEST_CASE("pairing and rendering") {
    TensorSeries a = ts_zero(2, 3);
    a.add_to("121", Rat(3, 2));
    a.add_to("", Rat(1));
    CHECK(pairing(a, "121") == Rat(3, 2));
    CHECK(pairing(a, "212") == 0);
    CHECK_THROWS_AS(pairing(a, "1211"), std::invalid_argument);
    CHECK_THROWS_AS(pairing(a, "3"), std::invalid_argument);
    CHECK(ts_str(a) == "1*e + 3/2*121");
}

namespace {

// random Lie combination of letters and a few nested brackets
TensorSeries random_lie(std::mt19937& rng, int n, int level) {
    std::uniform_int_distribution<int> num(-4, 4);
    std::uniform_int_distribution<int> den(1, 4);
    TensorSeries x1 = ts_letter(n, level, 1);
    TensorSeries x2 = ts_letter(n, level, 2);
    std::vector<TensorSeries> gens{x1, x2, commutator(x1, x2),
                                   commutator(x1, commutator(x1, x2)),
                                   commutator(x2, commutator(x1, commutator(x1, x2)))};
    TensorSeries a = ts_zero(n, level);
    for (const auto& g : gens) a = add(a, scale(rq(num(rng), den(rng)), g));
    return a;
}

}  // namespace

TEST_CASE("group-like characterization via shuffles") {
    std::mt19937 rng(19);
    TensorSeries a = random_lie(rng, 2, 4);
    CHECK(is_group_like(exp_t(a)));
    TensorSeries g = exp_t(a);
    g.add_to("12", Rat(1, 7));  // perturb: no longer group-like
    CHECK(!is_group_like(g));
    // group-likes are closed under product
    TensorSeries b = random_lie(rng, 2, 4);
    CHECK(is_group_like(concat_product(exp_t(a), exp_t(b))));
    // exp of a non-Lie exponent is not group-like
    TensorSeries c = random_series(rng, 2, 4, true);
    c.add_to("11", Rat(1, 5));
    CHECK(!is_group_like(exp_t(c)));
}

TEST_CASE("rational helpers") {
    CHECK(rat_of_double(0.5) == Rat(1, 2));
    CHECK(rat_parse("-3/4") == Rat(-3, 4));
    CHECK(rat_parse("1.25") == Rat(5, 4));
    CHECK(rat_str(Rat(-3, 4)) == "-3/4");
    CHECK(rat_str(rq(8, 4)) == "2");
    CHECK_THROWS_AS(rat_parse("x"), std::invalid_argument);
}
