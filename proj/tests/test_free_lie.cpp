#include "surfsig/free_lie.hpp"

#include "surfsig/rat_linalg.hpp"

#include "doctest.h"

#include <random>
#include <set>

using namespace surfsig;

TEST_CASE("lyndon word counts per level") {
    auto w35 = lyndon_words(3, 5);
    CHECK(w35[0].size() == 3);
    CHECK(w35[1].size() == 3);
    CHECK(w35[2].size() == 8);
    CHECK(w35[3].size() == 18);
    CHECK(w35[4].size() == 48);
    auto w25 = lyndon_words(2, 5);
    CHECK(w25[0].size() == 2);
    CHECK(w25[1].size() == 1);
    CHECK(w25[2].size() == 2);
    CHECK(w25[3].size() == 3);
    CHECK(w25[4].size() == 6);
    auto w13 = lyndon_words(1, 3);
    CHECK(w13[0].size() == 1);
    CHECK(w13[1].size() == 0);
    CHECK(w13[2].size() == 0);
}

TEST_CASE("standard bracketing") {
    CHECK(tree_str(standard_bracketing("12")) == "[1,2]");
    CHECK(tree_str(standard_bracketing("112")) == "[1,[1,2]]");
    CHECK(tree_str(standard_bracketing("1213")) == "[[1,2],[1,3]]");
    CHECK_THROWS_AS(standard_bracketing("21"), std::invalid_argument);
}

TEST_CASE("tree expansion") {
    TreePtr t = node(leaf(1), node(leaf(1), leaf(2)));
    TensorSeries ts = tree_to_tensor(t, 2, 3);
    CHECK(ts.at("112") == 1);
    CHECK(ts.at("121") == -2);
    CHECK(ts.at("211") == 1);
    CHECK(foliage(t) == "112");
    CHECK(tree_degree(t) == 3);
}

TEST_CASE("lyndon basis expansions are linearly independent") {
    LieBasis b = lyndon_basis(3, 4);
    for (int p = 1; p <= 4; ++p) {
        auto words = all_words(3, p);
        std::map<std::string, int> wi;
        for (std::size_t i = 0; i < words.size(); ++i) wi[words[i]] = static_cast<int>(i);
        RatMat m(static_cast<int>(b.levels[p - 1].size()), static_cast<int>(words.size()));
        for (std::size_t r = 0; r < b.levels[p - 1].size(); ++r)
            for (const auto& [w, c] : b.levels[p - 1][r].tensor.coeff)
                if (static_cast<int>(w.size()) == p) m.at(static_cast<int>(r), wi[w]) = c;
        CHECK(rank(m) == static_cast<int>(b.levels[p - 1].size()));
    }
}

TEST_CASE("derived-series basis: counts and level-4 tree set") {
    LieBasis h = hall_derived_basis(3, 5);
    CHECK(h.levels[0].size() == 3);
    CHECK(h.levels[1].size() == 3);
    CHECK(h.levels[2].size() == 8);
    CHECK(h.levels[3].size() == 18);
    CHECK(h.levels[4].size() == 48);

    std::set<std::string> lvl4;
    for (const auto& e : h.levels[3]) lvl4.insert(e.name);
    std::set<std::string> expected = {
        "[1,[1,[1,2]]]", "[2,[1,[1,2]]]", "[2,[2,[1,2]]]", "[3,[1,[1,2]]]", "[3,[2,[1,2]]]",
        "[3,[3,[1,2]]]", "[1,[1,[1,3]]]", "[2,[1,[1,3]]]", "[2,[2,[1,3]]]", "[3,[1,[1,3]]]",
        "[3,[2,[1,3]]]", "[3,[3,[1,3]]]", "[2,[2,[2,3]]]", "[3,[2,[2,3]]]", "[3,[3,[2,3]]]",
        "[[1,2],[1,3]]", "[[1,2],[2,3]]", "[[1,3],[2,3]]"};
    CHECK(lvl4 == expected);

    LieBasis h2 = hall_derived_basis(2, 5);
    CHECK(h2.levels[1].size() == 1);
    CHECK(h2.levels[2].size() == 2);
    CHECK(h2.levels[3].size() == 3);
    CHECK(h2.levels[4].size() == 6);
}

TEST_CASE("shape counts") {
    CHECK(shape_counts(3, 2) == std::pair<long, long>{3, 0});
    CHECK(shape_counts(3, 3) == std::pair<long, long>{8, 1});
    CHECK(shape_counts(3, 4) == std::pair<long, long>{15, 3});
    CHECK(shape_counts(3, 5) == std::pair<long, long>{24, 6});
    CHECK(shape_counts(2, 2) == std::pair<long, long>{1, 0});
    CHECK(shape_counts(2, 3) == std::pair<long, long>{2, 0});
    CHECK(shape_counts(2, 4) == std::pair<long, long>{3, 0});
    CHECK(shape_counts(2, 5) == std::pair<long, long>{4, 0});
}

TEST_CASE("first-kind coordinates: round trip and dual property") {
    LieBasis b = lyndon_basis(2, 4);
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> num(-3, 3);
    std::uniform_int_distribution<int> den(1, 3);
    std::map<std::string, Rat> want;
    TensorSeries L = ts_zero(2, 4);
    for (int p = 1; p <= 4; ++p)
        for (const auto& e : b.levels[p - 1]) {
            Rat c = rq(num(rng), den(rng));
            if (c == 0) continue;
            want[e.name] = c;
            L = add(L, scale(c, e.tensor));
        }
    auto got = first_kind_coordinates(L, b);
    CHECK(got == want);

    // duals pick out the coefficient from exp of a Lie element
    TensorSeries g = exp_t(L);
    for (int p = 1; p <= 4; ++p) {
        auto duals = first_kind_duals(b, p);
        for (std::size_t i = 0; i < duals.size(); ++i) {
            Rat c = 0;
            for (const auto& [w, v] : duals[i].coeff) c += v * g.at(w);
            auto it = want.find(b.levels[p - 1][i].name);
            CHECK(c == (it == want.end() ? Rat(0) : it->second));
        }
    }
}

TEST_CASE("first-kind coordinates reject non-Lie input") {
    LieBasis b = lyndon_basis(2, 3);
    TensorSeries bad = ts_zero(2, 3);
    bad.add_to("12", 1);
    bad.add_to("21", 1);  // symmetric part, not Lie
    CHECK_THROWS_WITH_AS(first_kind_coordinates(bad, b),
                         doctest::Contains("not a Lie element"), std::invalid_argument);
}

TEST_CASE("first-kind duals over the derived-series basis: spot rows") {
    LieBasis h = hall_derived_basis(3, 4);
    auto duals3 = first_kind_duals(h, 3);
    // [1,[1,2]] -> (112 - 2*121 + 211)/6
    int idx = -1;
    for (std::size_t i = 0; i < h.levels[2].size(); ++i)
        if (h.levels[2][i].name == "[1,[1,2]]") idx = static_cast<int>(i);
    REQUIRE(idx >= 0);
    CHECK(duals3[idx].at("112") == Rat(1, 6));
    CHECK(duals3[idx].at("121") == Rat(-1, 3));
    CHECK(duals3[idx].at("211") == Rat(1, 6));

    auto duals4 = first_kind_duals(h, 4);
    for (std::size_t i = 0; i < h.levels[3].size(); ++i) {
        if (h.levels[3][i].name != "[1,[1,[1,2]]]") continue;
        CHECK(duals4[i].at("1121") == Rat(-1, 6));
        CHECK(duals4[i].at("1211") == Rat(1, 6));
        CHECK(duals4[i].coeff.size() == 2);
    }
}
