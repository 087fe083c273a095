#pragma once

#include "surfsig/rational.hpp"

#include <map>
#include <string>
#include <vector>

namespace surfsig {

// Words over the letters '1'..'9' ("" is the empty word), ordered by length
// first, then lexicographically.
struct WordLess {
    bool operator()(const std::string& a, const std::string& b) const {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    }
};

std::vector<std::string> all_words(int n, int len);

// A tensor series truncated at `level`: finitely many words with rational
// coefficients, letters in 1..n. Only nonzero coefficients are stored.
struct TensorSeries {
    int n = 0;
    int level = 0;
    std::map<std::string, Rat, WordLess> coeff;

    Rat at(const std::string& w) const {
        auto it = coeff.find(w);
        return it == coeff.end() ? Rat(0) : it->second;
    }
    void add_to(const std::string& w, const Rat& c) {
        if (c == 0) return;
        auto [it, fresh] = coeff.try_emplace(w, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0) coeff.erase(it);
        }
    }
    bool is_zero() const { return coeff.empty(); }
    bool operator==(const TensorSeries& o) const {
        return n == o.n && level == o.level && coeff == o.coeff;
    }
};

TensorSeries ts_zero(int n, int level);
TensorSeries ts_one(int n, int level);
TensorSeries ts_letter(int n, int level, int i);

TensorSeries add(const TensorSeries& a, const TensorSeries& b);
TensorSeries sub(const TensorSeries& a, const TensorSeries& b);
TensorSeries scale(const Rat& c, const TensorSeries& a);
TensorSeries graded_part(const TensorSeries& a, int k);
TensorSeries truncate(const TensorSeries& a, int level);

// Concatenation product, truncated at the common level.
TensorSeries concat_product(const TensorSeries& a, const TensorSeries& b);
TensorSeries commutator(const TensorSeries& a, const TensorSeries& b);

// exp/log with respect to concatenation. exp_t needs a vanishing constant
// term, log_t a constant term equal to 1.
TensorSeries exp_t(const TensorSeries& a);
TensorSeries log_t(const TensorSeries& g);

// log(exp(a) exp(b)); both arguments must have zero constant term.
TensorSeries bch_t(const TensorSeries& a, const TensorSeries& b);

Rat pairing(const TensorSeries& f, const std::string& word);

// Shuffle product of two words (multiplicities preserved).
TensorSeries shuffle_words(int n, int level, const std::string& u, const std::string& v);

// Exact group-like test: <g, u> <g, v> == <g, u shuffle v> for all word pairs
// within the truncation, plus constant term 1.
bool is_group_like(const TensorSeries& g);

// Max absolute coefficient, per level and overall.
Rat max_abs_coeff(const TensorSeries& a);
double max_abs_coeff_d(const TensorSeries& a);

std::string ts_str(const TensorSeries& a);

}  // namespace surfsig
