#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace surfsig {

using Rat = mpq_class;

// IEEE doubles are dyadic rationals, so this conversion is exact.
inline Rat rat_of_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("rat_of_double: non-finite input");
    Rat r;
    mpq_set_d(r.get_mpq_t(), x);
    return r;
}

inline double to_double(const Rat& x) { return x.get_d(); }

inline std::string rat_str(const Rat& x) {
    if (x.get_den() == 1) return x.get_num().get_str();
    return x.get_num().get_str() + "/" + x.get_den().get_str();
}

// Accepts "p", "p/q", or a plain decimal like "-1.25" (parsed as an exact
// decimal fraction, not as a binary double).
inline Rat rat_parse(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("rat_parse: empty token");
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        Rat r;
        if (r.set_str(s, 10) != 0) throw std::invalid_argument("rat_parse: bad token '" + s + "'");
        if (r.get_den() == 0) throw std::invalid_argument("rat_parse: zero denominator in '" + s + "'");
        r.canonicalize();
        return r;
    }
    if (s.find('/') != std::string::npos)
        throw std::invalid_argument("rat_parse: mixed decimal and fraction in '" + s + "'");
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t frac_len = s.size() - dot - 1;
    if (digits.empty() || digits == "-" || digits == "+")
        throw std::invalid_argument("rat_parse: bad token '" + s + "'");
    Rat num;
    if (num.set_str(digits, 10) != 0) throw std::invalid_argument("rat_parse: bad token '" + s + "'");
    Rat den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    Rat r = num / den;
    r.canonicalize();
    return r;
}

inline Rat rat_abs(const Rat& x) { return x < 0 ? Rat(-x) : x; }

// mpq_class(num, den) does not canonicalize; this does.
inline Rat rq(long num, long den) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

}  // namespace surfsig
