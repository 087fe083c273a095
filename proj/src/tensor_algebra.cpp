#include "surfsig/tensor_algebra.hpp"

#include <sstream>
#include <stdexcept>

namespace surfsig {

namespace {

void check_same_shape(const TensorSeries& a, const TensorSeries& b, const char* op) {
    if (a.n != b.n || a.level != b.level)
        throw std::invalid_argument(std::string(op) + ": operands with different n or level");
}

}  // namespace

std::vector<std::string> all_words(int n, int len) {
    std::vector<std::string> out{""};
    for (int l = 0; l < len; ++l) {
        std::vector<std::string> next;
        next.reserve(out.size() * n);
        for (const auto& w : out)
            for (int i = 1; i <= n; ++i) next.push_back(w + static_cast<char>('0' + i));
        out = std::move(next);
    }
    return out;
}

TensorSeries ts_zero(int n, int level) { return TensorSeries{n, level, {}}; }

TensorSeries ts_one(int n, int level) {
    TensorSeries t{n, level, {}};
    t.coeff[""] = 1;
    return t;
}

TensorSeries ts_letter(int n, int level, int i) {
    if (i < 1 || i > n) throw std::invalid_argument("ts_letter: letter out of range");
    TensorSeries t{n, level, {}};
    if (level >= 1) t.coeff[std::string(1, static_cast<char>('0' + i))] = 1;
    return t;
}

TensorSeries add(const TensorSeries& a, const TensorSeries& b) {
    check_same_shape(a, b, "add");
    TensorSeries r = a;
    for (const auto& [w, c] : b.coeff) r.add_to(w, c);
    return r;
}

TensorSeries sub(const TensorSeries& a, const TensorSeries& b) {
    check_same_shape(a, b, "sub");
    TensorSeries r = a;
    for (const auto& [w, c] : b.coeff) r.add_to(w, -c);
    return r;
}

TensorSeries scale(const Rat& c, const TensorSeries& a) {
    TensorSeries r{a.n, a.level, {}};
    if (c == 0) return r;
    for (const auto& [w, x] : a.coeff) r.coeff[w] = c * x;
    return r;
}

TensorSeries graded_part(const TensorSeries& a, int k) {
    TensorSeries r{a.n, a.level, {}};
    for (const auto& [w, c] : a.coeff)
        if (static_cast<int>(w.size()) == k) r.coeff[w] = c;
    return r;
}

TensorSeries truncate(const TensorSeries& a, int level) {
    TensorSeries r{a.n, level, {}};
    for (const auto& [w, c] : a.coeff)
        if (static_cast<int>(w.size()) <= level) r.coeff[w] = c;
    return r;
}

TensorSeries concat_product(const TensorSeries& a, const TensorSeries& b) {
    check_same_shape(a, b, "concat_product");
    TensorSeries r{a.n, a.level, {}};
    for (const auto& [u, cu] : a.coeff) {
        int room = a.level - static_cast<int>(u.size());
        if (room < 0) continue;
        for (const auto& [v, cv] : b.coeff) {
            if (static_cast<int>(v.size()) > room) continue;
            r.add_to(u + v, cu * cv);
        }
    }
    return r;
}

TensorSeries commutator(const TensorSeries& a, const TensorSeries& b) {
    return sub(concat_product(a, b), concat_product(b, a));
}

TensorSeries exp_t(const TensorSeries& a) {
    if (a.at("") != 0) throw std::invalid_argument("exp_t: nonzero constant term");
    TensorSeries r = ts_one(a.n, a.level);
    TensorSeries pw = ts_one(a.n, a.level);
    Rat fact = 1;
    for (int k = 1; k <= a.level; ++k) {
        pw = concat_product(pw, a);
        if (pw.is_zero()) break;
        fact *= k;
        r = add(r, scale(1 / fact, pw));
    }
    return r;
}

TensorSeries log_t(const TensorSeries& g) {
    if (g.at("") != 1) throw std::invalid_argument("log_t: constant term must be 1");
    TensorSeries x = g;
    x.coeff.erase("");
    TensorSeries r = ts_zero(g.n, g.level);
    TensorSeries pw = ts_one(g.n, g.level);
    for (int k = 1; k <= g.level; ++k) {
        pw = concat_product(pw, x);
        if (pw.is_zero()) break;
        Rat c{(k % 2 == 1) ? 1 : -1, k};
        r = add(r, scale(c, pw));
    }
    return r;
}

TensorSeries bch_t(const TensorSeries& a, const TensorSeries& b) {
    if (a.at("") != 0 || b.at("") != 0)
        throw std::invalid_argument("bch_t: arguments must have zero constant term");
    return log_t(concat_product(exp_t(a), exp_t(b)));
}

Rat pairing(const TensorSeries& f, const std::string& word) {
    if (static_cast<int>(word.size()) > f.level)
        throw std::invalid_argument("pairing: word longer than truncation level");
    for (char ch : word)
        if (ch < '1' || ch > '0' + f.n) throw std::invalid_argument("pairing: letter out of range");
    return f.at(word);
}

TensorSeries shuffle_words(int n, int level, const std::string& u, const std::string& v) {
    TensorSeries r{n, level, {}};
    if (static_cast<int>(u.size() + v.size()) > level) return r;
    struct Rec {
        int n, level;
        std::map<std::pair<std::string, std::string>, TensorSeries> cache;
        TensorSeries go(const std::string& a, const std::string& b) {
            if (a.empty() || b.empty()) {
                TensorSeries t{n, level, {}};
                t.coeff[a + b] = 1;
                return t;
            }
            auto key = std::make_pair(a, b);
            auto it = cache.find(key);
            if (it != cache.end()) return it->second;
            TensorSeries t{n, level, {}};
            for (const auto& [w, c] : go(a.substr(0, a.size() - 1), b).coeff)
                t.add_to(w + a.back(), c);
            for (const auto& [w, c] : go(a, b.substr(0, b.size() - 1)).coeff)
                t.add_to(w + b.back(), c);
            cache[key] = t;
            return t;
        }
    } rec{n, level, {}};
    return rec.go(u, v);
}

bool is_group_like(const TensorSeries& g) {
    if (g.at("") != 1) return false;
    for (int lu = 1; lu < g.level; ++lu) {
        for (int lv = 1; lu + lv <= g.level; ++lv) {
            for (const auto& u : all_words(g.n, lu)) {
                for (const auto& v : all_words(g.n, lv)) {
                    Rat lhs = g.at(u) * g.at(v);
                    Rat rhs = 0;
                    for (const auto& [w, c] : shuffle_words(g.n, g.level, u, v).coeff)
                        rhs += c * g.at(w);
                    if (lhs != rhs) return false;
                }
            }
        }
    }
    return true;
}

Rat max_abs_coeff(const TensorSeries& a) {
    Rat m = 0;
    for (const auto& [w, c] : a.coeff) {
        Rat x = rat_abs(c);
        if (x > m) m = x;
    }
    return m;
}

double max_abs_coeff_d(const TensorSeries& a) { return to_double(max_abs_coeff(a)); }

std::string ts_str(const TensorSeries& a) {
    if (a.coeff.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [w, c] : a.coeff) {
        if (!first) os << " + ";
        os << rat_str(c) << "*" << (w.empty() ? "e" : w);
        first = false;
    }
    return os.str();
}

}  // namespace surfsig
