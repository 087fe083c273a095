#include "surfsig/free_lie.hpp"

#include "surfsig/rat_linalg.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace surfsig {

TreePtr leaf(int i) {
    auto t = std::make_shared<BracketTree>();
    t->letter = i;
    return t;
}

TreePtr node(TreePtr l, TreePtr r) {
    auto t = std::make_shared<BracketTree>();
    t->left = std::move(l);
    t->right = std::move(r);
    return t;
}

int tree_degree(const TreePtr& t) {
    if (t->letter > 0) return 1;
    return tree_degree(t->left) + tree_degree(t->right);
}

std::string foliage(const TreePtr& t) {
    if (t->letter > 0) return std::string(1, static_cast<char>('0' + t->letter));
    return foliage(t->left) + foliage(t->right);
}

std::string tree_str(const TreePtr& t) {
    if (t->letter > 0) return std::string(1, static_cast<char>('0' + t->letter));
    return "[" + tree_str(t->left) + "," + tree_str(t->right) + "]";
}

TensorSeries tree_to_tensor(const TreePtr& t, int n, int level) {
    if (t->letter > 0) return ts_letter(n, level, t->letter);
    return commutator(tree_to_tensor(t->left, n, level), tree_to_tensor(t->right, n, level));
}

// Duval's algorithm.
std::vector<std::vector<std::string>> lyndon_words(int n, int maxlen) {
    std::vector<std::vector<std::string>> out(maxlen);
    std::string w = "1";
    while (true) {
        if (static_cast<int>(w.size()) <= maxlen) out[w.size() - 1].push_back(w);
        // extend periodically to maxlen, then increment
        std::string x = w;
        while (static_cast<int>(x.size()) < maxlen) x += x[x.size() % w.size()];
        while (!x.empty() && x.back() == static_cast<char>('0' + n)) x.pop_back();
        if (x.empty()) break;
        ++x.back();
        w = x;
    }
    for (auto& lvl : out) std::sort(lvl.begin(), lvl.end());
    return out;
}

namespace {

// Lyndon: strictly smaller than every proper suffix
bool is_lyndon(const std::string& s) {
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s.substr(i) <= s) return false;
    return true;
}

}  // namespace

TreePtr standard_bracketing(const std::string& w) {
    if (w.empty() || !is_lyndon(w))
        throw std::invalid_argument("standard_bracketing: not a Lyndon word: " + w);
    if (w.size() == 1) return leaf(w[0] - '0');
    // standard factorization w = uv with v the longest proper Lyndon suffix
    for (std::size_t i = 1; i < w.size(); ++i) {
        std::string v = w.substr(i);
        if (is_lyndon(v))
            return node(standard_bracketing(w.substr(0, i)), standard_bracketing(v));
    }
    throw std::invalid_argument("standard_bracketing: no factorization for: " + w);
}

namespace {

long witt_dimension(int n, int p) {
    // (1/p) sum_{d|p} mu(d) n^(p/d)
    auto moebius = [](int m) {
        int result = 1;
        for (int q = 2; q * q <= m; ++q) {
            if (m % q == 0) {
                m /= q;
                if (m % q == 0) return 0;
                result = -result;
            }
        }
        if (m > 1) result = -result;
        return result;
    };
    long s = 0;
    for (int d = 1; d <= p; ++d) {
        if (p % d != 0) continue;
        long power = 1;
        for (int k = 0; k < p / d; ++k) power *= n;
        s += moebius(d) * power;
    }
    return s / p;
}

}  // namespace

LieBasis lyndon_basis(int n, int level) {
    if (n < 1 || level < 1) throw std::invalid_argument("lyndon_basis: need n >= 1, level >= 1");
    LieBasis b{n, level, {}};
    b.levels.resize(level);
    auto words = lyndon_words(n, level);
    for (int p = 1; p <= level; ++p) {
        for (const auto& w : words[p - 1]) {
            TreePtr t = standard_bracketing(w);
            b.levels[p - 1].push_back({tree_str(t), t, tree_to_tensor(t, n, level)});
        }
        if (static_cast<long>(b.levels[p - 1].size()) != witt_dimension(n, p))
            throw std::logic_error("lyndon_basis: level count disagrees with the Witt formula");
    }
    return b;
}

LieBasis hall_derived_basis(int n, int level) {
    if (n < 1 || level < 1) throw std::invalid_argument("hall_derived_basis: need n >= 1, level >= 1");
    if (level > 5)
        throw std::invalid_argument(
            "hall_derived_basis: levels above 5 would need products of three or more combed trees");
    LieBasis b{n, level, {}};
    b.levels.resize(level);
    for (int i = 1; i <= n; ++i) b.levels[0].push_back({tree_str(leaf(i)), leaf(i), ts_letter(n, level, i)});

    // right-combed trees per degree, enumerated pair-major ((j,k) lexicographic),
    // then prefix word ascending
    std::vector<std::vector<TreePtr>> combed(level + 1);
    for (int p = 2; p <= level; ++p) {
        for (int j = 1; j <= n; ++j) {
            for (int k = j + 1; k <= n; ++k) {
                // prefixes i1 >= i2 >= ... >= i_{p-2} >= j of length p-2
                std::vector<std::string> prefixes{""};
                for (int pos = 0; pos < p - 2; ++pos) {
                    std::vector<std::string> next;
                    for (const auto& pre : prefixes) {
                        int lo = pre.empty() ? j : pre.back() - '0';
                        for (int i = lo; i <= n; ++i)
                            next.push_back(pre + static_cast<char>('0' + i));
                    }
                    prefixes = std::move(next);
                }
                std::sort(prefixes.begin(), prefixes.end());
                // pre holds the wrapping letters innermost-first (nondecreasing),
                // so the outermost letter ends up the largest: (i1,(i2,...,(j,k)))
                // with i1 >= i2 >= ... >= j
                for (const auto& pre : prefixes) {
                    TreePtr t = node(leaf(j), leaf(k));
                    for (char ch : pre) t = node(leaf(ch - '0'), t);
                    combed[p].push_back(t);
                }
            }
        }
    }
    for (int p = 2; p <= level; ++p) {
        for (const auto& t : combed[p]) b.levels[p - 1].push_back({tree_str(t), t, tree_to_tensor(t, n, level)});
        // products of two combed trees of degrees >= 2, oriented by foliage order
        for (int d1 = 2; 2 * d1 <= p; ++d1) {
            int d2 = p - d1;
            for (const auto& t1 : combed[d1]) {
                for (const auto& t2 : combed[d2]) {
                    std::string f1 = foliage(t1), f2 = foliage(t2);
                    if (d1 == d2 && f1 >= f2) continue;  // unordered pair, skip duplicates and equal
                    TreePtr t = f1 < f2 ? node(t1, t2) : node(t2, t1);
                    b.levels[p - 1].push_back({tree_str(t), t, tree_to_tensor(t, n, level)});
                }
            }
        }
        if (static_cast<long>(b.levels[p - 1].size()) != witt_dimension(n, p))
            throw std::logic_error("hall_derived_basis: level count disagrees with the Witt formula");
    }
    return b;
}

std::pair<long, long> shape_counts(int n, int p) {
    if (n < 1 || p < 2) throw std::invalid_argument("shape_counts: need n >= 1, p >= 2");
    auto schur_dim = [n](const std::vector<int>& lambda) -> long {
        // hook content formula: prod over cells (n + j - i) / hook(i,j)
        std::vector<int> conj;
        for (int c = 1;; ++c) {
            int h = 0;
            for (int v : lambda)
                if (v >= c) ++h;
            if (h == 0) break;
            conj.push_back(h);
        }
        Rat dim = 1;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            for (int j = 1; j <= lambda[i]; ++j) {
                long content = n + j - static_cast<long>(i) - 1;
                if (content == 0) return 0;
                long hook = (lambda[i] - j) + (conj[j - 1] - static_cast<long>(i) - 1) + 1;
                dim *= rq(content, hook);
            }
        }
        if (dim.get_den() != 1) throw std::logic_error("shape_counts: non-integral dimension");
        return dim.get_num().get_si();
    };
    long icount = schur_dim({p - 1, 1});
    long jcount = (p >= 3) ? schur_dim({p - 2, 1, 1}) : 0;
    return {icount, jcount};
}

std::vector<TensorSeries> first_kind_duals(const LieBasis& basis, int p) {
    if (p < 1 || p > basis.level) throw std::invalid_argument("first_kind_duals: level out of range");
    int n = basis.n;
    auto words = all_words(n, p);
    int dim = static_cast<int>(words.size());
    std::map<std::string, int> word_index;
    for (int i = 0; i < dim; ++i) word_index[words[i]] = i;

    // columns: degree-p basis expansions, then symmetrized products of k >= 2
    // lower-degree basis elements with total degree p
    std::vector<TensorSeries> columns;
    for (const auto& e : basis.levels[p - 1]) columns.push_back(e.tensor);

    std::vector<const BasisEntry*> flat;
    for (int q = 1; q < p; ++q)
        for (const auto& e : basis.levels[q - 1]) flat.push_back(&e);
    std::vector<int> pick;
    auto symmetrized = [&](const std::vector<int>& idx) {
        // (1/k!) sum over permutations of the concatenation product
        std::vector<int> perm = idx;
        std::sort(perm.begin(), perm.end());
        TensorSeries s = ts_zero(basis.n, basis.level);
        long count = 0;
        do {
            TensorSeries prod = ts_one(basis.n, basis.level);
            for (int i : perm) prod = concat_product(prod, flat[i]->tensor);
            s = add(s, prod);
            ++count;
        } while (std::next_permutation(perm.begin(), perm.end()));
        // distinct permutations of a multiset: dividing by the count matches 1/k!
        // applied to all k! terms with repeats collapsed
        return scale(rq(1, count), s);
    };
    std::function<void(int, int)> enumerate = [&](int start, int remaining) {
        if (remaining == 0) {
            if (pick.size() >= 2) columns.push_back(symmetrized(pick));
            return;
        }
        for (int i = start; i < static_cast<int>(flat.size()); ++i) {
            int d = tree_degree(flat[i]->tree);
            if (d > remaining) continue;
            if (remaining - d == 0 && pick.empty()) continue;  // singletons are the Lie block
            pick.push_back(i);
            enumerate(i, remaining - d);
            pick.pop_back();
        }
    };
    enumerate(0, p);

    if (static_cast<int>(columns.size()) != dim)
        throw std::logic_error("first_kind_duals: PBW column count mismatch");
    RatMat A(dim, dim);
    for (int c = 0; c < dim; ++c)
        for (const auto& [w, v] : columns[c].coeff)
            if (static_cast<int>(w.size()) == p) A.at(word_index[w], c) = v;
    RatMat inv = invert(A);

    int lie_count = static_cast<int>(basis.levels[p - 1].size());
    std::vector<TensorSeries> duals(lie_count, ts_zero(n, p));
    for (int r = 0; r < lie_count; ++r)
        for (int c = 0; c < dim; ++c)
            if (inv.at(r, c) != 0) duals[r].coeff[words[c]] = inv.at(r, c);
    return duals;
}

std::map<std::string, Rat> first_kind_coordinates(const TensorSeries& lie_elt,
                                                  const LieBasis& basis) {
    if (lie_elt.n != basis.n) throw std::invalid_argument("first_kind_coordinates: dimension mismatch");
    if (lie_elt.at("") != 0)
        throw std::invalid_argument("first_kind_coordinates: nonzero constant term, not a Lie element");
    std::map<std::string, Rat> coords;
    for (int p = 1; p <= std::min(lie_elt.level, basis.level); ++p) {
        TensorSeries part = graded_part(lie_elt, p);
        if (part.is_zero()) continue;
        auto duals = first_kind_duals(basis, p);
        const auto& entries = basis.levels[p - 1];
        TensorSeries residual = part;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            Rat c = 0;
            for (const auto& [w, v] : duals[i].coeff) c += v * part.at(w);
            if (c != 0) {
                coords[entries[i].name] = c;
                residual = sub(residual, scale(c, graded_part(entries[i].tensor, p)));
            }
        }
        if (!residual.is_zero()) {
            std::ostringstream os;
            os << "first_kind_coordinates: not a Lie element at level " << p
               << " (residual max coefficient " << max_abs_coeff_d(residual) << ")";
            throw std::invalid_argument(os.str());
        }
    }
    // any levels beyond the basis must be empty
    for (const auto& [w, c] : lie_elt.coeff)
        if (static_cast<int>(w.size()) > basis.level)
            throw std::invalid_argument("first_kind_coordinates: element exceeds basis level");
    return coords;
}

}  // namespace surfsig
