#include "surfsig/crossed_module.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace surfsig {

std::string preh_str(const PreH& e) {
    std::string out;
    for (char c : e.word) {
        out += '[';
        out += c;
        out += ',';
    }
    out += '(';
    out += static_cast<char>('0' + e.j);
    out += ',';
    out += static_cast<char>('0' + e.k);
    out += ')';
    out.append(e.word.size(), ']');
    return out;
}

PreH preh_parse(const std::string& s, int n) {
    PreH e;
    std::size_t i = 0;
    auto fail = [&] { throw std::invalid_argument("preh_parse: bad generator string: " + s); };
    while (i < s.size() && s[i] == '[') {
        ++i;
        if (i + 1 >= s.size() || s[i] < '1' || s[i] > '0' + n || s[i + 1] != ',') fail();
        e.word += s[i];
        i += 2;
    }
    if (i + 4 >= s.size() || s[i] != '(' || s[i + 2] != ',' || s[i + 4] != ')') fail();
    e.j = s[i + 1] - '0';
    e.k = s[i + 3] - '0';
    i += 5;
    if (e.j < 1 || e.k <= e.j || e.k > n) fail();
    if (s.size() - i != e.word.size()) fail();
    while (i < s.size())
        if (s[i++] != ']') fail();
    return e;
}

namespace {

// Nested bracket wrapping [Z_j, Z_k] by the letters of w, left to right:
// w = "ab" gives [Z_a, [Z_b, [Z_j, Z_k]]].
TreePtr wrap_tree(const PreH& e) {
    TreePtr t = node(leaf(e.j), leaf(e.k));
    for (auto it = e.word.rbegin(); it != e.word.rend(); ++it) t = node(leaf(*it - '0'), t);
    return t;
}

// Raw (unreduced) coordinates over the level-p generator list.
using RawVec = std::vector<Rat>;

struct LevelRef {
    const std::vector<PreH>& basis;
    const std::map<PreH, int>& index;
};

}  // namespace

int CrossedModuleContext::index_of(int p, const PreH& e) const {
    const auto& idx = lv_[p].index;
    auto it = idx.find(e);
    return it == idx.end() ? -1 : it->second;
}

std::vector<Rat> CrossedModuleContext::reduce_full(int p, std::vector<Rat> v) const {
    const auto& L = lv_[p];
    for (int r = 0; r < L.rel.rows; ++r) {
        int c = L.rel_pivots[r];
        if (v[c] == 0) continue;
        Rat f = v[c];
        for (int j = c; j < L.rel.cols; ++j)
            if (L.rel.at(r, j) != 0) v[j] -= f * L.rel.at(r, j);
    }
    return v;
}

std::vector<Rat> CrossedModuleContext::to_reduced(int p, const std::vector<Rat>& full) const {
    const auto& L = lv_[p];
    std::vector<Rat> out(L.free_cols.size());
    for (std::size_t i = 0; i < L.free_cols.size(); ++i) out[i] = full[L.free_cols[i]];
    return out;
}

std::vector<Rat> CrossedModuleContext::to_full(int p, const std::vector<Rat>& reduced) const {
    const auto& L = lv_[p];
    std::vector<Rat> out(L.basis.size());
    for (std::size_t i = 0; i < L.free_cols.size(); ++i) out[L.free_cols[i]] = reduced[i];
    return out;
}

bool CrossedModuleContext::has_display(int p) const {
    return p >= 2 && p <= level && !lv_[p].disp_labels.empty();
}

namespace {

// act of a single word u on raw level-q coordinates, producing level
// q + |u| raw coordinates (or nothing if that exceeds the truncation).
void prepend_word(const CrossedModuleContext& ctx, const std::string& u, const Rat& c, int q,
                  const RawVec& v, RawVec& out) {
    const auto& src = ctx.basis(q);
    int pt = q + static_cast<int>(u.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (v[i] == 0) continue;
        PreH e{u + src[i].word, src[i].j, src[i].k};
        int idx = ctx.index_of(pt, e);
        if (idx < 0) throw std::logic_error("prepend_word: missing generator");
        out[idx] += c * v[i];
    }
}

HElement from_raw(const CrossedModuleContext& ctx, std::vector<RawVec> raw) {
    HElement h;
    h.n = ctx.n;
    h.level = ctx.level;
    h.comps.assign(ctx.level + 1, {});
    for (int p = 2; p <= ctx.level; ++p)
        h.comps[p] = ctx.to_reduced(p, ctx.reduce_full(p, std::move(raw[p])));
    return h;
}

std::vector<RawVec> to_raw(const CrossedModuleContext& ctx, const HElement& h) {
    std::vector<RawVec> raw(ctx.level + 1);
    for (int p = 2; p <= ctx.level; ++p) raw[p] = ctx.to_full(p, h.comps[p]);
    return raw;
}

void check_ctx(const CrossedModuleContext& ctx, const HElement& h, const char* who) {
    if (h.n != ctx.n || h.level != ctx.level)
        throw std::invalid_argument(std::string(who) + ": element does not belong to this context");
}

}  // namespace

CrossedModuleContext build_context(int n, int level) {
    if (n < 2) throw std::invalid_argument("build_context: need n >= 2 (no area pairs otherwise)");
    if (level < 2) throw std::invalid_argument("build_context: need level >= 2");
    CrossedModuleContext ctx;
    ctx.n = n;
    ctx.level = level;
    ctx.lv_.resize(level + 1);

    // Generator lists and feedback expansions.
    for (int p = 2; p <= level; ++p) {
        auto& L = ctx.lv_[p];
        for (const auto& w : all_words(n, p - 2))
            for (int j = 1; j <= n; ++j)
                for (int k = j + 1; k <= n; ++k) L.basis.push_back(PreH{w, j, k});
        for (std::size_t i = 0; i < L.basis.size(); ++i)
            L.index.emplace(L.basis[i], static_cast<int>(i));
        L.fb.reserve(L.basis.size());
        for (const auto& e : L.basis) L.fb.push_back(tree_to_tensor(wrap_tree(e), n, level));
    }

    // Relation subspace at level p: for every generator pair (a, b) with
    // deg a + deg b = p, the vector act(feedback(a), b) + act(feedback(b), a).
    for (int p = 2; p <= level; ++p) {
        auto& L = ctx.lv_[p];
        int dim = static_cast<int>(L.basis.size());
        std::vector<RawVec> gens;
        for (int pa = 2; pa + 2 <= p; ++pa) {
            int pb = p - pa;
            if (pa > pb) break;
            const auto& A = ctx.lv_[pa];
            const auto& B = ctx.lv_[pb];
            for (std::size_t ia = 0; ia < A.basis.size(); ++ia) {
                for (std::size_t ib = (pa == pb ? ia : 0); ib < B.basis.size(); ++ib) {
                    RawVec v(dim);
                    RawVec ea(A.basis.size()), eb(B.basis.size());
                    ea[ia] = 1;
                    eb[ib] = 1;
                    for (const auto& [w, c] : A.fb[ia].coeff) prepend_word(ctx, w, c, pb, eb, v);
                    for (const auto& [w, c] : B.fb[ib].coeff) prepend_word(ctx, w, c, pa, ea, v);
                    // feedback must kill the relation: [ta,tb] + [tb,ta] = 0
                    TensorSeries check = ts_zero(n, level);
                    for (int t = 0; t < dim; ++t)
                        if (v[t] != 0) check = add(check, scale(v[t], L.fb[t]));
                    if (!check.is_zero())
                        throw std::logic_error("build_context: relation escapes the feedback kernel");
                    gens.push_back(std::move(v));
                }
            }
        }
        L.rel = RatMat(static_cast<int>(gens.size()), dim);
        for (std::size_t r = 0; r < gens.size(); ++r)
            for (int c = 0; c < dim; ++c) L.rel.at(static_cast<int>(r), c) = gens[r][c];
        L.rel_pivots = rref(L.rel);
        L.rel.rows = static_cast<int>(L.rel_pivots.size());
        L.is_pivot.assign(dim, 0);
        for (int c : L.rel_pivots) L.is_pivot[c] = 1;
        for (int c = 0; c < dim; ++c)
            if (!L.is_pivot[c]) L.free_cols.push_back(c);
    }

    // Kernel elements per level: index tuples i1 >= ... >= i_{p-2}, with
    // i_{p-2} < i_{p-1} < i_p, and the alternating three-term sum placing
    // each of the last three letters at the end of the word in turn.
    for (int p = 3; p <= level; ++p) {
        auto& L = ctx.lv_[p];
        int dim = static_cast<int>(L.basis.size());
        std::vector<std::string> prefixes;  // nonincreasing words of length p-3
        std::function<void(std::string, int)> grow = [&](std::string w, int lo) {
            if (static_cast<int>(w.size()) == p - 3) {
                prefixes.push_back(std::move(w));
                return;
            }
            for (int i = lo; i <= n; ++i) grow(w + static_cast<char>('0' + i), i);
        };
        for (int a = 1; a <= n; ++a)
            for (int b = a + 1; b <= n; ++b)
                for (int c = b + 1; c <= n; ++c) {
                    prefixes.clear();
                    grow("", a);  // prefix letters >= a, nonincreasing read left to right
                    for (auto& pre : prefixes) {
                        std::string rev(pre.rbegin(), pre.rend());
                        RawVec v(dim);
                        v[L.index.at(PreH{rev + static_cast<char>('0' + a), b, c})] += 1;
                        v[L.index.at(PreH{rev + static_cast<char>('0' + b), a, c})] -= 1;
                        v[L.index.at(PreH{rev + static_cast<char>('0' + c), a, b})] += 1;
                        L.kernel_red.push_back(ctx.to_reduced(p, ctx.reduce_full(p, v)));
                        std::string lab = "ker:" + rev;
                        lab += static_cast<char>('0' + a);
                        lab += static_cast<char>('0' + b);
                        lab += static_cast<char>('0' + c);
                        L.kernel_lab.push_back(std::move(lab));
                    }
                }
    }

    // Display change of basis through level 5: sections of the combed and
    // product trees followed by the kernel vectors must fill the quotient.
    int disp_top = std::min(level, 5);
    LieBasis hall = hall_derived_basis(n, disp_top);
    std::function<RawVec(const TreePtr&)> section = [&](const TreePtr& t) -> RawVec {
        int p = tree_degree(t);
        int dim = static_cast<int>(ctx.lv_[p].basis.size());
        RawVec v(dim);
        if (t->letter > 0) throw std::logic_error("section: bare letter has no area class");
        if (t->left->letter > 0 && t->right->letter > 0) {
            v[ctx.lv_[p].index.at(PreH{"", t->left->letter, t->right->letter})] = 1;
            return v;
        }
        if (t->right->letter > 0) {  // [x, Z_b] = -[Z_b, x]
            RawVec inner = section(t->left);
            std::string b(1, static_cast<char>('0' + t->right->letter));
            prepend_word(ctx, b, Rat(-1), p - 1, inner, v);
            return v;
        }
        RawVec inner = section(t->right);
        int q = tree_degree(t->right);
        if (t->left->letter > 0) {
            std::string a(1, static_cast<char>('0' + t->left->letter));
            prepend_word(ctx, a, Rat(1), q, inner, v);
        } else {
            TensorSeries x = tree_to_tensor(t->left, n, level);
            for (const auto& [w, c] : x.coeff) prepend_word(ctx, w, c, q, inner, v);
        }
        return v;
    };
    for (int p = 2; p <= disp_top; ++p) {
        auto& L = ctx.lv_[p];
        int dq = static_cast<int>(L.free_cols.size());
        std::vector<std::vector<Rat>> cols;
        for (const auto& entry : hall.levels[p - 1]) {
            cols.push_back(ctx.to_reduced(p, ctx.reduce_full(p, section(entry.tree))));
            L.disp_labels.push_back(entry.name);
        }
        L.disp_trees = static_cast<int>(cols.size());
        for (std::size_t i = 0; i < L.kernel_red.size(); ++i) {
            cols.push_back(L.kernel_red[i]);
            L.disp_labels.push_back(L.kernel_lab[i]);
        }
        if (static_cast<int>(cols.size()) != dq)
            throw std::logic_error("build_context: display basis does not fill the quotient");
        RatMat M(dq, dq);
        for (int c = 0; c < dq; ++c)
            for (int r = 0; r < dq; ++r) M.at(r, c) = cols[c][r];
        L.disp_inv = invert(M);  // throws if the columns fail to span
    }
    return ctx;
}

HElement h_zero(const CrossedModuleContext& ctx) {
    HElement h;
    h.n = ctx.n;
    h.level = ctx.level;
    h.comps.assign(ctx.level + 1, {});
    for (int p = 2; p <= ctx.level; ++p) h.comps[p].assign(ctx.dim_quotient(p), Rat(0));
    return h;
}

HElement h_basis(const CrossedModuleContext& ctx, const PreH& e) {
    int p = e.degree();
    if (p > ctx.level) throw std::invalid_argument("h_basis: generator degree exceeds level");
    int idx = ctx.index_of(p, e);
    if (idx < 0) throw std::invalid_argument("h_basis: unknown generator " + preh_str(e));
    auto raw = to_raw(ctx, h_zero(ctx));
    raw[p][idx] = 1;
    return from_raw(ctx, std::move(raw));
}

namespace {

void check_pair(const HElement& a, const HElement& b, const char* who) {
    if (a.n != b.n || a.level != b.level)
        throw std::invalid_argument(std::string(who) + ": mismatched contexts");
}

}  // namespace

HElement h_add(const HElement& a, const HElement& b) {
    check_pair(a, b, "h_add");
    HElement out = a;
    for (int p = 2; p <= a.level; ++p)
        for (std::size_t i = 0; i < out.comps[p].size(); ++i) out.comps[p][i] += b.comps[p][i];
    return out;
}

HElement h_sub(const HElement& a, const HElement& b) { return h_add(a, h_neg(b)); }

HElement h_scale(const Rat& c, const HElement& a) {
    HElement out = a;
    for (int p = 2; p <= a.level; ++p)
        for (auto& x : out.comps[p]) x *= c;
    return out;
}

HElement h_neg(const HElement& a) { return h_scale(Rat(-1), a); }

bool h_is_zero(const HElement& a) {
    for (int p = 2; p <= a.level; ++p)
        for (const auto& x : a.comps[p])
            if (x != 0) return false;
    return true;
}

HElement h_graded_part(const HElement& a, int p) {
    HElement out = a;
    for (int q = 2; q <= a.level; ++q)
        if (q != p) std::fill(out.comps[q].begin(), out.comps[q].end(), Rat(0));
    return out;
}

Rat h_norm(const HElement& a) {
    Rat m = 0;
    for (int p = 2; p <= a.level; ++p) {
        Rat mp = h_norm_level(a, p);
        if (mp > m) m = mp;
    }
    return m;
}

Rat h_norm_level(const HElement& a, int p) {
    Rat m = 0;
    for (const auto& x : a.comps[p]) {
        Rat v = rat_abs(x);
        if (v > m) m = v;
    }
    return m;
}

double h_norm_d(const HElement& a) { return to_double(h_norm(a)); }

HElement act(const CrossedModuleContext& ctx, const TensorSeries& x, const HElement& h) {
    check_ctx(ctx, h, "act");
    if (x.n != ctx.n || x.level != ctx.level)
        throw std::invalid_argument("act: tensor argument from a different truncation");
    if (x.at("") != 0) throw std::invalid_argument("act: nonzero constant term");
    auto raw = to_raw(ctx, h);
    std::vector<RawVec> out(ctx.level + 1);
    for (int p = 2; p <= ctx.level; ++p) out[p].assign(ctx.dim_full(p), Rat(0));
    for (const auto& [u, c] : x.coeff) {
        int du = static_cast<int>(u.size());
        for (int q = 2; q + du <= ctx.level; ++q) prepend_word(ctx, u, c, q, raw[q], out[q + du]);
    }
    return from_raw(ctx, std::move(out));
}

TensorSeries feedback(const CrossedModuleContext& ctx, const HElement& h) {
    check_ctx(ctx, h, "feedback");
    TensorSeries out = ts_zero(ctx.n, ctx.level);
    for (int p = 2; p <= ctx.level; ++p) {
        auto full = ctx.to_full(p, h.comps[p]);
        for (std::size_t i = 0; i < full.size(); ++i)
            if (full[i] != 0) out = add(out, scale(full[i], ctx.feedback_of_basis(p, static_cast<int>(i))));
    }
    return out;
}

HElement derived_bracket(const CrossedModuleContext& ctx, const HElement& a, const HElement& b) {
    return act(ctx, feedback(ctx, a), b);
}

HElement bch_h(const CrossedModuleContext& ctx, const HElement& a, const HElement& b) {
    check_ctx(ctx, a, "bch_h");
    check_ctx(ctx, b, "bch_h");
    int depth = ctx.level / 2;  // deeper brackets die of degree
    if (depth <= 1) return h_add(a, b);
    if (depth == 2)
        return h_add(h_add(a, b), h_scale(rq(1, 2), derived_bracket(ctx, a, b)));
    // Universal coefficients: expand BCH of two letters in a free Lie basis
    // and evaluate each bracket tree with the derived bracket.
    LieBasis basis = lyndon_basis(2, depth);
    TensorSeries u = bch_t(ts_letter(2, depth, 1), ts_letter(2, depth, 2));
    auto coords = first_kind_coordinates(u, basis);
    std::function<HElement(const TreePtr&)> eval = [&](const TreePtr& t) -> HElement {
        if (t->letter == 1) return a;
        if (t->letter == 2) return b;
        return derived_bracket(ctx, eval(t->left), eval(t->right));
    };
    HElement out = h_zero(ctx);
    for (const auto& lvl : basis.levels)
        for (const auto& entry : lvl) {
            auto it = coords.find(entry.name);
            if (it == coords.end() || it->second == 0) continue;
            out = h_add(out, h_scale(it->second, eval(entry.tree)));
        }
    return out;
}

HElement exp_action(const CrossedModuleContext& ctx, const TensorSeries& x, const HElement& h) {
    HElement sum = h;
    HElement term = h;
    for (int k = 1; k <= ctx.level - 2; ++k) {
        term = h_scale(rq(1, k), act(ctx, x, term));
        if (h_is_zero(term)) break;
        sum = h_add(sum, term);
    }
    return sum;
}

Rat h_distance(const CrossedModuleContext& ctx, const HElement& a, const HElement& b) {
    return h_norm(bch_h(ctx, h_neg(a), b));
}

std::vector<std::vector<HElement>> kernel_basis(const CrossedModuleContext& ctx) {
    std::vector<std::vector<HElement>> out(ctx.level + 1);
    for (int p = 2; p <= ctx.level; ++p)
        for (const auto& red : ctx.kernel_reduced(p)) {
            HElement h = h_zero(ctx);
            h.comps[p] = red;
            out[p].push_back(std::move(h));
        }
    return out;
}

std::vector<std::pair<std::string, Rat>> display_coordinates(const CrossedModuleContext& ctx,
                                                             const HElement& h, int p) {
    check_ctx(ctx, h, "display_coordinates");
    if (p < 2 || p > ctx.level || !ctx.has_display(p))
        throw std::invalid_argument("display_coordinates: no display basis at this level");
    auto c = mat_vec(ctx.display_transform(p), h.comps[p]);
    std::vector<std::pair<std::string, Rat>> out;
    const auto& labels = ctx.display_labels(p);
    for (std::size_t i = 0; i < labels.size(); ++i) out.emplace_back(labels[i], c[i]);
    return out;
}

std::string h_str(const CrossedModuleContext& ctx, const HElement& h) {
    check_ctx(ctx, h, "h_str");
    std::ostringstream os;
    bool first = true;
    for (int p = 2; p <= ctx.level; ++p) {
        const auto& free_cols = ctx.free_columns(p);
        for (std::size_t i = 0; i < h.comps[p].size(); ++i) {
            if (h.comps[p][i] == 0) continue;
            if (!first) os << " + ";
            os << rat_str(h.comps[p][i]) << "*" << preh_str(ctx.basis(p)[free_cols[i]]);
            first = false;
        }
    }
    return first ? "0" : os.str();
}

std::vector<DimRow> dimension_table(const CrossedModuleContext& ctx) {
    auto lyndon = lyndon_words(ctx.n, ctx.level);
    std::vector<DimRow> rows;
    for (int p = 2; p <= ctx.level; ++p) {
        DimRow r;
        r.level = p;
        r.fl = static_cast<long>(lyndon[p - 1].size());
        r.full = ctx.dim_full(p);
        r.relations = ctx.dim_relations(p);
        r.quotient = ctx.dim_quotient(p);
        auto [ci, cj] = shape_counts(ctx.n, p);
        r.count_i = ci;
        r.count_j = cj;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace surfsig
