#pragma once

#include "surfsig/free_lie.hpp"
#include "surfsig/rat_linalg.hpp"
#include "surfsig/tensor_algebra.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace surfsig {

// Generator w (x) Z_jk of the area module: a word over 1..n prepended to an
// area pair j < k. Its degree is |w| + 2.
struct PreH {
    std::string word;
    int j = 0, k = 0;

    int degree() const { return static_cast<int>(word.size()) + 2; }
    bool operator==(const PreH& o) const = default;
    bool operator<(const PreH& o) const {
        if (word.size() != o.word.size()) return word.size() < o.word.size();
        return std::tie(word, j, k) < std::tie(o.word, o.j, o.k);
    }
};

// "[1,[2,(1,3)]]" for "12" (x) Z13; a bare pair renders as "(1,3)".
std::string preh_str(const PreH& e);
PreH preh_parse(const std::string& s, int n);

// Everything fixed by (n, level): the graded generator lists, the echelon
// form of the relation subspace (images of brackets under the graded
// differential), the feedback expansions, the kernel vectors, and -- through
// level 5 -- the change of basis into combed-bracket/kernel display
// coordinates.
class CrossedModuleContext {
  public:
    int n = 0;
    int level = 0;

    const std::vector<PreH>& basis(int p) const { return lv_[p].basis; }
    int index_of(int p, const PreH& e) const;

    int dim_full(int p) const { return static_cast<int>(lv_[p].basis.size()); }
    int dim_relations(int p) const { return lv_[p].rel.rows; }
    int dim_quotient(int p) const { return static_cast<int>(lv_[p].free_cols.size()); }

    // Feedback of the p-th level basis element with the given index, as a
    // tensor series at the context's truncation level.
    const TensorSeries& feedback_of_basis(int p, int idx) const { return lv_[p].fb[idx]; }

    // Quotient plumbing. reduce_full eliminates the pivot coordinates of the
    // relation subspace; to_reduced extracts the free coordinates of a
    // reduced vector; to_full embeds free coordinates as the canonical
    // representative.
    std::vector<Rat> reduce_full(int p, std::vector<Rat> v) const;
    std::vector<Rat> to_reduced(int p, const std::vector<Rat>& full) const;
    std::vector<Rat> to_full(int p, const std::vector<Rat>& reduced) const;
    const std::vector<int>& free_columns(int p) const { return lv_[p].free_cols; }

    const std::vector<std::vector<Rat>>& kernel_reduced(int p) const { return lv_[p].kernel_red; }
    const std::vector<std::string>& kernel_labels(int p) const { return lv_[p].kernel_lab; }

    // Display basis (levels 2..min(level,5)): combed/product bracket trees
    // followed by the kernel elements; disp_inv maps reduced coordinates to
    // coordinates in that basis.
    bool has_display(int p) const;
    const std::vector<std::string>& display_labels(int p) const { return lv_[p].disp_labels; }
    int display_tree_count(int p) const { return lv_[p].disp_trees; }
    const RatMat& display_transform(int p) const { return lv_[p].disp_inv; }

  private:
    struct LevelData {
        std::vector<PreH> basis;
        std::map<PreH, int> index;
        RatMat rel;                  // echelon rows spanning the relation subspace
        std::vector<int> rel_pivots;
        std::vector<char> is_pivot;  // per column
        std::vector<int> free_cols;
        std::vector<TensorSeries> fb;
        std::vector<std::vector<Rat>> kernel_red;
        std::vector<std::string> kernel_lab;
        std::vector<std::string> disp_labels;
        int disp_trees = 0;
        RatMat disp_inv;
    };
    std::vector<LevelData> lv_;  // indexed by degree, entries 2..level used

    friend CrossedModuleContext build_context(int n, int level);
};

CrossedModuleContext build_context(int n, int level);

// Element of the quotient: per-level free coordinates (level p entry has
// length dim_quotient(p)).
struct HElement {
    int n = 0;
    int level = 0;
    std::vector<std::vector<Rat>> comps;  // indexed by degree, entries 2..level used

    bool operator==(const HElement& o) const = default;
};

HElement h_zero(const CrossedModuleContext& ctx);
HElement h_basis(const CrossedModuleContext& ctx, const PreH& e);
HElement h_add(const HElement& a, const HElement& b);
HElement h_sub(const HElement& a, const HElement& b);
HElement h_scale(const Rat& c, const HElement& a);
HElement h_neg(const HElement& a);
bool h_is_zero(const HElement& a);
HElement h_graded_part(const HElement& a, int p);

// Max absolute free coordinate (overall / per level).
Rat h_norm(const HElement& a);
Rat h_norm_level(const HElement& a, int p);
double h_norm_d(const HElement& a);

// Left-multiply the word parts by x (which must have no constant term) and
// reduce. For Lie x this is the module action and commutes with feedback.
HElement act(const CrossedModuleContext& ctx, const TensorSeries& x, const HElement& h);

// w (x) Z_jk -> the nested bracket wrapping [Z_j,Z_k] by the letters of w.
TensorSeries feedback(const CrossedModuleContext& ctx, const HElement& h);

// [a, b] = act(feedback(a), b); antisymmetric and Jacobi on the quotient.
HElement derived_bracket(const CrossedModuleContext& ctx, const HElement& a, const HElement& b);

// BCH for the derived bracket; the series stops at nesting depth level/2
// because every bracket adds at least two degrees.
HElement bch_h(const CrossedModuleContext& ctx, const HElement& a, const HElement& b);

// exp of the action: sum_k act(x,.)^k / k!, an automorphism for bch_h.
HElement exp_action(const CrossedModuleContext& ctx, const TensorSeries& x, const HElement& h);

// Group distance between log-coordinates a, b: |log(a^{-1} * b)| with the
// max-coefficient norm.
Rat h_distance(const CrossedModuleContext& ctx, const HElement& a, const HElement& b);

// Per level p = 2..level: the feedback-kernel elements, one per admissible
// index tuple, each an exact alternating three-term sum.
std::vector<std::vector<HElement>> kernel_basis(const CrossedModuleContext& ctx);

// Coordinates of the level-p part in the display basis (trees + kernel).
std::vector<std::pair<std::string, Rat>> display_coordinates(const CrossedModuleContext& ctx,
                                                             const HElement& h, int p);

std::string h_str(const CrossedModuleContext& ctx, const HElement& h);

// One row per level: {level, dim FL, dim full, dim relations, dim quotient,
// |I|, |J|} -- the table behind the `dims` subcommand.
struct DimRow {
    int level = 0;
    long fl = 0, full = 0, relations = 0, quotient = 0, count_i = 0, count_j = 0;
};
std::vector<DimRow> dimension_table(const CrossedModuleContext& ctx);

}  // namespace surfsig
