#pragma once

#include "surfsig/tensor_algebra.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace surfsig {

// Binary bracketing tree; letter > 0 marks a leaf.
struct BracketTree;
using TreePtr = std::shared_ptr<const BracketTree>;

struct BracketTree {
    int letter = 0;
    TreePtr left, right;
};

TreePtr leaf(int i);
TreePtr node(TreePtr l, TreePtr r);
int tree_degree(const TreePtr& t);
std::string foliage(const TreePtr& t);   // leaf letters left to right, e.g. "112"
std::string tree_str(const TreePtr& t);  // "[1,[1,2]]"

// Expansion of the bracketing in the tensor algebra.
TensorSeries tree_to_tensor(const TreePtr& t, int n, int level);

// Lyndon words of each length 1..maxlen over letters 1..n.
std::vector<std::vector<std::string>> lyndon_words(int n, int maxlen);

// Standard (right) factorization bracketing of a Lyndon word.
TreePtr standard_bracketing(const std::string& w);

struct BasisEntry {
    std::string name;  // tree_str
    TreePtr tree;
    TensorSeries tensor;
};

// A graded basis of the free Lie algebra: levels[p-1] holds the degree-p
// basis elements.
struct LieBasis {
    int n = 0;
    int level = 0;
    std::vector<std::vector<BasisEntry>> levels;
};

LieBasis lyndon_basis(int n, int level);

// Basis compatible with the derived series: right-combed trees
// (i1,(i2,...,(i_{p-1},i_p))) with i1 >= ... >= i_{p-1} < i_p, plus pairwise
// products of two such trees in degrees >= 2 (enough through level 5).
LieBasis hall_derived_basis(int n, int level);

// (|I_{n,p}|, |J_{n,p}|): dimensions of the Schur modules of shapes (p-1,1)
// and (p-2,1,1), by the hook content formula.
std::pair<long, long> shape_counts(int n, int p);

// Dual functionals of the degree-p basis elements: the unique level-p word
// functionals that vanish on symmetrized products of lower-degree basis
// elements and are dual to the basis expansion.
std::vector<TensorSeries> first_kind_duals(const LieBasis& basis, int p);

// Expand a Lie element in the given basis; throws (reporting the residual
// norm) if the element is not a Lie element of the basis's span.
std::map<std::string, Rat> first_kind_coordinates(const TensorSeries& lie_elt,
                                                  const LieBasis& basis);

}  // namespace surfsig
