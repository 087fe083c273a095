#pragma once

#include "surfsig/rational.hpp"

#include <stdexcept>
#include <vector>

namespace surfsig {

// Dense exact-rational matrix, row major. Sizes in this project stay small
// (at most a few hundred rows), so plain Gaussian elimination is enough.
struct RatMat {
    int rows = 0, cols = 0;
    std::vector<Rat> a;

    RatMat() = default;
    RatMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

    Rat& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    const Rat& at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// In-place reduced row echelon form; returns the pivot column of each
// surviving row (rows beyond the returned size are zero).
inline std::vector<int> rref(RatMat& m) {
    std::vector<int> pivots;
    int r = 0;
    for (int c = 0; c < m.cols && r < m.rows; ++c) {
        int pr = -1;
        for (int i = r; i < m.rows; ++i)
            if (m.at(i, c) != 0) { pr = i; break; }
        if (pr < 0) continue;
        if (pr != r)
            for (int j = 0; j < m.cols; ++j) std::swap(m.at(pr, j), m.at(r, j));
        Rat inv = 1 / m.at(r, c);
        for (int j = c; j < m.cols; ++j) m.at(r, j) *= inv;
        for (int i = 0; i < m.rows; ++i) {
            if (i == r || m.at(i, c) == 0) continue;
            Rat f = m.at(i, c);
            for (int j = c; j < m.cols; ++j) m.at(i, j) -= f * m.at(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

// Solves A x = b for square nonsingular A.
inline std::vector<Rat> solve_square(const RatMat& A, const std::vector<Rat>& b) {
    if (A.rows != A.cols || static_cast<int>(b.size()) != A.rows)
        throw std::invalid_argument("solve_square: shape mismatch");
    RatMat m(A.rows, A.cols + 1);
    for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < A.cols; ++j) m.at(i, j) = A.at(i, j);
        m.at(i, A.cols) = b[i];
    }
    auto piv = rref(m);
    if (static_cast<int>(piv.size()) != A.rows)
        throw std::invalid_argument("solve_square: singular matrix");
    std::vector<Rat> x(A.cols);
    for (int i = 0; i < A.rows; ++i) x[piv[i]] = m.at(i, A.cols);
    return x;
}

inline RatMat invert(const RatMat& A) {
    if (A.rows != A.cols) throw std::invalid_argument("invert: non-square");
    int n = A.rows;
    RatMat m(n, 2 * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m.at(i, j) = A.at(i, j);
        m.at(i, n + i) = 1;
    }
    auto piv = rref(m);
    if (static_cast<int>(piv.size()) != n || piv.back() != n - 1)
        throw std::invalid_argument("invert: singular matrix");
    RatMat inv(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inv.at(i, j) = m.at(i, n + j);
    return inv;
}

inline std::vector<Rat> mat_vec(const RatMat& A, const std::vector<Rat>& x) {
    if (static_cast<int>(x.size()) != A.cols) throw std::invalid_argument("mat_vec: shape mismatch");
    std::vector<Rat> y(A.rows);
    for (int i = 0; i < A.rows; ++i) {
        Rat s = 0;
        for (int j = 0; j < A.cols; ++j)
            if (A.at(i, j) != 0 && x[j] != 0) s += A.at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline int rank(RatMat m) {
    return static_cast<int>(rref(m).size());
}

}  // namespace surfsig
