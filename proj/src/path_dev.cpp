#include "surfsig/path_dev.hpp"

#include <stdexcept>

namespace surfsig {

int path_dim(const PLPath& p) {
    if (p.points.empty()) throw std::invalid_argument("path_dim: empty path");
    std::size_t d = p.points.front().size();
    for (const auto& pt : p.points)
        if (pt.size() != d) throw std::invalid_argument("path_dim: point dimensions differ");
    if (d == 0) throw std::invalid_argument("path_dim: zero-dimensional points");
    return static_cast<int>(d);
}

TensorSeries segment_logsig(const std::vector<Rat>& delta, int n, int level) {
    if (static_cast<int>(delta.size()) != n)
        throw std::invalid_argument("segment_logsig: increment dimension differs from n");
    TensorSeries out = ts_zero(n, level);
    for (int i = 0; i < n; ++i) out.add_to(std::string(1, static_cast<char>('1' + i)), delta[i]);
    return out;
}

TensorSeries path_logsig(const PLPath& p, int n, int level) {
    if (path_dim(p) != n) throw std::invalid_argument("path_logsig: path dimension differs from n");
    TensorSeries omega = ts_zero(n, level);
    for (std::size_t s = 0; s + 1 < p.points.size(); ++s) {
        std::vector<Rat> delta(n);
        bool zero = true;
        for (int i = 0; i < n; ++i) {
            delta[i] = p.points[s + 1][i] - p.points[s][i];
            zero = zero && delta[i] == 0;
        }
        if (zero) continue;
        omega = bch_t(omega, segment_logsig(delta, n, level));
    }
    return omega;
}

Rat signed_area(const PLPath& p, int i, int j) {
    int d = path_dim(p);
    if (i < 1 || j <= i || j > d) throw std::invalid_argument("signed_area: need 1 <= i < j <= dim");
    Rat twice = 0;
    for (std::size_t s = 0; s + 1 < p.points.size(); ++s) {
        const auto& a = p.points[s];
        const auto& b = p.points[s + 1];
        twice += a[i - 1] * b[j - 1] - a[j - 1] * b[i - 1];
    }
    return twice / 2;
}

namespace {

// Weights of z / (1 - e^{-z}); entries beyond the table are not needed below
// level 8.
const Rat& bernoulli_plus(int m) {
    static const std::vector<Rat> table = {Rat(1),     rq(1, 2),  rq(1, 6), Rat(0),
                                           rq(-1, 30), Rat(0),    rq(1, 42)};
    if (m >= static_cast<int>(table.size()))
        throw std::invalid_argument("bernoulli_plus: weight table exhausted");
    return table[m];
}

// Right-hand side sum_m (B_m / m!) ad_omega^m (A), truncated by grading:
// ad_omega^m(A) has degree at least m + 1.
TensorSeries magnus_rhs(const TensorSeries& omega, const TensorSeries& a, int level) {
    TensorSeries rhs = ts_zero(a.n, level);
    TensorSeries nest = a;
    Rat fact = 1;
    for (int m = 0; m <= level - 1; ++m) {
        if (m > 0) {
            nest = commutator(omega, nest);
            fact *= m;
            if (nest.is_zero()) break;
        }
        if (bernoulli_plus(m) != 0) rhs = add(rhs, scale(bernoulli_plus(m) / fact, nest));
    }
    return rhs;
}

TensorSeries sample_form(const PathSampler& sampler, double t, int n, int level) {
    auto [pos, vel] = sampler(t);
    if (static_cast<int>(vel.size()) != n)
        throw std::invalid_argument("magnus_ode_logsig: sampler velocity dimension differs from n");
    (void)pos;
    TensorSeries a = ts_zero(n, level);
    for (int i = 0; i < n; ++i)
        a.add_to(std::string(1, static_cast<char>('1' + i)), rat_of_double(vel[i]));
    return a;
}

}  // namespace

TensorSeries magnus_ode_logsig(const PathSampler& sampler, int n, int level, int steps) {
    if (steps < 1) throw std::invalid_argument("magnus_ode_logsig: need steps >= 1");
    TensorSeries omega = ts_zero(n, level);
    Rat h = rq(1, steps);
    for (int s = 0; s < steps; ++s) {
        double t0 = static_cast<double>(s) / steps;
        double tm = (static_cast<double>(s) + 0.5) / steps;
        TensorSeries k1 = magnus_rhs(omega, sample_form(sampler, t0, n, level), level);
        TensorSeries mid = add(omega, scale(h / 2, k1));
        TensorSeries k2 = magnus_rhs(mid, sample_form(sampler, tm, n, level), level);
        omega = add(omega, scale(h, k2));
    }
    return omega;
}

}  // namespace surfsig
