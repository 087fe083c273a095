#pragma once

#include "surfsig/tensor_algebra.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace surfsig {

// Piecewise-linear path: an ordered list of points, all of one dimension.
// Repeated consecutive points (zero segments) are allowed.
struct PLPath {
    std::vector<std::vector<Rat>> points;
};

int path_dim(const PLPath& p);

// Log-signature of one straight segment with increment delta: the constant
// one-form development is exp(sum_i delta_i Z_i), so the log is linear.
TensorSeries segment_logsig(const std::vector<Rat>& delta, int n, int level);

// Left-to-right BCH fold of the segment log-signatures.
TensorSeries path_logsig(const PLPath& p, int n, int level);

// (1/2) integral of x_i dx_j - x_j dx_i along the path, summed segmentwise.
Rat signed_area(const PLPath& p, int i, int j);

// Samples a smooth path: t in [0,1] -> (position, velocity).
using PathSampler =
    std::function<std::pair<std::vector<double>, std::vector<double>>(double)>;

// Fixed-step midpoint (second order) integration of the log-signature ODE
// omega' = sum_m (B_m / m!) ad_omega^m (A(t)), A(t) = sum_i vel_i(t) Z_i,
// with the Bernoulli weights of z / (1 - e^{-z}) (B_1 = +1/2). Sample values
// are converted to exact rationals, so the arithmetic itself is exact.
TensorSeries magnus_ode_logsig(const PathSampler& sampler, int n, int level, int steps);

}  // namespace surfsig
