// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bip/point_cloud.hpp"

namespace bip {

// Settings for the optimal transport solvers.
struct OtConfig {
  int ground_power = 2;          // p in {1, 2}: ground cost |x - y|^p
  std::string solver = "exact";  // "exact" or "sinkhorn"
  double epsilon = 0.05;         // entropic regularization strength
  int max_iters = 20000;         // iteration cap for the entropic solver
  double tolerance = 1e-5;       // marginal violation target (L1)
};

// Throws ConfigError on invalid settings.
void validate_ot_config(const OtConfig& cfg);

// Sparse coupling between two clouds: entry k moves mass[k] from point
// row[k] of the first cloud to point col[k] of the second.  An optimal
// basic solution has at most n + m - 1 entries.
struct TransportPlan {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::size_t> row;
  std::vector<std::size_t> col;
  std::vector<double> mass;
  double cost = 0.0;  // sum_k mass[k] * |x_row[k] - y_col[k]|^p

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
};

// Throws NumericError unless the plan's marginals match the cloud weights
// within 1e-8 and all masses are nonnegative.
void validate_plan(const TransportPlan& plan, const PointCloud& a,
                   const PointCloud& b);

struct OtResult {
  double distance = 0.0;  // W_p = (plan cost)^(1/p)
  TransportPlan plan;
};

// Exact Wasserstein-p distance (p in {1, 2}) with an optimal coupling.
// Small uniform equal-size clouds are solved as an assignment problem
// (Jonker-Volgenant); everything else runs a network simplex on the dense
// bipartite transportation problem with costs evaluated on the fly.
OtResult exact_wp(const PointCloud& a, const PointCloud& b, int p);

// Exhaustive oracle: minimizes over all n! pairings.  Requires uniform
// weights, equal sizes, and n <= 8; throws DomainError otherwise.
double brute_force_wp(const PointCloud& a, const PointCloud& b, int p);

// Entropic optimal transport cost OT_eps (the transport cost plus
// eps * KL(pi | a (x) b) at the entropic optimum).  Decreases to the exact
// cost as eps decreases.
double entropic_ot_cost(const PointCloud& a, const PointCloud& b,
                        const OtConfig& cfg);

struct SinkhornResult {
  double value = 0.0;           // debiased divergence S_eps(a, b)
  std::vector<double> grad_a;   // d value / d a-points, n x dim row-major
  int iterations = 0;           // Sinkhorn iterations spent (all three calls)
};

// Debiased entropic divergence
//   S_eps(a, b) = OT_eps(a, b) - OT_eps(a, a)/2 - OT_eps(b, b)/2,
// together with its gradient with respect to the support points of `a`
// (weights held fixed).  S_eps(a, a) = 0 and S_eps >= -tolerance.
SinkhornResult sinkhorn_divergence(const PointCloud& a, const PointCloud& b,
                                   const OtConfig& cfg);

// Verifies the order relation W_1(a, b) <= W_2(a, b) + 1e-7.
bool w1_le_w2_check(const PointCloud& a, const PointCloud& b);

}  // namespace bip
