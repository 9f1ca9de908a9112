// SPDX-License-Identifier: Apache-2.0
//
// Likelihoods, importance-resampled posteriors, trimming bounds, and the
// posterior-stability constant estimator.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bip/ot.hpp"
#include "bip/point_cloud.hpp"

namespace bip {

// Additive-Gaussian-noise likelihood: Phi(u; y) = ||F(u) - y||^2 / (2 sigma^2).
// `forward` evaluates F; `linear` additionally holds the matrix when F is
// linear, which the stability-constant estimator requires (it needs the
// operator norm of F).
struct LikelihoodSpec {
  std::function<std::vector<double>(std::span<const double>)> forward;
  std::optional<Eigen::MatrixXd> linear;
  std::vector<double> data_y;
  double sigma = 1.0;
};

// Builds a spec for a linear forward map F (matrix acting on points).
LikelihoodSpec make_linear_likelihood(const Eigen::MatrixXd& F,
                                      std::vector<double> data_y,
                                      double sigma);

void validate_likelihood(const LikelihoodSpec& spec);

// log dv/dmu up to the evidence: -Phi(u; y) = -||F(u) - y||^2 / (2 sigma^2).
double log_likelihood(const LikelihoodSpec& spec, std::span<const double> u);

// A weighted representation of the posterior over the prior's support.
struct WeightedSamples {
  PointCloud cloud;                 // prior support carrying the weights
  std::vector<double> log_weights;  // pre-normalization, one per point
  double ess_fraction = 0.0;        // (sum w)^2 / (n sum w^2), in (0, 1]
};

struct ImportancePosterior {
  WeightedSamples weighted;
  PointCloud resampled;  // m_out equal-weight points, systematic resampling
};

// Reweights the prior cloud by the likelihood and draws m_out points by
// systematic resampling (single uniform offset).  Throws a numeric error
// when every weight underflows to zero (data too unlikely for this prior).
ImportancePosterior importance_posterior(const PointCloud& prior,
                                         const LikelihoodSpec& spec,
                                         std::size_t m_out,
                                         std::uint64_t seed);

// Plug-in estimate of the stability constant C_stab(y) for a linear forward
// map: every measure integral is a weighted sum over the cloud, and the
// coupling integral runs over the W2-optimal plan between the clouds.
double estimate_cstab(const PointCloud& prior_true,
                      const PointCloud& prior_approx,
                      const LikelihoodSpec& spec);

// Same, reusing an already-computed W2-optimal plan between the clouds.
double estimate_cstab(const PointCloud& prior_true,
                      const PointCloud& prior_approx,
                      const LikelihoodSpec& spec, const TransportPlan& plan);

enum class TrimMode { prior, posterior };

struct TrimBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// Checks the tail-trimming transport bounds at radius r:
//   prior mode:      W2(mu, mu_r)^2 <= (4/r^2) * mu(||.||^2)^2
//   posterior mode:  W1(nu, nu_r)   <= (2/r)   * nu(||.||)^2
// The left side is computed with the exact OT solver.
TrimBoundCheck check_trim_bounds(const PointCloud& measure, double r,
                                 TrimMode mode);

// One row of the stability experiments: prior W2 distance, posterior W1
// distance after importance resampling, the C_stab estimate on the same
// optimal plan, and their ratio.
struct StabilityReport {
  double prior_w2 = 0.0;
  double posterior_w1 = 0.0;
  double cstab_estimate = 0.0;
  double ratio = 0.0;  // posterior_w1 / prior_w2 (inf when prior_w2 = 0)
};

StabilityReport stability_report(const PointCloud& prior_true,
                                 const PointCloud& prior_approx,
                                 const LikelihoodSpec& spec, std::size_t m_out,
                                 std::uint64_t seed);

// W1 distance between two independent resamplings of the same posterior;
// the irreducible noise level a posterior comparison at this m_out carries.
double resampling_noise_floor(const PointCloud& prior,
                              const LikelihoodSpec& spec, std::size_t m_out,
                              std::uint64_t seed);

}  // namespace bip
