// SPDX-License-Identifier: Apache-2.0
#include "bip/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return s;
}

// log sum_i exp(vals_i), tolerating -inf entries.
double log_sum_exp(const std::vector<double>& vals) {
  double mx = -kInf;
  for (const double v : vals) mx = std::max(mx, v);
  if (mx == -kInf) return -kInf;
  double s = 0.0;
  for (const double v : vals) s += std::exp(v - mx);
  return mx + std::log(s);
}

// Normalized posterior weights from log weights, plus the ESS fraction.
std::vector<double> normalize_log_weights(const std::vector<double>& lw,
                                          double* ess_fraction) {
  const double lse = log_sum_exp(lw);
  if (lse == -kInf) {
    throw NumericError(
        "posterior degeneracy: all importance weights underflowed to zero");
  }
  std::vector<double> w(lw.size());
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    w[i] = std::exp(lw[i] - lse);
    sum_sq += w[i] * w[i];
  }
  if (ess_fraction != nullptr) {
    *ess_fraction = 1.0 / (static_cast<double>(lw.size()) * sum_sq);
  }
  return w;
}

// Systematic resampling: one uniform offset, m equally spaced probes
// through the cumulative weights.
PointCloud systematic_resample(const PointCloud& cloud,
                               const std::vector<double>& w, std::size_t m,
                               Rng& rng) {
  PointCloud out;
  out.dim = cloud.dim;
  out.pts.reserve(m * static_cast<std::size_t>(cloud.dim));
  out.w.assign(m, 1.0 / static_cast<double>(m));

  const double offset = rng.uniform() / static_cast<double>(m);
  std::size_t i = 0;
  double cum = w[0];
  for (std::size_t j = 0; j < m; ++j) {
    const double u = offset + static_cast<double>(j) / static_cast<double>(m);
    while (u > cum && i + 1 < cloud.size()) {
      ++i;
      cum += w[i];
    }
    const auto p = cloud.point(i);
    out.pts.insert(out.pts.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace

LikelihoodSpec make_linear_likelihood(const Eigen::MatrixXd& F,
                                      std::vector<double> data_y,
                                      double sigma) {
  LikelihoodSpec spec;
  spec.linear = F;
  spec.data_y = std::move(data_y);
  spec.sigma = sigma;
  spec.forward = [F](std::span<const double> u) {
    if (static_cast<Eigen::Index>(u.size()) != F.cols()) {
      throw DomainError("likelihood: input dimension mismatch with F");
    }
    const Eigen::Map<const Eigen::VectorXd> uv(u.data(),
                                               static_cast<Eigen::Index>(u.size()));
    const Eigen::VectorXd fu = F * uv;
    return std::vector<double>(fu.data(), fu.data() + fu.size());
  };
  validate_likelihood(spec);
  return spec;
}

void validate_likelihood(const LikelihoodSpec& spec) {
  if (!(spec.sigma > 0.0)) {
    throw ConfigError("likelihood: sigma must be positive");
  }
  if (!spec.forward) {
    throw ConfigError("likelihood: forward map is not set");
  }
  if (spec.linear.has_value() &&
      spec.linear->rows() != static_cast<Eigen::Index>(spec.data_y.size())) {
    throw ConfigError("likelihood: data dimension does not match F rows");
  }
}

double log_likelihood(const LikelihoodSpec& spec, std::span<const double> u) {
  const std::vector<double> fu = spec.forward(u);
  if (fu.size() != spec.data_y.size()) {
    throw DomainError("likelihood: forward output does not match data size");
  }
  double r2 = 0.0;
  for (std::size_t k = 0; k < fu.size(); ++k) {
    const double r = fu[k] - spec.data_y[k];
    r2 += r * r;
  }
  const double ll = -r2 / (2.0 * spec.sigma * spec.sigma);
  if (!std::isfinite(ll)) {
    throw NumericError("likelihood: non-finite potential value");
  }
  return ll;
}

ImportancePosterior importance_posterior(const PointCloud& prior,
                                         const LikelihoodSpec& spec,
                                         std::size_t m_out,
                                         std::uint64_t seed) {
  validate_cloud(prior);
  validate_likelihood(spec);
  if (m_out < 1) throw ConfigError("importance resampling: m_out must be >= 1");

  ImportancePosterior post;
  post.weighted.cloud = prior;
  post.weighted.log_weights.resize(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    const double lw = prior.w[i] > 0.0 ? std::log(prior.w[i]) : -kInf;
    post.weighted.log_weights[i] = lw + log_likelihood(spec, prior.point(i));
  }

  const std::vector<double> w = normalize_log_weights(
      post.weighted.log_weights, &post.weighted.ess_fraction);
  Rng rng = Rng::derived(seed, 0x726573616d706c65ULL);
  post.resampled = systematic_resample(prior, w, m_out, rng);
  return post;
}

double estimate_cstab(const PointCloud& prior_true,
                      const PointCloud& prior_approx,
                      const LikelihoodSpec& spec) {
  const OtResult ot = exact_wp(prior_true, prior_approx, 2);
  return estimate_cstab(prior_true, prior_approx, spec, ot.plan);
}

double estimate_cstab(const PointCloud& prior_true,
                      const PointCloud& prior_approx,
                      const LikelihoodSpec& spec, const TransportPlan& plan) {
  validate_cloud(prior_true);
  validate_cloud(prior_approx);
  validate_likelihood(spec);
  if (!spec.linear.has_value()) {
    throw ConfigError(
        "stability constant: estimator requires a linear forward map");
  }
  const double sigma2 = spec.sigma * spec.sigma;
  const double y_norm = std::sqrt(sq_norm(spec.data_y));

  // Operator norm of F: the Lipschitz constant of the linear forward map.
  const double ell_f =
      Eigen::JacobiSVD<Eigen::MatrixXd>(*spec.linear).singularValues()(0);

  // Per-point ||F(u)|| over both clouds (reused by the plan integral).
  const auto f_norms = [&](const PointCloud& c) {
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      out[i] = std::sqrt(sq_norm(spec.forward(c.point(i))));
    }
    return out;
  };
  const std::vector<double> fn_true = f_norms(prior_true);
  const std::vector<double> fn_approx = f_norms(prior_approx);

  // log mu(exp(-||F(.)||^2/sigma^2)) for each cloud, in the log domain since
  // the exponents reach hundreds in low-noise regimes.
  const auto log_partition = [&](const PointCloud& c,
                                 const std::vector<double>& fn) {
    std::vector<double> terms(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      terms[i] = (c.w[i] > 0.0 ? std::log(c.w[i]) : -kInf) -
                 fn[i] * fn[i] / sigma2;
    }
    return log_sum_exp(terms);
  };
  const double log_den_true = log_partition(prior_true, fn_true);
  const double log_den_approx = log_partition(prior_approx, fn_approx);
  if (log_den_true == -kInf || log_den_approx == -kInf) {
    throw NumericError(
        "stability constant: likelihood partition sums underflowed");
  }

  // Coupling integral over the optimal plan.
  double integral = 0.0;
  for (std::size_t k = 0; k < plan.mass.size(); ++k) {
    const std::size_t i = plan.row[k];
    const std::size_t j = plan.col[k];
    const double lip = ell_f *
                       (fn_true[i] + fn_approx[j] + 2.0 * y_norm) /
                       (2.0 * sigma2);
    const double factor1 = std::max(1.0, lip * lip);
    const double reach = std::max(
        1.0, std::max(prior_true.norm(i), prior_approx.norm(j)));
    integral += plan.mass[k] * factor1 * reach * reach;
  }

  const double log_c = 2.0 * y_norm * y_norm / sigma2 +
                       std::log1p(norm_moment(prior_true, 1)) -
                       log_den_true - log_den_approx +
                       0.5 * std::log(integral);
  const double c = std::exp(log_c);
  if (!std::isfinite(c)) {
    throw NumericError("stability constant: estimate is not finite");
  }
  return c;
}

TrimBoundCheck check_trim_bounds(const PointCloud& measure, double r,
                                 TrimMode mode) {
  validate_cloud(measure);
  if (!(r > 0.0)) throw DomainError("trim bound: radius must be positive");
  const PointCloud trimmed = trim_cloud(measure, r);

  TrimBoundCheck check;
  if (mode == TrimMode::prior) {
    const double w2 = exact_wp(measure, trimmed, 2).distance;
    const double m2 = norm_moment(measure, 2);
    check.lhs = w2 * w2;
    check.rhs = 4.0 / (r * r) * m2 * m2;
  } else {
    check.lhs = exact_wp(measure, trimmed, 1).distance;
    const double m1 = norm_moment(measure, 1);
    check.rhs = 2.0 / r * m1 * m1;
  }
  check.holds = check.lhs <= check.rhs + 1e-7;
  return check;
}

StabilityReport stability_report(const PointCloud& prior_true,
                                 const PointCloud& prior_approx,
                                 const LikelihoodSpec& spec, std::size_t m_out,
                                 std::uint64_t seed) {
  // One exact W2 solve supplies both the prior distance and the optimal
  // plan the stability-constant integral runs over.
  const OtResult prior_ot = exact_wp(prior_true, prior_approx, 2);

  const ImportancePosterior post_true =
      importance_posterior(prior_true, spec, m_out, Rng::derive_seed(seed, 1));
  const ImportancePosterior post_approx =
      importance_posterior(prior_approx, spec, m_out, Rng::derive_seed(seed, 2));

  StabilityReport report;
  report.prior_w2 = prior_ot.distance;
  report.posterior_w1 =
      exact_wp(post_true.resampled, post_approx.resampled, 1).distance;
  report.cstab_estimate =
      estimate_cstab(prior_true, prior_approx, spec, prior_ot.plan);
  report.ratio = report.prior_w2 > 0.0
                     ? report.posterior_w1 / report.prior_w2
                     : kInf;
  return report;
}

double resampling_noise_floor(const PointCloud& prior,
                              const LikelihoodSpec& spec, std::size_t m_out,
                              std::uint64_t seed) {
  const ImportancePosterior a =
      importance_posterior(prior, spec, m_out, Rng::derive_seed(seed, 3));
  const ImportancePosterior b =
      importance_posterior(prior, spec, m_out, Rng::derive_seed(seed, 4));
  return exact_wp(a.resampled, b.resampled, 1).distance;
}

}  // namespace bip
