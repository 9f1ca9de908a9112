// SPDX-License-Identifier: Apache-2.0
#include "bip/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bip/errors.hpp"
#include "bip/rng.hpp"

namespace bip {

void validate_pcn_config(const PcnConfig& cfg) {
  if (!(cfg.beta0 > 0.0 && cfg.beta0 < 1.0)) {
    throw ConfigError("pcn: beta0 must lie in (0, 1)");
  }
  if (cfg.n_samples == 0) throw ConfigError("pcn: n_samples must be positive");
  if (!(cfg.burn_fraction >= 0.0 && cfg.burn_fraction <= 0.5)) {
    throw ConfigError("pcn: burn_fraction must lie in [0, 0.5]");
  }
  if (cfg.adapt_window == 0) {
    throw ConfigError("pcn: adapt_window must be positive");
  }
  if (!(cfg.target_low > 0.0 && cfg.target_low < cfg.target_high &&
        cfg.target_high < 1.0)) {
    throw ConfigError("pcn: acceptance band must satisfy 0 < low < high < 1");
  }
  if (cfg.thin == 0) throw ConfigError("pcn: thin must be positive");
}

ChainResult pcn_run(const ResidualMapStack& generator,
                    const LikelihoodSpec& spec, const PcnConfig& cfg) {
  validate_pcn_config(cfg);
  validate_likelihood(spec);
  const int d = generator.latent_dim;
  if (d <= 0) throw DomainError("pcn: generator has no latent dimension");

  Rng rng = Rng::derived(cfg.seed, 0x70636e636861696eULL);  // "pcnchain"
  const auto potential = [&](const std::vector<double>& z,
                             std::size_t step) -> double {
    std::vector<double> pushed;
    double phi = 0.0;
    try {
      pushed = generator.forward(z);
      phi = -log_likelihood(spec, pushed);
    } catch (const Error& e) {
      throw NumericError("chain failure at step " + std::to_string(step) +
                         ": " + e.what());
    }
    return phi;
  };

  std::vector<double> z(static_cast<std::size_t>(d));
  for (auto& v : z) v = rng.normal();
  double phi = potential(z, 0);

  const auto burn =
      static_cast<std::size_t>(cfg.burn_fraction * static_cast<double>(cfg.n_samples));
  const std::size_t retained =
      cfg.n_samples > burn ? (cfg.n_samples - burn + cfg.thin - 1) / cfg.thin : 0;

  ChainResult result;
  result.latent_samples.reserve(retained);
  result.pushed_samples.reserve(retained);
  result.phi_trace.reserve(retained);

  double beta = cfg.beta0;
  std::size_t window_accepts = 0;
  std::size_t post_accepts = 0;
  std::vector<double> proposal(static_cast<std::size_t>(d));

  for (std::size_t step = 0; step < cfg.n_samples; ++step) {
    const double noise_scale = std::sqrt(1.0 - beta * beta);
    for (std::size_t i = 0; i < proposal.size(); ++i) {
      proposal[i] = beta * z[i] + noise_scale * rng.normal();
    }
    const double phi_new = potential(proposal, step + 1);
    // alpha = min(1, exp(phi - phi_new)); equal potentials accept surely
    // because the uniform draw lives in [0, 1).
    const double alpha = std::exp(std::min(0.0, phi - phi_new));
    if (rng.uniform() < alpha) {
      z.swap(proposal);
      phi = phi_new;
      ++window_accepts;
      if (step >= burn) ++post_accepts;
    }

    if (step >= burn && (step - burn) % cfg.thin == 0) {
      result.latent_samples.push_back(z);
      result.pushed_samples.push_back(generator.forward(z));
      result.phi_trace.push_back(phi);
    }

    if (step < burn && (step + 1) % cfg.adapt_window == 0) {
      const double avg = static_cast<double>(window_accepts) /
                         static_cast<double>(cfg.adapt_window);
      AdaptEvent event;
      event.step = step + 1;
      event.window_acceptance = avg;
      event.beta_before = beta;
      if (avg > cfg.target_high) {
        beta *= 0.5;  // accepting too often: take bigger steps
      } else if (avg < cfg.target_low) {
        beta += 0.5 * (1.0 - beta);  // rejecting too often: smaller steps
      }
      event.beta_after = beta;
      result.adaptation.push_back(event);
      if (beta <= 1e-4 || beta >= 1.0 - 1e-4) {
        throw NumericError(
            "adaptation error: proposal parameter driven to " +
            std::to_string(beta) + " at step " + std::to_string(step + 1));
      }
      window_accepts = 0;
    }
  }

  const std::size_t post_steps = cfg.n_samples - burn;
  result.acceptance_rate =
      post_steps > 0
          ? static_cast<double>(post_accepts) / static_cast<double>(post_steps)
          : 0.0;
  result.beta_final = beta;
  return result;
}

std::vector<double> acf(const std::vector<double>& series,
                        std::size_t max_lag) {
  if (max_lag < 1) throw DomainError("acf: max_lag must be at least 1");
  const std::size_t n = series.size();
  if (n <= max_lag) {
    throw DomainError("acf: series must be longer than max_lag");
  }
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw NumericError("acf: series variance is degenerate");
  }
  std::vector<double> rho(max_lag + 1);
  rho[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double cov = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) {
      cov += (series[t] - mean) * (series[t + k] - mean);
    }
    cov /= static_cast<double>(n);  // biased estimator: stable tail
    rho[k] = cov / var;
  }
  return rho;
}

double ess(const std::vector<double>& series, std::size_t max_lag) {
  const std::vector<double> rho = acf(series, max_lag);
  // Initial-positive-sequence rule: accumulate Gamma_j = rho(2j) + rho(2j+1)
  // while positive; the true Gamma sequence of a reversible chain is
  // positive and decreasing, so the first nonpositive estimate marks noise.
  double gamma_sum = 0.0;
  for (std::size_t j = 0; 2 * j + 1 < rho.size(); ++j) {
    const double gamma = rho[2 * j] + rho[2 * j + 1];
    if (gamma <= 0.0) break;
    gamma_sum += gamma;
  }
  const double tau = std::max(1.0, 2.0 * gamma_sum - 1.0);
  return static_cast<double>(series.size()) / tau;
}

}  // namespace bip
