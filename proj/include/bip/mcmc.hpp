// SPDX-License-Identifier: Apache-2.0
//
// Latent-space preconditioned Crank-Nicolson sampling with adaptive burn-in,
// plus chain mixing diagnostics (autocorrelation, effective sample size).
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bip/bayes.hpp"
#include "bip/transport_map.hpp"

namespace bip {

struct PcnConfig {
  // Initial proposal parameter of z' = beta z + sqrt(1 - beta^2) xi; values
  // near 1 take small steps, values near 0 nearly independent ones.
  double beta0 = 0.5;
  std::size_t n_samples = 0;   // total chain steps
  double burn_fraction = 0.2;  // in [0, 0.5]; adaptation happens only here
  std::size_t adapt_window = 100;
  double target_low = 0.2;   // acceptance band the burn-in steers toward
  double target_high = 0.4;
  std::size_t thin = 1;  // retain every thin-th post-burn-in state
  std::uint64_t seed = 0;
};

void validate_pcn_config(const PcnConfig& cfg);

// One burn-in adaptation decision: the window's average acceptance and the
// proposal parameter before/after the rule fired.
struct AdaptEvent {
  std::size_t step = 0;  // 1-based chain step the window ended on
  double window_acceptance = 0.0;
  double beta_before = 0.0;
  double beta_after = 0.0;
};

struct ChainResult {
  std::vector<std::vector<double>> latent_samples;  // post burn-in, thinned
  std::vector<std::vector<double>> pushed_samples;  // generator(latent)
  std::vector<double> phi_trace;                    // potential per retained state
  double acceptance_rate = 0.0;                     // post burn-in
  double beta_final = 0.0;
  std::vector<AdaptEvent> adaptation;
};

// Runs the chain: propose z' = beta z + sqrt(1 - beta^2) xi against the
// standard Gaussian reference, accept with min(1, exp(Phi(z) - Phi(z'))),
// where Phi is the data misfit of the generator pushforward.  During
// burn-in, every adapt_window steps: acceptance above the band halves beta
// (bigger steps), below the band moves beta halfway to 1 (smaller steps);
// after burn-in beta is frozen and every thin-th state is retained.
ChainResult pcn_run(const ResidualMapStack& generator,
                    const LikelihoodSpec& spec, const PcnConfig& cfg);

// Autocorrelation function: rho[0..max_lag], biased autocovariance estimate
// normalized by the variance.  Degenerate (constant) series throw.
std::vector<double> acf(const std::vector<double>& series, std::size_t max_lag);

// Effective sample size n / (1 + 2 sum rho(k)) with the initial-positive-
// sequence truncation: sums consecutive-lag pairs while their sum stays
// positive.  Always in (0, n].
double ess(const std::vector<double>& series, std::size_t max_lag);

}  // namespace bip
