// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bip/bayes.hpp"
#include "bip/benchmarks.hpp"
#include "bip/darcy.hpp"
#include "bip/mcmc.hpp"
#include "bip/point_cloud.hpp"
#include "bip/rng.hpp"
#include "bip/transport_map.hpp"

namespace bip {

// ---------------------------------------------------------------------------
// Sweep study: train approximate generators across a control-variable grid
// and score each cell against the exact-sampler reference, both as a prior
// (W2) and through the induced posterior (W1 with the stability bound).
// ---------------------------------------------------------------------------

enum class SweepVariable {
  sample_size,  // training-set size per cell
  width,        // hidden-layer width of every MLP stage
  epochs,       // batch presentations per stage
};

SweepVariable parse_sweep_variable(const std::string& name);
std::string sweep_variable_name(SweepVariable var);

struct SweepSpec {
  SweepVariable variable = SweepVariable::sample_size;
  std::vector<std::size_t> grid;  // values of the control variable, increasing
  BenchmarkDist dist = BenchmarkDist::swissroll;
  std::size_t repeats = 5;  // independently seeded cells per grid value

  // Training setup applied to every cell; the swept field is overwritten per
  // cell and the per-cell seed is derived from `seed0`, never taken from here.
  TrainConfig train;

  // Sample budget that stays fixed while `width` or `epochs` is swept.
  std::size_t fixed_sample_size = 2048;

  LikelihoodSpec likelihood;   // shared inverse problem for the posterior leg
  std::size_t n_ref = 32768;   // reference cloud size (exact sampler)
  std::size_t eval_points = 1024;  // pushforward cloud size scored per cell
  std::size_t posterior_points = 1024;  // resample size for posterior W1
  std::uint64_t seed0 = 0;
};

void validate_sweep_spec(const SweepSpec& spec);

struct SweepRow {
  std::size_t sweep_value = 0;
  std::size_t repeat = 0;
  std::uint64_t cell_seed = 0;
  StabilityReport report;      // valid only when `error` is empty
  double noise_floor = 0.0;    // posterior resampling noise at this budget
  bool bound_holds = false;    // posterior_w1 <= cstab * prior_w2 + floor
  std::string error;           // empty on success; failed cells carry NaNs
};

struct SweepSummaryRow {
  std::size_t sweep_value = 0;
  std::size_t n_ok = 0;        // cells that completed without error
  double mean_prior_w2 = 0.0;
  double se_prior_w2 = 0.0;    // standard error over OK repeats
  double mean_posterior_w1 = 0.0;
  double se_posterior_w1 = 0.0;
  double bound_fraction = 0.0;  // share of OK cells whose bound held
};

struct SweepResult {
  std::vector<SweepRow> rows;             // grid-major, repeat-minor order
  std::vector<SweepSummaryRow> summary;   // one row per grid value
};

// Runs the full grid sequentially.  Cell (value index v, repeat r) draws its
// seed as derive_seed(seed0, v * repeats + r), so results are a pure function
// of the spec.  A cell that throws is recorded in its row's `error` field and
// the sweep continues; only a reference-stage failure aborts.
SweepResult run_sweep(const SweepSpec& spec);

// Deterministic CSV writers (LF newlines, round-trip doubles, no timestamps).
void write_sweep_csv(const std::filesystem::path& path, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows);
void write_sweep_summary_csv(const std::filesystem::path& path,
                             const std::vector<SweepSummaryRow>& summary);

// ---------------------------------------------------------------------------
// Empirical convergence rate of the plain Monte Carlo estimator: W2 between
// an N-point cloud and a much larger reference from the same distribution,
// regressed on N in log-log coordinates.
// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;  // 1.0 when total variation is zero
};

// Ordinary least squares of y on x; throws DomainError on fewer than two
// points or mismatched lengths.
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y);

struct RateRow {
  std::size_t n = 0;
  std::size_t repeat = 0;
  std::uint64_t cell_seed = 0;
  double w2 = 0.0;
};

struct RateResult {
  std::vector<RateRow> rows;
  std::vector<std::size_t> grid;
  std::vector<double> mean_w2;  // one mean per grid value, grid order
  std::vector<double> se_w2;    // standard error over repeats (0 for one)
  SlopeFit fit;                 // log(mean W2) on log(N)
};

// Samples one shared n_ref reference cloud, then for every grid value N and
// repeat computes the exact W2 to a fresh N-point cloud.  Requires
// n_ref >= 2 * max(grid).
RateResult run_empirical_rate(BenchmarkDist dist,
                              const std::vector<std::size_t>& grid,
                              std::size_t repeats, std::size_t n_ref,
                              std::uint64_t seed);

void write_rate_csv(const std::filesystem::path& path, BenchmarkDist dist,
                    const std::vector<RateRow>& rows);
// Per-grid-value means with standard errors (columns n, mean_w2, se_w2).
void write_rate_summary_csv(const std::filesystem::path& path,
                            const RateResult& result);
void write_rate_fit_csv(const std::filesystem::path& path, BenchmarkDist dist,
                        const RateResult& result);

// ---------------------------------------------------------------------------
// Log-permeability blob fields: the synthetic dataset behind the PDE study.
// ---------------------------------------------------------------------------

// One m x m log-permeability field: one to three Gaussian bumps with random
// centers, widths, and heights on a zero background.
GridField sample_blob_field(std::size_t m, Rng& rng);

// `count` blob fields flattened row-major into a uniform cloud of dim m*m.
PointCloud blob_dataset(std::size_t count, std::size_t m, std::uint64_t seed);

struct DarcyPriorConfig {
  std::size_t grid_dim = 16;      // fields are grid_dim x grid_dim
  std::size_t latent_dim = 16;
  std::size_t dataset_size = 2048;
  TrainConfig train;              // seed here is ignored; see `seed`
  std::uint64_t seed = 0;
};

struct DarcyPriorResult {
  ResidualMapStack map;
  double eval_initial = 0.0;
  double eval_final = 0.0;
  std::vector<int> reverted_stages;
};

// Trains a latent-Gaussian generator of blob fields and saves it to `path`
// (same format as save_map), returning the held-out divergence before/after.
DarcyPriorResult train_darcy_prior(const DarcyPriorConfig& cfg,
                                   const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// End-to-end PDE inversion: generator prior + pressure observations + pCN.
// ---------------------------------------------------------------------------

struct DarcyRunConfig {
  double noise_ratio = 0.1;     // sigma as a fraction of the clean signal sd
  std::size_t n_mcmc = 200000;  // total pCN steps (burn-in included)
  std::filesystem::path generator_path;  // trained prior (load_map format)
  std::filesystem::path out_dir;
  std::size_t observation_count = 300;
  std::size_t thin = 10;
  double beta0 = 0.5;
  double burn_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct DarcyRunResult {
  double sigma = 0.0;           // absolute noise level actually used
  double acceptance_rate = 0.0; // post burn-in
  double beta_final = 0.0;
  GridField truth;
  GridField posterior_mean;
  GridField posterior_std;      // pointwise standard deviation
  ChainResult chain;
};

// Samples a ground-truth field, generates noisy pressure observations at
// `noise_ratio` times the clean signal sd, runs an adaptive pCN chain through
// the generator, and writes fields (CSV + PGM), ten evenly spaced posterior
// samples, chain diagnostics (ACF / ESS), and a manifest into `out_dir`.
DarcyRunResult run_darcy(const DarcyRunConfig& cfg);

// ---------------------------------------------------------------------------
// Plotting and manifests.
// ---------------------------------------------------------------------------

// Renders the named columns of a CSV as a self-contained log-log SVG line
// chart.  For a column `y`, an optional column named with `mean_` replaced by
// `se_` (or `y` prefixed by `se_`) supplies one-standard-error bars.  Expects
// one row per x value; throws ConfigError on a missing column, an empty
// table, or a nonpositive value on either axis.
void emit_plot(const std::filesystem::path& csv_path, const std::string& x_col,
               const std::vector<std::string>& y_cols,
               const std::filesystem::path& out_svg);

// FNV-1a (64-bit) hash of a file's bytes, as 16 lowercase hex digits.
std::string file_hash_hex(const std::filesystem::path& path);

}  // namespace bip
