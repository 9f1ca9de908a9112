// SPDX-License-Identifier: Apache-2.0
//
// 2-d benchmark studies: generator-quality sweeps against the exact sampler
// (with the induced-posterior stability check) and empirical Monte Carlo
// convergence rates.  Every run writes CSVs, an SVG plot, and a manifest
// into --out; reruns with identical flags are byte-identical.
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "tool_common.hpp"

#include "bip/experiments.hpp"

namespace {

using namespace bip;
namespace fs = std::filesystem;

// The fixed inverse problem of the sweep study: observe the first coordinate
// at y = (0,0) with sigma = 0.5.
LikelihoodSpec sweep_likelihood() {
  Eigen::MatrixXd F(2, 2);
  F << 1.0, 0.0, 0.0, 0.0;
  return make_linear_likelihood(F, {0.0, 0.0}, 0.5);
}

// Training setup shared by every sweep cell (the swept field is overwritten
// per cell).  Sized so one cell trains in seconds, not minutes.
TrainConfig sweep_train_base() {
  TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.batch_size = 128;
  cfg.lr = 0.05;
  cfg.stage_count = 3;
  cfg.hidden = {32, 32};
  cfg.generator_update_period = 20;
  cfg.eps_start = 1.0;
  cfg.eps_end = 0.05;
  cfg.sinkhorn_max_iters = 500;
  cfg.sinkhorn_tol = 1e-3;
  cfg.eval_size = 512;
  return cfg;
}

nlohmann::ordered_json train_block(const TrainConfig& cfg) {
  return {
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"lr", cfg.lr},
      {"momentum", cfg.momentum},
      {"stage_count", cfg.stage_count},
      {"hidden", cfg.hidden},
      {"leaky_slope", cfg.leaky_slope},
      {"generator_update_period", cfg.generator_update_period},
      {"eps_start", cfg.eps_start},
      {"eps_end", cfg.eps_end},
      {"sinkhorn_max_iters", cfg.sinkhorn_max_iters},
      {"sinkhorn_tol", cfg.sinkhorn_tol},
      {"eval_size", cfg.eval_size},
  };
}

int run_sweep_command(const std::string& var, const std::string& dist,
                      const std::string& grid, std::size_t repeats,
                      std::size_t samples, std::size_t nref,
                      std::uint64_t seed, const fs::path& out) {
  SweepSpec spec;
  spec.variable = parse_sweep_variable(var);
  spec.dist = parse_dist(dist);
  spec.grid = tools::parse_grid(grid);
  spec.repeats = repeats;
  spec.train = sweep_train_base();
  spec.fixed_sample_size = samples;
  spec.likelihood = sweep_likelihood();
  spec.n_ref = nref;
  spec.seed0 = seed;

  const SweepResult result = run_sweep(spec);

  fs::create_directories(out);
  write_sweep_csv(out / "sweep.csv", spec, result.rows);
  write_sweep_summary_csv(out / "sweep_summary.csv", result.summary);
  emit_plot(out / "sweep_summary.csv", "value",
            {"mean_prior_w2", "mean_posterior_w1"}, out / "sweep.svg");

  nlohmann::ordered_json manifest;
  manifest["tool"] = "bench2d";
  manifest["command"] = "sweep";
  manifest["config"] = {
      {"var", sweep_variable_name(spec.variable)},
      {"dist", dist_name(spec.dist)},
      {"grid", spec.grid},
      {"repeats", spec.repeats},
      {"samples", spec.fixed_sample_size},
      {"nref", spec.n_ref},
      {"eval_points", spec.eval_points},
      {"posterior_points", spec.posterior_points},
      {"seed", spec.seed0},
      {"train", train_block(spec.train)},
      {"likelihood",
       {{"forward", "project-first-coordinate"},
        {"data_y", spec.likelihood.data_y},
        {"sigma", spec.likelihood.sigma}}},
  };
  tools::write_manifest(out, std::move(manifest),
                        {"sweep.csv", "sweep_summary.csv", "sweep.svg"});

  std::size_t failed = 0;
  for (const SweepRow& row : result.rows) {
    if (!row.error.empty()) {
      ++failed;
      std::fprintf(stderr, "cell value=%zu repeat=%zu failed: %s\n",
                   row.sweep_value, row.repeat, row.error.c_str());
    }
  }
  std::printf("sweep: %zu cells, %zu failed, results in %s\n",
              result.rows.size(), failed, out.string().c_str());
  return failed == 0 ? 0 : 1;
}

int run_rate_command(const std::string& dist, const std::string& grid,
                     std::size_t repeats, std::size_t nref,
                     std::uint64_t seed, const fs::path& out) {
  const BenchmarkDist d = parse_dist(dist);
  const std::vector<std::size_t> g = tools::parse_grid(grid);
  const RateResult result = run_empirical_rate(d, g, repeats, nref, seed);

  fs::create_directories(out);
  write_rate_csv(out / "rate.csv", d, result.rows);
  write_rate_summary_csv(out / "rate_summary.csv", result);
  write_rate_fit_csv(out / "rate_fit.csv", d, result);
  emit_plot(out / "rate_summary.csv", "n", {"mean_w2"}, out / "rate.svg");

  nlohmann::ordered_json manifest;
  manifest["tool"] = "bench2d";
  manifest["command"] = "rate";
  manifest["config"] = {
      {"dist", dist_name(d)}, {"grid", g},   {"repeats", repeats},
      {"nref", nref},         {"seed", seed},
  };
  manifest["results"] = {
      {"slope", result.fit.slope},
      {"intercept", result.fit.intercept},
      {"r_squared", result.fit.r_squared},
  };
  tools::write_manifest(
      out, std::move(manifest),
      {"rate.csv", "rate_summary.csv", "rate_fit.csv", "rate.svg"});

  std::printf("rate: dist=%s slope=%.4f r2=%.4f, results in %s\n",
              dist_name(d).c_str(), result.fit.slope, result.fit.r_squared,
              out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2-d benchmark studies: generator sweeps and W2 rates"};
  app.require_subcommand(1);

  std::string var, dist, grid, out;
  std::size_t repeats = 5, samples = 2048, nref = 32768;
  std::uint64_t seed = 1;

  CLI::App* sweep = app.add_subcommand(
      "sweep", "train generators across a grid and score them");
  sweep->add_option("--var", var, "control variable: sample-size|width|epochs")
      ->required();
  sweep->add_option("--dist", dist, "target distribution")->required();
  sweep->add_option("--grid", grid, "comma-separated grid values")->required();
  sweep->add_option("--repeats", repeats, "independently seeded runs per value")
      ->capture_default_str();
  sweep->add_option("--samples", samples,
                    "training-set size when it is not the swept variable")
      ->capture_default_str();
  sweep->add_option("--nref", nref, "reference cloud size")
      ->capture_default_str();
  sweep->add_option("--seed", seed, "base seed")->capture_default_str();
  sweep->add_option("--out", out, "output directory")->required();

  std::string rdist, rgrid, rout;
  std::size_t rrepeats = 1, rnref = 32768;
  std::uint64_t rseed = 1;
  CLI::App* rate = app.add_subcommand(
      "rate", "empirical W2 convergence rate of i.i.d. sampling");
  rate->add_option("--dist", rdist, "target distribution")->required();
  rate->add_option("--grid", rgrid, "comma-separated sample sizes")->required();
  rate->add_option("--repeats", rrepeats, "repeats per sample size")
      ->capture_default_str();
  rate->add_option("--nref", rnref, "reference cloud size")
      ->capture_default_str();
  rate->add_option("--seed", rseed, "base seed")->capture_default_str();
  rate->add_option("--out", rout, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      return run_sweep_command(var, dist, grid, repeats, samples, nref, seed,
                               out);
    }
    return run_rate_command(rdist, rgrid, rrepeats, rnref, rseed, rout);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
