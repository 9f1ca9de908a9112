// SPDX-License-Identifier: Apache-2.0
//
// The PDE inversion pipeline: train a generator prior over log-permeability
// blob fields, then sample the pressure-observation posterior with latent
// pCN and write field/chain artifacts.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "tool_common.hpp"

#include "bip/experiments.hpp"

namespace {

using namespace bip;
namespace fs = std::filesystem;

// Production-scale defaults for the generator prior; --size / --epochs trim
// them down for quick runs.
TrainConfig prior_train_base() {
  TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.batch_size = 128;
  cfg.lr = 0.02;
  cfg.stage_count = 3;
  cfg.hidden = {64, 64};
  cfg.generator_update_period = 20;
  cfg.eps_start = 1.0;
  cfg.eps_end = 0.05;
  cfg.sinkhorn_max_iters = 500;
  cfg.sinkhorn_tol = 1e-3;
  cfg.eval_size = 512;
  return cfg;
}

int run_train_prior(const fs::path& out, std::size_t size, int epochs,
                    std::uint64_t seed) {
  DarcyPriorConfig cfg;
  cfg.grid_dim = 16;
  cfg.latent_dim = 16;
  cfg.dataset_size = size;
  cfg.train = prior_train_base();
  if (epochs > 0) cfg.train.epochs = epochs;
  cfg.seed = seed;

  const DarcyPriorResult result = train_darcy_prior(cfg, out);

  // The manifest rides next to the map file so several priors can share a
  // directory.
  nlohmann::ordered_json manifest;
  manifest["tool"] = "darcy";
  manifest["command"] = "train-prior";
  manifest["config"] = {
      {"grid_dim", cfg.grid_dim},     {"latent_dim", cfg.latent_dim},
      {"dataset_size", cfg.dataset_size},
      {"epochs", cfg.train.epochs},   {"batch_size", cfg.train.batch_size},
      {"lr", cfg.train.lr},           {"momentum", cfg.train.momentum},
      {"stage_count", cfg.train.stage_count},
      {"hidden", cfg.train.hidden},   {"seed", cfg.seed},
  };
  manifest["results"] = {
      {"eval_initial", result.eval_initial},
      {"eval_final", result.eval_final},
      {"reverted_stages", result.reverted_stages},
  };
  manifest["versions"] = tools::version_block();
  manifest["artifacts"] = {{out.filename().string(), file_hash_hex(out)}};
  write_text_file(out.string() + ".manifest.json", manifest.dump(2) + "\n");

  std::printf("train-prior: holdout %.4f -> %.4f, map written to %s\n",
              result.eval_initial, result.eval_final, out.string().c_str());
  return 0;
}

int run_posterior(double noise, std::size_t samples, const fs::path& prior,
                  const fs::path& out, std::size_t thin, std::uint64_t seed) {
  DarcyRunConfig cfg;
  cfg.noise_ratio = noise;
  cfg.n_mcmc = samples;
  cfg.generator_path = prior;
  cfg.out_dir = out;
  cfg.thin = thin;
  cfg.seed = seed;

  const DarcyRunResult result = run_darcy(cfg);
  std::printf(
      "run: sigma=%.5g acceptance=%.3f beta=%.4g retained=%zu, artifacts in "
      "%s\n",
      result.sigma, result.acceptance_rate, result.beta_final,
      result.chain.pushed_samples.size(), out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groundwater log-permeability inversion with a generator prior"};
  app.require_subcommand(1);

  std::string out_file;
  std::size_t size = 2048;
  int epochs = 0;
  std::uint64_t seed = 1;
  CLI::App* tp = app.add_subcommand(
      "train-prior", "fit the blob-field generator and save it");
  tp->add_option("--out", out_file, "output map file")->required();
  tp->add_option("--size", size, "training-set size")->capture_default_str();
  tp->add_option("--epochs", epochs, "override training epochs (0 = default)")
      ->capture_default_str();
  tp->add_option("--seed", seed, "base seed")->capture_default_str();

  double noise = 0.1;
  std::size_t samples = 200000, thin = 10;
  std::string prior, out_dir;
  std::uint64_t rseed = 1;
  CLI::App* run = app.add_subcommand(
      "run", "sample the posterior over fields given noisy pressure data");
  run->add_option("--noise", noise, "noise-to-signal ratio")
      ->capture_default_str();
  run->add_option("--samples", samples, "total pCN steps")
      ->capture_default_str();
  run->add_option("--prior", prior, "trained generator map file")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--thin", thin, "retain every thin-th state")
      ->capture_default_str();
  run->add_option("--seed", rseed, "base seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (tp->parsed()) return run_train_prior(out_file, size, epochs, seed);
    return run_posterior(noise, samples, prior, out_dir, thin, rseed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
