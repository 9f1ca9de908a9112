// SPDX-License-Identifier: Apache-2.0
//
// The end-to-end PDE study: a generator prior over log-permeability blob
// fields, noisy pressure observations, and latent-space pCN posterior
// sampling with on-disk artifacts.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "bip/csv.hpp"
#include "bip/errors.hpp"
#include "bip/experiments.hpp"

#include "json.hpp"

namespace bip {

namespace {

// Stream tags (ASCII) for the independent RNG lanes of the pipeline.
constexpr std::uint64_t kStreamBlobData = 0x626c6f6264617461;  // "blobdata"
constexpr std::uint64_t kStreamLatent = 0x6c6174636c6f7564;    // "latcloud"
constexpr std::uint64_t kStreamTrain = 0x747261696e636667;     // "traincfg"
constexpr std::uint64_t kStreamTruth = 0x7472757468666c64;     // "truthfld"
constexpr std::uint64_t kStreamObsPts = 0x6f6273706f696e74;    // "obspoint"
constexpr std::uint64_t kStreamNoise = 0x646174616e6f697a;     // "datanoiz"
constexpr std::uint64_t kStreamChain = 0x636861696e736564;     // "chainsed"

// Standard normal cloud in arbitrary dimension (the latent reference).
PointCloud gaussian_cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> pts(n * dim);
  for (double& v : pts) v = rng.normal();
  return make_uniform_cloud(static_cast<int>(dim), std::move(pts));
}

}  // namespace

GridField sample_blob_field(std::size_t m, Rng& rng) {
  GridField field = make_grid(m, 0.0);
  const double h = 1.0 / static_cast<double>(m);
  const int bumps = 1 + rng.uniform_int(3);
  for (int b = 0; b < bumps; ++b) {
    const double cx = rng.uniform(0.2, 0.8);
    const double cy = rng.uniform(0.2, 0.8);
    const double width = rng.uniform(0.06, 0.18);
    const double height = rng.uniform(0.5, 1.5);
    const double inv = 1.0 / (2.0 * width * width);
    for (std::size_t iy = 0; iy < m; ++iy) {
      const double y = (static_cast<double>(iy) + 0.5) * h;
      for (std::size_t ix = 0; ix < m; ++ix) {
        const double x = (static_cast<double>(ix) + 0.5) * h;
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        field.at(ix, iy) += height * std::exp(-d2 * inv);
      }
    }
  }
  return field;
}

PointCloud blob_dataset(std::size_t count, std::size_t m, std::uint64_t seed) {
  if (count < 1) throw ConfigError("blob_dataset: count must be >= 1");
  if (m < 3) throw ConfigError("blob_dataset: grid dimension must be >= 3");
  Rng rng = Rng::derived(seed, kStreamBlobData);
  std::vector<double> pts;
  pts.reserve(count * m * m);
  for (std::size_t i = 0; i < count; ++i) {
    const GridField field = sample_blob_field(m, rng);
    pts.insert(pts.end(), field.values.begin(), field.values.end());
  }
  return make_uniform_cloud(static_cast<int>(m * m), std::move(pts));
}

DarcyPriorResult train_darcy_prior(const DarcyPriorConfig& cfg,
                                   const std::filesystem::path& path) {
  if (cfg.grid_dim < 3) {
    throw ConfigError("train_darcy_prior: grid_dim must be >= 3");
  }
  if (cfg.latent_dim < 1) {
    throw ConfigError("train_darcy_prior: latent_dim must be >= 1");
  }
  if (cfg.dataset_size < 2) {
    throw ConfigError("train_darcy_prior: dataset_size must be >= 2");
  }
  const PointCloud target =
      blob_dataset(cfg.dataset_size, cfg.grid_dim, cfg.seed);
  const PointCloud latent =
      gaussian_cloud(cfg.dataset_size, cfg.latent_dim,
                     Rng::derive_seed(cfg.seed, kStreamLatent));
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = Rng::derive_seed(cfg.seed, kStreamTrain);

  const TrainResult trained = train(latent, target, train_cfg);
  save_map(path, trained.map);

  DarcyPriorResult result;
  result.map = trained.map;
  result.eval_initial = trained.eval_initial;
  result.eval_final = trained.eval_final;
  result.reverted_stages = trained.reverted_stages;
  return result;
}

namespace {

// Pointwise mean and standard deviation of the pushed chain states.
void chain_field_stats(const std::vector<std::vector<double>>& samples,
                       std::size_t m, GridField* mean, GridField* sd) {
  const std::size_t cells = m * m;
  const double n = static_cast<double>(samples.size());
  *mean = make_grid(m, 0.0);
  *sd = make_grid(m, 0.0);
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < cells; ++i) mean->values[i] += s[i];
  }
  for (std::size_t i = 0; i < cells; ++i) mean->values[i] /= n;
  if (samples.size() > 1) {
    for (const auto& s : samples) {
      for (std::size_t i = 0; i < cells; ++i) {
        const double d = s[i] - mean->values[i];
        sd->values[i] += d * d;
      }
    }
    for (std::size_t i = 0; i < cells; ++i) {
      sd->values[i] = std::sqrt(sd->values[i] / (n - 1.0));
    }
  }
}

std::string two_digits(std::size_t k) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%02zu", k);
  return buf;
}

}  // namespace

DarcyRunResult run_darcy(const DarcyRunConfig& cfg) {
  if (!(cfg.noise_ratio > 0.0)) {
    throw ConfigError("darcy run: noise ratio must be positive");
  }
  if (cfg.n_mcmc < 10) throw ConfigError("darcy run: too few chain steps");
  if (cfg.observation_count < 1) {
    throw ConfigError("darcy run: need at least one observation");
  }
  if (cfg.out_dir.empty()) {
    throw ConfigError("darcy run: output directory not set");
  }

  const ResidualMapStack generator = load_map(cfg.generator_path);
  const std::size_t cells = static_cast<std::size_t>(generator.output_dim);
  const std::size_t m =
      static_cast<std::size_t>(std::llround(std::sqrt(double(cells))));
  if (m < 3 || m * m != cells) {
    throw ConfigError("darcy run: generator output dim " +
                      std::to_string(cells) + " is not a square grid");
  }
  const int mi = static_cast<int>(m);

  // Ground truth, observation design, and data.
  Rng truth_rng = Rng::derived(cfg.seed, kStreamTruth);
  GridField truth = sample_blob_field(m, truth_rng);
  const GridField source = make_grid(m, 1.0);
  const std::vector<std::array<double, 2>> points = observation_points(
      cfg.observation_count, Rng::derive_seed(cfg.seed, kStreamObsPts));

  const GridField pressure = solve_darcy(truth, source);
  const ObservationSet clean = observe_pressure(pressure, points, 0.0, 0);
  double signal_mean = 0.0;
  for (double v : clean.values) signal_mean += v;
  signal_mean /= static_cast<double>(clean.values.size());
  double signal_var = 0.0;
  for (double v : clean.values) {
    signal_var += (v - signal_mean) * (v - signal_mean);
  }
  signal_var /= static_cast<double>(clean.values.size());
  const double signal_sd = std::sqrt(signal_var);
  if (!(signal_sd > 0.0)) {
    throw NumericError("darcy run: clean observations are constant");
  }
  const double sigma = cfg.noise_ratio * signal_sd;
  const ObservationSet obs = observe_pressure(
      pressure, points, sigma, Rng::derive_seed(cfg.seed, kStreamNoise));

  LikelihoodSpec like;
  like.data_y = obs.values;
  like.sigma = sigma;
  like.forward = [mi, source, points](std::span<const double> u) {
    return darcy_forward(std::vector<double>(u.begin(), u.end()), mi, source,
                         points);
  };

  PcnConfig chain_cfg;
  chain_cfg.beta0 = cfg.beta0;
  chain_cfg.n_samples = cfg.n_mcmc;
  chain_cfg.burn_fraction = cfg.burn_fraction;
  chain_cfg.thin = cfg.thin;
  chain_cfg.seed = Rng::derive_seed(cfg.seed, kStreamChain);

  DarcyRunResult result;
  result.sigma = sigma;
  result.truth = truth;
  result.chain = pcn_run(generator, like, chain_cfg);
  result.acceptance_rate = result.chain.acceptance_rate;
  result.beta_final = result.chain.beta_final;
  chain_field_stats(result.chain.pushed_samples, m, &result.posterior_mean,
                    &result.posterior_std);

  // ----- artifacts -----
  const std::filesystem::path& dir = cfg.out_dir;
  std::filesystem::create_directories(dir);
  std::vector<std::string> artifact_names;
  const auto grid_artifact = [&](const std::string& stem,
                                 const GridField& field) {
    write_grid_csv(dir / (stem + ".csv"), field);
    write_grid_pgm(dir / (stem + ".pgm"), field);
    artifact_names.push_back(stem + ".csv");
    artifact_names.push_back(stem + ".pgm");
  };
  grid_artifact("truth", truth);
  grid_artifact("posterior_mean", result.posterior_mean);
  grid_artifact("posterior_std", result.posterior_std);
  write_observations_csv(dir / "observations.csv", obs);
  artifact_names.push_back("observations.csv");

  // Ten evenly spaced retained states (all of them if fewer than ten).
  const std::size_t retained = result.chain.pushed_samples.size();
  const std::size_t n_show = std::min<std::size_t>(10, retained);
  for (std::size_t k = 0; k < n_show; ++k) {
    const std::size_t idx =
        n_show == 1 ? 0
                    : static_cast<std::size_t>(std::llround(
                          double(k) * double(retained - 1) / double(n_show - 1)));
    GridField f = make_grid(m, 0.0);
    f.values = result.chain.pushed_samples[idx];
    grid_artifact("sample_" + two_digits(k), f);
  }

  // Chain diagnostics on the retained states: the potential trace plus the
  // first latent coordinates.
  const std::size_t latent_dim = static_cast<std::size_t>(generator.latent_dim);
  const std::size_t n_coords = std::min<std::size_t>(8, latent_dim);
  std::vector<std::pair<std::string, std::vector<double>>> series;
  series.emplace_back("phi", result.chain.phi_trace);
  for (std::size_t c = 0; c < n_coords; ++c) {
    std::vector<double> coord(retained);
    for (std::size_t i = 0; i < retained; ++i) {
      coord[i] = result.chain.latent_samples[i][c];
    }
    series.emplace_back("z" + std::to_string(c), std::move(coord));
  }

  const std::size_t max_lag =
      retained >= 8 ? std::min<std::size_t>(200, retained / 2) : 0;
  if (max_lag >= 1) {
    std::string acf_csv = "lag";
    std::vector<std::vector<double>> rhos;
    for (const auto& [name, values] : series) {
      acf_csv += "," + name;
      rhos.push_back(acf(values, max_lag));
    }
    acf_csv += '\n';
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
      acf_csv += std::to_string(lag);
      for (const auto& rho : rhos) {
        acf_csv += ',';
        acf_csv += format_double(rho[lag]);
      }
      acf_csv += '\n';
    }
    write_text_file(dir / "acf.csv", acf_csv);
    artifact_names.push_back("acf.csv");

    std::string ess_csv = "series,n,ess\n";
    for (const auto& [name, values] : series) {
      ess_csv += name;
      ess_csv += ',';
      ess_csv += std::to_string(values.size());
      ess_csv += ',';
      ess_csv += format_double(ess(values, max_lag));
      ess_csv += '\n';
    }
    write_text_file(dir / "ess.csv", ess_csv);
    artifact_names.push_back("ess.csv");
  }

  // Manifest last, so it can hash every other artifact.
  nlohmann::ordered_json manifest;
  manifest["tool"] = "darcy run";
  manifest["config"] = {
      {"noise_ratio", cfg.noise_ratio},
      {"n_mcmc", cfg.n_mcmc},
      {"observation_count", cfg.observation_count},
      {"thin", cfg.thin},
      {"beta0", cfg.beta0},
      {"burn_fraction", cfg.burn_fraction},
      {"seed", cfg.seed},
      {"generator", cfg.generator_path.filename().string()},
      {"generator_hash", file_hash_hex(cfg.generator_path)},
      {"grid_dim", m},
      {"latent_dim", latent_dim},
  };
  manifest["results"] = {
      {"sigma", sigma},
      {"acceptance_rate", result.acceptance_rate},
      {"beta_final", result.beta_final},
      {"retained_samples", retained},
  };
  nlohmann::ordered_json adapt = nlohmann::ordered_json::array();
  for (const AdaptEvent& e : result.chain.adaptation) {
    adapt.push_back({{"step", e.step},
                     {"window_acceptance", e.window_acceptance},
                     {"beta_before", e.beta_before},
                     {"beta_after", e.beta_after}});
  }
  manifest["results"]["adaptation"] = std::move(adapt);
  nlohmann::ordered_json artifacts;
  std::sort(artifact_names.begin(), artifact_names.end());
  for (const std::string& name : artifact_names) {
    artifacts[name] = file_hash_hex(dir / name);
  }
  manifest["artifacts"] = std::move(artifacts);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

  return result;
}

}  // namespace bip
