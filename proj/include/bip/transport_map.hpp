// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "bip/point_cloud.hpp"

namespace bip {

// One residual block x -> x + G(x), where G is a small MLP with LeakyReLU
// hidden activations and a linear output layer.  With no hidden widths the
// block is purely linear (x -> x + Wx + b), so affine maps are realizable.
struct MlpBlock {
  std::vector<Eigen::MatrixXd> W;  // W[l] has shape (width_{l+1} x width_l)
  std::vector<Eigen::VectorXd> b;
  double leaky_slope = 0.2;

  // G(X) for a batch X (dim x batch, one sample per column).
  Eigen::MatrixXd residual(const Eigen::MatrixXd& X) const;
};

// Composition of residual blocks acting on R^output_dim, with an optional
// leading linear lift when the latent dimension differs from the output
// dimension.  With every parameter at zero (and no lift) the map is the
// identity.
struct ResidualMapStack {
  int latent_dim = 0;
  int output_dim = 0;
  std::optional<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> lift;
  std::vector<MlpBlock> stages;

  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& Z) const;
  std::vector<double> forward(std::span<const double> z) const;
  std::size_t parameter_count() const;
};

// Freshly initialized stack: hidden layers use scaled-normal weights, the
// output layer of every block starts at zero, so the initial map is the
// lift (or the identity when latent_dim == output_dim).
ResidualMapStack make_stack(int latent_dim, int output_dim, int stage_count,
                            const std::vector<int>& hidden, double leaky_slope,
                            std::uint64_t seed);

// Applies the map to every point of `reference`; weights carry over.
PointCloud pushforward_cloud(const ResidualMapStack& map,
                             const PointCloud& reference);

// L2(reference) distance between two maps:
//   ( sum_i w_i |A(z_i) - B(z_i)|^2 )^(1/2).
double map_l2_distance(const ResidualMapStack& a, const ResidualMapStack& b,
                       const PointCloud& reference);

// Versioned flat binary round trip (little-endian; header with magic,
// version, dimensions and stage widths, then all parameters as 64-bit
// floats in declaration order).
void save_map(const std::filesystem::path& path, const ResidualMapStack& map);
ResidualMapStack load_map(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

// Update rule for the map parameters.  sgd covers both plain SGD
// (momentum 0) and heavy-ball; adam uses the standard constants
// (0.9, 0.999, 1e-8) with bias correction, scaled by TrainConfig::lr.
enum class Optimizer { sgd, adam };

Optimizer parse_optimizer(const std::string& name);
std::string optimizer_name(Optimizer opt);

struct TrainConfig {
  // Batch presentations per stage.  The map parameters update once every
  // `generator_update_period` presentations (protocol parity with the
  // adversarial scheme this loss replaces), so a stage performs
  // ceil(epochs / generator_update_period) gradient steps.
  int epochs = 10000;
  int batch_size = 512;   // >= 2
  double lr = 0.01;       // step size
  Optimizer optimizer = Optimizer::sgd;
  double momentum = 0.0;  // heavy-ball coefficient in [0, 1); 0 = plain SGD
  int stage_count = 5;
  std::vector<int> hidden = {128, 128};
  double leaky_slope = 0.2;
  int generator_update_period = 20;

  // Geometric schedule for the divergence regularization, from eps_start at
  // the first step of a stage down to eps_end at its last.
  double eps_start = 1.0;
  double eps_end = 0.05;
  int sinkhorn_max_iters = 500;
  double sinkhorn_tol = 1e-3;

  // Optional joint pass over all stages after the sequential phase.
  bool joint_finetune = false;
  int finetune_epochs = 0;

  // Fixed holdout size used to score stages before/after training.
  int eval_size = 1024;

  std::uint64_t seed = 0;
};

void validate_train_config(const TrainConfig& cfg);

struct TrainResult {
  ResidualMapStack map;
  std::vector<double> loss_history;  // one divergence value per update
  double eval_initial = 0.0;         // holdout divergence before training
  double eval_final = 0.0;           // holdout divergence after training
  std::vector<int> reverted_stages;  // stages that failed to improve and
                                     // were rolled back to initialization
};

// Greedy sequential training: stage k is fit with stages 0..k-1 frozen,
// minimizing the debiased entropic divergence between the pushforward of
// `reference` batches and `target` batches.  A stage whose holdout score
// worsens is rolled back, so the final holdout score never exceeds the
// initial one.
TrainResult train(const PointCloud& reference, const PointCloud& target,
                  const TrainConfig& cfg);

}  // namespace bip
