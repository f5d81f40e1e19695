#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "dfdrnn/autodiff.hpp"
#include "dfdrnn/model.hpp"

namespace dfdrnn {

struct TrainConfig {
  double lr = 0.008;
  std::size_t epochs = 800;
  std::uint64_t seed = 42;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clamp_eps = 1e-12;

  void validate() const;
};

using Pair = std::pair<std::size_t, std::size_t>;

struct LabelSets {
  std::vector<Pair> positives;
  std::vector<Pair> negatives;
  double lambda = 1.0;  // |negatives| / |positives| unless overridden

  // Disjoint sets; lambda set to the exact ratio. Throws DataError when
  // positives is empty or the sets overlap.
  static LabelSets make(std::vector<Pair> positives, std::vector<Pair> negatives);
};

// Every (i, j) not in `exclude`, labelled by assoc(i, j).
LabelSets labels_from_matrix(const Tensor& assoc, const PairSet& exclude = {});

// -(lambda * sum_{y+} log s + sum_{y-} log(1 - s)) / (n + m), with s clamped to
// [clamp_eps, 1 - clamp_eps] inside the logs.
ad::Var weighted_bce(ad::Var scores, const LabelSets& labels, std::size_t nodes,
                     double clamp_eps = 1e-12);

// Uniform on [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
Tensor xavier_init(std::size_t rows, std::size_t cols, Rng& rng);

struct AdamState {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::size_t step = 0;

  static AdamState for_params(std::span<const Tensor* const> params);
};

// One bias-corrected Adam update of every parameter.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, const TrainConfig& cfg);

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_trace;  // loss of each epoch before its update
};

// Full-graph training: per epoch resample edge dropout, run the training
// forward pass, take the loss and its gradient, then one Adam step. Fully
// determined by cfg.seed. Throws Error if the loss becomes non-finite.
TrainResult train(const ModelInputs& inputs, const LabelSets& labels, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

// Finite-difference check of the full forward pass and loss. Dropout stays
// active; its masks are redrawn from `noise_seed` on every evaluation so the
// loss is a deterministic function of the parameters.
ad::GradCheckResult model_gradcheck(const ModelInputs& inputs, const LabelSets& labels,
                                    const ModelConfig& model_cfg, std::uint64_t seed,
                                    double eps = 1e-5);

void write_loss_csv(const std::filesystem::path& path, std::span<const double> trace);

}  // namespace dfdrnn
