#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fcsin/autodiff.hpp"
#include "fcsin/config.hpp"
#include "fcsin/frames_io.hpp"
#include "fcsin/u_transformer.hpp"

namespace fcsin {

struct LossWeights {
  double lambda_l1 = 70.0;
  double lambda_lpips = 30.0;
};

/// Mean absolute pixel difference.
double loss_l1(const Raster& pred, const Raster& target);

/// Frozen seeded random-feature perceptual loss: three stride-2 conv stages
/// with channel-unit-normalized features; the loss is the mean over stages
/// of the mean squared feature difference.
struct PerceptualFeaturizer {
  std::vector<Tensor> weights;  // [3,3,ci,co] per stage
  explicit PerceptualFeaturizer(uint64_t seed);

  double loss(const Raster& pred, const Raster& target) const;
  /// In-graph variant; gradients flow through `pred` only.
  autodiff::NodePtr loss_node(autodiff::Graph& g, autodiff::NodePtr pred,
                              const Raster& target) const;
};

double loss_perceptual(const Raster& pred, const Raster& target, uint64_t featurizer_seed);

double total_loss(const Raster& pred, const Raster& target, const LossWeights& w,
                  const PerceptualFeaturizer& feat);

// ---------------------------------------------------------------------------
// AdaMax (infinity-norm Adam variant) with decoupled weight decay

struct OptimParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double lr = 2e-4;
  double weight_decay = 1e-4;
  double eps = 1e-8;
  bool decay_on_lr = false;  // alternative reading of the decay factor
};

struct OptimState {
  OptimParams hp;
  int64_t step = 0;
  int faults = 0;
  std::map<std::string, Tensor> m, u;

  void init_like(const ModelParams& params);
};

/// One update. Rejects the step (returns false, increments faults) if any
/// gradient is non-finite. lr_scale carries the lr-decay schedule.
bool adamax_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
                 OptimState& st, double lr_scale = 1.0);

// ---------------------------------------------------------------------------
// training loop

struct TrainOptions {
  int epochs = -1;             // -1: take train.epochs from the config
  std::string resume_path;     // continue from a checkpoint
  bool augment_override = true;
};

struct TrainResult {
  std::string final_checkpoint;
  std::vector<std::array<double, 4>> loss_rows;  // step, l1, lpips, total
  bool aborted_nan = false;
  int optimizer_faults = 0;
};

/// Seeded, reproducible training; writes loss.csv and checkpoints under
/// out_dir. All randomness is counter-based on (seed, epoch, index), so a
/// resumed run continues bitwise-identically.
TrainResult train(const Config& cfg, const DatasetIndex& data,
                  const std::string& out_dir, const TrainOptions& opt = {});

/// Derives a stream-independent sub-seed (exposed for tests).
uint64_t derive_seed(uint64_t seed, const std::string& tag, uint64_t a = 0, uint64_t b = 0);

}  // namespace fcsin
