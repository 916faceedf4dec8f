#pragma once

#include <string>
#include <utility>

#include "gcsl/ebm_sgld.hpp"
#include "gcsl/objectives.hpp"

namespace gcsl {

enum class TrainMode { standalone_tractable, joint_ebm };
enum class OptimizerKind { sgd, adaptive_moment };

struct TrainConfig {
  TrainMode mode = TrainMode::standalone_tractable;
  int epochs = 2000;
  int batch_size = 0;  // 0 = full batch
  double learning_rate = 0.001;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double lambda = 10.0;
  uint64_t seed = 1;
  int classes = 0;  // 0 = infer from labels

  // joint_ebm only: feature net layout (hidden sizes then feature dim) and
  // sampler settings.
  std::vector<int> net_layers;  // e.g. {16, 2} maps D -> 16 -> 2
  Activation activation = Activation::tanh;
  SgldConfig sgld;

  // joint_ebm only: scale on the unlabeled rows' marginal term. 1 keeps the
  // per-row weighting of the semi-supervised objective; smaller values damp
  // the sampled term when a handful of labels must hold their ground against
  // a much larger unlabeled mass.
  double unlabeled_weight = 1.0;

  // joint_ebm only: epochs at the start of training during which unlabeled
  // rows are dropped from the objective and the sampler is never consulted.
  // The class means start below the separation a shared-covariance mixture
  // needs before splitting pays off, and the sampled marginal cannot tell a
  // merged optimum from a split one through its own noise; letting the
  // labeled terms pull the means apart first puts the second phase on the
  // split side of that ridge.
  int supervised_warmup = 0;
};

struct EpochStats {
  LossBreakdown loss;
  double train_accuracy = 0.0;  // over labeled training samples (0 when none)
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

struct TrainingDiverged : std::runtime_error {
  int epoch;
  explicit TrainingDiverged(int at_epoch)
      : std::runtime_error("training diverged (non-finite loss or parameters) at epoch " +
                           std::to_string(at_epoch)),
        epoch(at_epoch) {}
};

// Builds the starting model: zero softmax head; class means from labeled
// feature averages (global mean plus small seeded noise for label-free
// classes); precision from the inverse of the overall feature covariance
// (identity when singular); mixture logits from labeled log-frequencies
// (uniform unless every class has a label).
HybridModel init_model(const Dataset& train, const TrainConfig& cfg);

// Exact class-conditional Gaussian NLL of the features of the given rows
// (every one must be labeled), averaged over idx, with gradients into the
// Gaussian head and the feature net. The joint trainer uses this for labeled
// rows, where the conditional normalizer is analytic under a shared
// covariance; the log-determinant term it carries keeps the precision from
// growing without bound.
double labeled_conditional_nll_grad(const Dataset& data, std::span<const int> idx,
                                    const HybridModel& model, GradientBundle* grad);

std::pair<HybridModel, TrainHistory> train(const Dataset& train, const TrainConfig& cfg);

struct EvalResult {
  double accuracy = 0.0;
  Mat posteriors;  // N x C, rows from posterior_disc on the sample's features
  std::vector<int> predicted;  // argmax, ties toward the lower class index
};

// Requires a fully labeled dataset.
EvalResult evaluate(const HybridModel& model, const Dataset& data);

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double worst = 0.0;
  double tolerance = 1e-4;
  bool pass = false;
};

// Central finite differences (h = 1e-5) of semi_supervised_loss.total against
// the analytic gradient, blockwise over every parameter. Tractable mode only.
GradCheckReport grad_check(const HybridModel& model, const Dataset& data, double lambda,
                           double tolerance = 1e-4);

// Versioned JSON checkpoint of every parameter array plus a free-form config
// echo; see docs/checkpoint_format.md.
void save_checkpoint(const HybridModel& model, const std::string& path,
                     const std::string& config_echo_json = "{}");
std::pair<HybridModel, std::string> load_checkpoint(const std::string& path);

}  // namespace gcsl
