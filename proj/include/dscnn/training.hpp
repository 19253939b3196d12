#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dscnn/checkpoint.hpp"
#include "dscnn/data.hpp"
#include "dscnn/matrix.hpp"
#include "dscnn/model.hpp"
#include "dscnn/tape.hpp"

namespace dscnn {

/// -ln(pred[label]) with a 1e-12 floor inside the log.
double cross_entropy(const Matrix& pred, int label);

namespace ag {
NodeId cross_entropy(Tape& t, NodeId probs, int label);
}  // namespace ag

/// Adadelta accumulators, one pair per parameter tensor:
///   E[g^2]  <- rho E[g^2] + (1-rho) g^2
///   dx       = -(RMS[dx] / RMS[g]) g,   RMS[z] = sqrt(E[z^2] + eps)
///   E[dx^2] <- rho E[dx^2] + (1-rho) dx^2
struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  std::vector<Matrix> acc_grad_sq;
  std::vector<Matrix> acc_delta_sq;

  void init(const std::vector<std::pair<std::string, Matrix*>>& params);
  bool initialized() const { return !acc_grad_sq.empty(); }
};

void adadelta_step(const std::vector<std::pair<std::string, Matrix*>>& params,
                   const std::vector<Matrix>& grads, AdadeltaState& st);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_metric = 0.0;
  double wall_seconds = 0.0;
};

struct TrainState {
  int epoch = 0;
  double best_valid_acc = -std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;
  std::uint64_t seed = 1;
  std::vector<EpochMetrics> history;
};

enum class StopDecision { keep_going, stop };

/// Strict improvement resets the patience counter; ties count as
/// non-improvement. Returns stop once `patience` epochs pass without a
/// new best.
StopDecision early_stop_check(TrainState& st, double valid_acc, int patience);

/// The train loop sees a model through these hooks, so sentence models,
/// document models and the pretraining autoencoder all share it.
struct ModelHooks {
  std::function<std::vector<std::pair<std::string, Matrix*>>()> params;
  /// Builds the loss for one example on a fresh tape and returns the loss
  /// node plus parameter node ids aligned with params().
  std::function<std::pair<NodeId, std::vector<NodeId>>(
      Tape&, const Example&, std::uint64_t dropout_seed)>
      example_loss;
  /// Inference-mode class probabilities (empty for non-classifiers).
  std::function<Matrix(const Example&)> infer;
};

ModelHooks hooks_for(SentenceModel& m);
ModelHooks hooks_for(DocumentModel& m);

/// One shuffled pass of per-example (or accumulated mini-batch) updates.
/// Returns the mean example loss.
double train_epoch(const ModelHooks& hooks, const std::vector<Example>& train,
                   AdadeltaState& opt, std::uint64_t seed, int epoch,
                   int batch_size = 1, double grad_clip = 0.0);

/// Fraction of examples whose argmax prediction matches the label;
/// argmax ties resolve to the lowest class index.
double evaluate(const ModelHooks& hooks, const std::vector<Example>& data);

struct TrainLoopConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
  int patience = 5;
  int max_epochs = 50;
  int batch_size = 1;
  double grad_clip = 0.0;
  std::uint64_t seed = 1;
  std::string metrics_path;  // empty: no metrics file
  bool wall_timing = true;
};

struct TrainRunResult {
  TrainState state;
  int best_epoch = 0;
  double best_valid = 0.0;
};

/// Full training run with early stopping; the best parameters are
/// restored into the model before returning. `valid_metric` returns
/// (score where higher is better, display value for the metrics file);
/// when omitted it is evaluate() on split.valid.
TrainRunResult train_run(
    const ModelHooks& hooks, const Split& split, const TrainLoopConfig& cfg,
    std::function<std::pair<double, double>()> valid_metric = {});

/// Snapshot of the parameter registry as checkpoint tensors.
Checkpoint make_checkpoint(
    const std::string& kind,
    const std::vector<std::pair<std::string, std::string>>& config,
    const std::vector<std::pair<std::string, Matrix*>>& params);

/// Restores tensors by name; every registry entry must be present with
/// matching shape.
void load_params(const Checkpoint& ckpt,
                 const std::vector<std::pair<std::string, Matrix*>>& params);

}  // namespace dscnn
