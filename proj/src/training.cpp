#include "dscnn/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dscnn/error.hpp"
#include "dscnn/rng.hpp"

namespace dscnn {

double cross_entropy(const Matrix& pred, int label) {
  if (pred.cols() != 1 || pred.size() == 0) {
    throw DimensionError("cross_entropy: prediction must be a column vector");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= pred.rows()) {
    throw DomainError("cross_entropy: label " + std::to_string(label) +
                      " out of range for " + std::to_string(pred.rows()) +
                      " classes");
  }
  return -std::log(std::max(pred(label, 0), 1e-12));
}

namespace ag {

NodeId cross_entropy(Tape& t, NodeId probs, int label) {
  const Matrix& p = t.value(probs);
  Matrix value(1, 1);
  value(0, 0) = dscnn::cross_entropy(p, label);
  return t.push(std::move(value), {probs}, [probs, label](Tape& tp, NodeId out) {
    if (!tp.needs_grad(probs)) return;
    const double g = tp.grad_view(out)(0, 0);
    const double p_label = tp.value(probs)(label, 0);
    if (p_label >= 1e-12) {
      tp.grad(probs)(label, 0) += -g / p_label;
    }
  });
}

}  // namespace ag

void AdadeltaState::init(
    const std::vector<std::pair<std::string, Matrix*>>& params) {
  acc_grad_sq.clear();
  acc_delta_sq.clear();
  for (const auto& [name, m] : params) {
    acc_grad_sq.emplace_back(m->rows(), m->cols());
    acc_delta_sq.emplace_back(m->rows(), m->cols());
  }
}

void adadelta_step(const std::vector<std::pair<std::string, Matrix*>>& params,
                   const std::vector<Matrix>& grads, AdadeltaState& st) {
  if (!st.initialized()) st.init(params);
  if (params.size() != grads.size() ||
      params.size() != st.acc_grad_sq.size()) {
    throw DimensionError("adadelta_step: parameter/gradient count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& x = *params[k].second;
    const Matrix& g = grads[k];
    if (!x.same_shape(g)) {
      throw DimensionError("adadelta_step: gradient shape " + g.shape_str() +
                           " != parameter '" + params[k].first + "' shape " +
                           x.shape_str());
    }
    Matrix& eg = st.acc_grad_sq[k];
    Matrix& ed = st.acc_delta_sq[k];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g.data()[i];
      eg.data()[i] = st.rho * eg.data()[i] + (1.0 - st.rho) * gi * gi;
      const double dx = -std::sqrt(ed.data()[i] + st.epsilon) /
                        std::sqrt(eg.data()[i] + st.epsilon) * gi;
      ed.data()[i] = st.rho * ed.data()[i] + (1.0 - st.rho) * dx * dx;
      x.data()[i] += dx;
    }
  }
}

StopDecision early_stop_check(TrainState& st, double valid_acc, int patience) {
  if (patience < 1) throw DomainError("early_stop_check: patience must be >= 1");
  if (valid_acc > st.best_valid_acc) {
    st.best_valid_acc = valid_acc;
    st.epochs_since_best = 0;
    return StopDecision::keep_going;
  }
  ++st.epochs_since_best;
  return st.epochs_since_best >= patience ? StopDecision::stop
                                          : StopDecision::keep_going;
}

ModelHooks hooks_for(SentenceModel& m) {
  ModelHooks hooks;
  hooks.params = [&m] { return named_params(m); };
  hooks.example_loss = [&m](Tape& t, const Example& ex,
                            std::uint64_t dropout_seed) {
    SentenceNodes nodes = sentence_push(t, m, true);
    NodeId probs =
        sentence_prob_node(t, m, nodes, ex.tokens, Mode::train, dropout_seed);
    NodeId loss = ag::cross_entropy(t, probs, ex.label);
    return std::make_pair(loss, param_node_list(m, nodes));
  };
  hooks.infer = [&m](const Example& ex) {
    return sentence_forward(m, ex.tokens);
  };
  return hooks;
}

ModelHooks hooks_for(DocumentModel& m) {
  ModelHooks hooks;
  hooks.params = [&m] { return named_params(m); };
  hooks.example_loss = [&m](Tape& t, const Example& ex,
                            std::uint64_t dropout_seed) {
    DocumentNodes nodes = document_push(t, m, true);
    NodeId probs =
        document_prob_node(t, m, nodes, ex.tokens, Mode::train, dropout_seed);
    NodeId loss = ag::cross_entropy(t, probs, ex.label);
    return std::make_pair(loss, param_node_list(m, nodes));
  };
  hooks.infer = [&m](const Example& ex) {
    return document_forward(m, ex.tokens);
  };
  return hooks;
}

double train_epoch(const ModelHooks& hooks, const std::vector<Example>& train,
                   AdadeltaState& opt, std::uint64_t seed, int epoch,
                   int batch_size, double grad_clip) {
  if (train.empty()) throw DomainError("train_epoch: empty training set");
  if (batch_size < 1) throw DomainError("train_epoch: batch_size must be >= 1");
  auto params = hooks.params();
  if (!opt.initialized()) opt.init(params);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);

  std::vector<Matrix> grads;
  for (const auto& [name, m] : params) grads.emplace_back(m->rows(), m->cols());

  double loss_total = 0.0;
  std::size_t done = 0;
  while (done < order.size()) {
    const std::size_t batch =
        std::min<std::size_t>(batch_size, order.size() - done);
    for (Matrix& g : grads) g.fill(0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const Example& ex = train[order[done + b]];
      Tape t(true);
      const std::uint64_t dropout_seed =
          derive_seed(seed, "dropout", static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(done + b));
      auto [loss, nodes] = hooks.example_loss(t, ex, dropout_seed);
      loss_total += t.value(loss)(0, 0);
      t.backward(loss);
      const double inv = 1.0 / static_cast<double>(batch);
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Matrix& g = t.grad_view(nodes[k]);
        if (g.empty()) continue;  // parameter untouched by this example
        for (std::size_t i = 0; i < grads[k].size(); ++i)
          grads[k].data()[i] += inv * g.data()[i];
      }
    }
    if (grad_clip > 0.0) {
      double norm_sq = 0.0;
      for (const Matrix& g : grads)
        for (std::size_t i = 0; i < g.size(); ++i)
          norm_sq += g.data()[i] * g.data()[i];
      const double norm = std::sqrt(norm_sq);
      if (norm > grad_clip) {
        const double factor = grad_clip / norm;
        for (Matrix& g : grads)
          for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= factor;
      }
    }
    adadelta_step(params, grads, opt);
    done += batch;
  }
  return loss_total / static_cast<double>(train.size());
}

double evaluate(const ModelHooks& hooks, const std::vector<Example>& data) {
  if (data.empty()) throw DomainError("evaluate: empty dataset");
  std::size_t correct = 0;
  for (const Example& ex : data) {
    const Matrix probs = hooks.infer(ex);
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.rows(); ++k) {
      if (probs(k, 0) > probs(best, 0)) best = k;  // ties: lowest index
    }
    if (static_cast<int>(best) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainRunResult train_run(
    const ModelHooks& hooks, const Split& split, const TrainLoopConfig& cfg,
    std::function<std::pair<double, double>()> valid_metric) {
  if (split.train.empty()) throw DomainError("train_run: empty training set");
  if (!valid_metric) {
    if (split.valid.empty()) {
      throw DomainError("train_run: no validation set for early stopping");
    }
    valid_metric = [&hooks, &split] {
      const double acc = evaluate(hooks, split.valid);
      return std::make_pair(acc, acc);
    };
  }

  auto params = hooks.params();
  AdadeltaState opt;
  opt.rho = cfg.rho;
  opt.epsilon = cfg.epsilon;
  opt.init(params);

  std::ofstream metrics;
  if (!cfg.metrics_path.empty()) {
    metrics.open(cfg.metrics_path, std::ios::binary);
    if (!metrics) throw IoError("cannot write metrics: " + cfg.metrics_path);
  }

  TrainRunResult result;
  result.state.seed = cfg.seed;
  std::vector<Matrix> best_params;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double train_loss = train_epoch(hooks, split.train, opt, cfg.seed,
                                          epoch, cfg.batch_size, cfg.grad_clip);
    const auto [score, display] = valid_metric();
    const double wall =
        cfg.wall_timing
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            started)
                  .count()
            : 0.0;

    result.state.epoch = epoch;
    result.state.history.push_back({epoch, train_loss, display, wall});
    if (metrics.is_open()) {
      char line[160];
      std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.3f\n", epoch,
                    train_loss, display, wall);
      metrics << line;
      metrics.flush();
    }

    const bool improved = score > result.state.best_valid_acc;
    const StopDecision decision =
        early_stop_check(result.state, score, cfg.patience);
    if (improved) {
      result.best_epoch = epoch;
      result.best_valid = display;
      best_params.clear();
      for (const auto& [name, m] : params) best_params.push_back(*m);
    }
    if (decision == StopDecision::stop) break;
  }

  // restore the best checkpoint
  if (!best_params.empty()) {
    for (std::size_t k = 0; k < params.size(); ++k)
      *params[k].second = best_params[k];
  }
  return result;
}

Checkpoint make_checkpoint(
    const std::string& kind,
    const std::vector<std::pair<std::string, std::string>>& config,
    const std::vector<std::pair<std::string, Matrix*>>& params) {
  Checkpoint ckpt;
  ckpt.kind = kind;
  ckpt.config = config;
  for (const auto& [name, m] : params) ckpt.tensors.emplace_back(name, *m);
  return ckpt;
}

void load_params(const Checkpoint& ckpt,
                 const std::vector<std::pair<std::string, Matrix*>>& params) {
  for (const auto& [name, m] : params) {
    const Matrix* stored = ckpt.find_tensor(name);
    if (!stored) {
      throw FormatError("checkpoint is missing tensor '" + name + "'");
    }
    if (!stored->same_shape(*m)) {
      throw DimensionError("checkpoint tensor '" + name + "' has shape " +
                           stored->shape_str() + ", model expects " +
                           m->shape_str());
    }
    *m = *stored;
  }
}

}  // namespace dscnn
