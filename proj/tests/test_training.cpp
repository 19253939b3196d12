#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "dscnn/error.hpp"
#include "dscnn/model.hpp"
#include "dscnn/ops.hpp"
#include "dscnn/training.hpp"
#include "test_util.hpp"

using namespace dscnn;
using testutil::random_matrix;

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("dscnn_train_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

// two classes separated by a marker token among fillers
Corpus toy_corpus(int n, std::uint64_t seed) {
  Rng rng(seed);
  Corpus corpus;
  corpus.label_names = {"0", "1"};
  for (int i = 0; i < n; ++i) {
    Example ex;
    ex.id = i;
    ex.label = i % 2;
    ex.tokens = {"f" + std::to_string(rng.index(4)),
                 ex.label ? "bad" : "good",
                 "f" + std::to_string(rng.index(4))};
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

SentenceModel toy_model(int classes, std::uint64_t seed) {
  ChannelSet channels;
  channels.tables.emplace_back(6, seed, 0);
  ModelInit init;
  init.filter_spec = {{2, 4}, {3, 4}};
  init.h_dim = 6;
  init.classes = classes;
  init.dropout_rate = 0.0;
  init.seed = seed;
  return make_sentence_model(std::move(channels), init);
}

}  // namespace

TEST_CASE("cross_entropy values and contracts") {
  Matrix onehot(3, 1);
  onehot(1, 0) = 1.0;
  CHECK(cross_entropy(onehot, 1) == 0.0);

  Matrix uniform = Matrix::full(4, 1, 0.25);
  CHECK(cross_entropy(uniform, 2) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));

  CHECK_THROWS_AS(cross_entropy(uniform, 4), DomainError);
  CHECK_THROWS_AS(cross_entropy(uniform, -1), DomainError);

  // the floor keeps pathological predictions finite
  Matrix zeroed(2, 1);
  zeroed(0, 0) = 1.0;
  const double loss = cross_entropy(zeroed, 1);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK(loss >= 0.0);
}

TEST_CASE("softmax plus cross-entropy gradient is pred minus onehot") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Matrix logits = random_matrix(5, 1, seed * 7, 2.0);
    const int label = static_cast<int>(seed % 5);
    Tape t;
    NodeId z = t.parameter(logits);
    NodeId probs = ag::softmax(t, z);
    NodeId loss = ag::cross_entropy(t, probs, label);
    t.backward(loss);

    const Matrix p = softmax(logits);
    const Matrix& g = t.grad_view(z);
    for (std::size_t i = 0; i < 5; ++i) {
      const double want = p(i, 0) - (static_cast<int>(i) == label ? 1.0 : 0.0);
      CHECK(g(i, 0) == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("adadelta zero gradient leaves parameters in place") {
  Matrix x = random_matrix(3, 3, 1);
  const Matrix x0 = x;
  std::vector<std::pair<std::string, Matrix*>> params = {{"x", &x}};
  AdadeltaState st;
  st.init(params);
  st.acc_grad_sq[0].fill(0.04);
  adadelta_step(params, {Matrix(3, 3)}, st);
  CHECK(x == x0);
  // E[g^2] decays by rho
  CHECK(st.acc_grad_sq[0](0, 0) == doctest::Approx(0.95 * 0.04).epsilon(1e-15));
  CHECK(st.acc_delta_sq[0](0, 0) == 0.0);
}

TEST_CASE("adadelta first step matches the transcribed update") {
  Matrix x(1, 1);
  x(0, 0) = 1.0;
  std::vector<std::pair<std::string, Matrix*>> params = {{"x", &x}};
  AdadeltaState st;
  Matrix g(1, 1);
  g(0, 0) = 1.0;
  adadelta_step(params, {g}, st);
  // E[g^2] = 0.05, dx = -sqrt(eps)/sqrt(0.05 + eps)
  const double want = 1.0 - std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
  CHECK(x(0, 0) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("adadelta descends x^2 and matches the independent oracle") {
  Matrix x(1, 1);
  x(0, 0) = 1.0;
  std::vector<std::pair<std::string, Matrix*>> params = {{"x", &x}};
  AdadeltaState st;

  // independent transcription of the three update lines
  double ox = 1.0, oeg = 0.0, oed = 0.0;
  const double rho = 0.95, eps = 1e-6;

  for (int step = 0; step < 200; ++step) {
    Matrix g(1, 1);
    g(0, 0) = 2.0 * x(0, 0);
    adadelta_step(params, {g}, st);

    const double og = 2.0 * ox;
    oeg = rho * oeg + (1.0 - rho) * og * og;
    const double odx = -std::sqrt(oed + eps) / std::sqrt(oeg + eps) * og;
    oed = rho * oed + (1.0 - rho) * odx * odx;
    ox += odx;

    CHECK(x(0, 0) == doctest::Approx(ox).epsilon(1e-12));
  }
  CHECK(std::fabs(x(0, 0)) < 0.5);
}

TEST_CASE("adadelta rejects shape mismatches") {
  Matrix x(2, 2);
  std::vector<std::pair<std::string, Matrix*>> params = {{"x", &x}};
  AdadeltaState st;
  CHECK_THROWS_AS(adadelta_step(params, {Matrix(3, 2)}, st), DimensionError);
}

TEST_CASE("early stopping state machine") {
  {
    TrainState st;
    CHECK(early_stop_check(st, 0.5, 2) == StopDecision::keep_going);
    CHECK(early_stop_check(st, 0.6, 2) == StopDecision::keep_going);
    CHECK(early_stop_check(st, 0.7, 2) == StopDecision::keep_going);
    CHECK(st.best_valid_acc == 0.7);
  }
  {
    TrainState st;
    CHECK(early_stop_check(st, 0.7, 2) == StopDecision::keep_going);
    CHECK(early_stop_check(st, 0.6, 2) == StopDecision::keep_going);
    CHECK(early_stop_check(st, 0.6, 2) == StopDecision::stop);
  }
  {
    // a tie with the best counts as non-improvement
    TrainState st;
    CHECK(early_stop_check(st, 0.7, 1) == StopDecision::keep_going);
    CHECK(early_stop_check(st, 0.7, 1) == StopDecision::stop);
    CHECK(st.best_valid_acc == 0.7);
  }
  {
    // best never decreases
    TrainState st;
    early_stop_check(st, 0.9, 3);
    early_stop_check(st, 0.1, 3);
    CHECK(st.best_valid_acc == 0.9);
  }
  TrainState st;
  CHECK_THROWS_AS(early_stop_check(st, 0.5, 0), DomainError);
}

TEST_CASE("evaluate counts argmax matches, ties to the lowest index") {
  SentenceModel m = toy_model(2, 5);
  ModelHooks hooks = hooks_for(m);
  CHECK_THROWS_AS(evaluate(hooks, {}), DomainError);

  // constant-output model: accuracy equals the majority-class fraction
  m.cls_W.fill(0.0);
  m.cls_b.fill(0.0);
  m.cls_b(0, 0) = 5.0;  // always predicts class 0
  Corpus corpus = toy_corpus(10, 1);
  const double acc = evaluate(hooks, corpus.examples);
  CHECK(acc == doctest::Approx(0.5).epsilon(1e-15));

  // uniform output ties: predicted class is 0
  m.cls_b.fill(0.0);
  std::vector<Example> only_zero = {corpus.examples[0]};
  REQUIRE(only_zero[0].label == 0);
  CHECK(evaluate(hooks, only_zero) == 1.0);

  // hand-counted fixture
  std::vector<Example> three = {corpus.examples[0], corpus.examples[1],
                                corpus.examples[2]};
  m.cls_b(0, 0) = 5.0;
  // labels are 0,1,0 -> constant class-0 model scores 2/3
  CHECK(evaluate(hooks, three) == doctest::Approx(2.0 / 3).epsilon(1e-15));
}

TEST_CASE("training overfits a separable toy corpus") {
  Corpus corpus = toy_corpus(20, 2);
  SentenceModel m = toy_model(2, 7);
  ModelHooks hooks = hooks_for(m);
  AdadeltaState opt;
  double first_loss = 0.0, loss_at_10 = 0.0;
  double train_acc = 0.0;
  int epoch = 1;
  for (; epoch <= 50; ++epoch) {
    const double loss =
        train_epoch(hooks, corpus.examples, opt, /*seed=*/3, epoch);
    if (epoch == 1) first_loss = loss;
    if (epoch == 10) loss_at_10 = loss;
    train_acc = evaluate(hooks, corpus.examples);
    if (train_acc == 1.0) break;
  }
  CHECK(train_acc == 1.0);
  CHECK(epoch <= 50);
  if (epoch >= 10) CHECK(loss_at_10 < first_loss);
}

TEST_CASE("train_epoch is deterministic given the seed") {
  Corpus corpus = toy_corpus(12, 9);
  SentenceModel a = toy_model(2, 11);
  SentenceModel b = toy_model(2, 11);
  ModelHooks ha = hooks_for(a), hb = hooks_for(b);
  AdadeltaState oa, ob;
  const double la = train_epoch(ha, corpus.examples, oa, 5, 1);
  const double lb = train_epoch(hb, corpus.examples, ob, 5, 1);
  CHECK(la == lb);
  const auto pa = named_params(a), pb = named_params(b);
  for (std::size_t k = 0; k < pa.size(); ++k)
    CHECK(*pa[k].second == *pb[k].second);

  AdadeltaState oc;
  CHECK_THROWS_AS(train_epoch(ha, {}, oc, 5, 1), DomainError);
}

TEST_CASE("mini-batch accumulation applies the averaged gradient") {
  Corpus corpus = toy_corpus(8, 2);
  SentenceModel batched = toy_model(2, 7);
  SentenceModel manual = toy_model(2, 7);

  // one whole-set batch through the loop
  ModelHooks hooks = hooks_for(batched);
  AdadeltaState opt;
  opt.init(hooks.params());
  train_epoch(hooks, corpus.examples, opt, /*seed=*/3, /*epoch=*/1,
              /*batch_size=*/8);

  // reference: per-example gradients averaged in the same shuffled order,
  // then a single adadelta step
  std::vector<std::size_t> order(corpus.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(3, "shuffle", 1));
  rng.shuffle(order);

  auto params = named_params(manual);
  std::vector<Matrix> grads;
  for (auto& [name, m] : params) grads.emplace_back(m->rows(), m->cols());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Example& ex = corpus.examples[order[pos]];
    Tape t(true);
    SentenceNodes nodes = sentence_push(t, manual, true);
    NodeId probs =
        sentence_prob_node(t, manual, nodes, ex.tokens, Mode::train, 0);
    t.backward(ag::cross_entropy(t, probs, ex.label));
    const auto ids = param_node_list(manual, nodes);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const Matrix& g = t.grad_view(ids[k]);
      if (g.empty()) continue;
      for (std::size_t i = 0; i < grads[k].size(); ++i)
        grads[k].data()[i] += g.data()[i] / 8.0;
    }
  }
  AdadeltaState opt2;
  adadelta_step(params, grads, opt2);

  const auto got = named_params(batched);
  for (std::size_t k = 0; k < params.size(); ++k) {
    CHECK(*got[k].second == *params[k].second);
  }
}

TEST_CASE("train_run writes metrics, early stops, restores the best") {
  namespace fs = std::filesystem;
  Corpus corpus = toy_corpus(16, 4);
  Split split;
  split.train.assign(corpus.examples.begin(), corpus.examples.begin() + 12);
  split.valid.assign(corpus.examples.begin() + 12, corpus.examples.end());

  SentenceModel m = toy_model(2, 13);
  ModelHooks hooks = hooks_for(m);
  TrainLoopConfig cfg;
  cfg.max_epochs = 30;
  cfg.patience = 3;
  cfg.seed = 17;
  cfg.wall_timing = false;
  const fs::path dir = temp_dir();
  cfg.metrics_path = (dir / "metrics.csv").string();
  const TrainRunResult result = train_run(hooks, split, cfg);

  CHECK(result.best_epoch >= 1);
  CHECK(result.state.history.size() >= 1);
  CHECK(result.state.best_valid_acc == result.best_valid);

  std::ifstream in(cfg.metrics_path);
  REQUIRE(in.good());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    int commas = 0;
    for (char c : line) commas += c == ',';
    CHECK(commas == 3);  // epoch, train_loss, valid, wall
    CHECK(line.substr(line.rfind(',') + 1) == "0.000");  // timing=none
  }
  CHECK(rows == static_cast<int>(result.state.history.size()));
}

TEST_CASE("checkpoint round trip reproduces forward outputs bitwise") {
  namespace fs = std::filesystem;
  Corpus corpus = toy_corpus(8, 21);
  SentenceModel m = toy_model(2, 23);
  ModelHooks hooks = hooks_for(m);
  AdadeltaState opt;
  train_epoch(hooks, corpus.examples, opt, 1, 1);

  const fs::path path = temp_dir() / "ckpt.dscnn";
  save_checkpoint(make_checkpoint("model", {{"note", "test"}},
                                  named_params(m)),
                  path.string());

  SentenceModel fresh = toy_model(2, 23);
  const Checkpoint loaded = load_checkpoint(path.string());
  CHECK(loaded.kind == "model");
  load_params(loaded, named_params(fresh));

  for (const Example& ex : corpus.examples) {
    const Matrix a = sentence_forward(m, ex.tokens);
    const Matrix b = sentence_forward(fresh, ex.tokens);
    CHECK(a == b);
  }
  ModelHooks fresh_hooks = hooks_for(fresh);
  CHECK(evaluate(hooks, corpus.examples) ==
        evaluate(fresh_hooks, corpus.examples));
}

TEST_CASE("checkpoint loading rejects corrupted and mismatched files") {
  namespace fs = std::filesystem;
  const fs::path dir = temp_dir();
  {
    std::ofstream out(dir / "bad.dscnn", std::ios::binary);
    out << "NOTACKPT 9\n";
  }
  CHECK_THROWS_AS(load_checkpoint((dir / "bad.dscnn").string()), FormatError);

  SentenceModel m = toy_model(2, 31);
  save_checkpoint(make_checkpoint("model", {}, named_params(m)),
                  (dir / "ok.dscnn").string());
  const Checkpoint ckpt = load_checkpoint((dir / "ok.dscnn").string());
  SentenceModel other = toy_model(3, 31);  // different classifier shape
  CHECK_THROWS_AS(load_params(ckpt, named_params(other)), DimensionError);
}

TEST_CASE("cross-entropy losses are never negative") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Matrix logits = random_matrix(4, 1, seed, 8.0);
    const Matrix p = softmax(logits);
    for (int label = 0; label < 4; ++label) {
      CHECK(cross_entropy(p, label) >= 0.0);
    }
  }
}
