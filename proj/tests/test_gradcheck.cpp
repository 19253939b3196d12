#include <set>

#include "doctest.h"
#include "dscnn/gradcheck.hpp"
#include "dscnn/ops.hpp"
#include "test_util.hpp"

using namespace dscnn;
using testutil::random_matrix;

TEST_CASE("gradcheck passes on a correct computation") {
  Matrix a = random_matrix(3, 3, 1);
  Matrix b = random_matrix(3, 1, 2);
  std::vector<std::pair<std::string, Matrix*>> params = {{"a", &a},
                                                         {"b", &b}};
  auto build = [&](Tape& t) {
    NodeId ia = t.parameter(a);
    NodeId ib = t.parameter(b);
    NodeId out = ag::map(t, ag::matmul(t, ia, ib), Nonlin::tanh);
    return std::make_pair(ag::sum(t, out), std::vector<NodeId>{ia, ib});
  };
  const GradcheckReport report = gradcheck(params, build);
  CHECK(report.passed(1e-4));
  CHECK(report.worst() < 1e-4);
}

TEST_CASE("a corrupted backward rule is detected and named") {
  Matrix a = random_matrix(2, 2, 3);
  Matrix b = random_matrix(2, 2, 4);
  std::vector<std::pair<std::string, Matrix*>> params = {{"good", &a},
                                                         {"evil", &b}};
  auto build = [&](Tape& t) {
    NodeId ia = t.parameter(a);
    NodeId ib = t.parameter(b);
    // hand-rolled node whose gradient rule drops a factor of 2
    Matrix value = hadamard(t.value(ib), t.value(ib));
    NodeId sq = t.push(std::move(value), {ib}, [ib](Tape& tp, NodeId out) {
      const Matrix& g = tp.grad_view(out);
      Matrix& gb = tp.grad(ib);
      for (std::size_t i = 0; i < gb.size(); ++i) {
        gb.data()[i] += g.data()[i] * tp.value(ib).data()[i];  // missing *2
      }
    });
    NodeId loss = ag::sum(t, ag::add(t, ia, sq));
    return std::make_pair(loss, std::vector<NodeId>{ia, ib});
  };
  const GradcheckReport report = gradcheck(params, build);
  CHECK(!report.passed(1e-4));
  for (const GradcheckGroup& g : report.groups) {
    if (g.name == "good") CHECK(g.max_rel_err < 1e-4);
    if (g.name == "evil") CHECK(g.max_rel_err > 1e-2);
  }
}

TEST_CASE("model gradcheck lists every parameter group exactly once") {
  ChannelSet channels;
  channels.tables.emplace_back(4, 1, 0);
  channels.tables.emplace_back(4, 1, 1);
  ModelInit init;
  init.filter_spec = {{2, 2}, {3, 2}};
  init.h_dim = 4;
  init.classes = 2;
  init.seed = 5;
  SentenceModel m = make_sentence_model(std::move(channels), init);
  const GradcheckReport report =
      gradcheck_model(m, {"u", "v", "w", "x"}, 1);

  std::set<std::string> names;
  for (const GradcheckGroup& g : report.groups) {
    CHECK(!names.count(g.name));
    names.insert(g.name);
  }
  // 2 channels x 12 LSTM tensors + 2 groups x (w, b) + classifier W, b
  CHECK(report.groups.size() == 2 * 12 + 4 + 2);
  CHECK(report.passed(1e-4));
}
