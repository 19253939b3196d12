#include "dscnn/gradcheck.hpp"

#include <cmath>

#include "dscnn/error.hpp"
#include "dscnn/training.hpp"

namespace dscnn {

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const GradcheckGroup& g : groups) w = std::max(w, g.max_rel_err);
  return w;
}

bool GradcheckReport::passed(double tolerance) const {
  for (const GradcheckGroup& g : groups) {
    if (!(g.max_rel_err < tolerance)) return false;
  }
  return true;
}

GradcheckReport gradcheck(
    const std::vector<std::pair<std::string, Matrix*>>& params,
    const std::function<std::pair<NodeId, std::vector<NodeId>>(Tape&)>& build,
    double step) {
  // one recorded pass for the reverse-mode gradients
  Tape t(true);
  auto [loss, ids] = build(t);
  if (ids.size() != params.size()) {
    throw ContractError("gradcheck: build returned " +
                        std::to_string(ids.size()) + " nodes for " +
                        std::to_string(params.size()) + " parameters");
  }
  t.backward(loss);
  std::vector<Matrix> ad_grads;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix& g = t.grad_view(ids[k]);
    ad_grads.push_back(g.empty() ? Matrix(params[k].second->rows(),
                                          params[k].second->cols())
                                 : g);
  }

  auto eval = [&build] {
    Tape q(false);
    auto [node, unused] = build(q);
    (void)unused;
    return q.value(node)(0, 0);
  };

  GradcheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    GradcheckGroup group;
    group.name = params[k].first;
    Matrix& m = *params[k].second;
    group.entries = m.size();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + step;
      const double up = eval();
      m.data()[i] = saved - step;
      const double down = eval();
      m.data()[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double ad = ad_grads[k].data()[i];
      const double rel =
          std::fabs(ad - fd) / std::max(std::fabs(ad) + std::fabs(fd), 1e-6);
      group.max_rel_err = std::max(group.max_rel_err, rel);
    }
    report.groups.push_back(std::move(group));
  }
  return report;
}

GradcheckReport gradcheck_model(SentenceModel& m,
                                const std::vector<std::string>& tokens,
                                int label, std::uint64_t dropout_seed,
                                double step) {
  auto build = [&m, &tokens, label, dropout_seed](Tape& t) {
    SentenceNodes nodes = sentence_push(t, m, true);
    NodeId probs =
        sentence_prob_node(t, m, nodes, tokens, Mode::train, dropout_seed);
    NodeId loss = ag::cross_entropy(t, probs, label);
    return std::make_pair(loss, param_node_list(m, nodes));
  };
  return gradcheck(named_params(m), build, step);
}

GradcheckReport gradcheck_model(DocumentModel& m,
                                const std::vector<std::string>& tokens,
                                int label, std::uint64_t dropout_seed,
                                double step) {
  auto build = [&m, &tokens, label, dropout_seed](Tape& t) {
    DocumentNodes nodes = document_push(t, m, true);
    NodeId probs =
        document_prob_node(t, m, nodes, tokens, Mode::train, dropout_seed);
    NodeId loss = ag::cross_entropy(t, probs, label);
    return std::make_pair(loss, param_node_list(m, nodes));
  };
  return gradcheck(named_params(m), build, step);
}

}  // namespace dscnn
