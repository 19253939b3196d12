#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dscnn/matrix.hpp"
#include "dscnn/model.hpp"
#include "dscnn/tape.hpp"

namespace dscnn {

struct GradcheckGroup {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t entries = 0;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  double worst() const;
  bool passed(double tolerance = 1e-4) const;
};

/// Compares the reverse-mode gradient of a recorded loss against central
/// finite differences (default step 1e-5) over every entry of every
/// parameter group. `build` must construct the loss on the given tape from
/// the current parameter values and return the loss node plus parameter
/// node ids aligned with `params`. Relative error per entry is
/// |ad - fd| / max(|ad| + |fd|, 1e-6).
GradcheckReport gradcheck(
    const std::vector<std::pair<std::string, Matrix*>>& params,
    const std::function<std::pair<NodeId, std::vector<NodeId>>(Tape&)>& build,
    double step = 1e-5);

/// Cross-entropy loss of one example through the full model, train-mode
/// forward with a fixed dropout mask so both differencing routes see the
/// same function.
GradcheckReport gradcheck_model(SentenceModel& m,
                                const std::vector<std::string>& tokens,
                                int label, std::uint64_t dropout_seed = 1,
                                double step = 1e-5);
GradcheckReport gradcheck_model(DocumentModel& m,
                                const std::vector<std::string>& tokens,
                                int label, std::uint64_t dropout_seed = 1,
                                double step = 1e-5);

}  // namespace dscnn
