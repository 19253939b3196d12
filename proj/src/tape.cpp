#include "dscnn/tape.hpp"

#include "dscnn/error.hpp"

namespace dscnn {

NodeId Tape::check(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw ContractError("tape: invalid node id");
  }
  return id;
}

NodeId Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix{}, false, {}});
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix{}, recording_, {}});
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::push(Matrix value, const std::vector<NodeId>& deps,
                  BackFn back) {
  bool needs = false;
  for (NodeId d : deps) {
    check(d);
    needs = needs || nodes_[d].needs_grad;
  }
  Node node;
  node.value = std::move(value);
  node.needs_grad = recording_ && needs;
  if (node.needs_grad) node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Matrix& Tape::grad(NodeId id) {
  Node& node = nodes_[check(id)];
  if (node.grad.empty() && !node.value.empty()) {
    node.grad = Matrix(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

const Matrix& Tape::grad_view(NodeId id) const {
  return nodes_[check(id)].grad;
}

void Tape::backward(NodeId loss) {
  check(loss);
  if (!recording_) {
    throw ContractError("backward: tape is not recording");
  }
  if (backward_done_) {
    throw ContractError("backward: already ran on this tape");
  }
  const Matrix& value = nodes_[loss].value;
  if (value.rows() != 1 || value.cols() != 1) {
    throw ContractError("backward: loss must be scalar, got " +
                        value.shape_str());
  }
  backward_done_ = true;
  grad(loss)(0, 0) = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.needs_grad && node.back && !node.grad.empty()) {
      node.back(*this, id);
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

}  // namespace dscnn
