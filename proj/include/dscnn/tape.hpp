#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dscnn/matrix.hpp"

namespace dscnn {

using NodeId = std::int32_t;
constexpr NodeId kNoNode = -1;

/// Reverse-mode differentiation tape. Operations append nodes holding the
/// result value plus a closure that propagates gradients to the operands;
/// operands always precede their consumers, so running the closures in
/// reverse creation order is backpropagation.
///
/// Recording is explicit: a tape constructed with recording=false stores
/// values only (an inference arena) and refuses backward(). There is no
/// global state; a tape belongs to one worker at a time.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  /// Gradient-propagation rule of a node. Receives the tape and the node's
  /// own id; reads grad_view(self) and accumulates into grad(operand).
  using BackFn = std::function<void(Tape&, NodeId)>;

  /// Leaf that never receives a gradient.
  NodeId constant(Matrix value);

  /// Leaf marked as a trainable parameter.
  NodeId parameter(Matrix value);

  /// Records an op node. `back` may be empty for ops with no differentiable
  /// inputs; it is dropped entirely when recording is off or no dependency
  /// needs a gradient.
  NodeId push(Matrix value, const std::vector<NodeId>& deps, BackFn back);

  const Matrix& value(NodeId id) const { return nodes_[check(id)].value; }
  bool needs_grad(NodeId id) const { return nodes_[check(id)].needs_grad; }

  /// Gradient slot, allocated to the value's shape on first access.
  Matrix& grad(NodeId id);
  const Matrix& grad_view(NodeId id) const;

  /// Seeds d(loss)/d(loss) = 1 and runs all closures in reverse order.
  /// `loss` must be a recorded 1x1 node; call at most once per tape.
  void backward(NodeId loss);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    BackFn back;
  };

  NodeId check(NodeId id) const;

  std::vector<Node> nodes_;
  bool recording_;
  bool backward_done_ = false;
};

}  // namespace dscnn
