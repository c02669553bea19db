#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "vrgnn/tensor.hpp"

namespace vrgnn::ad {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  const std::vector<std::size_t>& shape() const { return value().shape(); }
};

/// Linear record of primitive applications for one forward pass.
///
/// Backward walks the record in reverse; nodes that do not require a
/// gradient are skipped entirely, so an inference pass on a tape of
/// non-grad leaves costs nothing extra.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Records the output of a primitive. `parents` decide whether the output
  /// requires a gradient; `fn` is dropped when none of them do.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);

  /// Fills grad() for every node reachable from `loss`. Gradient buffers are
  /// reset first, so repeated calls do not accumulate.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient buffer; zeros for nodes the loss does not depend on.
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Mutable gradient of a node, allocated on first use. For backward fns.
  Tensor& grad_buffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  mutable Tensor empty_grad_;
};

}  // namespace vrgnn::ad
