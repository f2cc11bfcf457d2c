#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "emofuse/tensor.hpp"

namespace emofuse {

/// Reverse-mode tape recorded during a forward pass.
///
/// Operations append one node per call: the produced tensor plus a closure
/// that pulls the output gradient back into the inputs' gradient buffers.
/// backward() seeds d(loss)/d(loss) = 1 and replays nodes in reverse.
///
/// Gradients of node outputs (intermediates) are reset on every backward()
/// call, while leaf tensors (parameters and inputs, which were never
/// produced by a recorded op) accumulate across calls until the caller
/// resets them. A tape is confined to a single thread; concurrent forward
/// passes each use their own tape.
class Tape {
 public:
  void record(Tensor output, std::function<void()> pull_gradient);

  /// Propagates gradients from a scalar loss back through every recorded
  /// node. Throws UsageError if the loss is not a single element.
  void backward(const Tensor& loss);

  void clear();
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor output;
    std::function<void()> pull;
  };
  std::vector<Node> nodes_;
};

}  // namespace emofuse
