#include "emofuse/autodiff.hpp"

#include <utility>

#include "emofuse/error.hpp"

namespace emofuse {

void Tape::record(Tensor output, std::function<void()> pull_gradient) {
  nodes_.push_back(Node{std::move(output), std::move(pull_gradient)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw UsageError("backward expects a scalar loss, got shape " +
                     loss.shape_string());
  }
  // Intermediates start from zero on every call; leaves keep accumulating.
  for (Node& node : nodes_) {
    node.output.zero_grad();
  }
  Tensor seed = loss;
  seed.ensure_grad();
  seed.grad()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->pull();
  }
}

void Tape::clear() {
  nodes_.clear();
}

}  // namespace emofuse
