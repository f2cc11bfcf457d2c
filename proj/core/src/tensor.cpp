#include "emofuse/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "emofuse/error.hpp"

namespace emofuse {

std::size_t shape_size(const std::vector<std::int64_t>& shape) {
  std::size_t n = 1;
  for (std::int64_t extent : shape) {
    if (extent <= 0) {
      throw ShapeError("tensor extents must be positive, got " +
                       std::to_string(extent));
    }
    n *= static_cast<std::size_t>(extent);
  }
  return n;
}

Tensor::Tensor(std::vector<std::int64_t> shape, bool requires_grad)
    : store_(std::make_shared<Storage>()),
      shape_(std::move(shape)),
      requires_grad_(requires_grad) {
  store_->data.assign(shape_size(shape_), 0.0);
}

Tensor Tensor::from_data(std::vector<std::int64_t> shape,
                         std::vector<double> data, bool requires_grad) {
  if (shape_size(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape product " +
                     std::to_string(shape_size(shape)));
  }
  Tensor t;
  t.store_ = std::make_shared<Storage>();
  t.store_->data = std::move(data);
  t.shape_ = std::move(shape);
  t.requires_grad_ = requires_grad;
  return t;
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value,
                    bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  for (double& x : t.store_->data) x = value;
  return t;
}

Tensor Tensor::scalar(double value) {
  return from_data({1}, {value});
}

std::size_t Tensor::size() const {
  return store_ ? store_->data.size() : 0;
}

std::span<const double> Tensor::data() const {
  if (!store_) throw UsageError("access to an undefined tensor");
  return store_->data;
}

std::span<double> Tensor::data() {
  if (!store_) throw UsageError("access to an undefined tensor");
  return store_->data;
}

double Tensor::at(std::size_t flat_index) const {
  return data()[flat_index];
}

bool Tensor::has_grad() const {
  return store_ && !store_->grad.empty();
}

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw UsageError("gradient buffer not allocated");
  return store_->grad;
}

std::span<double> Tensor::grad() {
  if (!has_grad()) throw UsageError("gradient buffer not allocated");
  return store_->grad;
}

void Tensor::ensure_grad() {
  if (!store_) throw UsageError("access to an undefined tensor");
  if (store_->grad.empty()) store_->grad.assign(store_->data.size(), 0.0);
}

void Tensor::zero_grad() {
  ensure_grad();
  std::fill(store_->grad.begin(), store_->grad.end(), 0.0);
}

void Tensor::clear_grad() {
  if (store_) store_->grad.clear();
}

Tensor Tensor::reshape(std::vector<std::int64_t> new_shape) const {
  if (!store_) throw UsageError("reshape of an undefined tensor");
  if (shape_size(new_shape) != store_->data.size()) {
    throw ShapeError("reshape from " + shape_string() + " changes element count");
  }
  Tensor view = *this;
  view.shape_ = std::move(new_shape);
  return view;
}

Tensor Tensor::clone() const {
  if (!store_) return {};
  Tensor copy;
  copy.store_ = std::make_shared<Storage>();
  copy.store_->data = store_->data;
  copy.shape_ = shape_;
  copy.requires_grad_ = requires_grad_;
  return copy;
}

bool Tensor::all_finite() const {
  if (!store_) return true;
  for (double x : store_->data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) out << "x";
    out << shape_[i];
  }
  out << "]";
  return out.str();
}

}  // namespace emofuse
