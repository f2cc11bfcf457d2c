#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace emofuse {

/// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
///
/// Copies are shallow: they share the underlying storage, so the parameter
/// tensor held by a model and the copy captured on an autodiff tape see one
/// data buffer and one gradient buffer. By convention values are only
/// mutated in two places: at construction and when an optimizer applies an
/// update. Everything else treats tensors as immutable values, which makes
/// sharing across threads safe for reading.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::int64_t> shape, bool requires_grad = false);

  static Tensor from_data(std::vector<std::int64_t> shape,
                          std::vector<double> data, bool requires_grad = false);
  static Tensor full(std::vector<std::int64_t> shape, double value,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return store_ != nullptr; }
  const std::vector<std::int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t extent(int axis) const { return shape_.at(axis); }
  std::size_t size() const;

  std::span<const double> data() const;
  std::span<double> data();
  double at(std::size_t flat_index) const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool value) { requires_grad_ = value; }

  /// True once a gradient buffer has been allocated.
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> grad();
  /// Allocates a zero gradient buffer if absent.
  void ensure_grad();
  /// Allocates if needed and fills the gradient buffer with zeros.
  void zero_grad();
  /// Drops the gradient buffer.
  void clear_grad();

  /// View with a new shape over the same storage (and gradient buffer).
  /// The element count must be unchanged.
  Tensor reshape(std::vector<std::int64_t> new_shape) const;

  /// Deep copy of the values; the clone has no gradient buffer.
  Tensor clone() const;

  /// True when both tensors share the same storage.
  bool shares_storage_with(const Tensor& other) const {
    return store_ != nullptr && store_ == other.store_;
  }

  bool all_finite() const;

  std::string shape_string() const;

 private:
  struct Storage {
    std::vector<double> data;
    std::vector<double> grad;  // empty until a gradient is requested
  };

  std::shared_ptr<Storage> store_;
  std::vector<std::int64_t> shape_;
  bool requires_grad_ = false;
};

/// Number of elements implied by a shape; validates positive extents.
std::size_t shape_size(const std::vector<std::int64_t>& shape);

}  // namespace emofuse
