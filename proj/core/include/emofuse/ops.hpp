#pragma once

#include <cstdint>

#include "emofuse/autodiff.hpp"
#include "emofuse/tensor.hpp"

namespace emofuse {

// Differentiable operations. Each takes an optional tape; when one is given
// and an input requires a gradient, a backward node is recorded and the
// output is marked as requiring a gradient too.

/// 1-D discrete convolution of a signal with an odd-length kernel, zero
/// padding on both sides. The kernel is flipped (true convolution): with
/// the kernel spanning logical indices -T..T,
///   out[i] = sum_k kernel[k] * padded[i + T - k].
/// Output length is signal + 2*padding - kernel + 1.
Tensor conv1d(const Tensor& signal, const Tensor& kernel, std::int64_t padding,
              Tape* tape = nullptr);

/// 2-D multi-channel convolution: input C x H x W, kernels F x C x Kh x Kw,
/// bias F, producing F x H' x W' with H' = (H + 2p - Kh)/stride + 1.
///
/// Kernels are applied in cross-correlation orientation (not flipped).
/// Because the kernels are learned this spans the same function class as
/// the flipped form; the orientation only fixes how stored coefficients
/// are read.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              std::int64_t stride, std::int64_t padding, Tape* tape = nullptr);

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
/// The backward pass routes the gradient to the first maximal element of
/// each window in row-major order.
Tensor maxpool2d(const Tensor& input, Tape* tape = nullptr);

/// Fully-connected layer: weights (m x n) * input (n) + bias (m).
Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias,
              Tape* tape = nullptr);

/// Elementwise max(0, x). The subgradient at exactly 0 is taken as 0.
Tensor relu(const Tensor& input, Tape* tape = nullptr);

/// Softmax over a rank-1 score vector, computed with max subtraction.
Tensor softmax(const Tensor& scores, Tape* tape = nullptr);

/// Cross-entropy -log(p[true_class]) with p clamped into [1e-15, 1].
/// Composed with softmax, the gradient on the scores is (p - onehot).
Tensor cross_entropy(const Tensor& probs, std::int64_t true_class,
                     Tape* tape = nullptr);

// Structural / arithmetic helpers used by the network and the training loop.

/// Concatenation of two rank-1 tensors.
Tensor concat(const Tensor& a, const Tensor& b, Tape* tape = nullptr);

/// Elementwise sum of two tensors of identical shape.
Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr);

/// Elementwise product of two tensors of identical shape.
Tensor mul(const Tensor& a, const Tensor& b, Tape* tape = nullptr);

/// Multiplication by a constant.
Tensor scale(const Tensor& input, double factor, Tape* tape = nullptr);

/// Sum of all elements, as a scalar tensor.
Tensor sum(const Tensor& input, Tape* tape = nullptr);

}  // namespace emofuse
