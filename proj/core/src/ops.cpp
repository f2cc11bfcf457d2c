#include "emofuse/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "emofuse/error.hpp"

namespace emofuse {

namespace {

using std::int64_t;

bool grad_wanted(const Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Valid output range [lo, hi) along one axis for a given kernel offset, so
// that the corresponding input index o*stride + k - pad stays inside [0, n).
void kernel_axis_range(int64_t n, int64_t n_out, int64_t k, int64_t pad,
                       int64_t stride, int64_t* lo, int64_t* hi) {
  *lo = (pad > k) ? (pad - k + stride - 1) / stride : 0;
  const int64_t top = n - 1 - k + pad;
  if (top < 0) {
    *hi = *lo;
    return;
  }
  *hi = std::min(n_out, top / stride + 1);
  if (*hi < *lo) *hi = *lo;
}

// Contiguous y[i] += a * x[i]; the per-tap edge loop of the convolution.
inline void axpy_n(int64_t n, double a, const double* __restrict x,
                   double* __restrict y) {
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double dot_n(int64_t n, const double* __restrict x,
                    const double* __restrict y) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

// Full-kernel stencil over one run of output columns where every tap is in
// bounds: out[i] += sum_{a,b} taps[a*KW+b] * in[a*stride_in + i + b].
// The compile-time extents let the tap loops unroll so the column loop
// vectorizes with one out load/store per KH*KW multiplies.
template <int KH, int KW>
void stencil_rows(int64_t n, const double* __restrict in, int64_t in_stride,
                  const double* __restrict taps, double* __restrict out) {
  for (int64_t i = 0; i < n; ++i) {
    double acc = out[i];
    for (int a = 0; a < KH; ++a) {
      for (int b = 0; b < KW; ++b) {
        acc += taps[a * KW + b] * in[a * in_stride + i + b];
      }
    }
    out[i] = acc;
  }
}

using StencilFn = void (*)(int64_t, const double*, int64_t, const double*,
                           double*);

StencilFn stencil_for(int64_t kh_len, int64_t kw_len) {
  if (kh_len == 1 && kw_len == 1) return stencil_rows<1, 1>;
  if (kh_len == 3 && kw_len == 3) return stencil_rows<3, 3>;
  if (kh_len == 5 && kw_len == 5) return stencil_rows<5, 5>;
  if (kh_len == 7 && kw_len == 7) return stencil_rows<7, 7>;
  return nullptr;
}

// KW running dot products sharing one pass over gout, for the kernel
// gradient: acc[b] += sum_i gout[i] * in[i + b]. Four explicit partial
// sums per tap keep the chains independent so the lane loop maps onto
// vector FMAs; the summation order is fixed by the code, not the data.
template <int KW>
void dot_taps(int64_t n, const double* __restrict gout,
              const double* __restrict in, double* __restrict acc) {
  double lane[KW][4] = {};
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int b = 0; b < KW; ++b) {
      for (int l = 0; l < 4; ++l) {
        lane[b][l] += gout[i + l] * in[i + l + b];
      }
    }
  }
  for (; i < n; ++i) {
    for (int b = 0; b < KW; ++b) lane[b][0] += gout[i] * in[i + b];
  }
  for (int b = 0; b < KW; ++b) {
    acc[b] += (lane[b][0] + lane[b][1]) + (lane[b][2] + lane[b][3]);
  }
}

using DotTapsFn = void (*)(int64_t, const double*, const double*, double*);

DotTapsFn dot_taps_for(int64_t kw_len) {
  if (kw_len == 1) return dot_taps<1>;
  if (kw_len == 3) return dot_taps<3>;
  if (kw_len == 5) return dot_taps<5>;
  if (kw_len == 7) return dot_taps<7>;
  return nullptr;
}

inline int64_t clamp_i64(int64_t v, int64_t lo, int64_t hi) {
  return std::max(lo, std::min(v, hi));
}

// Per-tap forward restricted to an output row/column window; handles any
// stride and the borders around the stencil interior.
void taps_forward(double* __restrict out_f, const double* __restrict in_c,
                  const double* __restrict k_fc, int64_t h, int64_t w,
                  int64_t h_out, int64_t w_out, int64_t kh_len, int64_t kw_len,
                  int64_t stride, int64_t pad, int64_t row_from, int64_t row_to,
                  int64_t col_from, int64_t col_to) {
  for (int64_t kh = 0; kh < kh_len; ++kh) {
    int64_t oh_lo, oh_hi;
    kernel_axis_range(h, h_out, kh, pad, stride, &oh_lo, &oh_hi);
    oh_lo = std::max(oh_lo, row_from);
    oh_hi = std::min(oh_hi, row_to);
    for (int64_t kw = 0; kw < kw_len; ++kw) {
      int64_t ow_lo, ow_hi;
      kernel_axis_range(w, w_out, kw, pad, stride, &ow_lo, &ow_hi);
      ow_lo = std::max(ow_lo, col_from);
      ow_hi = std::min(ow_hi, col_to);
      if (ow_hi <= ow_lo) continue;
      const double weight = k_fc[kh * kw_len + kw];
      const int64_t koff = kw - pad;
      if (stride == 1) {
        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
          const double* in_row = in_c + (oh + kh - pad) * w + koff + ow_lo;
          axpy_n(ow_hi - ow_lo, weight, in_row, out_f + oh * w_out + ow_lo);
        }
      } else {
        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
          const double* in_row = in_c + (oh * stride + kh - pad) * w;
          double* out_row = out_f + oh * w_out;
          for (int64_t ow = ow_lo; ow < ow_hi; ++ow) {
            out_row[ow] += weight * in_row[ow * stride + koff];
          }
        }
      }
    }
  }
}

// out[f] += correlation of one input plane with one kernel plane.
void conv2d_plane_forward(double* __restrict out_f,
                          const double* __restrict in_c,
                          const double* __restrict k_fc,
                          int64_t h, int64_t w, int64_t h_out, int64_t w_out,
                          int64_t kh_len, int64_t kw_len, int64_t stride,
                          int64_t pad) {
  const StencilFn stencil = stencil_for(kh_len, kw_len);
  if (stride != 1 || stencil == nullptr) {
    taps_forward(out_f, in_c, k_fc, h, w, h_out, w_out, kh_len, kw_len, stride,
                 pad, 0, h_out, 0, w_out);
    return;
  }
  // Interior block where the whole kernel window is in bounds.
  const int64_t row_lo = clamp_i64(pad, 0, h_out);
  const int64_t row_hi = clamp_i64(h - kh_len + 1 + pad, row_lo, h_out);
  const int64_t col_lo = clamp_i64(pad, 0, w_out);
  const int64_t col_hi = clamp_i64(w - kw_len + 1 + pad, col_lo, w_out);
  if (col_hi > col_lo) {
    for (int64_t oh = row_lo; oh < row_hi; ++oh) {
      stencil(col_hi - col_lo, in_c + (oh - pad) * w + (col_lo - pad), w, k_fc,
              out_f + oh * w_out + col_lo);
    }
  }
  taps_forward(out_f, in_c, k_fc, h, w, h_out, w_out, kh_len, kw_len, 1, pad,
               0, row_lo, 0, w_out);
  taps_forward(out_f, in_c, k_fc, h, w, h_out, w_out, kh_len, kw_len, 1, pad,
               row_hi, h_out, 0, w_out);
  taps_forward(out_f, in_c, k_fc, h, w, h_out, w_out, kh_len, kw_len, 1, pad,
               row_lo, row_hi, 0, col_lo);
  taps_forward(out_f, in_c, k_fc, h, w, h_out, w_out, kh_len, kw_len, 1, pad,
               row_lo, row_hi, col_hi, w_out);
}

// Per-tap input gradient restricted to an output row/column window.
void taps_backward_input(double* __restrict gin_c,
                         const double* __restrict gout_f,
                         const double* __restrict k_fc, int64_t h, int64_t w,
                         int64_t h_out, int64_t w_out, int64_t kh_len,
                         int64_t kw_len, int64_t stride, int64_t pad,
                         int64_t row_from, int64_t row_to, int64_t col_from,
                         int64_t col_to) {
  for (int64_t kh = 0; kh < kh_len; ++kh) {
    int64_t oh_lo, oh_hi;
    kernel_axis_range(h, h_out, kh, pad, stride, &oh_lo, &oh_hi);
    oh_lo = std::max(oh_lo, row_from);
    oh_hi = std::min(oh_hi, row_to);
    for (int64_t kw = 0; kw < kw_len; ++kw) {
      int64_t ow_lo, ow_hi;
      kernel_axis_range(w, w_out, kw, pad, stride, &ow_lo, &ow_hi);
      ow_lo = std::max(ow_lo, col_from);
      ow_hi = std::min(ow_hi, col_to);
      if (ow_hi <= ow_lo) continue;
      const double weight = k_fc[kh * kw_len + kw];
      const int64_t koff = kw - pad;
      if (stride == 1) {
        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
          double* gin_row = gin_c + (oh + kh - pad) * w + koff + ow_lo;
          axpy_n(ow_hi - ow_lo, weight, gout_f + oh * w_out + ow_lo, gin_row);
        }
      } else {
        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
          double* gin_row = gin_c + (oh * stride + kh - pad) * w;
          const double* gout_row = gout_f + oh * w_out;
          for (int64_t ow = ow_lo; ow < ow_hi; ++ow) {
            gin_row[ow * stride + koff] += weight * gout_row[ow];
          }
        }
      }
    }
  }
}

// Gradient w.r.t. one input plane: the transpose of the forward pass. For
// stride 1 the interior is the same stencil with reversed taps applied to
// the output gradient: gin[y][x] += sum taps[kh][kw] * gout[y+pad-kh][x+pad-kw].
void conv2d_plane_backward_input(double* __restrict gin_c,
                                 const double* __restrict gout_f,
                                 const double* __restrict k_fc, int64_t h, int64_t w,
                                 int64_t h_out, int64_t w_out, int64_t kh_len,
                                 int64_t kw_len, int64_t stride, int64_t pad) {
  const StencilFn stencil = stencil_for(kh_len, kw_len);
  if (stride != 1 || stencil == nullptr) {
    taps_backward_input(gin_c, gout_f, k_fc, h, w, h_out, w_out, kh_len,
                        kw_len, stride, pad, 0, h_out, 0, w_out);
    return;
  }
  double reversed[64];
  for (int64_t i = 0; i < kh_len * kw_len; ++i) {
    reversed[i] = k_fc[kh_len * kw_len - 1 - i];
  }
  // Input rows/cols whose whole gout window is in bounds.
  const int64_t iy_lo = clamp_i64(kh_len - 1 - pad, 0, h);
  const int64_t iy_hi = clamp_i64(h_out - pad, iy_lo, h);
  const int64_t ix_lo = clamp_i64(kw_len - 1 - pad, 0, w);
  const int64_t ix_hi = clamp_i64(w_out - pad, ix_lo, w);
  if (ix_hi > ix_lo) {
    for (int64_t iy = iy_lo; iy < iy_hi; ++iy) {
      stencil(ix_hi - ix_lo,
              gout_f + (iy - kh_len + 1 + pad) * w_out + (ix_lo - kw_len + 1 + pad),
              w_out, reversed, gin_c + iy * w + ix_lo);
    }
  }
  // Edges in input coordinates map back to output-column windows per tap:
  // input index i is touched by tap k at output o = i - k + pad.
  for (int64_t kh = 0; kh < kh_len; ++kh) {
    for (int64_t kw = 0; kw < kw_len; ++kw) {
      int64_t oh_lo, oh_hi, ow_lo, ow_hi;
      kernel_axis_range(h, h_out, kh, pad, 1, &oh_lo, &oh_hi);
      kernel_axis_range(w, w_out, kw, pad, 1, &ow_lo, &ow_hi);
      const double weight = k_fc[kh * kw_len + kw];
      const int64_t koff = kw - pad;
      auto run_cols = [&](int64_t oh, int64_t lo, int64_t hi) {
        if (hi <= lo) return;
        double* gin_row = gin_c + (oh + kh - pad) * w + koff + lo;
        axpy_n(hi - lo, weight, gout_f + oh * w_out + lo, gin_row);
      };
      for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
        const int64_t iy = oh + kh - pad;
        if (iy >= iy_lo && iy < iy_hi) {
          // interior rows: only the columns outside [ix_lo, ix_hi)
          run_cols(oh, ow_lo, std::min(ow_hi, ix_lo - koff));
          run_cols(oh, std::max(ow_lo, ix_hi - koff), ow_hi);
        } else {
          run_cols(oh, ow_lo, ow_hi);
        }
      }
    }
  }
}

// Gradient w.r.t. one kernel plane: per-offset dot products, sharing one
// pass over the output gradient for all kw taps of a row.
void conv2d_plane_backward_kernel(double* __restrict gk_fc,
                                  const double* __restrict gout_f,
                                  const double* __restrict in_c, int64_t h, int64_t w,
                                  int64_t h_out, int64_t w_out, int64_t kh_len,
                                  int64_t kw_len, int64_t stride, int64_t pad) {
  const DotTapsFn fused_dots = stride == 1 ? dot_taps_for(kw_len) : nullptr;
  for (int64_t kh = 0; kh < kh_len; ++kh) {
    int64_t oh_lo, oh_hi;
    kernel_axis_range(h, h_out, kh, pad, stride, &oh_lo, &oh_hi);

    // Columns where every kw tap is valid take the fused path.
    const int64_t col_lo = clamp_i64(pad, 0, w_out);
    const int64_t col_hi = clamp_i64(w - kw_len + 1 + pad, col_lo, w_out);
    if (fused_dots != nullptr && col_hi > col_lo) {
      double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
      for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
        fused_dots(col_hi - col_lo, gout_f + oh * w_out + col_lo,
                   in_c + (oh + kh - pad) * w + col_lo - pad, acc);
      }
      for (int64_t kw = 0; kw < kw_len; ++kw) {
        gk_fc[kh * kw_len + kw] += acc[kw];
      }
    }

    for (int64_t kw = 0; kw < kw_len; ++kw) {
      int64_t ow_lo, ow_hi;
      kernel_axis_range(w, w_out, kw, pad, stride, &ow_lo, &ow_hi);
      const int64_t koff = kw - pad;
      double acc = 0.0;
      if (fused_dots != nullptr && col_hi > col_lo) {
        // only the columns the fused pass did not cover
        const int64_t hi1 = std::min(ow_hi, col_lo);
        const int64_t lo2 = std::max(ow_lo, col_hi);
        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
          const double* in_row = in_c + (oh + kh - pad) * w + koff;
          const double* gout_row = gout_f + oh * w_out;
          if (hi1 > ow_lo) {
            acc += dot_n(hi1 - ow_lo, gout_row + ow_lo, in_row + ow_lo);
          }
          if (ow_hi > lo2) {
            acc += dot_n(ow_hi - lo2, gout_row + lo2, in_row + lo2);
          }
        }
      } else if (stride == 1) {
        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
          acc += dot_n(ow_hi - ow_lo, gout_f + oh * w_out + ow_lo,
                       in_c + (oh + kh - pad) * w + koff + ow_lo);
        }
      } else {
        for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
          const double* in_row = in_c + (oh * stride + kh - pad) * w;
          const double* gout_row = gout_f + oh * w_out;
          for (int64_t ow = ow_lo; ow < ow_hi; ++ow) {
            acc += gout_row[ow] * in_row[ow * stride + koff];
          }
        }
      }
      gk_fc[kh * kw_len + kw] += acc;
    }
  }
}

}  // namespace

Tensor conv1d(const Tensor& signal, const Tensor& kernel, int64_t padding,
              Tape* tape) {
  if (signal.rank() != 1 || kernel.rank() != 1) {
    throw ShapeError("conv1d expects rank-1 signal and kernel, got " +
                     signal.shape_string() + " and " + kernel.shape_string());
  }
  if (padding < 0) throw ConfigError("conv1d padding must be non-negative");
  const int64_t n = signal.extent(0);
  const int64_t k = kernel.extent(0);
  if (k % 2 == 0) {
    throw ConfigError("conv1d kernel length must be odd, got " +
                      std::to_string(k));
  }
  const int64_t n_out = n + 2 * padding - k + 1;
  if (n_out < 1) {
    throw ShapeError("conv1d kernel of length " + std::to_string(k) +
                     " is longer than the padded signal");
  }

  Tensor out({n_out});
  {
    const double* x = signal.data().data();
    const double* h = kernel.data().data();
    double* y = out.data().data();
    for (int64_t i = 0; i < n_out; ++i) {
      double acc = 0.0;
      for (int64_t a = 0; a < k; ++a) {
        const int64_t src = i + k - 1 - a - padding;  // index into the signal
        if (src >= 0 && src < n) acc += h[a] * x[src];
      }
      y[i] = acc;
    }
  }

  if (grad_wanted(tape, {&signal, &kernel})) {
    out.set_requires_grad(true);
    Tensor sig = signal, ker = kernel, res = out;
    tape->record(out, [sig, ker, res, padding, n, k, n_out]() mutable {
      const auto gout = res.grad();
      if (ker.requires_grad()) {
        ker.ensure_grad();
        auto gk = ker.grad();
        const double* x = sig.data().data();
        for (int64_t a = 0; a < k; ++a) {
          double acc = 0.0;
          for (int64_t i = 0; i < n_out; ++i) {
            const int64_t src = i + k - 1 - a - padding;
            if (src >= 0 && src < n) acc += gout[i] * x[src];
          }
          gk[a] += acc;
        }
      }
      if (sig.requires_grad()) {
        sig.ensure_grad();
        auto gx = sig.grad();
        const double* h = ker.data().data();
        for (int64_t i = 0; i < n_out; ++i) {
          for (int64_t a = 0; a < k; ++a) {
            const int64_t src = i + k - 1 - a - padding;
            if (src >= 0 && src < n) gx[src] += gout[i] * h[a];
          }
        }
      }
    });
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int64_t stride, int64_t padding, Tape* tape) {
  if (input.rank() != 3) {
    throw ShapeError("conv2d input must be C x H x W, got " +
                     input.shape_string());
  }
  if (kernels.rank() != 4) {
    throw ShapeError("conv2d kernels must be F x C x Kh x Kw, got " +
                     kernels.shape_string());
  }
  const int64_t c_in = input.extent(0), h = input.extent(1), w = input.extent(2);
  const int64_t f_out = kernels.extent(0), kc = kernels.extent(1);
  const int64_t kh_len = kernels.extent(2), kw_len = kernels.extent(3);
  if (kc != c_in) {
    throw ShapeError("conv2d channel mismatch: input has " +
                     std::to_string(c_in) + " channels, kernels expect " +
                     std::to_string(kc));
  }
  if (bias.rank() != 1 || bias.extent(0) != f_out) {
    throw ShapeError("conv2d bias must have one entry per filter");
  }
  if (kh_len % 2 == 0 || kw_len % 2 == 0) {
    throw ConfigError("conv2d kernel extents must be odd");
  }
  if (stride < 1) throw ConfigError("conv2d stride must be positive");
  if (padding < 0) throw ConfigError("conv2d padding must be non-negative");
  const int64_t h_out = (h + 2 * padding - kh_len) / stride + 1;
  const int64_t w_out = (w + 2 * padding - kw_len) / stride + 1;
  if (h + 2 * padding < kh_len || w + 2 * padding < kw_len) {
    throw ShapeError("conv2d kernel larger than the padded input");
  }

  Tensor out({f_out, h_out, w_out});
  {
    const double* in_p = input.data().data();
    const double* k_p = kernels.data().data();
    const double* b_p = bias.data().data();
    double* out_p = out.data().data();
    for (int64_t f = 0; f < f_out; ++f) {
      double* out_f = out_p + f * h_out * w_out;
      std::fill(out_f, out_f + h_out * w_out, b_p[f]);
      for (int64_t c = 0; c < c_in; ++c) {
        conv2d_plane_forward(out_f, in_p + c * h * w,
                             k_p + (f * c_in + c) * kh_len * kw_len, h, w,
                             h_out, w_out, kh_len, kw_len, stride, padding);
      }
    }
  }

  if (grad_wanted(tape, {&input, &kernels, &bias})) {
    out.set_requires_grad(true);
    Tensor in_t = input, k_t = kernels, b_t = bias, res = out;
    tape->record(out, [in_t, k_t, b_t, res, c_in, h, w, f_out, kh_len, kw_len,
                       h_out, w_out, stride, padding]() mutable {
      const double* gout = res.grad().data();
      if (b_t.requires_grad()) {
        b_t.ensure_grad();
        auto gb = b_t.grad();
        for (int64_t f = 0; f < f_out; ++f) {
          const double* gout_f = gout + f * h_out * w_out;
          double acc = 0.0;
          for (int64_t i = 0; i < h_out * w_out; ++i) acc += gout_f[i];
          gb[f] += acc;
        }
      }
      if (k_t.requires_grad()) {
        k_t.ensure_grad();
        double* gk = k_t.grad().data();
        const double* in_p = in_t.data().data();
        for (int64_t f = 0; f < f_out; ++f) {
          const double* gout_f = gout + f * h_out * w_out;
          for (int64_t c = 0; c < c_in; ++c) {
            conv2d_plane_backward_kernel(
                gk + (f * c_in + c) * kh_len * kw_len, gout_f, in_p + c * h * w,
                h, w, h_out, w_out, kh_len, kw_len, stride, padding);
          }
        }
      }
      if (in_t.requires_grad()) {
        in_t.ensure_grad();
        double* gin = in_t.grad().data();
        const double* k_p = k_t.data().data();
        for (int64_t f = 0; f < f_out; ++f) {
          const double* gout_f = gout + f * h_out * w_out;
          for (int64_t c = 0; c < c_in; ++c) {
            conv2d_plane_backward_input(
                gin + c * h * w, gout_f, k_p + (f * c_in + c) * kh_len * kw_len,
                h, w, h_out, w_out, kh_len, kw_len, stride, padding);
          }
        }
      }
    });
  }
  return out;
}

Tensor maxpool2d(const Tensor& input, Tape* tape) {
  if (input.rank() != 3) {
    throw ShapeError("maxpool2d input must be C x H x W, got " +
                     input.shape_string());
  }
  const int64_t c_in = input.extent(0), h = input.extent(1), w = input.extent(2);
  if (h < 2 || w < 2) {
    throw ShapeError("maxpool2d needs spatial extents of at least 2, got " +
                     input.shape_string());
  }
  const int64_t h_out = h / 2, w_out = w / 2;

  Tensor out({c_in, h_out, w_out});
  std::vector<int64_t> argmax(static_cast<std::size_t>(c_in * h_out * w_out));
  {
    const double* in_p = input.data().data();
    double* out_p = out.data().data();
    int64_t j = 0;
    for (int64_t c = 0; c < c_in; ++c) {
      const double* plane = in_p + c * h * w;
      for (int64_t oh = 0; oh < h_out; ++oh) {
        for (int64_t ow = 0; ow < w_out; ++ow, ++j) {
          // Row-major scan of the 2x2 window; first max wins on ties.
          int64_t best = (2 * oh) * w + 2 * ow;
          double best_v = plane[best];
          const int64_t cand[3] = {best + 1, best + w, best + w + 1};
          for (int64_t idx : cand) {
            if (plane[idx] > best_v) {
              best_v = plane[idx];
              best = idx;
            }
          }
          out_p[j] = best_v;
          argmax[static_cast<std::size_t>(j)] = c * h * w + best;
        }
      }
    }
  }

  if (grad_wanted(tape, {&input})) {
    out.set_requires_grad(true);
    Tensor in_t = input, res = out;
    tape->record(out, [in_t, res, argmax = std::move(argmax)]() mutable {
      in_t.ensure_grad();
      auto gin = in_t.grad();
      const auto gout = res.grad();
      for (std::size_t j = 0; j < argmax.size(); ++j) {
        gin[static_cast<std::size_t>(argmax[j])] += gout[j];
      }
    });
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias,
              Tape* tape) {
  if (input.rank() != 1 || weights.rank() != 2 || bias.rank() != 1) {
    throw ShapeError("linear expects rank-1 input, rank-2 weights, rank-1 bias");
  }
  const int64_t n = input.extent(0);
  const int64_t m = weights.extent(0);
  if (weights.extent(1) != n || bias.extent(0) != m) {
    throw ShapeError("linear dimension mismatch: weights " +
                     weights.shape_string() + ", input " +
                     input.shape_string() + ", bias " + bias.shape_string());
  }

  Tensor out({m});
  {
    const double* x = input.data().data();
    const double* wp = weights.data().data();
    const double* b = bias.data().data();
    double* y = out.data().data();
    for (int64_t i = 0; i < m; ++i) {
      const double* row = wp + i * n;
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += row[j] * x[j];
      y[i] = acc + b[i];
    }
  }

  if (grad_wanted(tape, {&input, &weights, &bias})) {
    out.set_requires_grad(true);
    Tensor in_t = input, w_t = weights, b_t = bias, res = out;
    tape->record(out, [in_t, w_t, b_t, res, m, n]() mutable {
      const double* gout = res.grad().data();
      if (b_t.requires_grad()) {
        b_t.ensure_grad();
        auto gb = b_t.grad();
        for (int64_t i = 0; i < m; ++i) gb[i] += gout[i];
      }
      if (w_t.requires_grad()) {
        w_t.ensure_grad();
        double* gw = w_t.grad().data();
        const double* x = in_t.data().data();
        for (int64_t i = 0; i < m; ++i) {
          const double g = gout[i];
          double* grow = gw + i * n;
          for (int64_t j = 0; j < n; ++j) grow[j] += g * x[j];
        }
      }
      if (in_t.requires_grad()) {
        in_t.ensure_grad();
        double* gx = in_t.grad().data();
        const double* wp = w_t.data().data();
        for (int64_t i = 0; i < m; ++i) {
          const double g = gout[i];
          const double* row = wp + i * n;
          for (int64_t j = 0; j < n; ++j) gx[j] += g * row[j];
        }
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& input, Tape* tape) {
  Tensor out(input.shape());
  {
    const auto x = input.data();
    auto y = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
  if (grad_wanted(tape, {&input})) {
    out.set_requires_grad(true);
    Tensor in_t = input, res = out;
    tape->record(out, [in_t, res]() mutable {
      in_t.ensure_grad();
      auto gin = in_t.grad();
      const auto gout = res.grad();
      const auto x = in_t.data();
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) gin[i] += gout[i];
      }
    });
  }
  return out;
}

Tensor softmax(const Tensor& scores, Tape* tape) {
  if (scores.rank() != 1) {
    throw ShapeError("softmax expects a rank-1 score vector, got " +
                     scores.shape_string());
  }
  if (!scores.all_finite()) {
    throw NumericError("softmax input contains non-finite scores");
  }
  const auto x = scores.data();
  Tensor out(scores.shape());
  auto p = out.data();
  double max_score = -std::numeric_limits<double>::infinity();
  for (double v : x) max_score = std::max(max_score, v);
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(x[i] - max_score);
    norm += p[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) p[i] /= norm;

  if (grad_wanted(tape, {&scores})) {
    out.set_requires_grad(true);
    Tensor in_t = scores, res = out;
    tape->record(out, [in_t, res]() mutable {
      in_t.ensure_grad();
      auto gin = in_t.grad();
      const auto gout = res.grad();
      const auto prob = res.data();
      double dot = 0.0;
      for (std::size_t i = 0; i < prob.size(); ++i) dot += gout[i] * prob[i];
      for (std::size_t i = 0; i < prob.size(); ++i) {
        gin[i] += prob[i] * (gout[i] - dot);
      }
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& probs, int64_t true_class, Tape* tape) {
  if (probs.rank() != 1) {
    throw ShapeError("cross_entropy expects a rank-1 probability vector");
  }
  const int64_t n = probs.extent(0);
  if (true_class < 0 || true_class >= n) {
    throw ConfigError("cross_entropy class index " +
                      std::to_string(true_class) + " out of range [0, " +
                      std::to_string(n) + ")");
  }
  constexpr double kFloor = 1e-15;
  const double p = std::clamp(probs.at(static_cast<std::size_t>(true_class)),
                              kFloor, 1.0);
  Tensor out = Tensor::scalar(-std::log(p));

  if (grad_wanted(tape, {&probs})) {
    out.set_requires_grad(true);
    Tensor in_t = probs, res = out;
    tape->record(out, [in_t, res, true_class, p]() mutable {
      in_t.ensure_grad();
      // Slope taken from the floored probability so the pull stays finite.
      in_t.grad()[static_cast<std::size_t>(true_class)] +=
          res.grad()[0] * (-1.0 / p);
    });
  }
  return out;
}

Tensor concat(const Tensor& a, const Tensor& b, Tape* tape) {
  if (a.rank() != 1 || b.rank() != 1) {
    throw ShapeError("concat expects two rank-1 tensors");
  }
  const int64_t na = a.extent(0), nb = b.extent(0);
  Tensor out({na + nb});
  {
    auto y = out.data();
    const auto xa = a.data(), xb = b.data();
    std::copy(xa.begin(), xa.end(), y.begin());
    std::copy(xb.begin(), xb.end(), y.begin() + na);
  }
  if (grad_wanted(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor a_t = a, b_t = b, res = out;
    tape->record(out, [a_t, b_t, res, na, nb]() mutable {
      const auto gout = res.grad();
      if (a_t.requires_grad()) {
        a_t.ensure_grad();
        auto ga = a_t.grad();
        for (int64_t i = 0; i < na; ++i) ga[i] += gout[i];
      }
      if (b_t.requires_grad()) {
        b_t.ensure_grad();
        auto gb = b_t.grad();
        for (int64_t i = 0; i < nb; ++i) gb[i] += gout[na + i];
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b, Tape* tape) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add expects identical shapes, got " + a.shape_string() +
                     " and " + b.shape_string());
  }
  Tensor out(a.shape());
  {
    auto y = out.data();
    const auto xa = a.data(), xb = b.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = xa[i] + xb[i];
  }
  if (grad_wanted(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor a_t = a, b_t = b, res = out;
    tape->record(out, [a_t, b_t, res]() mutable {
      const auto gout = res.grad();
      for (Tensor* t : {&a_t, &b_t}) {
        if (!t->requires_grad()) continue;
        t->ensure_grad();
        auto g = t->grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gout[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b, Tape* tape) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul expects identical shapes, got " + a.shape_string() +
                     " and " + b.shape_string());
  }
  Tensor out(a.shape());
  {
    auto y = out.data();
    const auto xa = a.data(), xb = b.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = xa[i] * xb[i];
  }
  if (grad_wanted(tape, {&a, &b})) {
    out.set_requires_grad(true);
    Tensor a_t = a, b_t = b, res = out;
    tape->record(out, [a_t, b_t, res]() mutable {
      const auto gout = res.grad();
      if (a_t.requires_grad()) {
        a_t.ensure_grad();
        auto ga = a_t.grad();
        const auto xb = b_t.data();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gout[i] * xb[i];
      }
      if (b_t.requires_grad()) {
        b_t.ensure_grad();
        auto gb = b_t.grad();
        const auto xa = a_t.data();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gout[i] * xa[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& input, double factor, Tape* tape) {
  Tensor out(input.shape());
  {
    auto y = out.data();
    const auto x = input.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = factor * x[i];
  }
  if (grad_wanted(tape, {&input})) {
    out.set_requires_grad(true);
    Tensor in_t = input, res = out;
    tape->record(out, [in_t, res, factor]() mutable {
      in_t.ensure_grad();
      auto gin = in_t.grad();
      const auto gout = res.grad();
      for (std::size_t i = 0; i < gin.size(); ++i) gin[i] += factor * gout[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& input, Tape* tape) {
  double acc = 0.0;
  for (double v : input.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  if (grad_wanted(tape, {&input})) {
    out.set_requires_grad(true);
    Tensor in_t = input, res = out;
    tape->record(out, [in_t, res]() mutable {
      in_t.ensure_grad();
      auto gin = in_t.grad();
      const double g = res.grad()[0];
      for (std::size_t i = 0; i < gin.size(); ++i) gin[i] += g;
    });
  }
  return out;
}

}  // namespace emofuse
