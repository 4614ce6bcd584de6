// Copyright 2026 The PitchRAVE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pitchrave/kernels/conv.hpp"

#include <cblas.h>

#include <algorithm>
#include <mutex>
#include <string>
#include <vector>

namespace pitchrave::kernels {

namespace {

using Index = std::ptrdiff_t;

// Range of output positions t for which t * stride + k - padding lies in
// [0, in_length).
void ValidRange(const ConvDims& d, std::size_t k, Index out_len, Index& t_lo, Index& t_hi) {
  const Index s = static_cast<Index>(d.stride);
  const Index off = static_cast<Index>(k) - static_cast<Index>(d.padding);
  const Index n = static_cast<Index>(d.in_length);
  t_lo = off >= 0 ? 0 : (-off + s - 1) / s;
  t_hi = n - 1 - off < 0 ? -1 : std::min(out_len - 1, (n - 1 - off) / s);
}

// Rows per GEMM call in the parallel loops. Blocks are fixed, not derived
// from the thread count, and BLAS runs single-threaded inside them.
constexpr Index kRowBlock = 32;

// Row-major C = A . B + beta C for either storage type.
void Gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, Index m, Index n, Index k, const double* a,
          Index lda, const double* b, Index ldb, double beta, double* c, Index ldc) {
  cblas_dgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), 1.0, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

[[maybe_unused]] void Gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, Index m, Index n, Index k,
                           const float* a,
          Index lda, const float* b, Index ldb, float beta, float* c, Index ldc) {
  cblas_sgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), 1.0f, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

void SingleThreadedBlas() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

Index Blocks(Index rows) { return (rows + kRowBlock - 1) / kRowBlock; }

struct TapRange {
  Index lo, hi, off;
};

// ValidRange for every tap; the divisions stay out of the channel loops.
std::vector<TapRange> TapRanges(const ConvDims& d, Index out_len) {
  std::vector<TapRange> r(d.kernel);
  for (std::size_t k = 0; k < d.kernel; ++k) {
    ValidRange(d, k, out_len, r[k].lo, r[k].hi);
    r[k].off = static_cast<Index>(k) - static_cast<Index>(d.padding);
  }
  return r;
}

}  // namespace

std::size_t ConvDims::out_length() const {
  if (stride == 0 || kernel == 0) throw UsageError("conv1d: zero stride or kernel");
  const std::size_t padded = in_length + 2 * padding;
  if (padded < kernel) {
    throw UsageError("conv1d: kernel " + std::to_string(kernel) + " longer than padded input " +
                     std::to_string(padded));
  }
  return (padded - kernel) / stride + 1;
}

// The parallel kernels gather each batch row into a (C*K) x T column buffer
// once, so the inner loops run over contiguous output positions with no
// bounds logic. Padded positions hold zeros.
void Im2Col(const ConvDims& d, const std::vector<TapRange>& taps, const Real* xb, Index out_len,
            std::vector<Real>& col) {
  const Index s = static_cast<Index>(d.stride);
  const Index ck = static_cast<Index>(d.in_channels * d.kernel);
  col.assign(static_cast<std::size_t>(ck * out_len), Real{0});
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < ck; ++r) {
    const std::size_t c = static_cast<std::size_t>(r) / d.kernel;
    const auto [lo, hi, off] = taps[static_cast<std::size_t>(r) % d.kernel];
    const Real* xc = xb + c * d.in_length;
    Real* row = col.data() + r * out_len;
    for (Index t = lo; t <= hi; ++t) row[t] = xc[t * s + off];
  }
}

void Conv1dForward(const ConvDims& d, std::span<const Real> x, std::span<const Real> w,
                   std::span<const Real> bias, std::span<Real> y) {
  SingleThreadedBlas();
  const Index out_len = static_cast<Index>(d.out_length());
  const Index cout = static_cast<Index>(d.out_channels);
  const Index ck = static_cast<Index>(d.in_channels * d.kernel);
  const auto taps = TapRanges(d, out_len);
  std::vector<Real> col;
  for (std::size_t b = 0; b < d.batch; ++b) {
    Im2Col(d, taps, x.data() + b * d.in_channels * d.in_length, out_len, col);
    Real* yb = y.data() + static_cast<Index>(b) * cout * out_len;
    // y_b = bias + W . col, one block of output channels per task.
#pragma omp parallel for schedule(static)
    for (Index blk = 0; blk < Blocks(cout); ++blk) {
      const Index o0 = blk * kRowBlock;
      const Index m = std::min(kRowBlock, cout - o0);
      for (Index o = o0; o < o0 + m; ++o) {
        const Real init = bias.empty() ? Real{0} : bias[static_cast<std::size_t>(o)];
        std::fill(yb + o * out_len, yb + (o + 1) * out_len, init);
      }
      Gemm(CblasNoTrans, CblasNoTrans, m, out_len, ck, w.data() + o0 * ck, ck, col.data(),
           out_len, Real{1}, yb + o0 * out_len, out_len);
    }
  }
}

void Conv1dBackwardInput(const ConvDims& d, std::span<const Real> grad_y,
                         std::span<const Real> w, std::span<Real> grad_x) {
  SingleThreadedBlas();
  const Index out_len = static_cast<Index>(d.out_length());
  const Index cin = static_cast<Index>(d.in_channels);
  const Index cout = static_cast<Index>(d.out_channels);
  const Index s = static_cast<Index>(d.stride);
  const Index ck = static_cast<Index>(d.in_channels * d.kernel);
  const auto taps = TapRanges(d, out_len);
  std::vector<Real> gcol(static_cast<std::size_t>(ck * out_len));
  for (std::size_t b = 0; b < d.batch; ++b) {
    const Real* gyb = grad_y.data() + static_cast<Index>(b) * cout * out_len;
    // Column gradient W^T . gy, by blocks of column rows.
#pragma omp parallel for schedule(static)
    for (Index blk = 0; blk < Blocks(ck); ++blk) {
      const Index r0 = blk * kRowBlock;
      Gemm(CblasTrans, CblasNoTrans, std::min(kRowBlock, ck - r0), out_len, cout, w.data() + r0,
           ck, gyb, out_len, Real{0}, gcol.data() + r0 * out_len, out_len);
    }
    // Scatter back; each input channel is owned by one thread.
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < cin; ++c) {
      Real* gx = grad_x.data() + (static_cast<Index>(b) * cin + c) * static_cast<Index>(d.in_length);
      std::fill(gx, gx + d.in_length, Real{0});
      for (std::size_t k = 0; k < d.kernel; ++k) {
        const auto [lo, hi, off] = taps[k];
        const Real* row = gcol.data() + (c * static_cast<Index>(d.kernel) + static_cast<Index>(k)) * out_len;
        for (Index t = lo; t <= hi; ++t) gx[t * s + off] += row[t];
      }
    }
  }
}

void Conv1dBackwardWeight(const ConvDims& d, std::span<const Real> x,
                          std::span<const Real> grad_y, std::span<Real> grad_w) {
  SingleThreadedBlas();
  const Index out_len = static_cast<Index>(d.out_length());
  const Index cout = static_cast<Index>(d.out_channels);
  const Index ck = static_cast<Index>(d.in_channels * d.kernel);
  const auto taps = TapRanges(d, out_len);
  std::vector<Real> col;
  // grad_w += gy_b . col_b^T, batches in order.
  for (std::size_t b = 0; b < d.batch; ++b) {
    Im2Col(d, taps, x.data() + b * d.in_channels * d.in_length, out_len, col);
    const Real* gyb = grad_y.data() + static_cast<Index>(b) * cout * out_len;
#pragma omp parallel for schedule(static)
    for (Index blk = 0; blk < Blocks(cout); ++blk) {
      const Index o0 = blk * kRowBlock;
      Gemm(CblasNoTrans, CblasTrans, std::min(kRowBlock, cout - o0), ck, out_len,
           gyb + o0 * out_len, out_len, col.data(), out_len, Real{1}, grad_w.data() + o0 * ck, ck);
    }
  }
}

void Conv1dBackwardBias(const ConvDims& d, std::span<const Real> grad_y,
                        std::span<Real> grad_bias) {
  const std::size_t out_len = d.out_length();
  for (std::size_t o = 0; o < d.out_channels; ++o) {
    Real acc = 0;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const Real* gy = grad_y.data() + (b * d.out_channels + o) * out_len;
      for (std::size_t t = 0; t < out_len; ++t) acc += gy[t];
    }
    grad_bias[o] += acc;
  }
}

namespace reference {

void Conv1dForward(const ConvDims& d, std::span<const Real> x, std::span<const Real> w,
                   std::span<const Real> bias, std::span<Real> y) {
  const std::size_t out_len = d.out_length();
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t o = 0; o < d.out_channels; ++o)
      for (std::size_t t = 0; t < out_len; ++t) {
        Real acc = bias.empty() ? Real{0} : bias[o];
        for (std::size_t c = 0; c < d.in_channels; ++c)
          for (std::size_t k = 0; k < d.kernel; ++k) {
            const Index i = static_cast<Index>(t * d.stride + k) - static_cast<Index>(d.padding);
            if (i < 0 || i >= static_cast<Index>(d.in_length)) continue;
            acc += w[(o * d.in_channels + c) * d.kernel + k] *
                   x[(b * d.in_channels + c) * d.in_length + static_cast<std::size_t>(i)];
          }
        y[(b * d.out_channels + o) * out_len + t] = acc;
      }
}

void Conv1dBackwardInput(const ConvDims& d, std::span<const Real> grad_y,
                         std::span<const Real> w, std::span<Real> grad_x) {
  const std::size_t out_len = d.out_length();
  std::fill(grad_x.begin(), grad_x.begin() + static_cast<Index>(d.batch * d.in_channels * d.in_length),
            Real{0});
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t o = 0; o < d.out_channels; ++o)
      for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t c = 0; c < d.in_channels; ++c)
          for (std::size_t k = 0; k < d.kernel; ++k) {
            const Index i = static_cast<Index>(t * d.stride + k) - static_cast<Index>(d.padding);
            if (i < 0 || i >= static_cast<Index>(d.in_length)) continue;
            grad_x[(b * d.in_channels + c) * d.in_length + static_cast<std::size_t>(i)] +=
                w[(o * d.in_channels + c) * d.kernel + k] *
                grad_y[(b * d.out_channels + o) * out_len + t];
          }
}

void Conv1dBackwardWeight(const ConvDims& d, std::span<const Real> x,
                          std::span<const Real> grad_y, std::span<Real> grad_w) {
  const std::size_t out_len = d.out_length();
  for (std::size_t b = 0; b < d.batch; ++b)
    for (std::size_t o = 0; o < d.out_channels; ++o)
      for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t c = 0; c < d.in_channels; ++c)
          for (std::size_t k = 0; k < d.kernel; ++k) {
            const Index i = static_cast<Index>(t * d.stride + k) - static_cast<Index>(d.padding);
            if (i < 0 || i >= static_cast<Index>(d.in_length)) continue;
            grad_w[(o * d.in_channels + c) * d.kernel + k] +=
                grad_y[(b * d.out_channels + o) * out_len + t] *
                x[(b * d.in_channels + c) * d.in_length + static_cast<std::size_t>(i)];
          }
}

}  // namespace reference

}  // namespace pitchrave::kernels
