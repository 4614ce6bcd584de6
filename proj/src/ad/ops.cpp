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

#include "pitchrave/ad/ops.hpp"

#include <cmath>
#include <string>

#include "pitchrave/branch_trace.hpp"
#include "pitchrave/dsp/pqmf.hpp"
#include "pitchrave/kernels/conv.hpp"
#include "pitchrave/metrics/distance.hpp"

namespace pitchrave::ad {

namespace {

[[noreturn]] void ShapeError(const std::string& op, const std::string& detail) {
  throw UsageError(op + ": " + detail);
}

void RequireRank(const std::string& op, const Tensor& t, std::size_t rank, const char* what) {
  if (!t.defined()) ShapeError(op, std::string(what) + " is undefined");
  if (t.rank() != rank) {
    ShapeError(op, std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                       ShapeString(t.shape()));
  }
}

void RequireSameShape(const std::string& op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    ShapeError(op, "shape mismatch " + ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
}

// Elementwise unary op with derivative expressed through input and output.
// Non-smooth ops (kink at zero) report their branches to an active trace.
template <typename Forward, typename Derivative>
Tensor Unary(Tape& tape, const Tensor& x, Forward f, Derivative df, bool kink_at_zero = false) {
  Tensor y = Tensor::Zeros(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = f(xv[i]);
  if (BranchTrace* trace = kink_at_zero ? BranchTrace::Active() : nullptr) {
    for (Real v : xv) trace->Note(v);
  }
  const Tensor inputs[] = {x};
  tape.Record(inputs, y, [x, y, df]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto gy = y.grad();
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * df(xv[i], yv[i]);
  });
  return y;
}

kernels::ConvDims CheckConv(const std::string& op, const Tensor& x, std::size_t x_channels,
                            std::size_t other_channels, const Tensor& w, std::size_t stride,
                            std::size_t padding) {
  kernels::ConvDims d;
  d.batch = x.dim(0);
  d.in_channels = x_channels;
  d.out_channels = other_channels;
  d.in_length = x.dim(2);
  d.kernel = w.dim(2);
  d.stride = stride;
  d.padding = padding;
  if (stride == 0) ShapeError(op, "stride must be positive");
  return d;
}

}  // namespace

Tensor Conv1d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t stride, std::size_t padding) {
  const std::string op = "conv1d";
  RequireRank(op, x, 3, "input");
  RequireRank(op, w, 3, "weight");
  if (w.dim(1) != x.dim(1)) {
    ShapeError(op, "input " + ShapeString(x.shape()) + " has " + std::to_string(x.dim(1)) +
                       " channels but weight " + ShapeString(w.shape()) + " expects " +
                       std::to_string(w.dim(1)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != w.dim(0))) {
    ShapeError(op, "bias " + ShapeString(bias.shape()) + " does not match weight " +
                       ShapeString(w.shape()));
  }
  const auto d = CheckConv(op, x, x.dim(1), w.dim(0), w, stride, padding);
  std::size_t out_len;
  try {
    out_len = d.out_length();
  } catch (const UsageError& e) {
    ShapeError(op, std::string(e.what()) + " for input " + ShapeString(x.shape()));
  }
  Tensor y = Tensor::Zeros({d.batch, d.out_channels, out_len});
  kernels::Conv1dForward(d, x.values(), w.values(),
                         bias.defined() ? bias.values() : std::span<const Real>{}, y.values());
  const Tensor inputs[] = {x, w, bias};
  tape.Record(inputs, y, [x, w, bias, y, d]() mutable {
    auto gy = y.grad();
    if (x.requires_grad()) {
      std::vector<Real> gx(x.size());
      kernels::Conv1dBackwardInput(d, gy, w.values(), gx);
      auto dst = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) dst[i] += gx[i];
    }
    if (w.requires_grad()) kernels::Conv1dBackwardWeight(d, x.values(), gy, w.grad());
    if (bias.defined() && bias.requires_grad()) kernels::Conv1dBackwardBias(d, gy, bias.grad());
  });
  return y;
}

// Transposed convolution is the input-adjoint of Conv1d with the roles of
// the channel axes swapped: conv maps (Cout_t, L_out) -> (Cin_t, T).
Tensor ConvTranspose1d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias,
                       std::size_t stride, std::size_t padding) {
  const std::string op = "conv_transpose1d";
  RequireRank(op, x, 3, "input");
  RequireRank(op, w, 3, "weight");
  if (w.dim(0) != x.dim(1)) {
    ShapeError(op, "input " + ShapeString(x.shape()) + " has " + std::to_string(x.dim(1)) +
                       " channels but weight " + ShapeString(w.shape()) + " expects " +
                       std::to_string(w.dim(0)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != w.dim(1))) {
    ShapeError(op, "bias " + ShapeString(bias.shape()) + " does not match weight " +
                       ShapeString(w.shape()));
  }
  if (stride == 0) ShapeError(op, "stride must be positive");
  const std::size_t t_in = x.dim(2);
  const std::size_t k = w.dim(2);
  if ((t_in - 1) * stride + k < 2 * padding + 1) ShapeError(op, "padding too large");
  const std::size_t out_len = (t_in - 1) * stride + k - 2 * padding;

  kernels::ConvDims d;  // the adjoint convolution
  d.batch = x.dim(0);
  d.in_channels = w.dim(1);
  d.out_channels = w.dim(0);
  d.in_length = out_len;
  d.kernel = k;
  d.stride = stride;
  d.padding = padding;
  if (d.out_length() != t_in) ShapeError(op, "inconsistent stride/padding for input length");

  Tensor y = Tensor::Zeros({d.batch, d.in_channels, out_len});
  kernels::Conv1dBackwardInput(d, x.values(), w.values(), y.values());
  if (bias.defined()) {
    auto yv = y.values();
    auto bv = bias.values();
    for (std::size_t b = 0; b < d.batch; ++b)
      for (std::size_t o = 0; o < d.in_channels; ++o)
        for (std::size_t t = 0; t < out_len; ++t) yv[(b * d.in_channels + o) * out_len + t] += bv[o];
  }
  const Tensor inputs[] = {x, w, bias};
  tape.Record(inputs, y, [x, w, bias, y, d, out_len]() mutable {
    auto gy = y.grad();
    if (x.requires_grad()) {
      std::vector<Real> gx(x.size());
      kernels::Conv1dForward(d, gy, w.values(), {}, gx);
      auto dst = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) dst[i] += gx[i];
    }
    if (w.requires_grad()) kernels::Conv1dBackwardWeight(d, gy, x.values(), w.grad());
    if (bias.defined() && bias.requires_grad()) {
      auto gb = bias.grad();
      for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.in_channels; ++o)
          for (std::size_t t = 0; t < out_len; ++t)
            gb[o] += gy[(b * d.in_channels + o) * out_len + t];
    }
  });
  return y;
}

Tensor Dense(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias) {
  const std::string op = "dense";
  if (!x.defined() || (x.rank() != 2 && x.rank() != 3)) {
    ShapeError(op, "input must have rank 2 or 3");
  }
  RequireRank(op, w, 2, "weight");
  if (w.dim(1) != x.dim(1)) {
    ShapeError(op, "input " + ShapeString(x.shape()) + " does not match weight " +
                       ShapeString(w.shape()));
  }
  const std::size_t length = x.rank() == 3 ? x.dim(2) : 1;
  Shape w3 = {w.dim(0), w.dim(1), 1};
  Tensor x3 = Reshape(tape, x, {x.dim(0), x.dim(1), length});
  Tensor wk = Reshape(tape, w, w3);
  Tensor y = Conv1d(tape, x3, wk, bias, 1, 0);
  if (x.rank() == 2) return Reshape(tape, y, {x.dim(0), w.dim(0)});
  return y;
}

Tensor LeakyRelu(Tape& tape, const Tensor& x, Real slope) {
  return Unary(
      tape, x, [slope](Real v) { return v > 0 ? v : slope * v; },
      [slope](Real v, Real) { return v > 0 ? Real{1} : slope; }, true);
}

Tensor Relu(Tape& tape, const Tensor& x) {
  return Unary(
      tape, x, [](Real v) { return v > 0 ? v : Real{0}; },
      [](Real v, Real) { return v > 0 ? Real{1} : Real{0}; }, true);
}

Tensor Tanh(Tape& tape, const Tensor& x) {
  return Unary(
      tape, x, [](Real v) { return std::tanh(v); }, [](Real, Real y) { return 1 - y * y; });
}

Tensor Sigmoid(Tape& tape, const Tensor& x) {
  return Unary(
      tape, x, [](Real v) { return 1 / (1 + std::exp(-v)); },
      [](Real, Real y) { return y * (1 - y); });
}

Tensor Exp(Tape& tape, const Tensor& x) {
  return Unary(
      tape, x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

Tensor Log(Tape& tape, const Tensor& x) {
  return Unary(
      tape, x, [](Real v) { return std::log(v); }, [](Real v, Real) { return 1 / v; });
}

Tensor Abs(Tape& tape, const Tensor& x) {
  return Unary(
      tape, x, [](Real v) { return std::abs(v); },
      [](Real v, Real) { return v > 0 ? Real{1} : (v < 0 ? Real{-1} : Real{0}); }, true);
}

Tensor Square(Tape& tape, const Tensor& x) {
  return Unary(
      tape, x, [](Real v) { return v * v; }, [](Real v, Real) { return 2 * v; });
}

Tensor Scale(Tape& tape, const Tensor& x, Real factor) {
  return Unary(
      tape, x, [factor](Real v) { return factor * v; }, [factor](Real, Real) { return factor; });
}

Tensor AddScalar(Tape& tape, const Tensor& x, Real value) {
  return Unary(
      tape, x, [value](Real v) { return v + value; }, [](Real, Real) { return Real{1}; });
}

namespace {

template <typename Fn>
Tensor Binary(Tape& tape, const std::string& op, const Tensor& a, const Tensor& b, Fn f,
              Real da_sign, Real db_sign, bool product) {
  RequireSameShape(op, a, b);
  Tensor y = Tensor::Zeros(a.shape());
  auto av = a.values();
  auto bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = f(av[i], bv[i]);
  const Tensor inputs[] = {a, b};
  tape.Record(inputs, y, [a, b, y, da_sign, db_sign, product]() mutable {
    auto gy = y.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      auto bv = b.values();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * (product ? bv[i] : da_sign);
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      auto av = a.values();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * (product ? av[i] : db_sign);
    }
  });
  return y;
}

}  // namespace

Tensor Add(Tape& tape, const Tensor& a, const Tensor& b) {
  return Binary(tape, "add", a, b, [](Real p, Real q) { return p + q; }, 1, 1, false);
}

Tensor Sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return Binary(tape, "sub", a, b, [](Real p, Real q) { return p - q; }, 1, -1, false);
}

Tensor Mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return Binary(tape, "mul", a, b, [](Real p, Real q) { return p * q; }, 0, 0, true);
}

Tensor Concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis) {
  const std::string op = "concat";
  if (parts.empty()) ShapeError(op, "no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) ShapeError(op, "axis out of range for " + ShapeString(first));
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != first.size()) ShapeError(op, "rank mismatch");
    for (std::size_t a = 0; a < first.size(); ++a) {
      if (a != axis && p.dim(a) != first[a]) {
        ShapeError(op, "shapes " + ShapeString(first) + " and " + ShapeString(p.shape()) +
                           " differ off the concat axis");
      }
    }
    total += p.dim(axis);
  }
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= first[a];
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < first.size(); ++a) inner *= first[a];

  Shape shape = first;
  shape[axis] = total;
  Tensor y = Tensor::Zeros(shape);
  auto yv = y.values();
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t span = p.dim(axis) * inner;
    auto pv = p.values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * span), span,
                  yv.begin() + static_cast<std::ptrdiff_t>(o * total * inner + offset * inner));
    }
    offset += p.dim(axis);
  }
  std::vector<Tensor> kept(parts.begin(), parts.end());
  tape.Record(parts, y, [kept, offsets, y, outer, inner, total, axis]() mutable {
    auto gy = y.grad();
    for (std::size_t i = 0; i < kept.size(); ++i) {
      Tensor& p = kept[i];
      if (!p.requires_grad()) continue;
      const std::size_t span = p.dim(axis) * inner;
      auto gp = p.grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < span; ++j)
          gp[o * span + j] += gy[o * total * inner + offsets[i] * inner + j];
    }
  });
  return y;
}

Tensor Slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t count) {
  const std::string op = "slice";
  if (axis >= x.rank() || start + count > x.dim(axis)) {
    ShapeError(op, "range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                       ") on axis " + std::to_string(axis) + " of " + ShapeString(x.shape()));
  }
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= x.dim(a);
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < x.rank(); ++a) inner *= x.dim(a);
  const std::size_t full = x.dim(axis);
  Shape shape = x.shape();
  shape[axis] = count;
  Tensor y = Tensor::Zeros(shape);
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < count * inner; ++j)
      yv[o * count * inner + j] = xv[(o * full + start) * inner + j];
  const Tensor inputs[] = {x};
  tape.Record(inputs, y, [x, y, outer, inner, full, start, count]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto gy = y.grad();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 0; j < count * inner; ++j)
        gx[(o * full + start) * inner + j] += gy[o * count * inner + j];
  });
  return y;
}

Tensor Reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (NumElements(shape) != x.size()) {
    ShapeError("reshape", "cannot view " + ShapeString(x.shape()) + " as " + ShapeString(shape));
  }
  Tensor y = Tensor::FromVector(std::move(shape), {x.values().begin(), x.values().end()});
  const Tensor inputs[] = {x};
  tape.Record(inputs, y, [x, y]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto gy = y.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
  });
  return y;
}

Tensor Sum(Tape& tape, const Tensor& x) {
  Real acc = 0;
  for (Real v : x.values()) acc += v;
  Tensor y = Tensor::Scalar(acc);
  const Tensor inputs[] = {x};
  tape.Record(inputs, y, [x, y]() mutable {
    if (!x.requires_grad()) return;
    const Real g = y.grad()[0];
    for (Real& v : x.grad()) v += g;
  });
  return y;
}

Tensor Mean(Tape& tape, const Tensor& x) {
  return Scale(tape, Sum(tape, x), Real{1} / static_cast<Real>(x.size()));
}

Tensor BatchMean(Tape& tape, const Tensor& x) {
  if (x.rank() < 2) ShapeError("batch_mean", "input must have rank >= 2");
  const std::size_t batch = x.dim(0);
  const std::size_t per = x.size() / batch;
  Tensor y = Tensor::Zeros({batch});
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t b = 0; b < batch; ++b) {
    Real acc = 0;
    for (std::size_t i = 0; i < per; ++i) acc += xv[b * per + i];
    yv[b] = acc / static_cast<Real>(per);
  }
  const Tensor inputs[] = {x};
  tape.Record(inputs, y, [x, y, batch, per]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto gy = y.grad();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < per; ++i) gx[b * per + i] += gy[b] / static_cast<Real>(per);
  });
  return y;
}

Tensor AvgPool1d(Tape& tape, const Tensor& x, std::size_t factor) {
  RequireRank("avg_pool1d", x, 3, "input");
  if (factor == 0 || x.dim(2) % factor != 0) {
    ShapeError("avg_pool1d", "length of " + ShapeString(x.shape()) + " not divisible by " +
                                 std::to_string(factor));
  }
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t out_len = x.dim(2) / factor;
  Tensor y = Tensor::Zeros({x.dim(0), x.dim(1), out_len});
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < out_len; ++t) {
      Real acc = 0;
      for (std::size_t j = 0; j < factor; ++j) acc += xv[(r * out_len + t) * factor + j];
      yv[r * out_len + t] = acc / static_cast<Real>(factor);
    }
  const Tensor inputs[] = {x};
  tape.Record(inputs, y, [x, y, rows, out_len, factor]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto gy = y.grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t j = 0; j < factor; ++j)
          gx[(r * out_len + t) * factor + j] += gy[r * out_len + t] / static_cast<Real>(factor);
  });
  return y;
}

Tensor PqmfSynthesis(Tape& tape, const dsp::PqmfBank& bank, const Tensor& bands) {
  RequireRank("pqmf_synthesis", bands, 3, "input");
  if (bands.dim(1) != bank.n_bands()) {
    ShapeError("pqmf_synthesis", "input " + ShapeString(bands.shape()) + " does not have " +
                                     std::to_string(bank.n_bands()) + " bands");
  }
  const std::size_t batch = bands.dim(0);
  const std::size_t per = bands.dim(1) * bands.dim(2);
  const std::size_t len = per;
  const double gain = static_cast<double>(bank.n_bands());
  Tensor y = Tensor::Zeros({batch, 1, len});
  std::vector<double> in(per);
  std::vector<double> out(len);
  for (std::size_t b = 0; b < batch; ++b) {
    auto bv = bands.values().subspan(b * per, per);
    std::copy(bv.begin(), bv.end(), in.begin());
    bank.AnalysisAdjointInto(in, out);
    auto yv = y.values().subspan(b * len, len);
    for (std::size_t i = 0; i < len; ++i) yv[i] = static_cast<Real>(gain * out[i]);
  }
  const Tensor inputs[] = {bands};
  tape.Record(inputs, y, [&bank, bands, y, batch, per, len, gain]() mutable {
    if (!bands.requires_grad()) return;
    std::vector<double> g(len);
    std::vector<double> gb(per);
    auto gy = y.grad();
    auto dst = bands.grad();
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(gy.begin() + static_cast<std::ptrdiff_t>(b * len), len, g.begin());
      bank.AnalysisInto(g, gb);
      for (std::size_t i = 0; i < per; ++i) dst[b * per + i] += static_cast<Real>(gain * gb[i]);
    }
  });
  return y;
}

namespace {

// Applies a per-row scalar metric with a gradient in y; returns the batch mean.
template <typename Metric>
Tensor RowMetric(Tape& tape, const std::string& op, const Tensor& reference, const Tensor& y,
                 Metric metric) {
  RequireSameShape(op, reference, y);
  if (y.rank() != 3 || y.dim(1) != 1) {
    ShapeError(op, "expected (B, 1, L), got " + ShapeString(y.shape()));
  }
  const std::size_t batch = y.dim(0);
  const std::size_t len = y.dim(2);
  const bool need_grad = tape.recording() && y.requires_grad();
  std::vector<double> grads(need_grad ? batch * len : 0);
  double total = 0.0;
  std::vector<double> xr(len), yr(len), g;
  for (std::size_t b = 0; b < batch; ++b) {
    auto rv = reference.values().subspan(b * len, len);
    auto yv = y.values().subspan(b * len, len);
    std::copy(rv.begin(), rv.end(), xr.begin());
    std::copy(yv.begin(), yv.end(), yr.begin());
    total += metric(xr, yr, need_grad ? &g : nullptr);
    if (need_grad) std::copy(g.begin(), g.end(), grads.begin() + static_cast<std::ptrdiff_t>(b * len));
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  Tensor out = Tensor::Scalar(static_cast<Real>(total * inv_batch));
  const Tensor inputs[] = {y};
  tape.Record(inputs, out, [y, out, grads = std::move(grads), inv_batch]() mutable {
    const double scale = out.grad()[0] * inv_batch;
    auto gy = y.grad();
    for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += static_cast<Real>(scale * grads[i]);
  });
  return out;
}

}  // namespace

Tensor MultiscaleSpectralDistance(Tape& tape, const Tensor& reference, const Tensor& y,
                                  const metrics::MultiscaleConfig& cfg) {
  return RowMetric(tape, "multiscale_spectral_distance", reference, y,
                   [&cfg](const std::vector<double>& x, const std::vector<double>& v,
                          std::vector<double>* g) {
                     return metrics::MultiscaleSpectralDistance(x, v, cfg, g);
                   });
}

Tensor SpectralDistance(Tape& tape, const Tensor& reference, const Tensor& y,
                        std::size_t window, double eps) {
  return RowMetric(tape, "spectral_distance", reference, y,
                   [window, eps](const std::vector<double>& x, const std::vector<double>& v,
                                 std::vector<double>* g) {
                     return metrics::SpectralDistance(x, v, window, eps, g);
                   });
}

Tensor KlDiagGaussian(Tape& tape, const Tensor& mean, const Tensor& log_var) {
  RequireSameShape("kl_diag_gaussian", mean, log_var);
  std::vector<double> mu(mean.values().begin(), mean.values().end());
  std::vector<double> lv(log_var.values().begin(), log_var.values().end());
  std::vector<double> g_mu, g_lv;
  const double value = metrics::KlDiagGaussian(mu, lv, &g_mu, &g_lv);
  Tensor out = Tensor::Scalar(static_cast<Real>(value));
  const Tensor inputs[] = {mean, log_var};
  tape.Record(inputs, out, [mean, log_var, out, g_mu = std::move(g_mu),
                            g_lv = std::move(g_lv)]() mutable {
    const double g = out.grad()[0];
    if (mean.requires_grad()) {
      auto dst = mean.grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += static_cast<Real>(g * g_mu[i]);
    }
    if (log_var.requires_grad()) {
      auto dst = log_var.grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += static_cast<Real>(g * g_lv[i]);
    }
  });
  return out;
}

}  // namespace pitchrave::ad
