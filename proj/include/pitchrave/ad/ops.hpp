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

#ifndef PITCHRAVE_AD_OPS_HPP_
#define PITCHRAVE_AD_OPS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "pitchrave/ad/tensor.hpp"

namespace pitchrave::dsp {
class PqmfBank;
}
namespace pitchrave::metrics {
struct MultiscaleConfig;
}

// Differentiable operations. Each op computes its output eagerly and, when
// the tape is recording and an input requires gradients, records the rule
// that accumulates input gradients from the output gradient. Shape errors
// throw UsageError naming the op and the offending shapes.
namespace pitchrave::ad {

// x: (B, Cin, T), w: (Cout, Cin, K), bias: (Cout) or undefined.
Tensor Conv1d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t stride = 1, std::size_t padding = 0);

// x: (B, Cin, T), w: (Cin, Cout, K) -> (B, Cout, (T - 1) * stride - 2 * padding + K).
Tensor ConvTranspose1d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias,
                       std::size_t stride = 1, std::size_t padding = 0);

// Affine map of the channel axis at every (batch, time) position.
// x: (B, Cin, T) or (B, Cin), w: (Cout, Cin), bias: (Cout) or undefined.
Tensor Dense(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor LeakyRelu(Tape& tape, const Tensor& x, Real slope = Real(0.2));
Tensor Relu(Tape& tape, const Tensor& x);
Tensor Tanh(Tape& tape, const Tensor& x);
Tensor Sigmoid(Tape& tape, const Tensor& x);
Tensor Exp(Tape& tape, const Tensor& x);
Tensor Log(Tape& tape, const Tensor& x);
Tensor Abs(Tape& tape, const Tensor& x);
Tensor Square(Tape& tape, const Tensor& x);

Tensor Add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor Sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor Mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor Scale(Tape& tape, const Tensor& x, Real factor);
Tensor AddScalar(Tape& tape, const Tensor& x, Real value);

Tensor Concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis = 1);
Tensor Slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t count);
Tensor Reshape(Tape& tape, const Tensor& x, Shape shape);

// Scalar reductions over every element.
Tensor Sum(Tape& tape, const Tensor& x);
Tensor Mean(Tape& tape, const Tensor& x);
// Mean over all axes but the first: (B, ...) -> (B).
Tensor BatchMean(Tape& tape, const Tensor& x);

// Non-overlapping average pooling of the last axis of (B, C, T).
Tensor AvgPool1d(Tape& tape, const Tensor& x, std::size_t factor);

// (B, n_bands, F) subbands -> (B, 1, n_bands * F) waveform.
Tensor PqmfSynthesis(Tape& tape, const dsp::PqmfBank& bank, const Tensor& bands);

// Batch mean of the multiscale spectral distance between each reference
// row of (B, 1, L) and the matching row of `y`. Gradients flow into y only.
Tensor MultiscaleSpectralDistance(Tape& tape, const Tensor& reference, const Tensor& y,
                                  const metrics::MultiscaleConfig& cfg);

// Batch mean of the single-scale log power spectral distance.
Tensor SpectralDistance(Tape& tape, const Tensor& reference, const Tensor& y,
                        std::size_t window, double eps);

// Sum over all elements of KL(N(mean, exp(log_var)) || N(0, 1)).
Tensor KlDiagGaussian(Tape& tape, const Tensor& mean, const Tensor& log_var);

}  // namespace pitchrave::ad

#endif  // PITCHRAVE_AD_OPS_HPP_
