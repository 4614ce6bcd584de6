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

#ifndef PITCHRAVE_KERNELS_CONV_HPP_
#define PITCHRAVE_KERNELS_CONV_HPP_

#include <cstddef>
#include <span>

#include "pitchrave/common.hpp"

namespace pitchrave::kernels {

// Strided 1-D convolution (cross-correlation) over batch x channel x time:
//   y[b, o, t] = bias[o] + sum_{c, k} w[o, c, k] x[b, c, t * stride + k - padding]
// with zero padding. Weight layout is out x in x kernel.
struct ConvDims {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t in_length = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  // Throws UsageError when the kernel does not fit the padded input.
  std::size_t out_length() const;
};

// OpenMP kernels. Every output element is owned by exactly one thread and
// reduced in a fixed order, so results do not depend on the thread count.
// `bias` may be empty. Outputs are overwritten; BackwardWeight and
// BackwardBias accumulate.
void Conv1dForward(const ConvDims& d, std::span<const Real> x, std::span<const Real> w,
                   std::span<const Real> bias, std::span<Real> y);
void Conv1dBackwardInput(const ConvDims& d, std::span<const Real> grad_y,
                         std::span<const Real> w, std::span<Real> grad_x);
void Conv1dBackwardWeight(const ConvDims& d, std::span<const Real> x,
                          std::span<const Real> grad_y, std::span<Real> grad_w);
void Conv1dBackwardBias(const ConvDims& d, std::span<const Real> grad_y,
                        std::span<Real> grad_bias);

// Plain serial loops following the defining sums; kept for testing and
// benchmarking the parallel kernels.
namespace reference {
void Conv1dForward(const ConvDims& d, std::span<const Real> x, std::span<const Real> w,
                   std::span<const Real> bias, std::span<Real> y);
void Conv1dBackwardInput(const ConvDims& d, std::span<const Real> grad_y,
                         std::span<const Real> w, std::span<Real> grad_x);
void Conv1dBackwardWeight(const ConvDims& d, std::span<const Real> x,
                          std::span<const Real> grad_y, std::span<Real> grad_w);
}  // namespace reference

}  // namespace pitchrave::kernels

#endif  // PITCHRAVE_KERNELS_CONV_HPP_
