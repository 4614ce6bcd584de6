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

#ifndef PITCHRAVE_TRAIN_LOSSES_HPP_
#define PITCHRAVE_TRAIN_LOSSES_HPP_

#include <span>
#include <vector>

#include "pitchrave/ad/ops.hpp"
#include "pitchrave/metrics/distance.hpp"
#include "pitchrave/model/model.hpp"

namespace pitchrave::train {

// Scalar loss terms. Batched terms are means over the batch; the KL term is
// summed over latent elements and averaged over the batch.
struct VaeLoss {
  ad::Tensor total;
  ad::Tensor distance;
  ad::Tensor kl;
};

// Multiscale spectral distance plus beta times the KL to the unit Gaussian.
VaeLoss LossVae(ad::Tape& tape, const ad::Tensor& x, const ad::Tensor& x_hat,
                const model::LatentDistribution& q, double beta,
                const metrics::MultiscaleConfig& cfg);

// Hinge objective [1 - D(x)]+ + [1 + D(x_hat)]+, averaged over the batch.
ad::Tensor LossDis(ad::Tape& tape, const ad::Tensor& score_real, const ad::Tensor& score_fake);
double LossDis(double score_real, double score_fake);

// Mean over layers of the mean absolute difference. Gradients flow into
// `fake` only. Throws UsageError on a length or shape mismatch.
ad::Tensor FeatureMatching(ad::Tape& tape, std::span<const ad::Tensor> real,
                           std::span<const ad::Tensor> fake);

struct DecLoss {
  ad::Tensor total;
  ad::Tensor adversarial;  // -mean D(x_hat)
  ad::Tensor distance;
  ad::Tensor feature_matching;
};

// -D(x_hat) + D_ms(x, x_hat) + L_FM with unit weights.
DecLoss LossDec(ad::Tape& tape, const ad::Tensor& score_fake, const ad::Tensor& x,
                const ad::Tensor& x_hat, std::span<const ad::Tensor> feats_real,
                std::span<const ad::Tensor> feats_fake, const metrics::MultiscaleConfig& cfg);

}  // namespace pitchrave::train

#endif  // PITCHRAVE_TRAIN_LOSSES_HPP_
