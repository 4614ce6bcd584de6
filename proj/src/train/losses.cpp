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

#include "pitchrave/train/losses.hpp"

#include <algorithm>
#include <string>

#include "pitchrave/common.hpp"

namespace pitchrave::train {

VaeLoss LossVae(ad::Tape& tape, const ad::Tensor& x, const ad::Tensor& x_hat,
                const model::LatentDistribution& q, double beta,
                const metrics::MultiscaleConfig& cfg) {
  if (!(beta >= 0.0)) throw UsageError("loss_vae: beta must be non-negative");
  VaeLoss out;
  out.distance = ad::MultiscaleSpectralDistance(tape, x, x_hat, cfg);
  const auto batch = static_cast<Real>(q.mean.dim(0));
  out.kl = ad::Scale(tape, ad::KlDiagGaussian(tape, q.mean, q.log_var), Real(1) / batch);
  out.total = ad::Add(tape, out.distance, ad::Scale(tape, out.kl, static_cast<Real>(beta)));
  return out;
}

ad::Tensor LossDis(ad::Tape& tape, const ad::Tensor& score_real, const ad::Tensor& score_fake) {
  if (score_real.shape() != score_fake.shape()) {
    throw UsageError("loss_dis: score shapes " + ad::ShapeString(score_real.shape()) + " and " +
                     ad::ShapeString(score_fake.shape()) + " differ");
  }
  const ad::Tensor real_term = ad::Relu(tape, ad::AddScalar(tape, ad::Scale(tape, score_real, -1), 1));
  const ad::Tensor fake_term = ad::Relu(tape, ad::AddScalar(tape, score_fake, 1));
  return ad::Mean(tape, ad::Add(tape, real_term, fake_term));
}

double LossDis(double score_real, double score_fake) {
  return std::max(0.0, 1.0 - score_real) + std::max(0.0, 1.0 + score_fake);
}

ad::Tensor FeatureMatching(ad::Tape& tape, std::span<const ad::Tensor> real,
                           std::span<const ad::Tensor> fake) {
  if (real.size() != fake.size() || real.empty()) {
    throw UsageError("feature matching: " + std::to_string(real.size()) + " real vs " +
                     std::to_string(fake.size()) + " fake feature maps");
  }
  ad::Tensor total;
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (real[i].shape() != fake[i].shape()) {
      throw UsageError("feature matching: layer " + std::to_string(i) + " shapes " +
                       ad::ShapeString(real[i].shape()) + " and " +
                       ad::ShapeString(fake[i].shape()) + " differ");
    }
    const ad::Tensor term = ad::Mean(tape, ad::Abs(tape, ad::Sub(tape, fake[i], real[i].Detach())));
    total = total.defined() ? ad::Add(tape, total, term) : term;
  }
  return ad::Scale(tape, total, Real(1) / static_cast<Real>(real.size()));
}

DecLoss LossDec(ad::Tape& tape, const ad::Tensor& score_fake, const ad::Tensor& x,
                const ad::Tensor& x_hat, std::span<const ad::Tensor> feats_real,
                std::span<const ad::Tensor> feats_fake, const metrics::MultiscaleConfig& cfg) {
  DecLoss out;
  out.adversarial = ad::Scale(tape, ad::Mean(tape, score_fake), -1);
  out.distance = ad::MultiscaleSpectralDistance(tape, x, x_hat, cfg);
  out.feature_matching = FeatureMatching(tape, feats_real, feats_fake);
  out.total = ad::Add(tape, ad::Add(tape, out.adversarial, out.distance), out.feature_matching);
  return out;
}

}  // namespace pitchrave::train
