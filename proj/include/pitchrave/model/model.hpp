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

#ifndef PITCHRAVE_MODEL_MODEL_HPP_
#define PITCHRAVE_MODEL_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pitchrave/ad/ops.hpp"
#include "pitchrave/ad/param_store.hpp"
#include "pitchrave/dsp/pqmf.hpp"
#include "pitchrave/model/config.hpp"
#include "pitchrave/piano_roll.hpp"

namespace pitchrave::model {

inline constexpr const char* kEncoderGroup = "encoder";
inline constexpr const char* kAuxFcGroup = "aux_fc";
inline constexpr const char* kDecoderGroup = "decoder";
inline constexpr const char* kDiscriminatorGroup = "discriminator";

// Posterior parameters, each (B, d_z, T_lat).
struct LatentDistribution {
  ad::Tensor mean;
  ad::Tensor log_var;
};

struct DiscriminatorOutput {
  ad::Tensor score;                   // (B): mean final map, averaged over scales
  std::vector<ad::Tensor> features;  // hidden activations, scale-major
};

// Pitch-conditioned multiband VAE with a multi-scale discriminator.
//
// Layouts: multiband input (B, n_bands, F); piano rolls (B, n_notes, F);
// latents (B, d_z, F / S); waveforms (B, 1, n_bands * F).
class RaveModel {
 public:
  // Kaiming-uniform conv/dense weights, zero biases, zero encoder output layer.
  RaveModel(const ModelConfig& config, std::uint64_t seed);
  // Adopts existing parameters (e.g. from a checkpoint); names must match.
  RaveModel(const ModelConfig& config, ad::ParamStore params);

  RaveModel(const RaveModel&) = delete;
  RaveModel& operator=(const RaveModel&) = delete;
  RaveModel(RaveModel&&) = default;

  const ModelConfig& config() const { return config_; }
  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }
  const dsp::PqmfBank& bank() const { return *bank_; }

  // Throws UsageError when aux frames differ from multiband frames or F is
  // not divisible by S. `aux` is ignored for Conditioning::kNone.
  LatentDistribution Encode(ad::Tape& tape, const ad::Tensor& multiband,
                            const ad::Tensor& aux) const;

  // z = mean + exp(log_var / 2) * eta, eta ~ N(0, I) drawn from `seed`.
  ad::Tensor Reparameterize(ad::Tape& tape, const LatentDistribution& q,
                            std::uint64_t seed) const;

  // Linear per-step map of concat(z, merged_aux) to d_z (kAuxFc only).
  ad::Tensor AuxFc(ad::Tape& tape, const ad::Tensor& z, const ad::Tensor& merged_aux) const;

  // Applies the configured conditioning to z.
  ad::Tensor DecoderInput(ad::Tape& tape, const ad::Tensor& z,
                          const ad::Tensor& merged_aux) const;

  // (B, decoder_input_channels, T) -> (B, n_bands, T * S).
  ad::Tensor Decode(ad::Tape& tape, const ad::Tensor& h) const;

  // PQMF synthesis of decoded bands into (B, 1, L).
  ad::Tensor Synthesize(ad::Tape& tape, const ad::Tensor& bands) const;

  // Throws UsageError for inputs shorter than the receptive field or not
  // divisible by the pooling factor.
  DiscriminatorOutput Discriminate(ad::Tape& tape, const ad::Tensor& waveform) const;

  std::size_t discriminator_min_length() const;

 private:
  void Build(std::uint64_t seed);

  ModelConfig config_;
  ad::ParamStore params_;
  std::shared_ptr<const dsp::PqmfBank> bank_;
};

// Stacks per-example rolls into (B, n_notes, F).
ad::Tensor RollsToTensor(std::span<const PianoRoll> rolls);
// Max-pools a (B, n_notes, F) roll tensor by `stride` along time.
ad::Tensor MergeAuxTensor(const ad::Tensor& aux, std::size_t stride);
// PQMF analysis of each (B, 1, L) row into (B, n_bands, L / n_bands).
ad::Tensor AnalyzeBatch(const dsp::PqmfBank& bank, const ad::Tensor& waveform);

}  // namespace pitchrave::model

#endif  // PITCHRAVE_MODEL_MODEL_HPP_
