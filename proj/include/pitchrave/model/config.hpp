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

#ifndef PITCHRAVE_MODEL_CONFIG_HPP_
#define PITCHRAVE_MODEL_CONFIG_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace pitchrave::model {

// How pitch information reaches the decoder.
enum class Conditioning {
  kNone,    // conventional RAVE: no auxiliary input anywhere
  kConcat,  // simple CVAE: merged aux concatenated to z
  kAuxFc,   // proposed: concat(z, merged aux) through a linear layer to d_z
};

std::string ToString(Conditioning c);
Conditioning ConditioningFromString(const std::string& s);

struct ModelConfig {
  std::size_t n_bands = 16;
  std::size_t n_notes = 88;
  std::size_t latent_dim = 8;
  std::vector<std::size_t> encoder_channels = {32, 32, 64, 64};
  std::vector<std::size_t> encoder_strides = {2, 2, 2, 2};
  std::size_t disc_scales = 3;
  // Hidden conv widths per discriminator scale; one output layer follows.
  std::vector<std::size_t> disc_channels = {16, 32, 32};
  // Residual units (two k3 convs) after each decoder upsampling layer.
  std::size_t decoder_residual_blocks = 0;
  Conditioning conditioning = Conditioning::kAuxFc;
  double pqmf_attenuation_db = 100.0;

  // Product of the encoder strides (S).
  std::size_t total_stride() const;
  std::size_t encoder_input_channels() const;
  std::size_t decoder_input_channels() const;
  std::vector<std::size_t> decoder_channels() const;  // mirror of the encoder
  std::size_t disc_layers() const { return disc_channels.size() + 1; }

  // Throws UsageError on inconsistent settings.
  void Validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace pitchrave::model

#endif  // PITCHRAVE_MODEL_CONFIG_HPP_
