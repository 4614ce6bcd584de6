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

#include "pitchrave/model/config.hpp"

#include "pitchrave/common.hpp"

namespace pitchrave::model {

std::string ToString(Conditioning c) {
  switch (c) {
    case Conditioning::kNone:
      return "none";
    case Conditioning::kConcat:
      return "concat";
    case Conditioning::kAuxFc:
      return "aux_fc";
  }
  return "unknown";
}

Conditioning ConditioningFromString(const std::string& s) {
  if (s == "none") return Conditioning::kNone;
  if (s == "concat") return Conditioning::kConcat;
  if (s == "aux_fc") return Conditioning::kAuxFc;
  throw UsageError("unknown conditioning mode '" + s + "' (expected none, concat or aux_fc)");
}

std::size_t ModelConfig::total_stride() const {
  std::size_t s = 1;
  for (std::size_t v : encoder_strides) s *= v;
  return s;
}

std::size_t ModelConfig::encoder_input_channels() const {
  return conditioning == Conditioning::kNone ? n_bands : n_bands + n_notes;
}

std::size_t ModelConfig::decoder_input_channels() const {
  return conditioning == Conditioning::kConcat ? latent_dim + n_notes : latent_dim;
}

std::vector<std::size_t> ModelConfig::decoder_channels() const {
  return {encoder_channels.rbegin(), encoder_channels.rend()};
}

void ModelConfig::Validate() const {
  if (n_bands == 0 || !IsPowerOfTwo(n_bands)) {
    throw UsageError("model: n_bands must be a power of two");
  }
  if (n_notes == 0) throw UsageError("model: n_notes must be positive");
  if (latent_dim == 0) throw UsageError("model: latent_dim must be positive");
  if (encoder_channels.empty() || encoder_channels.size() != encoder_strides.size()) {
    throw UsageError("model: encoder_channels and encoder_strides must be nonempty and equal length");
  }
  for (std::size_t c : encoder_channels) {
    if (c == 0) throw UsageError("model: zero encoder channel count");
  }
  for (std::size_t s : encoder_strides) {
    if (s == 0 || (s != 1 && s % 2 != 0)) {
      throw UsageError("model: encoder strides must be 1 or even");
    }
  }
  if (disc_scales == 0) throw UsageError("model: disc_scales must be positive");
  for (std::size_t c : disc_channels) {
    if (c == 0) throw UsageError("model: zero discriminator channel count");
  }
  if (!(pqmf_attenuation_db > 0.0)) throw UsageError("model: pqmf attenuation must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"n_bands", c.n_bands},
                     {"n_notes", c.n_notes},
                     {"latent_dim", c.latent_dim},
                     {"encoder_channels", c.encoder_channels},
                     {"encoder_strides", c.encoder_strides},
                     {"disc_scales", c.disc_scales},
                     {"disc_channels", c.disc_channels},
                     {"decoder_residual_blocks", c.decoder_residual_blocks},
                     {"conditioning", ToString(c.conditioning)},
                     {"pqmf_attenuation_db", c.pqmf_attenuation_db}};
}

// Missing keys keep their defaults so partial config files are accepted.
void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (!j.is_object()) throw UsageError("model config must be a JSON object");
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  read("n_bands", c.n_bands);
  read("n_notes", c.n_notes);
  read("latent_dim", c.latent_dim);
  read("encoder_channels", c.encoder_channels);
  read("encoder_strides", c.encoder_strides);
  read("disc_scales", c.disc_scales);
  read("disc_channels", c.disc_channels);
  read("decoder_residual_blocks", c.decoder_residual_blocks);
  read("pqmf_attenuation_db", c.pqmf_attenuation_db);
  if (j.contains("conditioning")) {
    c.conditioning = ConditioningFromString(j.at("conditioning").get<std::string>());
  }
}

}  // namespace pitchrave::model
