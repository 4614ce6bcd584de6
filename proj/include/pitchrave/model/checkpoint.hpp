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

#ifndef PITCHRAVE_MODEL_CHECKPOINT_HPP_
#define PITCHRAVE_MODEL_CHECKPOINT_HPP_

#include <filesystem>

#include "json.hpp"
#include "pitchrave/model/model.hpp"

namespace pitchrave::model {

// On-disk layout of a checkpoint directory:
//   manifest.json  config, metadata and one entry per tensor
//                  {name, group, shape, dtype, frozen, stages, file}
//   <name>.bin     raw little-endian values in row-major order
// Saving then loading reproduces every tensor bit-exactly.
struct Checkpoint {
  ModelConfig config;
  ad::ParamStore params;
  nlohmann::json metadata = nlohmann::json::object();
};

// Creates `dir` if needed and overwrites existing files.
void SaveCheckpoint(const std::filesystem::path& dir, const RaveModel& model,
                    const nlohmann::json& metadata = nlohmann::json::object());

// Throws DataError on a missing or inconsistent manifest or blob.
Checkpoint LoadCheckpoint(const std::filesystem::path& dir);

// Convenience: LoadCheckpoint followed by RaveModel construction.
RaveModel LoadModel(const std::filesystem::path& dir, nlohmann::json* metadata = nullptr);

// Training stages in which a parameter group is updated.
nlohmann::json StagesForGroup(const std::string& group);

}  // namespace pitchrave::model

#endif  // PITCHRAVE_MODEL_CHECKPOINT_HPP_
