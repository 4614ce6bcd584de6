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

#ifndef PITCHRAVE_TRAIN_TRAINER_HPP_
#define PITCHRAVE_TRAIN_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <string>

#include "json.hpp"
#include "pitchrave/data/dataset.hpp"
#include "pitchrave/metrics/distance.hpp"
#include "pitchrave/model/model.hpp"
#include "pitchrave/train/adam.hpp"

namespace pitchrave::metrics {
void to_json(nlohmann::json& j, const MultiscaleConfig& c);
void from_json(const nlohmann::json& j, MultiscaleConfig& c);
}  // namespace pitchrave::metrics

namespace pitchrave::train {

enum class Stage { kRepresentation, kAdversarial };
std::string ToString(Stage s);

struct TrainConfig {
  double beta = 0.1;
  AdamConfig adam;  // lr 1e-4, betas (0.5, 0.9)
  std::size_t batch_size = 8;
  std::size_t crop_length = 8192;  // samples
  std::int64_t stage1_steps = 1000;
  std::int64_t stage2_steps = 1000;
  std::uint64_t seed = 0;
  // Train/validation distances are measured every `eval_every` steps.
  std::int64_t eval_every = 10;
  bool augment_allpass = true;
  bool augment_dequantize = true;
  metrics::MultiscaleConfig multiscale;

  // A zero learning rate is rejected for runs but accepted by the Trainer
  // itself (`allow_zero_lr`), which lets tests check that a step without
  // updates leaves the loss unchanged.
  void Validate(bool allow_zero_lr = false) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct StageState {
  Stage stage = Stage::kRepresentation;
  std::int64_t step = 0;  // global, counts both stages
  std::set<std::string> frozen;
};

// Fixed crops on which train/validation distances are tracked.
struct EvalSet {
  std::vector<data::Crop> crops;
  std::size_t length = 0;
};

// Two-stage schedule: stage 1 fits encoder, aux FC and decoder on loss_vae
// with sampled latents; stage 2 freezes encoder and aux FC and alternates one
// discriminator and one decoder update per batch, decoding the posterior
// mean. Every step appends one JSON line to the metric log; steps divisible
// by eval_every (and the final step of each stage) also carry
// train_distance and val_distance. Runs are deterministic given the seed.
class Trainer {
 public:
  using StageHook = std::function<void(Stage finished, const model::RaveModel&)>;

  Trainer(model::RaveModel& model, const data::Dataset& dataset, TrainConfig cfg);

  // Throws DataError on an empty dataset and NumericalError on a non-finite
  // loss.
  void Run(std::ostream* metric_log, const StageHook& on_stage_end = {});

  // Single updates, exposed for tests.
  nlohmann::json Stage1Step(const data::Batch& batch, std::uint64_t noise_seed);
  nlohmann::json Stage2Step(const data::Batch& batch);
  void EnterStage2();

  // Posterior-mean reconstruction distance averaged over an eval set.
  double MeasureDistance(const std::vector<data::AlignedExample>& examples,
                         const EvalSet& set) const;

  const StageState& state() const { return state_; }
  const EvalSet& train_eval() const { return train_eval_; }
  const EvalSet& validation_eval() const { return val_eval_; }

 private:
  data::Batch NextBatch();
  void Log(std::ostream* out, nlohmann::json record, bool final_of_stage);

  model::RaveModel& model_;
  const data::Dataset& dataset_;
  TrainConfig cfg_;
  StageState state_;
  std::mt19937_64 rng_;
  EvalSet train_eval_;
  EvalSet val_eval_;
};

// Crop lengths and split boundaries must be multiples of this many samples
// (bands times total stride, and the discriminator pooling factor).
std::size_t LengthGranularity(const model::ModelConfig& cfg);

// Reconstruction through the full path with the posterior mean:
// analysis, encode, merge, conditioning, decode, synthesis.
ad::Tensor Reconstruct(ad::Tape& tape, const model::RaveModel& model, const ad::Tensor& audio,
                       const ad::Tensor& aux);

}  // namespace pitchrave::train

#endif  // PITCHRAVE_TRAIN_TRAINER_HPP_
