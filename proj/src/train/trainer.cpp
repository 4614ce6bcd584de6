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

#include "pitchrave/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "pitchrave/common.hpp"
#include "pitchrave/dsp/filters.hpp"
#include "pitchrave/train/losses.hpp"

namespace pitchrave::metrics {

void to_json(nlohmann::json& j, const MultiscaleConfig& c) {
  j = {{"windows", c.windows}, {"eps_power", c.eps_power}, {"eps_log", c.eps_log}};
}

void from_json(const nlohmann::json& j, MultiscaleConfig& c) {
  if (j.contains("windows")) j.at("windows").get_to(c.windows);
  if (j.contains("eps_power")) j.at("eps_power").get_to(c.eps_power);
  if (j.contains("eps_log")) j.at("eps_log").get_to(c.eps_log);
}

}  // namespace pitchrave::metrics

namespace pitchrave::train {
namespace {

constexpr std::uint64_t kEvalSeedSalt = 0x9E3779B97F4A7C15ull;

double Item(const ad::Tensor& t) { return static_cast<double>(t.item()); }

void RequireFinite(double v, const char* what, std::int64_t step) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string("non-finite ") + what + " at step " + std::to_string(step));
  }
}

}  // namespace

std::string ToString(Stage s) {
  return s == Stage::kRepresentation ? "representation" : "adversarial";
}

void TrainConfig::Validate(bool allow_zero_lr) const {
  if (!(beta >= 0.0)) throw UsageError("train: beta must be non-negative");
  if (!(adam.lr > 0.0) && !(allow_zero_lr && adam.lr == 0.0)) {
    throw UsageError("train: lr must be positive");
  }
  if (stage1_steps < 0 || stage2_steps < 0) throw UsageError("train: negative step count");
  if (batch_size == 0) throw UsageError("train: batch_size must be positive");
  if (eval_every <= 0) throw UsageError("train: eval_every must be positive");
  multiscale.Validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"beta", c.beta},
       {"lr", c.adam.lr},
       {"adam_beta1", c.adam.beta1},
       {"adam_beta2", c.adam.beta2},
       {"adam_eps", c.adam.eps},
       {"clip_norm", c.adam.clip_norm},
       {"batch_size", c.batch_size},
       {"crop_length", c.crop_length},
       {"stage1_steps", c.stage1_steps},
       {"stage2_steps", c.stage2_steps},
       {"seed", c.seed},
       {"eval_every", c.eval_every},
       {"augment_allpass", c.augment_allpass},
       {"augment_dequantize", c.augment_dequantize},
       {"multiscale", c.multiscale}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw UsageError("train config must be a JSON object");
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  read("beta", c.beta);
  read("lr", c.adam.lr);
  read("adam_beta1", c.adam.beta1);
  read("adam_beta2", c.adam.beta2);
  read("adam_eps", c.adam.eps);
  read("clip_norm", c.adam.clip_norm);
  read("batch_size", c.batch_size);
  read("crop_length", c.crop_length);
  read("stage1_steps", c.stage1_steps);
  read("stage2_steps", c.stage2_steps);
  read("seed", c.seed);
  read("eval_every", c.eval_every);
  read("augment_allpass", c.augment_allpass);
  read("augment_dequantize", c.augment_dequantize);
  read("multiscale", c.multiscale);
}

std::size_t LengthGranularity(const model::ModelConfig& cfg) {
  return std::lcm(cfg.n_bands * cfg.total_stride(), std::size_t{1} << (cfg.disc_scales - 1));
}

ad::Tensor Reconstruct(ad::Tape& tape, const model::RaveModel& model, const ad::Tensor& audio,
                       const ad::Tensor& aux) {
  const ad::Tensor bands = model::AnalyzeBatch(model.bank(), audio);
  const model::LatentDistribution q = model.Encode(tape, bands, aux);
  const ad::Tensor merged =
      model.config().conditioning == model::Conditioning::kNone
          ? ad::Tensor()
          : model::MergeAuxTensor(aux, model.config().total_stride());
  const ad::Tensor h = model.DecoderInput(tape, q.mean, merged);
  return model.Synthesize(tape, model.Decode(tape, h));
}

Trainer::Trainer(model::RaveModel& model, const data::Dataset& dataset, TrainConfig cfg)
    : model_(model), dataset_(dataset), cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.Validate(/*allow_zero_lr=*/true);
  if (dataset_.train().empty()) throw DataError("train: empty dataset");
  const auto& mc = model_.config();
  if (dataset_.n_bands() != mc.n_bands) {
    throw UsageError("train: dataset has " + std::to_string(dataset_.n_bands()) +
                     " bands, model has " + std::to_string(mc.n_bands));
  }
  const std::size_t gran = LengthGranularity(mc);
  if (cfg_.crop_length == 0 || cfg_.crop_length % gran != 0) {
    throw UsageError("train: crop_length must be a positive multiple of " + std::to_string(gran));
  }
  const std::size_t widest = *std::max_element(cfg_.multiscale.windows.begin(),
                                               cfg_.multiscale.windows.end());
  if (cfg_.crop_length < widest) {
    throw UsageError("train: crop_length shorter than the widest STFT window");
  }
  if (cfg_.stage2_steps > 0 && cfg_.crop_length < model_.discriminator_min_length()) {
    throw UsageError("train: crop_length shorter than the discriminator receptive field");
  }

  // Fixed evaluation crops, drawn from a generator independent of training.
  std::mt19937_64 eval_rng(cfg_.seed ^ kEvalSeedSalt);
  train_eval_.length = cfg_.crop_length;
  train_eval_.crops = dataset_.SampleCrops(eval_rng, cfg_.batch_size, cfg_.crop_length);

  std::size_t val_len = cfg_.crop_length;
  for (const auto& ex : dataset_.validation()) {
    val_len = std::min(val_len, ex.audio.size() / gran * gran);
  }
  if (!dataset_.validation().empty() && val_len >= widest) {
    val_eval_.length = val_len;
    for (std::size_t i = 0; i < dataset_.validation().size(); ++i) {
      val_eval_.crops.push_back({i, 0});
    }
  }
}

data::Batch Trainer::NextBatch() {
  const auto crops = dataset_.SampleCrops(rng_, cfg_.batch_size, cfg_.crop_length);
  data::Batch batch = data::MakeBatch(dataset_.train(), crops, cfg_.crop_length,
                                      dataset_.n_bands());
  if (cfg_.augment_allpass || cfg_.augment_dequantize) {
    dsp::AugmentConfig aug;
    aug.allpass = cfg_.augment_allpass;
    aug.dequantize = cfg_.augment_dequantize;
    auto values = batch.audio.values();
    for (std::size_t b = 0; b < crops.size(); ++b) {
      AudioBuffer row;
      row.samples.assign(values.begin() + static_cast<std::ptrdiff_t>(b * cfg_.crop_length),
                         values.begin() + static_cast<std::ptrdiff_t>((b + 1) * cfg_.crop_length));
      const AudioBuffer out = dsp::Augment(row, aug, rng_());
      std::copy(out.samples.begin(), out.samples.end(),
                values.begin() + static_cast<std::ptrdiff_t>(b * cfg_.crop_length));
    }
  }
  return batch;
}

nlohmann::json Trainer::Stage1Step(const data::Batch& batch, std::uint64_t noise_seed) {
  ad::Tape tape;
  model_.params().ZeroGrad();
  const auto& mc = model_.config();
  const ad::Tensor bands = model::AnalyzeBatch(model_.bank(), batch.audio);
  const model::LatentDistribution q = model_.Encode(tape, bands, batch.aux);
  const ad::Tensor z = model_.Reparameterize(tape, q, noise_seed);
  const ad::Tensor merged = mc.conditioning == model::Conditioning::kNone
                                ? ad::Tensor()
                                : model::MergeAuxTensor(batch.aux, mc.total_stride());
  const ad::Tensor h = model_.DecoderInput(tape, z, merged);
  const ad::Tensor x_hat = model_.Synthesize(tape, model_.Decode(tape, h));
  const VaeLoss loss = LossVae(tape, batch.audio, x_hat, q, cfg_.beta, cfg_.multiscale);
  RequireFinite(Item(loss.total), "stage-1 loss", state_.step + 1);
  ad::Backward(loss.total, tape);
  AdamStep(model_.params(), cfg_.adam,
           {model::kEncoderGroup, model::kAuxFcGroup, model::kDecoderGroup});
  ++state_.step;
  return {{"loss", Item(loss.total)}, {"distance", Item(loss.distance)}, {"kl", Item(loss.kl)}};
}

void Trainer::EnterStage2() {
  model_.params().SetGroupFrozen(model::kEncoderGroup, true);
  model_.params().SetGroupFrozen(model::kAuxFcGroup, true);
  const auto names = model_.params().FrozenNames();
  state_.frozen = {names.begin(), names.end()};
  state_.stage = Stage::kAdversarial;
}

nlohmann::json Trainer::Stage2Step(const data::Batch& batch) {
  if (state_.stage != Stage::kAdversarial) EnterStage2();
  const auto& mc = model_.config();

  // The frozen encoder and aux FC run without recording.
  ad::Tape frozen;
  frozen.set_recording(false);
  const ad::Tensor bands = model::AnalyzeBatch(model_.bank(), batch.audio);
  const model::LatentDistribution q = model_.Encode(frozen, bands, batch.aux);
  const ad::Tensor merged = mc.conditioning == model::Conditioning::kNone
                                ? ad::Tensor()
                                : model::MergeAuxTensor(batch.aux, mc.total_stride());
  const ad::Tensor h = model_.DecoderInput(frozen, q.mean, merged).Detach();

  // Discriminator update on a detached reconstruction.
  model_.params().ZeroGrad();
  double loss_dis = 0.0, score_real = 0.0, score_fake = 0.0;
  {
    ad::Tape tape;
    const ad::Tensor x_hat = model_.Synthesize(frozen, model_.Decode(frozen, h)).Detach();
    const auto real = model_.Discriminate(tape, batch.audio);
    const auto fake = model_.Discriminate(tape, x_hat);
    const ad::Tensor loss = LossDis(tape, real.score, fake.score);
    loss_dis = Item(loss);
    score_real = Item(ad::Mean(frozen, real.score));
    score_fake = Item(ad::Mean(frozen, fake.score));
    RequireFinite(loss_dis, "discriminator loss", state_.step + 1);
    ad::Backward(loss, tape);
    AdamStep(model_.params(), cfg_.adam, {model::kDiscriminatorGroup});
  }

  // Decoder update against the refreshed discriminator.
  model_.params().ZeroGrad();
  ad::Tape tape;
  const ad::Tensor x_hat = model_.Synthesize(tape, model_.Decode(tape, h));
  const auto real = model_.Discriminate(frozen, batch.audio);
  const auto fake = model_.Discriminate(tape, x_hat);
  const DecLoss loss = LossDec(tape, fake.score, batch.audio, x_hat, real.features,
                               fake.features, cfg_.multiscale);
  RequireFinite(Item(loss.total), "decoder loss", state_.step + 1);
  ad::Backward(loss.total, tape);
  AdamStep(model_.params(), cfg_.adam, {model::kDecoderGroup});
  ++state_.step;
  return {{"loss_dis", loss_dis},
          {"score_real", score_real},
          {"score_fake", score_fake},
          {"loss_dec", Item(loss.total)},
          {"adversarial", Item(loss.adversarial)},
          {"distance", Item(loss.distance)},
          {"feature_matching", Item(loss.feature_matching)}};
}

double Trainer::MeasureDistance(const std::vector<data::AlignedExample>& examples,
                                const EvalSet& set) const {
  if (set.crops.empty()) return std::nan("");
  ad::Tape tape;
  tape.set_recording(false);
  double total = 0.0;
  for (std::size_t first = 0; first < set.crops.size(); first += cfg_.batch_size) {
    const std::size_t last = std::min(set.crops.size(), first + cfg_.batch_size);
    const std::vector<data::Crop> chunk(set.crops.begin() + static_cast<std::ptrdiff_t>(first),
                                        set.crops.begin() + static_cast<std::ptrdiff_t>(last));
    const data::Batch batch = data::MakeBatch(examples, chunk, set.length, dataset_.n_bands());
    const ad::Tensor x_hat = Reconstruct(tape, model_, batch.audio, batch.aux);
    const ad::Tensor d = ad::MultiscaleSpectralDistance(tape, batch.audio, x_hat, cfg_.multiscale);
    total += Item(d) * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(set.crops.size());
}

void Trainer::Log(std::ostream* out, nlohmann::json record, bool final_of_stage) {
  nlohmann::json line = {{"step", state_.step}, {"stage", ToString(state_.stage)}};
  line.update(record);
  if (state_.step % cfg_.eval_every == 0 || final_of_stage) {
    line["train_distance"] = MeasureDistance(dataset_.train(), train_eval_);
    line["val_distance"] = val_eval_.crops.empty()
                               ? nlohmann::json(nullptr)
                               : nlohmann::json(MeasureDistance(dataset_.validation(), val_eval_));
  }
  if (out != nullptr) {
    *out << line.dump() << '\n';
    out->flush();
  }
}

void Trainer::Run(std::ostream* metric_log, const StageHook& on_stage_end) {
  for (std::int64_t i = 0; i < cfg_.stage1_steps; ++i) {
    const data::Batch batch = NextBatch();
    const std::uint64_t noise_seed = rng_();
    nlohmann::json rec = Stage1Step(batch, noise_seed);
    Log(metric_log, std::move(rec), i + 1 == cfg_.stage1_steps);
  }
  if (on_stage_end) on_stage_end(Stage::kRepresentation, model_);
  if (cfg_.stage2_steps == 0) return;
  EnterStage2();
  for (std::int64_t i = 0; i < cfg_.stage2_steps; ++i) {
    const data::Batch batch = NextBatch();
    nlohmann::json rec = Stage2Step(batch);
    Log(metric_log, std::move(rec), i + 1 == cfg_.stage2_steps);
  }
  if (on_stage_end) on_stage_end(Stage::kAdversarial, model_);
}

}  // namespace pitchrave::train
