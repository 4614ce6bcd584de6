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

#include "pitchrave/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "pitchrave/common.hpp"

namespace pitchrave::model {
namespace {

constexpr Real kSlope = Real(0.2);

// Kaiming-uniform bound for a layer followed by leaky ReLU(0.2); `linear`
// drops the nonlinearity gain.
double KaimingBound(std::size_t fan_in, bool linear) {
  const double gain = linear ? 1.0 : std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
  return gain * std::sqrt(3.0 / static_cast<double>(fan_in));
}

ad::Tensor Uniform(ad::Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<Real> v(ad::NumElements(shape));
  for (Real& x : v) x = static_cast<Real>(dist(rng));
  return ad::Tensor::FromVector(std::move(shape), std::move(v));
}

std::string Layer(const char* prefix, std::size_t i) {
  return std::string(prefix) + std::to_string(i);
}

std::string ResidualName(std::size_t stage, std::size_t block, int conv) {
  return Layer("decoder.up", stage) + ".res" + std::to_string(block) + ".conv" +
         std::to_string(conv);
}

// Transposed-conv geometry that multiplies the length by `stride` exactly.
std::size_t UpKernel(std::size_t stride) { return stride == 1 ? 3 : 2 * stride; }
std::size_t UpPadding(std::size_t stride) { return stride == 1 ? 1 : stride / 2; }

constexpr std::size_t kDiscKernel0 = 15;
constexpr std::size_t kDiscKernel = 9;
constexpr std::size_t kDiscOutKernel = 3;

}  // namespace

RaveModel::RaveModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.Validate();
  bank_ = std::make_shared<const dsp::PqmfBank>(
      dsp::PqmfBank::Design(config_.n_bands, config_.pqmf_attenuation_db));
  Build(seed);
}

RaveModel::RaveModel(const ModelConfig& config, ad::ParamStore params)
    : RaveModel(config, 0) {
  for (const ad::Param& expected : params_.params()) {
    if (!params.Contains(expected.name)) {
      throw DataError("checkpoint is missing parameter '" + expected.name + "'");
    }
    const ad::Param& got = params.at(expected.name);
    if (got.tensor.shape() != expected.tensor.shape()) {
      throw DataError("parameter '" + expected.name + "' has shape " +
                      ad::ShapeString(got.tensor.shape()) + ", expected " +
                      ad::ShapeString(expected.tensor.shape()));
    }
  }
  if (params.size() != params_.size()) {
    throw DataError("checkpoint has parameters not used by this configuration");
  }
  // Keep the canonical order of a freshly built model.
  ad::ParamStore ordered;
  for (const ad::Param& expected : params_.params()) {
    const ad::Param& got = params.at(expected.name);
    ordered.Add(got.name, expected.group, got.tensor);
    ad::Param& p = ordered.at(got.name);
    p.frozen = got.frozen;
    p.first_moment = got.first_moment;
    p.second_moment = got.second_moment;
    p.steps = got.steps;
  }
  params_ = std::move(ordered);
}

void RaveModel::Build(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& c = config_;

  // Encoder: strided convs with kernel 2s + 1, then a zero-initialised
  // distribution head producing (mean, log_var).
  std::size_t in = c.encoder_input_channels();
  for (std::size_t i = 0; i < c.encoder_channels.size(); ++i) {
    const std::size_t out = c.encoder_channels[i];
    const std::size_t k = 2 * c.encoder_strides[i] + 1;
    params_.Add(Layer("encoder.conv", i) + ".weight", kEncoderGroup,
                Uniform({out, in, k}, KaimingBound(in * k, false), rng));
    params_.Add(Layer("encoder.conv", i) + ".bias", kEncoderGroup, ad::Tensor::Zeros({out}));
    in = out;
  }
  params_.Add("encoder.out.weight", kEncoderGroup, ad::Tensor::Zeros({2 * c.latent_dim, in, 3}));
  params_.Add("encoder.out.bias", kEncoderGroup, ad::Tensor::Zeros({2 * c.latent_dim}));

  if (c.conditioning == Conditioning::kAuxFc) {
    const std::size_t fan_in = c.latent_dim + c.n_notes;
    params_.Add("aux_fc.weight", kAuxFcGroup,
                Uniform({c.latent_dim, fan_in}, KaimingBound(fan_in, true), rng));
    params_.Add("aux_fc.bias", kAuxFcGroup, ad::Tensor::Zeros({c.latent_dim}));
  }

  // Decoder: mirror of the encoder with transposed convs.
  const std::vector<std::size_t> ch = c.decoder_channels();
  const std::vector<std::size_t> strides(c.encoder_strides.rbegin(), c.encoder_strides.rend());
  in = c.decoder_input_channels();
  params_.Add("decoder.in.weight", kDecoderGroup,
              Uniform({ch[0], in, 3}, KaimingBound(in * 3, false), rng));
  params_.Add("decoder.in.bias", kDecoderGroup, ad::Tensor::Zeros({ch[0]}));
  for (std::size_t i = 0; i < ch.size(); ++i) {
    const std::size_t cin = ch[i];
    const std::size_t cout = i + 1 < ch.size() ? ch[i + 1] : ch[i];
    const std::size_t k = UpKernel(strides[i]);
    const std::size_t fan_in = std::max<std::size_t>(1, cin * k / strides[i]);
    params_.Add(Layer("decoder.up", i) + ".weight", kDecoderGroup,
                Uniform({cin, cout, k}, KaimingBound(fan_in, false), rng));
    params_.Add(Layer("decoder.up", i) + ".bias", kDecoderGroup, ad::Tensor::Zeros({cout}));
    for (std::size_t r = 0; r < c.decoder_residual_blocks; ++r) {
      for (int j = 0; j < 2; ++j) {
        const std::string name = ResidualName(i, r, j);
        params_.Add(name + ".weight", kDecoderGroup,
                    Uniform({cout, cout, 3}, KaimingBound(cout * 3, j == 1), rng));
        params_.Add(name + ".bias", kDecoderGroup, ad::Tensor::Zeros({cout}));
      }
    }
  }
  params_.Add("decoder.out.weight", kDecoderGroup,
              Uniform({c.n_bands, ch.back(), 3}, KaimingBound(ch.back() * 3, true), rng));
  params_.Add("decoder.out.bias", kDecoderGroup, ad::Tensor::Zeros({c.n_bands}));

  // Discriminator: one conv stack per scale.
  for (std::size_t s = 0; s < c.disc_scales; ++s) {
    const std::string prefix = "discriminator.s" + std::to_string(s) + ".";
    std::size_t cin = 1;
    for (std::size_t l = 0; l < c.disc_channels.size(); ++l) {
      const std::size_t k = l == 0 ? kDiscKernel0 : kDiscKernel;
      const std::size_t cout = c.disc_channels[l];
      params_.Add(prefix + Layer("conv", l) + ".weight", kDiscriminatorGroup,
                  Uniform({cout, cin, k}, KaimingBound(cin * k, false), rng));
      params_.Add(prefix + Layer("conv", l) + ".bias", kDiscriminatorGroup,
                  ad::Tensor::Zeros({cout}));
      cin = cout;
    }
    params_.Add(prefix + "out.weight", kDiscriminatorGroup,
                Uniform({1, cin, kDiscOutKernel}, KaimingBound(cin * kDiscOutKernel, true), rng));
    params_.Add(prefix + "out.bias", kDiscriminatorGroup, ad::Tensor::Zeros({1}));
  }
}

LatentDistribution RaveModel::Encode(ad::Tape& tape, const ad::Tensor& multiband,
                                     const ad::Tensor& aux) const {
  const auto& c = config_;
  if (!multiband.defined() || multiband.rank() != 3 || multiband.dim(1) != c.n_bands) {
    throw UsageError("encode: expected multiband input (B, " + std::to_string(c.n_bands) +
                     ", F), got " +
                     (multiband.defined() ? ad::ShapeString(multiband.shape()) : "undefined"));
  }
  const std::size_t frames = multiband.dim(2);
  if (frames == 0 || frames % c.total_stride() != 0) {
    throw UsageError("encode: frame count " + std::to_string(frames) +
                     " not divisible by total stride " + std::to_string(c.total_stride()));
  }
  ad::Tensor h = multiband;
  if (c.conditioning != Conditioning::kNone) {
    if (!aux.defined() || aux.rank() != 3 || aux.dim(0) != multiband.dim(0) ||
        aux.dim(1) != c.n_notes || aux.dim(2) != frames) {
      throw UsageError("encode: aux shape " +
                       (aux.defined() ? ad::ShapeString(aux.shape()) : std::string("undefined")) +
                       " does not match multiband " + ad::ShapeString(multiband.shape()));
    }
    const ad::Tensor parts[] = {multiband, aux};
    h = ad::Concat(tape, parts, 1);
  }
  for (std::size_t i = 0; i < c.encoder_channels.size(); ++i) {
    const std::size_t s = c.encoder_strides[i];
    h = ad::Conv1d(tape, h, params_.Get(Layer("encoder.conv", i) + ".weight"),
                   params_.Get(Layer("encoder.conv", i) + ".bias"), s, s);
    h = ad::LeakyRelu(tape, h, kSlope);
  }
  h = ad::Conv1d(tape, h, params_.Get("encoder.out.weight"), params_.Get("encoder.out.bias"), 1,
                 1);
  return {ad::Slice(tape, h, 1, 0, c.latent_dim),
          ad::Slice(tape, h, 1, c.latent_dim, c.latent_dim)};
}

ad::Tensor RaveModel::Reparameterize(ad::Tape& tape, const LatentDistribution& q,
                                     std::uint64_t seed) const {
  if (q.mean.shape() != q.log_var.shape()) {
    throw UsageError("reparameterize: mean " + ad::ShapeString(q.mean.shape()) +
                     " and log_var " + ad::ShapeString(q.log_var.shape()) + " differ");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Real> eta(q.mean.size());
  for (Real& v : eta) v = static_cast<Real>(normal(rng));
  const ad::Tensor noise = ad::Tensor::FromVector(q.mean.shape(), std::move(eta));
  const ad::Tensor std_dev = ad::Exp(tape, ad::Scale(tape, q.log_var, Real(0.5)));
  return ad::Add(tape, q.mean, ad::Mul(tape, std_dev, noise));
}

ad::Tensor RaveModel::AuxFc(ad::Tape& tape, const ad::Tensor& z,
                            const ad::Tensor& merged_aux) const {
  if (config_.conditioning != Conditioning::kAuxFc) {
    throw UsageError("aux_fc: model was built without the aux FC layer");
  }
  if (!z.defined() || !merged_aux.defined() || z.rank() != 3 || merged_aux.rank() != 3 ||
      z.dim(0) != merged_aux.dim(0) || z.dim(2) != merged_aux.dim(2) ||
      z.dim(1) != config_.latent_dim || merged_aux.dim(1) != config_.n_notes) {
    throw UsageError("aux_fc: z " + (z.defined() ? ad::ShapeString(z.shape()) : "undefined") +
                     " and aux " +
                     (merged_aux.defined() ? ad::ShapeString(merged_aux.shape()) : "undefined") +
                     " are incompatible");
  }
  const ad::Tensor parts[] = {z, merged_aux};
  return ad::Dense(tape, ad::Concat(tape, parts, 1), params_.Get("aux_fc.weight"),
                   params_.Get("aux_fc.bias"));
}

ad::Tensor RaveModel::DecoderInput(ad::Tape& tape, const ad::Tensor& z,
                                   const ad::Tensor& merged_aux) const {
  switch (config_.conditioning) {
    case Conditioning::kNone:
      return z;
    case Conditioning::kAuxFc:
      return AuxFc(tape, z, merged_aux);
    case Conditioning::kConcat:
      break;
  }
  if (!merged_aux.defined() || merged_aux.rank() != 3 || merged_aux.dim(1) != config_.n_notes ||
      merged_aux.dim(0) != z.dim(0) || merged_aux.dim(2) != z.dim(2)) {
    throw UsageError("decoder input: merged aux does not match z " + ad::ShapeString(z.shape()));
  }
  const ad::Tensor parts[] = {z, merged_aux};
  return ad::Concat(tape, parts, 1);
}

ad::Tensor RaveModel::Decode(ad::Tape& tape, const ad::Tensor& h_in) const {
  const auto& c = config_;
  if (!h_in.defined() || h_in.rank() != 3 || h_in.dim(1) != c.decoder_input_channels()) {
    throw UsageError("decode: expected (B, " + std::to_string(c.decoder_input_channels()) +
                     ", T), got " +
                     (h_in.defined() ? ad::ShapeString(h_in.shape()) : "undefined"));
  }
  const std::vector<std::size_t> strides(c.encoder_strides.rbegin(), c.encoder_strides.rend());
  ad::Tensor h = ad::Conv1d(tape, h_in, params_.Get("decoder.in.weight"),
                            params_.Get("decoder.in.bias"), 1, 1);
  h = ad::LeakyRelu(tape, h, kSlope);
  for (std::size_t i = 0; i < strides.size(); ++i) {
    h = ad::ConvTranspose1d(tape, h, params_.Get(Layer("decoder.up", i) + ".weight"),
                            params_.Get(Layer("decoder.up", i) + ".bias"), strides[i],
                            UpPadding(strides[i]));
    h = ad::LeakyRelu(tape, h, kSlope);
    for (std::size_t r = 0; r < c.decoder_residual_blocks; ++r) {
      const std::string a = ResidualName(i, r, 0), b = ResidualName(i, r, 1);
      ad::Tensor y = ad::Conv1d(tape, h, params_.Get(a + ".weight"), params_.Get(a + ".bias"), 1, 1);
      y = ad::LeakyRelu(tape, y, kSlope);
      y = ad::Conv1d(tape, y, params_.Get(b + ".weight"), params_.Get(b + ".bias"), 1, 1);
      h = ad::Add(tape, h, y);
    }
  }
  return ad::Conv1d(tape, h, params_.Get("decoder.out.weight"), params_.Get("decoder.out.bias"), 1,
                    1);
}

ad::Tensor RaveModel::Synthesize(ad::Tape& tape, const ad::Tensor& bands) const {
  return ad::PqmfSynthesis(tape, *bank_, bands);
}

std::size_t RaveModel::discriminator_min_length() const {
  // Receptive field of one scale, in samples of that scale.
  std::size_t field = kDiscKernel0;
  std::size_t jump = 1;
  for (std::size_t l = 1; l < config_.disc_channels.size(); ++l) {
    field += (kDiscKernel - 1) * jump;
    jump *= 2;
  }
  field += (kDiscOutKernel - 1) * jump;
  return field << (config_.disc_scales - 1);
}

DiscriminatorOutput RaveModel::Discriminate(ad::Tape& tape, const ad::Tensor& waveform) const {
  const auto& c = config_;
  if (!waveform.defined() || waveform.rank() != 3 || waveform.dim(1) != 1) {
    throw UsageError("discriminate: expected (B, 1, L) waveform");
  }
  const std::size_t len = waveform.dim(2);
  const std::size_t factor = std::size_t{1} << (c.disc_scales - 1);
  if (len < discriminator_min_length()) {
    throw UsageError("discriminate: input length " + std::to_string(len) +
                     " shorter than receptive field " +
                     std::to_string(discriminator_min_length()));
  }
  if (len % factor != 0) {
    throw UsageError("discriminate: input length " + std::to_string(len) +
                     " not divisible by " + std::to_string(factor));
  }
  DiscriminatorOutput out;
  ad::Tensor x = waveform;
  ad::Tensor total;
  for (std::size_t s = 0; s < c.disc_scales; ++s) {
    if (s > 0) x = ad::AvgPool1d(tape, x, 2);
    const std::string prefix = "discriminator.s" + std::to_string(s) + ".";
    ad::Tensor h = x;
    for (std::size_t l = 0; l < c.disc_channels.size(); ++l) {
      const std::size_t k = l == 0 ? kDiscKernel0 : kDiscKernel;
      const std::size_t stride = l == 0 ? 1 : 2;
      h = ad::Conv1d(tape, h, params_.Get(prefix + Layer("conv", l) + ".weight"),
                     params_.Get(prefix + Layer("conv", l) + ".bias"), stride, k / 2);
      h = ad::LeakyRelu(tape, h, kSlope);
      out.features.push_back(h);
    }
    h = ad::Conv1d(tape, h, params_.Get(prefix + "out.weight"), params_.Get(prefix + "out.bias"),
                   1, kDiscOutKernel / 2);
    ad::Tensor score = ad::BatchMean(tape, h);
    total = total.defined() ? ad::Add(tape, total, score) : score;
  }
  out.score = ad::Scale(tape, total, Real(1) / static_cast<Real>(c.disc_scales));
  return out;
}

ad::Tensor RollsToTensor(std::span<const PianoRoll> rolls) {
  if (rolls.empty()) throw UsageError("rolls to tensor: empty batch");
  const std::size_t notes = rolls[0].n_notes();
  const std::size_t frames = rolls[0].n_frames();
  std::vector<Real> v;
  v.reserve(rolls.size() * notes * frames);
  for (const PianoRoll& r : rolls) {
    if (r.n_notes() != notes || r.n_frames() != frames) {
      throw UsageError("rolls to tensor: rolls differ in shape");
    }
    for (std::size_t i = 0; i < notes; ++i) {
      for (std::size_t t = 0; t < frames; ++t) v.push_back(static_cast<Real>(r.data(i, t)));
    }
  }
  return ad::Tensor::FromVector({rolls.size(), notes, frames}, std::move(v));
}

ad::Tensor MergeAuxTensor(const ad::Tensor& aux, std::size_t stride) {
  if (!aux.defined() || aux.rank() != 3) throw UsageError("merge aux: expected (B, N, F)");
  if (stride == 0 || aux.dim(2) % stride != 0) {
    throw UsageError("merge aux: " + std::to_string(aux.dim(2)) +
                     " frames not divisible by stride " + std::to_string(stride));
  }
  const std::size_t rows = aux.dim(0) * aux.dim(1);
  const std::size_t in_t = aux.dim(2);
  const std::size_t out_t = in_t / stride;
  std::vector<Real> v(rows * out_t);
  const auto src = aux.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < out_t; ++t) {
      const auto first = src.begin() + static_cast<std::ptrdiff_t>(r * in_t + t * stride);
      v[r * out_t + t] = *std::max_element(first, first + static_cast<std::ptrdiff_t>(stride));
    }
  }
  return ad::Tensor::FromVector({aux.dim(0), aux.dim(1), out_t}, std::move(v));
}

ad::Tensor AnalyzeBatch(const dsp::PqmfBank& bank, const ad::Tensor& waveform) {
  if (!waveform.defined() || waveform.rank() != 3 || waveform.dim(1) != 1) {
    throw UsageError("analyze batch: expected (B, 1, L) waveform");
  }
  const std::size_t m = bank.n_bands();
  const std::size_t len = waveform.dim(2);
  if (len == 0 || len % m != 0) {
    throw UsageError("analyze batch: length " + std::to_string(len) +
                     " not divisible by " + std::to_string(m) + " bands");
  }
  const std::size_t batch = waveform.dim(0);
  std::vector<Real> out(batch * len);
  std::vector<double> x(len), bands(len);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto row = waveform.values().subspan(b * len, len);
    std::copy(row.begin(), row.end(), x.begin());
    bank.AnalysisInto(x, bands);
    std::copy(bands.begin(), bands.end(), out.begin() + static_cast<std::ptrdiff_t>(b * len));
  }
  return ad::Tensor::FromVector({batch, m, len / m}, std::move(out));
}

}  // namespace pitchrave::model
