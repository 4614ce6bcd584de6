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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pitchrave/ad/ops.hpp"
#include "pitchrave/ad/param_store.hpp"
#include "pitchrave/ad/tensor.hpp"
#include "pitchrave/branch_trace.hpp"
#include "pitchrave/common.hpp"
#include "pitchrave/dsp/pqmf.hpp"
#include "pitchrave/metrics/distance.hpp"
#include "test_util.hpp"

namespace pitchrave::ad {
namespace {

Tensor Random(Shape shape, std::uint64_t seed, double scale = 1.0, bool grad = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Real> v(NumElements(shape));
  for (auto& e : v) e = static_cast<Real>(u(rng));
  return Tensor::FromVector(std::move(shape), std::move(v), grad);
}

// Direct transcription of the correlation sum, independent of the kernels.
std::vector<double> NaiveConv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
                              std::size_t pad) {
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), O = w.dim(0), K = w.dim(2);
  const std::size_t out = (T + 2 * pad - K) / stride + 1;
  std::vector<double> y(B * O * out);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t t = 0; t < out; ++t) {
        double acc = b.defined() ? b.values()[o] : 0.0;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t k = 0; k < K; ++k) {
            const long idx = static_cast<long>(t * stride + k) - static_cast<long>(pad);
            if (idx < 0 || idx >= static_cast<long>(T)) continue;
            acc += w.values()[(o * C + c) * K + k] * x.values()[(n * C + c) * T + idx];
          }
        y[(n * O + o) * out + t] = acc;
      }
  return y;
}

// Scatter form: every input sample adds a scaled kernel copy at t * stride.
std::vector<double> NaiveConvTranspose(const Tensor& x, const Tensor& w, std::size_t stride,
                                       std::size_t pad) {
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), O = w.dim(1), K = w.dim(2);
  const std::size_t full = (T - 1) * stride + K;
  const std::size_t out = full - 2 * pad;
  std::vector<double> y(B * O * out, 0.0);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t o = 0; o < O; ++o)
          for (std::size_t k = 0; k < K; ++k) {
            const long pos = static_cast<long>(t * stride + k) - static_cast<long>(pad);
            if (pos < 0 || pos >= static_cast<long>(out)) continue;
            y[(n * O + o) * out + pos] +=
                x.values()[(n * C + c) * T + t] * w.values()[(c * O + o) * K + k];
          }
  return y;
}

void ExpectClose(std::span<const Real> got, const std::vector<double>& expect, double tol) {
  ASSERT_EQ(got.size(), expect.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], tol) << "at " << i;
}

TEST(Conv1d, MatchesNaiveSum) {
  Tape tape;
  for (std::size_t stride : {1, 2, 3}) {
    for (std::size_t pad : {0, 1, 4}) {
      const auto x = Random({2, 3, 17}, 1), w = Random({4, 3, 5}, 2), b = Random({4}, 3);
      const Tensor y = Conv1d(tape, x, w, b, stride, pad);
      ExpectClose(y.values(), NaiveConv(x, w, b, stride, pad), 1e-12);
      tape.Clear();
    }
  }
}

TEST(Conv1d, ShapeErrors) {
  Tape tape;
  EXPECT_THROW(Conv1d(tape, Random({1, 3, 8}, 1), Random({2, 4, 3}, 2), Tensor()), UsageError);
  EXPECT_THROW(Conv1d(tape, Random({1, 3, 2}, 1), Random({2, 3, 5}, 2), Tensor()), UsageError);
}

TEST(ConvTranspose1d, MatchesScatterOracle) {
  Tape tape;
  for (auto [stride, k, pad] : {std::tuple<std::size_t, std::size_t, std::size_t>{2, 4, 1},
                                {4, 8, 2}, {1, 3, 1}, {3, 3, 0}}) {
    const auto x = Random({2, 3, 6}, 4), w = Random({3, 2, k}, 5);
    const Tensor y = ConvTranspose1d(tape, x, w, Tensor(), stride, pad);
    ExpectClose(y.values(), NaiveConvTranspose(x, w, stride, pad), 1e-12);
    EXPECT_EQ(y.dim(2), (6 - 1) * stride - 2 * pad + k);
    tape.Clear();
  }
}

TEST(Dense, MatchesMatmulOracle) {
  Tape tape;
  const auto x = Random({2, 3, 4}, 6), w = Random({5, 3}, 7), b = Random({5}, 8);
  const Tensor y = Dense(tape, x, w, b);
  ASSERT_EQ(y.shape(), (Shape{2, 5, 4}));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 5; ++o)
      for (std::size_t t = 0; t < 4; ++t) {
        double acc = b.values()[o];
        for (std::size_t c = 0; c < 3; ++c) acc += w.values()[o * 3 + c] * x.values()[(n * 3 + c) * 4 + t];
        EXPECT_NEAR(y.values()[(n * 5 + o) * 4 + t], acc, 1e-14);
      }
}

TEST(ConcatSlice, RoundTrip) {
  Tape tape;
  const auto a = Random({2, 3, 4}, 9), b = Random({2, 5, 4}, 10);
  const Tensor parts[] = {a, b};
  const Tensor c = Concat(tape, parts, 1);
  ASSERT_EQ(c.shape(), (Shape{2, 8, 4}));
  const Tensor a2 = Slice(tape, c, 1, 0, 3), b2 = Slice(tape, c, 1, 3, 5);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a2.values()[i], a.values()[i]);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b2.values()[i], b.values()[i]);
}

TEST(Backward, Errors) {
  Tape tape;
  const auto x = Random({3}, 1);
  const Tensor y = Square(tape, x);
  EXPECT_THROW(Backward(y, tape), UsageError);  // not a scalar
  Tape empty;
  EXPECT_THROW(Backward(Tensor::Scalar(1.0), empty), UsageError);
}

TEST(Backward, AccumulatesAndDetachStopsGradient) {
  auto x = Random({4}, 2);
  for (int pass = 0; pass < 2; ++pass) {
    Tape tape;
    Backward(Sum(tape, Square(tape, x)), tape);
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x.grad()[i], 4 * x.values()[i], 1e-14);

  Tape tape;
  const Tensor d = x.Detach();
  EXPECT_FALSE(d.requires_grad());
  EXPECT_FALSE(d.SameStorage(x));
  const Tensor loss = Sum(tape, Mul(tape, x, d));
  x.ZeroGrad();
  Backward(loss, tape);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x.grad()[i], x.values()[i], 1e-14);
}

TEST(Backward, Linearity) {
  // grad of (a f + b g) equals a grad f + b grad g.
  auto x = Random({2, 2, 9}, 3);
  const auto w = Random({3, 2, 3}, 4);
  auto grad_of = [&](auto build) {
    x.ZeroGrad();
    Tape tape;
    Backward(build(tape), tape);
    return std::vector<Real>(x.grad().begin(), x.grad().end());
  };
  auto f = [&](Tape& t) { return Sum(t, Tanh(t, Conv1d(t, x, w, Tensor(), 1, 1))); };
  auto g = [&](Tape& t) { return Mean(t, Square(t, x)); };
  const auto gf = grad_of(f), gg = grad_of(g);
  const auto gh = grad_of([&](Tape& t) { return Add(t, Scale(t, f(t), 2.0), Scale(t, g(t), -3.0)); });
  for (std::size_t i = 0; i < gh.size(); ++i) EXPECT_NEAR(gh[i], 2 * gf[i] - 3 * gg[i], 1e-12);
}

TEST(GradCheck, SquareHasExactGradient) {
  const auto x = Random({5}, 11);
  const auto r = GradCheck([&](Tape& t) { return Sum(t, Square(t, x)); }, {x}, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_EQ(r.checked, 5u);
}

TEST(BranchTrace, SignatureFollowsSignPattern) {
  EXPECT_EQ(BranchTrace::Active(), nullptr);
  auto signature = [](std::vector<Real> v) {
    BranchTrace trace;
    Tape tape;
    LeakyRelu(tape, Tensor::FromVector({v.size()}, v), 0.2);
    return trace.signature();
  };
  EXPECT_EQ(signature({1.0, -2.0, 3.0}), signature({0.5, -0.1, 9.0}));
  EXPECT_NE(signature({1.0, -2.0, 3.0}), signature({1.0, 2.0, 3.0}));
  EXPECT_NE(signature({1.0, 0.0}), signature({1.0, -1e-300}));
  EXPECT_EQ(BranchTrace::Active(), nullptr);
}

TEST(GradCheck, RefinementStepsOffAKink) {
  // The middle element sits 3e-6 from the ReLU kink, inside the 1e-5 step:
  // the central difference averages the two slopes.
  const auto x = Tensor::FromVector({3}, {0.7, 3e-6, -0.4});
  auto f = [&](Tape& t) { return Sum(t, LeakyRelu(t, x, 0.2)); };
  const auto plain = GradCheck(f, {x}, 1e-5);
  EXPECT_GT(plain.max_relative_error, 1e-2);
  EXPECT_EQ(plain.worst_index, 1u);
  const auto refined = GradCheck(f, {x}, GradCheckOptions{1e-5, 1e-6});
  EXPECT_LT(refined.max_relative_error, 1e-8);
  EXPECT_EQ(refined.refined, 1u);
  EXPECT_EQ(refined.unresolved, 0u);
}

TEST(GradCheck, RefinementDoesNotHideAWrongGradient) {
  // Backward deliberately doubles the true derivative; the refined oracle
  // must still disagree.
  const auto x = Random({4}, 12);
  auto f = [&](Tape& t) {
    Tensor y = Tensor::Scalar(0);
    for (Real v : x.values()) y.values()[0] += v * v;
    const Tensor inputs[] = {x};
    t.Record(inputs, y, [x, y]() mutable {
      for (std::size_t i = 0; i < x.size(); ++i) x.grad()[i] += 4 * x.values()[i] * y.grad()[0];
    });
    return y;
  };
  const auto r = GradCheck(f, {x}, GradCheckOptions{1e-5, 1e-6});
  EXPECT_NEAR(r.max_relative_error, 0.5, 1e-6);
  EXPECT_EQ(r.refined, 4u);
}

TEST(GradCheck, RejectsBadOptions) {
  const auto x = Random({2}, 13);
  auto f = [&](Tape& t) { return Sum(t, x); };
  EXPECT_THROW(GradCheck(f, {x}, GradCheckOptions{0.0, 0.0}), UsageError);
  EXPECT_THROW(GradCheck(f, {x}, GradCheckOptions{1e-5, -1.0}), UsageError);
}

struct OpCase {
  const char* name;
  std::function<Tensor(Tape&, const std::vector<Tensor>&)> f;
  std::vector<Shape> shapes;
};

class OpGradients : public ::testing::TestWithParam<int> {};

std::vector<OpCase> Cases() {
  return {
      {"conv", [](Tape& t, const std::vector<Tensor>& v) { return Sum(t, Tanh(t, Conv1d(t, v[0], v[1], v[2], 2, 2))); },
       {{2, 3, 11}, {4, 3, 5}, {4}}},
      {"conv_transpose", [](Tape& t, const std::vector<Tensor>& v) { return Sum(t, Tanh(t, ConvTranspose1d(t, v[0], v[1], v[2], 2, 1))); },
       {{2, 3, 5}, {3, 2, 4}, {2}}},
      {"dense", [](Tape& t, const std::vector<Tensor>& v) { return Sum(t, Sigmoid(t, Dense(t, v[0], v[1], v[2]))); },
       {{2, 3, 4}, {5, 3}, {5}}},
      {"pointwise", [](Tape& t, const std::vector<Tensor>& v) {
         Tensor a = LeakyRelu(t, v[0]);
         Tensor b = Mul(t, Exp(t, v[1]), Abs(t, v[0]));
         Tensor c = Log(t, AddScalar(t, Square(t, v[1]), 1.0));
         return Mean(t, Sub(t, Add(t, a, b), Relu(t, c)));
       },
       {{3, 4}, {3, 4}}},
      {"structure", [](Tape& t, const std::vector<Tensor>& v) {
         const Tensor parts[] = {v[0], v[1]};
         Tensor c = Concat(t, parts, 1);
         Tensor s = Slice(t, c, 2, 1, 4);
         Tensor r = Reshape(t, AvgPool1d(t, Square(t, s), 2), {2, 10});
         return Sum(t, Tanh(t, BatchMean(t, r)));
       },
       {{2, 2, 6}, {2, 3, 6}}},
      {"kl", [](Tape& t, const std::vector<Tensor>& v) { return KlDiagGaussian(t, v[0], v[1]); },
       {{2, 3, 4}, {2, 3, 4}}},
  };
}

TEST_P(OpGradients, MatchCentralDifferences) {
  const OpCase c = Cases()[static_cast<std::size_t>(GetParam())];
  std::vector<Tensor> inputs;
  for (std::size_t i = 0; i < c.shapes.size(); ++i) inputs.push_back(Random(c.shapes[i], 20 + i));
  const auto r = GradCheck([&](Tape& t) { return c.f(t, inputs); }, inputs, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-6) << c.name << " worst " << r.worst_param << "[" << r.worst_index << "]";
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradients, ::testing::Range(0, 6));

TEST(SignalOps, PqmfSynthesisMatchesBank) {
  const auto bank = dsp::PqmfBank::Design(4);
  const auto bands = Random({1, 4, 32}, 30);
  Tape tape;
  const Tensor y = PqmfSynthesis(tape, bank, bands);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 128}));
  dsp::MultibandFrame m;
  m.data = Matrix(4, 32);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t f = 0; f < 32; ++f) m.data(k, f) = bands.values()[k * 32 + f];
  const auto ref = bank.Synthesis(m).audio.samples;
  ExpectClose(y.values(), ref, 1e-12);
  const auto r = GradCheck([&](Tape& t) { return Sum(t, Tanh(t, PqmfSynthesis(t, bank, bands))); },
                           {bands}, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(SignalOps, DistanceOpsAverageOverBatch) {
  const auto x = Random({2, 1, 256}, 31, 0.5, false);
  auto y = Random({2, 1, 256}, 32, 0.5);
  metrics::MultiscaleConfig cfg;
  Tape tape;
  const double got = MultiscaleSpectralDistance(tape, x, y, cfg).item();
  const std::span<const Real> xv = x.values(), yv = y.values();
  const double d0 = metrics::MultiscaleSpectralDistance(xv.subspan(0, 256), yv.subspan(0, 256), cfg);
  const double d1 = metrics::MultiscaleSpectralDistance(xv.subspan(256), yv.subspan(256), cfg);
  EXPECT_NEAR(got, 0.5 * (d0 + d1), 1e-12);
  const double s = SpectralDistance(tape, x, y, 64, 1e-7).item();
  EXPECT_NEAR(s, 0.5 * (metrics::SpectralDistance(xv.subspan(0, 256), yv.subspan(0, 256), 64, 1e-7) +
                        metrics::SpectralDistance(xv.subspan(256), yv.subspan(256), 64, 1e-7)),
              1e-12);
  // Backward hands each row the metric's own gradient scaled by 1/B. The
  // finite-difference check of that gradient lives with the metrics.
  Tape t2;
  y.ZeroGrad();
  Backward(MultiscaleSpectralDistance(t2, x, y, cfg), t2);
  std::vector<double> g0, g1;
  metrics::MultiscaleSpectralDistance(xv.subspan(0, 256), yv.subspan(0, 256), cfg, &g0);
  metrics::MultiscaleSpectralDistance(xv.subspan(256), yv.subspan(256), cfg, &g1);
  for (std::size_t i = 0; i < 256; ++i) {
    EXPECT_NEAR(y.grad()[i], 0.5 * g0[i], 1e-15);
    EXPECT_NEAR(y.grad()[256 + i], 0.5 * g1[i], 1e-15);
  }
}

TEST(ParamStore, NamesFlagsAndClone) {
  ParamStore store;
  store.Add("a.w", "enc", Random({2}, 1, 1.0, false));
  store.Add("b.w", "dec", Random({3}, 2, 1.0, false));
  EXPECT_THROW(store.Add("a.w", "enc", Random({1}, 3)), UsageError);
  EXPECT_TRUE(store.Get("a.w").requires_grad());
  EXPECT_EQ(store.NumElements(), 5u);
  store.SetGroupFrozen("enc", true);
  EXPECT_EQ(store.FrozenNames(), std::vector<std::string>{"a.w"});
  ParamStore copy = store.Clone();
  copy.Get("b.w").values()[0] += 1;
  EXPECT_NE(copy.Get("b.w").values()[0], store.Get("b.w").values()[0]);
  EXPECT_TRUE(copy.at("a.w").frozen);
}

}  // namespace
}  // namespace pitchrave::ad
