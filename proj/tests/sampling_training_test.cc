// Copyright 2026 The Shaper Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "shaper/masking.h"
#include "shaper/sampling.h"
#include "shaper/trainer.h"
#include "test_util.h"

namespace shaper {
namespace {

using testing::Checksum;
using testing::KindOf;

std::vector<int> RandomTokens(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> t(n);
  for (int& v : t) v = kNumSpecialTokens + static_cast<int>(rng.UniformInt(vocab - kNumSpecialTokens));
  return t;
}

MlmBatch MaskedBatch(std::size_t batch, std::size_t seq, std::size_t vocab,
                     std::uint64_t seed) {
  Rng rng(seed);
  return MaskBatch(RandomTokens(batch * seq, vocab, seed), batch, seq, MaskingPolicy{}, vocab,
                   rng);
}

TEST_CASE("single-option space always yields the unique shape") {
  const DesignSpace space({32}, 5);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) CHECK(SampleRandom(space, rng) == space.Uniform(32));
}

TEST_CASE("random sampling is uniform per layer") {
  const DesignSpace space({120, 240, 360, 480, 540, 600, 768}, 12);
  Rng rng(2024);
  std::vector<std::vector<int>> counts(12, std::vector<int>(7, 0));
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const ShapeVector s = SampleRandom(space, rng);
    REQUIRE(space.Contains(s));
    for (std::size_t l = 0; l < 12; ++l) ++counts[l][space.IndexOf(s[l])];
  }
  // Chi-square critical value for 6 degrees of freedom at p = 0.01.
  const double critical = 16.812;
  const double expected = draws / 7.0;
  for (std::size_t l = 0; l < 12; ++l) {
    double chi2 = 0.0;
    for (int c : counts[l]) chi2 += (c - expected) * (c - expected) / expected;
    CHECK_MESSAGE(chi2 < critical, "layer " << l << " chi2 " << chi2);
  }
}

TEST_CASE("sampling is reproducible per seed") {
  const DesignSpace space({16, 32, 48, 64}, 4);
  Rng a(9), b(9);
  for (int i = 0; i < 50; ++i) CHECK(SampleRandom(space, a) == SampleRandom(space, b));
}

TEST_CASE("sandwich sampling") {
  const DesignSpace space({16, 32, 48, 64}, 2);
  Rng rng(3);
  const auto two = SampleSandwich(space, 2, rng);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == space.Largest());
  CHECK(two[1] == space.Smallest());
  for (int i = 0; i < 100; ++i) {
    const auto four = SampleSandwich(space, 4, rng);
    REQUIRE(four.size() == 4);
    CHECK(four[0] == ShapeVector{{64, 64}});
    CHECK(four[1] == ShapeVector{{16, 16}});
    for (const ShapeVector& s : four) CHECK(space.Contains(s));
  }
  CHECK(KindOf([&] { SampleSandwich(space, 1, rng); }) == ErrorKind::kConfig);
}

TEST_CASE("masking selects about fifteen percent") {
  const std::vector<int> tokens = RandomTokens(10000, 100, 4);
  Rng rng(5);
  const MlmBatch b = MaskBatch(tokens, 100, 100, MaskingPolicy{}, 100, rng);
  const double fraction = static_cast<double>(b.MaskedCount()) / tokens.size();
  CHECK(fraction >= 0.13);
  CHECK(fraction <= 0.17);
  std::size_t masked = 0, kept = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (b.labels[i] < 0) {
      CHECK(b.inputs[i] == tokens[i]);
      continue;
    }
    CHECK(b.labels[i] == tokens[i]);
    masked += b.inputs[i] == kMaskId;
    kept += b.inputs[i] == tokens[i];
  }
  const double n = static_cast<double>(b.MaskedCount());
  CHECK(masked / n == doctest::Approx(0.8).epsilon(0.05));
  CHECK(kept / n >= 0.07);
}

TEST_CASE("masking everything with the mask token") {
  std::vector<int> tokens = RandomTokens(40, 30, 6);
  tokens[3] = kClsId;
  tokens[9] = kSepId;
  MaskingPolicy p{.mask_prob = 1.0, .replace_mask = 1.0, .replace_random = 0.0, .keep = 0.0};
  Rng rng(7);
  const MlmBatch b = MaskBatch(tokens, 4, 10, p, 30, rng);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < kNumSpecialTokens) {
      CHECK(b.inputs[i] == tokens[i]);
      CHECK(b.labels[i] == -1);
    } else {
      CHECK(b.inputs[i] == kMaskId);
    }
  }
}

TEST_CASE("masking that selects nothing is a data error") {
  Rng rng(8);
  MaskingPolicy p;
  p.mask_prob = 1e-15;
  CHECK(KindOf([&] { MaskBatch(RandomTokens(20, 30, 1), 2, 10, p, 30, rng); }) ==
        ErrorKind::kData);
  const std::vector<int> specials(20, kSepId);
  CHECK(KindOf([&] { MaskBatch(specials, 2, 10, MaskingPolicy{}, 30, rng); }) ==
        ErrorKind::kData);
}

TEST_CASE("invalid masking policy is a configuration error") {
  MaskingPolicy p;
  p.keep = 0.2;
  CHECK(KindOf([&] { p.Validate(); }) == ErrorKind::kConfig);
}

TEST_CASE("training the smallest shape leaves the rest of the layers untouched") {
  const BackboneConfig config = BackboneConfig::Desk(40);
  Supernet model = Supernet::Build(config, 1);
  const MlmBatch batch = MaskedBatch(2, 16, 40, 11);
  std::vector<Tensor> before;
  for (const Parameter* p : model.Parameters()) before.push_back(p->value);
  AdamW opt;
  TrainStep(model, batch, {config.design_space.Smallest()}, opt);
  std::map<std::string, std::vector<std::size_t>> active;
  for (const SlicedTensor& t : ActiveTensors(config, config.design_space.Smallest())) {
    active[t.name] = t.dims;
  }
  const auto params = model.Parameters();
  std::size_t layer_params = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    if (!p.name.starts_with("layers.")) continue;
    ++layer_params;
    const std::vector<std::size_t>& dims = active.at(p.name);
    const std::size_t rows = dims[0];
    const std::size_t cols = dims.size() == 1 ? 1 : dims[1];
    bool outside_identical = true, inside_moved = false;
    for (std::size_t r = 0; r < p.rows(); ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) {
        const std::size_t i = r * p.cols() + c;
        if (r < rows && c < cols) {
          inside_moved = inside_moved || p.value[i] != before[k][i];
        } else {
          outside_identical = outside_identical && p.value[i] == before[k][i];
        }
      }
    }
    CHECK_MESSAGE(outside_identical, p.name);
    CHECK_MESSAGE(inside_moved, p.name);
  }
  CHECK(layer_params == 4 * 20);
}

TEST_CASE("training the largest shape may move every parameter") {
  const BackboneConfig config = BackboneConfig::Desk(40);
  Supernet model = Supernet::Build(config, 1);
  const MlmBatch batch = MaskedBatch(2, 16, 40, 12);
  std::vector<std::uint64_t> before;
  for (const Parameter* p : model.Parameters()) before.push_back(Checksum(p->value));
  AdamW opt;
  TrainStep(model, batch, {config.design_space.Largest()}, opt);
  const auto params = model.Parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->name == "embeddings.position") continue;  // rows past seq unused
    CHECK_MESSAGE(Checksum(params[k]->value) != before[k], params[k]->name);
  }
}

TEST_CASE("largest shape reaches every layer parameter") {
  const BackboneConfig config = BackboneConfig::Desk(40);
  Supernet model = Supernet::Build(config, 1);
  const MlmBatch batch = MaskedBatch(1, 64, 40, 13);
  model.ApplyShape(config.design_space.Largest());
  model.ZeroGrad();
  Tape tape;
  tape.Backward(model.MlmForward(tape, batch).loss);
  for (const Parameter* p : model.Parameters()) {
    CHECK_MESSAGE(p->touched_rows == p->rows(), p->name);
    CHECK_MESSAGE(p->touched_cols == p->cols(), p->name);
  }
}

TEST_CASE("gradients accumulate across shapes") {
  const BackboneConfig config = BackboneConfig::Desk(40);
  Supernet model = Supernet::Build(config, 2);
  const MlmBatch batch = MaskedBatch(2, 8, 40, 14);
  auto backward = [&](const ShapeVector& s) {
    model.ApplyShape(s);
    Tape tape;
    tape.Backward(model.MlmForward(tape, batch).loss);
  };
  auto grads = [&] {
    std::vector<Tensor> g;
    for (const Parameter* p : model.Parameters()) g.push_back(p->grad);
    return g;
  };
  const ShapeVector lo = config.design_space.Smallest(), hi = config.design_space.Largest();
  model.ZeroGrad();
  backward(lo);
  const auto g_lo = grads();
  model.ZeroGrad();
  backward(hi);
  const auto g_hi = grads();
  model.ZeroGrad();
  backward(lo);
  backward(hi);
  const auto g_both = grads();
  double worst = 0.0;
  for (std::size_t k = 0; k < g_both.size(); ++k) {
    for (std::size_t i = 0; i < g_both[k].size(); ++i) {
      worst = std::max(worst, std::abs(g_both[k][i] - (g_lo[k][i] + g_hi[k][i])));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("learning rate warms up then decays linearly") {
  TrainingConfig c;
  c.steps = 1000;
  c.warmup_steps = 100;
  c.learning_rate = 1e-3;
  CHECK(LearningRateAt(c, 0) == doctest::Approx(1e-5));
  CHECK(LearningRateAt(c, 99) == doctest::Approx(1e-3));
  CHECK(LearningRateAt(c, 550) == doctest::Approx(0.5e-3));
  CHECK(LearningRateAt(c, 999) < LearningRateAt(c, 998));
  CHECK(LearningRateAt(c, 999) >= 0.0);
}

TEST_CASE("training config validation") {
  TrainingConfig c;
  c.sampler = SamplerMode::kSandwich;
  c.shapes_per_step = 1;
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kConfig);
  c.shapes_per_step = 0;
  CHECK(c.EffectiveShapesPerStep() == 4);
  c.sampler = SamplerMode::kRandom;
  CHECK(c.EffectiveShapesPerStep() == 1);
  CHECK(TrainingConfig::FromJson(c.ToJson()).ToJson() == c.ToJson());
}

struct TinyRun {
  BackboneConfig config = BackboneConfig::Desk(40);
  std::vector<int> tokens = RandomTokens(4000, 40, 21);
  EvalSet eval = EvalSet::Build(RandomTokens(600, 40, 22), 2, 16, 4, MaskingPolicy{}, 40, 7);
  TrainingConfig training = [] {
    TrainingConfig t;
    t.steps = 6;
    t.batch_size = 2;
    t.seq_len = 16;
    t.warmup_steps = 2;
    t.eval_interval = 3;
    return t;
  }();
};

TEST_CASE_FIXTURE(TinyRun, "zero steps leaves the model unchanged") {
  Supernet model = Supernet::Build(config, 1);
  const std::vector<std::uint8_t> before = [&] {
    std::vector<std::uint8_t> b;
    for (const Parameter* p : model.Parameters()) {
      const std::uint64_t h = Checksum(p->value);
      b.insert(b.end(), reinterpret_cast<const std::uint8_t*>(&h),
               reinterpret_cast<const std::uint8_t*>(&h) + 8);
    }
    return b;
  }();
  training.steps = 0;
  const TrainLog log = SuperPretrain(model, tokens, eval, training);
  CHECK(log.empty());
  std::vector<std::uint8_t> after;
  for (const Parameter* p : model.Parameters()) {
    const std::uint64_t h = Checksum(p->value);
    after.insert(after.end(), reinterpret_cast<const std::uint8_t*>(&h),
                 reinterpret_cast<const std::uint8_t*>(&h) + 8);
  }
  CHECK(after == before);
}

TEST_CASE_FIXTURE(TinyRun, "corpus smaller than a batch is a data error") {
  Supernet model = Supernet::Build(config, 1);
  const std::vector<int> few(20, 7);
  CHECK(KindOf([&] { SuperPretrain(model, few, eval, training); }) == ErrorKind::kData);
}

TEST_CASE_FIXTURE(TinyRun, "training log is deterministic and sandwiched") {
  Supernet a = Supernet::Build(config, 1), b = Supernet::Build(config, 1);
  const TrainLog la = SuperPretrain(a, tokens, eval, training);
  const TrainLog lb = SuperPretrain(b, tokens, eval, training);
  CHECK(la.StepsCsv() == lb.StepsCsv());
  CHECK(la.EvalCsv() == lb.EvalCsv());
  REQUIRE(la.steps.size() == 6);
  for (std::size_t i = 0; i < la.steps.size(); ++i) {
    const StepRecord& r = la.steps[i];
    CHECK(r.step == i + 1);
    REQUIRE(r.shapes.size() == 4);
    CHECK(std::count(r.shapes.begin(), r.shapes.end(), config.design_space.Largest()) >= 1);
    CHECK(std::count(r.shapes.begin(), r.shapes.end(), config.design_space.Smallest()) >= 1);
  }
  // Evaluations at steps 0, 3 and 6 over S-, S+ and two probes.
  CHECK(la.evals.size() == 12);
  CHECK(la.StepsCsv().starts_with("step,shape,loss\n"));
  CHECK(la.EvalCsv().starts_with("step,shape,perplexity\n"));
}

TEST_CASE_FIXTURE(TinyRun, "random sampler draws one shape per step") {
  training.sampler = SamplerMode::kRandom;
  Supernet model = Supernet::Build(config, 1);
  const TrainLog log = SuperPretrain(model, tokens, eval, training);
  for (const StepRecord& r : log.steps) CHECK(r.shapes.size() == 1);
}

TEST_CASE_FIXTURE(TinyRun, "perplexity ignores eval batch order") {
  Supernet model = Supernet::Build(config, 3);
  std::vector<MlmBatch> batches = eval.batches();
  std::reverse(batches.begin(), batches.end());
  const EvalSet reversed(batches);
  const ShapeVector s{{32, 64, 16, 48}};
  CHECK(EvaluatePerplexity(model, s, eval) == EvaluatePerplexity(model, s, reversed));
  CHECK(EvaluatePerplexity(model, s, eval) >= 1.0);
}

TEST_CASE("empty eval set is a data error") {
  const std::vector<int> specials(64, kPadId);
  CHECK(KindOf([&] {
          EvalSet::Build(specials, 2, 16, 4, MaskingPolicy{}, 40, 1);
        }) == ErrorKind::kData);
}

}  // namespace
}  // namespace shaper
