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

#include "shaper/trainer.h"

#include <algorithm>
#include <cmath>

#include "shaper/errors.h"
#include "shaper/io.h"
#include "shaper/json_util.h"
#include "shaper/sampling.h"

namespace shaper {

namespace {

constexpr std::uint64_t kProbeStream = 0x70726f6265ULL;
constexpr int kMaskRetries = 100;

}  // namespace

const char* SamplerModeName(SamplerMode mode) {
  return mode == SamplerMode::kSandwich ? "sandwich" : "random";
}

SamplerMode ParseSamplerMode(const std::string& name) {
  if (name == "sandwich") return SamplerMode::kSandwich;
  if (name == "random") return SamplerMode::kRandom;
  throw ConfigError("unknown sampler '" + name + "' (expected random or sandwich)");
}

std::size_t TrainingConfig::EffectiveShapesPerStep() const {
  if (shapes_per_step != 0) return shapes_per_step;
  return sampler == SamplerMode::kSandwich ? 4 : 1;
}

void TrainingConfig::Validate() const {
  if (batch_size == 0 || seq_len == 0) throw ConfigError("batch_size and seq_len must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (eval_interval == 0) throw ConfigError("eval_interval must be >= 1");
  if (sampler == SamplerMode::kSandwich && EffectiveShapesPerStep() < 2) {
    throw ConfigError("sandwich sampling needs at least 2 shapes per step");
  }
  masking.Validate();
}

nlohmann::json TrainingConfig::ToJson() const {
  return {{"steps", steps},
          {"batch_size", batch_size},
          {"seq_len", seq_len},
          {"learning_rate", learning_rate},
          {"warmup_steps", warmup_steps},
          {"weight_decay", weight_decay},
          {"sampler", SamplerModeName(sampler)},
          {"shapes_per_step", EffectiveShapesPerStep()},
          {"eval_interval", eval_interval},
          {"seed", seed},
          {"mask_prob", masking.mask_prob}};
}

TrainingConfig TrainingConfig::FromJson(const nlohmann::json& j) {
  const std::string where = "training";
  RequireKnownKeys(j,
                   {"steps", "batch_size", "seq_len", "learning_rate",
                    "warmup_steps", "weight_decay", "sampler", "shapes_per_step",
                    "eval_interval", "seed", "mask_prob"},
                   where);
  TrainingConfig c;
  ReadOptional(j, "steps", c.steps, where);
  ReadOptional(j, "batch_size", c.batch_size, where);
  ReadOptional(j, "seq_len", c.seq_len, where);
  ReadOptional(j, "learning_rate", c.learning_rate, where);
  ReadOptional(j, "warmup_steps", c.warmup_steps, where);
  ReadOptional(j, "weight_decay", c.weight_decay, where);
  std::string sampler = SamplerModeName(c.sampler);
  ReadOptional(j, "sampler", sampler, where);
  c.sampler = ParseSamplerMode(sampler);
  ReadOptional(j, "shapes_per_step", c.shapes_per_step, where);
  ReadOptional(j, "eval_interval", c.eval_interval, where);
  ReadOptional(j, "seed", c.seed, where);
  ReadOptional(j, "mask_prob", c.masking.mask_prob, where);
  c.Validate();
  return c;
}

double LearningRateAt(const TrainingConfig& config, std::size_t step) {
  const double peak = config.learning_rate;
  if (step < config.warmup_steps) {
    return peak * static_cast<double>(step + 1) /
           static_cast<double>(config.warmup_steps);
  }
  if (config.steps <= config.warmup_steps) return peak;
  const double remaining =
      static_cast<double>(config.steps - std::min(step, config.steps));
  return peak * remaining / static_cast<double>(config.steps - config.warmup_steps);
}

std::string TrainLog::StepsCsv() const {
  std::string out = "step,shape,loss\n";
  for (const StepRecord& r : steps) {
    for (std::size_t i = 0; i < r.shapes.size(); ++i) {
      out += std::to_string(r.step) + "," + r.shapes[i].ToString() + "," +
             FormatDouble(r.losses[i]) + "\n";
    }
  }
  return out;
}

std::string TrainLog::EvalCsv() const {
  std::string out = "step,shape,perplexity\n";
  for (const EvalRecord& r : evals) {
    out += std::to_string(r.step) + "," + r.shape.ToString() + "," +
           FormatDouble(r.perplexity) + "\n";
  }
  return out;
}

double TrainLog::FinalPerplexity(const ShapeVector& shape) const {
  for (auto it = evals.rbegin(); it != evals.rend(); ++it) {
    if (it->shape == shape) return it->perplexity;
  }
  throw StateError("no evaluation recorded for shape " + shape.ToString());
}

double TrainLog::InitialPerplexity(const ShapeVector& shape) const {
  for (const EvalRecord& r : evals) {
    if (r.shape == shape) return r.perplexity;
  }
  throw StateError("no evaluation recorded for shape " + shape.ToString());
}

EvalSet::EvalSet(std::vector<MlmBatch> batches) : batches_(std::move(batches)) {}

EvalSet EvalSet::Build(std::span<const int> tokens, std::size_t batch_size,
                       std::size_t seq_len, std::size_t max_batches,
                       const MaskingPolicy& policy, std::size_t vocab_size,
                       std::uint64_t seed) {
  if (batch_size == 0 || seq_len == 0) throw ConfigError("eval batch and seq must be >= 1");
  Rng rng(seed);
  std::vector<MlmBatch> batches;
  const std::size_t span = batch_size * seq_len;
  for (std::size_t off = 0; off + span <= tokens.size() && batches.size() < max_batches;
       off += span) {
    try {
      batches.push_back(
          MaskBatch(tokens.subspan(off, span), batch_size, seq_len, policy, vocab_size, rng));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kData) throw;
    }
  }
  if (batches.empty()) {
    throw DataError("eval corpus of " + std::to_string(tokens.size()) +
                    " tokens yields no masked batch of " + std::to_string(batch_size) +
                    " x " + std::to_string(seq_len));
  }
  return EvalSet(std::move(batches));
}

std::size_t EvalSet::masked_tokens() const {
  std::size_t n = 0;
  for (const MlmBatch& b : batches_) n += b.MaskedCount();
  return n;
}

double SumCrossEntropy(const Tensor& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw ValidationError("one label per logit row required");
  const std::size_t v = logits.cols();
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double* row = logits.data() + r * v;
    const double mx = *std::max_element(row, row + v);
    double z = 0.0;
    for (std::size_t c = 0; c < v; ++c) z += std::exp(row[c] - mx);
    total += std::log(z) + mx - row[labels[r]];
  }
  return total;
}

double EvaluatePerplexity(Supernet& model, const ShapeVector& shape,
                          const EvalSet& eval) {
  if (eval.batches().empty()) throw DataError("empty eval set");
  model.ApplyShape(shape);
  std::vector<double> sums;
  std::size_t count = 0;
  for (const MlmBatch& batch : eval.batches()) {
    const Tensor logits = model.MlmLogits(batch);
    std::vector<int> labels;
    for (std::size_t p : batch.MaskedPositions()) labels.push_back(batch.labels[p]);
    sums.push_back(SumCrossEntropy(logits, labels));
    count += labels.size();
  }
  std::sort(sums.begin(), sums.end());
  double total = 0.0;
  for (double s : sums) total += s;
  const double ppl = std::exp(total / static_cast<double>(count));
  if (!std::isfinite(ppl)) throw NumericError("perplexity is not finite");
  return ppl;
}

std::vector<double> TrainStep(Supernet& model, const MlmBatch& batch,
                              const std::vector<ShapeVector>& shapes,
                              AdamW& optimizer) {
  if (shapes.empty()) throw ContractError("train step needs at least one shape");
  model.ZeroGrad();
  std::vector<double> losses;
  for (const ShapeVector& shape : shapes) {
    model.ApplyShape(shape);
    Tape tape;
    MlmOutput out = model.MlmForward(tape, batch);
    tape.Backward(out.loss);
    losses.push_back(out.loss.value()[0]);
  }
  std::vector<Parameter*> touched;
  const double scale = 1.0 / static_cast<double>(shapes.size());
  for (Parameter* p : model.Parameters()) {
    if (!p->touched()) continue;
    if (shapes.size() > 1) {
      for (double& g : p->grad.values()) g *= scale;
    }
    touched.push_back(p);
  }
  optimizer.Step(touched);
  return losses;
}

std::vector<ShapeVector> ProbeShapes(const DesignSpace& space, std::uint64_t seed) {
  Rng rng(Rng::Mix(seed, kProbeStream));
  return {SampleRandom(space, rng), SampleRandom(space, rng)};
}

TrainLog SuperPretrain(Supernet& model, std::span<const int> train_tokens,
                       const EvalSet& eval, const TrainingConfig& config,
                       const ProgressFn& progress) {
  config.Validate();
  TrainLog log;
  if (config.steps == 0) return log;
  if (config.seq_len > model.config().max_seq_len) {
    throw ConfigError("seq_len exceeds the backbone's max_seq_len");
  }
  const std::size_t span = config.batch_size * config.seq_len;
  if (train_tokens.size() < span) {
    throw DataError("training corpus has " + std::to_string(train_tokens.size()) +
                    " tokens, fewer than one batch (" + std::to_string(span) + ")");
  }
  const DesignSpace& space = model.config().design_space;
  std::vector<ShapeVector> eval_shapes{space.Smallest(), space.Largest()};
  for (ShapeVector& s : ProbeShapes(space, config.seed)) eval_shapes.push_back(s);

  auto evaluate = [&](std::size_t step) {
    for (const ShapeVector& s : eval_shapes) {
      log.evals.push_back({step, s, EvaluatePerplexity(model, s, eval)});
    }
  };

  Rng rng(config.seed);
  AdamWConfig opt_config;
  opt_config.learning_rate = config.learning_rate;
  opt_config.weight_decay = config.weight_decay;
  AdamW optimizer(opt_config);
  const std::size_t n = config.EffectiveShapesPerStep();
  const std::size_t max_offset = train_tokens.size() - config.seq_len;
  std::vector<int> window(span);

  evaluate(0);
  for (std::size_t step = 0; step < config.steps; ++step) {
    MlmBatch batch;
    for (int attempt = 0;; ++attempt) {
      for (std::size_t b = 0; b < config.batch_size; ++b) {
        const std::size_t off = rng.UniformInt(max_offset + 1);
        std::copy_n(train_tokens.begin() + off, config.seq_len,
                    window.begin() + b * config.seq_len);
      }
      try {
        batch = MaskBatch(window, config.batch_size, config.seq_len, config.masking,
                          model.config().vocab_size, rng);
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kData || attempt + 1 >= kMaskRetries) throw;
      }
    }
    StepRecord record;
    record.step = step + 1;
    if (config.sampler == SamplerMode::kSandwich) {
      record.shapes = SampleSandwich(space, n, rng);
    } else {
      for (std::size_t i = 0; i < n; ++i) record.shapes.push_back(SampleRandom(space, rng));
    }
    optimizer.set_learning_rate(LearningRateAt(config, step));
    try {
      record.losses = TrainStep(model, batch, record.shapes, optimizer);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      throw NumericError("training step " + std::to_string(step + 1) + ": " + e.what());
    }
    if (progress) progress(record);
    log.steps.push_back(std::move(record));
    const std::size_t done = step + 1;
    if (done % config.eval_interval == 0 || done == config.steps) evaluate(done);
  }
  return log;
}

}  // namespace shaper
