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

#ifndef SHAPER_TRAINER_H_
#define SHAPER_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shaper/masking.h"
#include "shaper/optimizer.h"
#include "shaper/shape.h"
#include "shaper/supernet.h"

namespace shaper {

enum class SamplerMode { kRandom, kSandwich };

const char* SamplerModeName(SamplerMode mode);
SamplerMode ParseSamplerMode(const std::string& name);

struct TrainingConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 16;
  std::size_t seq_len = 64;
  double learning_rate = 1e-3;
  std::size_t warmup_steps = 100;
  double weight_decay = 0.01;
  SamplerMode sampler = SamplerMode::kSandwich;
  // Sub-networks per step; 0 selects 4 for sandwich and 1 for random.
  std::size_t shapes_per_step = 0;
  std::size_t eval_interval = 100;
  std::uint64_t seed = 1;
  MaskingPolicy masking;

  std::size_t EffectiveShapesPerStep() const;
  // Throws a configuration error on inconsistent settings.
  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainingConfig FromJson(const nlohmann::json& j);
};

// Linear warmup to the peak rate over warmup_steps, then linear decay to 0 at
// `steps`. `step` counts completed optimizer steps (0-based).
double LearningRateAt(const TrainingConfig& config, std::size_t step);

struct StepRecord {
  std::size_t step = 0;  // 1-based
  std::vector<ShapeVector> shapes;
  std::vector<double> losses;
};

struct EvalRecord {
  std::size_t step = 0;  // optimizer steps completed
  ShapeVector shape;
  double perplexity = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;

  bool empty() const { return steps.empty() && evals.empty(); }
  // "step,shape,loss", one row per sampled shape.
  std::string StepsCsv() const;
  // "step,shape,perplexity".
  std::string EvalCsv() const;
  // Latest perplexity recorded for `shape`, or a state error.
  double FinalPerplexity(const ShapeVector& shape) const;
  double InitialPerplexity(const ShapeVector& shape) const;
};

// Fixed masked batches for perplexity evaluation. The token stream is cut into
// consecutive windows and masked with its own seed, so the set is identical
// across checkpoints.
class EvalSet {
 public:
  EvalSet() = default;
  static EvalSet Build(std::span<const int> tokens, std::size_t batch_size,
                       std::size_t seq_len, std::size_t max_batches,
                       const MaskingPolicy& policy, std::size_t vocab_size,
                       std::uint64_t seed);
  explicit EvalSet(std::vector<MlmBatch> batches);

  const std::vector<MlmBatch>& batches() const { return batches_; }
  std::size_t masked_tokens() const;

 private:
  std::vector<MlmBatch> batches_;
};

// Summed masked cross-entropy of `logits` rows against `labels` (one per row).
double SumCrossEntropy(const Tensor& logits, std::span<const int> labels);

// exp(total masked cross-entropy / total masked tokens) over the eval set.
// Batch sums are combined in sorted order, so the value does not depend on
// batch order. Throws a data error for an empty set.
double EvaluatePerplexity(Supernet& model, const ShapeVector& shape,
                          const EvalSet& eval);

// One optimizer step: each shape is applied, forwarded and back-propagated;
// gradients are averaged over the shapes and AdamW updates the union of the
// touched parameter blocks. Returns the per-shape losses.
std::vector<double> TrainStep(Supernet& model, const MlmBatch& batch,
                              const std::vector<ShapeVector>& shapes,
                              AdamW& optimizer);

// Two random shapes tracked alongside S- and S+ during evaluation.
std::vector<ShapeVector> ProbeShapes(const DesignSpace& space, std::uint64_t seed);

using ProgressFn = std::function<void(const StepRecord&)>;

// Super pre-training over random windows of `train_tokens`. Evaluates S-, S+
// and the probe shapes at step 0, every eval_interval steps and after the
// final step. steps == 0 leaves the model untouched and returns an empty log.
TrainLog SuperPretrain(Supernet& model, std::span<const int> train_tokens,
                       const EvalSet& eval, const TrainingConfig& config,
                       const ProgressFn& progress = {});

}  // namespace shaper

#endif  // SHAPER_TRAINER_H_
