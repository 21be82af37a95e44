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

#ifndef SHAPER_SURROGATE_H_
#define SHAPER_SURROGATE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shaper/gbt.h"
#include "shaper/random.h"
#include "shaper/shape.h"
#include "shaper/supernet.h"
#include "shaper/trainer.h"

namespace shaper {

struct SurrogateSample {
  ShapeVector shape;
  std::uint64_t params = 0;
  double target = 0.0;
};

// Rows of (shape, params, target). CSV header:
// shape_0,...,shape_{L-1},params,target
struct SurrogateDataset {
  std::size_t num_layers = 0;
  std::vector<SurrogateSample> rows;

  std::string ToCsv() const;
  static SurrogateDataset FromCsv(const std::string& text);
  void Save(const std::string& path) const;
  static SurrogateDataset Load(const std::string& path);
};

enum class PredictorKind { kPerplexity, kLatency };

const char* PredictorKindName(PredictorKind kind);
PredictorKind ParsePredictorKind(const std::string& name);

// Perplexity predictors see the shape only; latency predictors also see the
// total parameter count.
std::vector<std::string> FeatureNames(std::size_t num_layers, PredictorKind kind);
std::vector<double> Features(const ShapeVector& shape, std::uint64_t params,
                             PredictorKind kind);

struct FitReport {
  std::size_t train_size = 0;
  std::size_t heldout_size = 0;
  // Absent when the targets they are computed on are constant.
  std::optional<double> train_r2;
  std::optional<double> heldout_r2;
  std::optional<double> heldout_spearman;
  std::optional<double> heldout_pearson;
  std::vector<std::string> feature_names;
  std::vector<double> importance;
  bool degenerate = false;  // model collapsed to the mean predictor

  nlohmann::json ToJson() const;
};

struct FitResult {
  GbtModel model;
  FitReport report;
};

// Seeded 80/20 (by default) split after putting rows in canonical order, then
// boosting on the training part and scoring the held-out part. Needs >= 20
// rows.
FitResult FitGbt(const std::vector<std::vector<double>>& x,
                 const std::vector<double>& y, std::vector<std::string> names,
                 const GbtParams& params, std::uint64_t seed,
                 double heldout_fraction = 0.2);

FitResult FitSurrogate(const SurrogateDataset& data, PredictorKind kind,
                       const GbtParams& params, std::uint64_t seed);

// Predicts for a shape, deriving the feature vector from the model's schema
// (a trailing "params" feature is filled with CountParams).
double PredictShape(const GbtModel& model, const BackboneConfig& config,
                    const ShapeVector& shape);

// n uniformly sampled shapes (with replacement) with exact parameter counts
// and measured perplexity.
SurrogateDataset CollectPerplexityDataset(Supernet& model, std::size_t n,
                                          const EvalSet& eval, Rng& rng);

}  // namespace shaper

#endif  // SHAPER_SURROGATE_H_
