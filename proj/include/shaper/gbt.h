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

#ifndef SHAPER_GBT_H_
#define SHAPER_GBT_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace shaper {

struct GbtParams {
  std::size_t num_trees = 100;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 2;

  void Validate() const;
  nlohmann::json ToJson() const;
  static GbtParams FromJson(const nlohmann::json& j);
};

// Node of a regression tree stored in a flat array. Internal nodes send
// x[feature] <= threshold to `left`; leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;

  bool leaf() const { return feature < 0; }
};

using Tree = std::vector<TreeNode>;

// Squared-error gradient-boosted regression trees with exact greedy splits.
// Split search scans features in index order and thresholds at midpoints of
// sorted distinct values; a candidate replaces the incumbent only with a
// strictly larger gain, and rows are put in canonical order before fitting,
// so the fitted model does not depend on input row order.
class GbtModel {
 public:
  GbtModel() = default;
  GbtModel(std::vector<std::string> feature_names, double base_score,
           double learning_rate, std::vector<Tree> trees);

  static GbtModel Fit(const std::vector<std::vector<double>>& x,
                      std::span<const double> y,
                      std::vector<std::string> feature_names,
                      const GbtParams& params);

  bool fitted() const { return fitted_; }
  std::size_t num_features() const { return feature_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<Tree>& trees() const { return trees_; }
  // True when no tree ever split (the model is the base score).
  bool degenerate() const;

  // base + lr * sum of leaf values. Throws a validation error when the
  // feature count differs from the schema and a state error when unfitted.
  double Predict(std::span<const double> features) const;
  std::vector<double> PredictAll(const std::vector<std::vector<double>>& x) const;

  // Total split gain per feature normalised to sum 1; all zeros when the
  // model never splits. Throws a state error when unfitted.
  std::vector<double> FeatureImportance() const;
  const std::vector<double>& raw_gain() const { return gain_; }

  nlohmann::json ToJson() const;
  static GbtModel FromJson(const nlohmann::json& j);
  void Save(const std::string& path) const;
  static GbtModel Load(const std::string& path);

 private:
  std::vector<std::string> feature_names_;
  double base_score_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<Tree> trees_;
  std::vector<double> gain_;
  bool fitted_ = false;
};

}  // namespace shaper

#endif  // SHAPER_GBT_H_
