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

#include "shaper/gbt.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shaper/errors.h"
#include "shaper/io.h"
#include "shaper/json_util.h"

namespace shaper {

namespace {

constexpr int kModelFormatVersion = 1;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x,
              const std::vector<double>& residual, const GbtParams& params,
              std::vector<double>& gain)
      : x_(x), r_(residual), params_(params), gain_(gain) {}

  Tree Build() {
    std::vector<std::size_t> rows(x_.size());
    std::iota(rows.begin(), rows.end(), 0);
    Grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int Grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree_.size());
    tree_.emplace_back();
    double sum = 0.0;
    for (std::size_t i : rows) sum += r_[i];
    tree_[id].value = sum / static_cast<double>(rows.size());
    if (depth >= params_.max_depth || rows.size() < 2 * params_.min_samples_leaf) {
      return id;
    }
    const Split split = BestSplit(rows, sum);
    if (split.feature < 0) return id;
    gain_[split.feature] += split.gain;
    std::vector<std::size_t> left, right;
    for (std::size_t i : rows) {
      (x_[i][split.feature] <= split.threshold ? left : right).push_back(i);
    }
    tree_[id].feature = split.feature;
    tree_[id].threshold = split.threshold;
    const int l = Grow(left, depth + 1);
    const int r = Grow(right, depth + 1);
    tree_[id].left = l;
    tree_[id].right = r;
    return id;
  }

  Split BestSplit(const std::vector<std::size_t>& rows, double total) const {
    const double n = static_cast<double>(rows.size());
    const double parent = total * total / n;
    Split best;
    std::vector<std::size_t> order(rows);
    for (std::size_t f = 0; f < x_[0].size(); ++f) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_[a][f] < x_[b][f];
      });
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        left_sum += r_[order[k]];
        const double lo = x_[order[k]][f], hi = x_[order[k + 1]][f];
        if (lo == hi) continue;
        const std::size_t nl = k + 1, nr = order.size() - nl;
        if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - parent;
        if (gain > best.gain) {
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (lo + hi);
          best.gain = gain;
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<double>& r_;
  const GbtParams& params_;
  std::vector<double>& gain_;
  Tree tree_;
};

double PredictTree(const Tree& tree, std::span<const double> x) {
  int id = 0;
  while (!tree[id].leaf()) {
    id = x[tree[id].feature] <= tree[id].threshold ? tree[id].left : tree[id].right;
  }
  return tree[id].value;
}

nlohmann::json NodeToJson(const Tree& tree, int id) {
  const TreeNode& n = tree[id];
  if (n.leaf()) return {{"leaf", n.value}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"left", NodeToJson(tree, n.left)},
          {"right", NodeToJson(tree, n.right)}};
}

int NodeFromJson(const nlohmann::json& j, std::size_t num_features, Tree& tree) {
  const int id = static_cast<int>(tree.size());
  tree.emplace_back();
  if (j.contains("leaf")) {
    RequireKnownKeys(j, {"leaf"}, "tree node");
    tree[id].value = j.at("leaf").get<double>();
    return id;
  }
  RequireKnownKeys(j, {"feature", "threshold", "left", "right"}, "tree node");
  const int f = j.at("feature").get<int>();
  if (f < 0 || static_cast<std::size_t>(f) >= num_features) {
    throw FormatError("tree node feature index " + std::to_string(f) + " out of range");
  }
  tree[id].feature = f;
  tree[id].threshold = j.at("threshold").get<double>();
  const int l = NodeFromJson(j.at("left"), num_features, tree);
  const int r = NodeFromJson(j.at("right"), num_features, tree);
  tree[id].left = l;
  tree[id].right = r;
  return id;
}

}  // namespace

void GbtParams::Validate() const {
  if (num_trees == 0) throw ConfigError("gbt num_trees must be >= 1");
  if (min_samples_leaf == 0) throw ConfigError("gbt min_samples_leaf must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("gbt learning_rate must be positive");
  }
}

nlohmann::json GbtParams::ToJson() const {
  return {{"num_trees", num_trees},
          {"max_depth", max_depth},
          {"learning_rate", learning_rate},
          {"min_samples_leaf", min_samples_leaf}};
}

GbtParams GbtParams::FromJson(const nlohmann::json& j) {
  const std::string where = "surrogate";
  RequireKnownKeys(j, {"num_trees", "max_depth", "learning_rate", "min_samples_leaf"},
                   where);
  GbtParams p;
  ReadOptional(j, "num_trees", p.num_trees, where);
  ReadOptional(j, "max_depth", p.max_depth, where);
  ReadOptional(j, "learning_rate", p.learning_rate, where);
  ReadOptional(j, "min_samples_leaf", p.min_samples_leaf, where);
  p.Validate();
  return p;
}

GbtModel::GbtModel(std::vector<std::string> feature_names, double base_score,
                   double learning_rate, std::vector<Tree> trees)
    : feature_names_(std::move(feature_names)),
      base_score_(base_score),
      learning_rate_(learning_rate),
      trees_(std::move(trees)),
      gain_(feature_names_.size(), 0.0),
      fitted_(true) {
  for (const Tree& t : trees_) {
    if (t.empty()) throw FormatError("empty regression tree");
    for (const TreeNode& n : t) {
      if (n.leaf()) continue;
      if (static_cast<std::size_t>(n.feature) >= feature_names_.size() || n.left < 0 ||
          n.right < 0 || static_cast<std::size_t>(std::max(n.left, n.right)) >= t.size()) {
        throw FormatError("malformed regression tree node");
      }
    }
  }
}

GbtModel GbtModel::Fit(const std::vector<std::vector<double>>& x,
                       std::span<const double> y,
                       std::vector<std::string> feature_names,
                       const GbtParams& params) {
  params.Validate();
  if (x.empty() || x.size() != y.size()) {
    throw ValidationError("gbt fit needs matching, non-empty features and targets");
  }
  for (const auto& row : x) {
    if (row.size() != feature_names.size()) {
      throw ValidationError("feature row width differs from the schema");
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw NumericError("non-finite feature value");
    }
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw NumericError("non-finite target value");
  }
  // Canonical row order: lexicographic on (features, target).
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (std::size_t i : order) {
    xs.push_back(x[i]);
    ys.push_back(y[i]);
  }

  GbtModel model;
  model.feature_names_ = std::move(feature_names);
  model.learning_rate_ = params.learning_rate;
  model.gain_.assign(model.feature_names_.size(), 0.0);
  model.fitted_ = true;
  double sum = 0.0;
  for (double v : ys) sum += v;
  model.base_score_ = sum / static_cast<double>(ys.size());

  std::vector<double> pred(ys.size(), model.base_score_);
  std::vector<double> residual(ys.size());
  for (std::size_t t = 0; t < params.num_trees; ++t) {
    for (std::size_t i = 0; i < ys.size(); ++i) residual[i] = ys[i] - pred[i];
    TreeBuilder builder(xs, residual, params, model.gain_);
    Tree tree = builder.Build();
    if (tree.size() == 1) break;  // no split improves the fit any further
    for (std::size_t i = 0; i < ys.size(); ++i) {
      pred[i] += params.learning_rate * PredictTree(tree, xs[i]);
    }
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

bool GbtModel::degenerate() const {
  for (const Tree& t : trees_) {
    if (t.size() > 1) return false;
  }
  return true;
}

double GbtModel::Predict(std::span<const double> features) const {
  if (!fitted_) throw StateError("gbt model is not fitted");
  if (features.size() != feature_names_.size()) {
    throw ValidationError("expected " + std::to_string(feature_names_.size()) +
                          " features, got " + std::to_string(features.size()));
  }
  double acc = 0.0;
  for (const Tree& t : trees_) acc += PredictTree(t, features);
  return base_score_ + learning_rate_ * acc;
}

std::vector<double> GbtModel::PredictAll(const std::vector<std::vector<double>>& x) const {
  std::vector<double> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(Predict(row));
  return out;
}

std::vector<double> GbtModel::FeatureImportance() const {
  if (!fitted_) throw StateError("gbt model is not fitted");
  std::vector<double> imp = gain_;
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0) {
    for (double& v : imp) v /= total;
  }
  return imp;
}

nlohmann::json GbtModel::ToJson() const {
  if (!fitted_) throw StateError("gbt model is not fitted");
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : trees_) trees.push_back(NodeToJson(t, 0));
  return {{"format_version", kModelFormatVersion},
          {"features", feature_names_},
          {"base_score", base_score_},
          {"learning_rate", learning_rate_},
          {"gain", gain_},
          {"trees", trees}};
}

GbtModel GbtModel::FromJson(const nlohmann::json& j) {
  try {
    RequireKnownKeys(j, {"format_version", "features", "base_score", "learning_rate",
                         "gain", "trees"},
                     "gbt model");
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw FormatError("unsupported gbt model format_version " +
                        j.at("format_version").dump());
    }
    auto names = j.at("features").get<std::vector<std::string>>();
    std::vector<Tree> trees;
    for (const auto& tj : j.at("trees")) {
      Tree t;
      NodeFromJson(tj, names.size(), t);
      trees.push_back(std::move(t));
    }
    GbtModel m(std::move(names), j.at("base_score").get<double>(),
               j.at("learning_rate").get<double>(), std::move(trees));
    if (j.contains("gain")) {
      auto gain = j.at("gain").get<std::vector<double>>();
      if (gain.size() != m.num_features()) throw FormatError("gain length mismatch");
      m.gain_ = std::move(gain);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("gbt model: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw FormatError(e.what());
    throw;
  }
}

void GbtModel::Save(const std::string& path) const {
  WriteFileAtomic(path, ToJson().dump(2) + "\n");
}

GbtModel GbtModel::Load(const std::string& path) {
  const std::string text = ReadFile(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return FromJson(j);
}

}  // namespace shaper
