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

#ifndef SHAPER_HEURISTICS_H_
#define SHAPER_HEURISTICS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "shaper/shape.h"
#include "shaper/supernet.h"

namespace shaper {

enum class TemplateKind {
  kLowerTriangle,
  kUpperTriangle,
  kRectangle,
  kDiamond,
  kInvertedDiamond,
  kBottle,
  kInvertedBottle,
};

std::vector<TemplateKind> AllTemplateKinds();
std::string TemplateKindName(TemplateKind kind);
// Accepts names such as "lower_triangle"; throws a validation error otherwise.
TemplateKind ParseTemplateKind(const std::string& name);

// The 12-layer {120,240,360,480,540,600,768} space the reference templates
// are defined on.
DesignSpace ReferenceTemplateSpace();

// The named template over `space`. On the reference space the tabulated
// shape is returned as is; other spaces get the template linearly
// interpolated over normalised layer position and normalised width, then
// snapped to the nearest allowed dim (ties go to the larger dim).
ShapeVector TemplatedShape(TemplateKind kind, const DesignSpace& space);

// Reference shapes with their published parameter counts (millions) and
// perplexities, used as a fixture for the correlation utilities.
struct TemplateRow {
  std::string name;
  double params_millions = 0.0;
  double perplexity_direct = 0.0;
  double perplexity_scratch = 0.0;
  ShapeVector shape;
};
std::vector<TemplateRow> ReferenceTemplateTable();

// Inclusive 0-based early-middle layer window: layers 2..5 (1-based) for 12
// layers, mapped proportionally for other depths. `first > last` means the
// window is empty (fewer than 3 layers).
std::pair<std::size_t, std::size_t> EarlyMiddleWindow(std::size_t num_layers);

struct HeuristicSpec {
  ShapeVector reference;
  double reference_params = 0.0;
  double target_params = 0.0;
  // Parameters that do not scale with the layer widths (embeddings, head,
  // width-independent biases). The width-dependent part is scaled by
  // (target - fixed) / (reference - fixed); with 0 this is target/reference.
  double fixed_params = 0.0;
  // Defaults to EarlyMiddleWindow(reference.size()) when unset.
  std::size_t window_first = SIZE_MAX;
  std::size_t window_last = SIZE_MAX;
};

// Scales every layer of the reference by the factor above, rounds early-
// middle layers down and all others up to allowed dims, and clamps to the
// space. The reference must itself be cigar-shaped (first and last dims at
// least every early-middle dim). Throws an infeasibility error when the
// target lies outside what the all-min / all-max shapes imply.
ShapeVector CigarScale(const HeuristicSpec& spec, const DesignSpace& space);

// True when the first and last dims are >= every dim in the window.
bool IsCigarShaped(const ShapeVector& shape, std::size_t window_first,
                   std::size_t window_last);

// Softmax of the principal diagonals of each layer's max-size bottlenecks.
struct DiagonalProfile {
  std::vector<std::vector<double>> input;   // per layer
  std::vector<std::vector<double>> output;  // per layer

  // "layer,side,index,weight"
  std::string ToCsv() const;
};

DiagonalProfile ComputeDiagonalProfile(const Supernet& model);

// Per layer: whether the mean profile weight over indices < `prefix`
// exceeds the overall mean weight, for input and output bottleneck averaged.
std::vector<bool> LeadingBandAboveMean(const DiagonalProfile& profile, std::size_t prefix);

// Euclidean norm of the elementwise difference.
double ShapeDiff(const ShapeVector& a, const ShapeVector& b);

struct CorrelationStudy {
  std::vector<double> shape_diffs;
  std::vector<double> metric_diffs;
  double spearman = 0.0;
  double pearson = 0.0;

  nlohmann::json ToJson() const;
};

// Correlates ShapeDiff(S, S_opt) with |metric - metric_opt| over the
// samples. Needs >= 3 samples; constant columns raise a validation error.
CorrelationStudy RunCorrelationStudy(
    const std::vector<std::pair<ShapeVector, double>>& samples,
    const std::pair<ShapeVector, double>& optimal);

}  // namespace shaper

#endif  // SHAPER_HEURISTICS_H_
