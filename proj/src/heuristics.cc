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

#include "shaper/heuristics.h"

#include <algorithm>
#include <cmath>

#include "shaper/errors.h"
#include "shaper/io.h"
#include "shaper/stats.h"

namespace shaper {

namespace {

constexpr int kStudyFormatVersion = 1;
constexpr double kSnapTolerance = 1e-9;

struct NamedTemplate {
  TemplateKind kind;
  const char* name;
  std::vector<int> dims;
};

const std::vector<NamedTemplate>& Templates() {
  static const std::vector<NamedTemplate> kTemplates = {
      {TemplateKind::kLowerTriangle, "lower_triangle",
       {120, 120, 240, 240, 360, 360, 360, 480, 540, 540, 600, 768}},
      {TemplateKind::kUpperTriangle, "upper_triangle",
       {768, 600, 540, 540, 480, 360, 360, 360, 240, 240, 120, 120}},
      {TemplateKind::kRectangle, "rectangle",
       {360, 360, 360, 360, 360, 360, 360, 360, 360, 360, 360, 360}},
      {TemplateKind::kDiamond, "diamond",
       {120, 240, 360, 480, 480, 540, 768, 540, 480, 360, 240, 120}},
      {TemplateKind::kInvertedDiamond, "inverted_diamond",
       {768, 600, 360, 240, 240, 120, 120, 240, 240, 360, 600, 768}},
      {TemplateKind::kBottle, "bottle",
       {120, 120, 120, 120, 120, 120, 600, 600, 600, 600, 600, 768}},
      {TemplateKind::kInvertedBottle, "inverted_bottle",
       {768, 600, 600, 600, 600, 600, 120, 120, 120, 120, 120, 120}},
  };
  return kTemplates;
}

const NamedTemplate& Lookup(TemplateKind kind) {
  for (const NamedTemplate& t : Templates()) {
    if (t.kind == kind) return t;
  }
  throw ValidationError("unknown template kind");
}

int SnapNearest(const DesignSpace& space, double v) {
  int best = space.min_dim();
  double best_dist = INFINITY;
  for (int d : space.allowed_dims()) {
    const double dist = std::abs(static_cast<double>(d) - v);
    if (dist <= best_dist + kSnapTolerance) {  // ascending dims: ties go up
      best = d;
      best_dist = std::min(best_dist, dist);
    }
  }
  return best;
}

int SnapDown(const DesignSpace& space, double v) {
  int out = space.min_dim();
  for (int d : space.allowed_dims()) {
    if (d <= v + kSnapTolerance * std::max(1.0, v)) out = d;
  }
  return out;
}

int SnapUp(const DesignSpace& space, double v) {
  for (int d : space.allowed_dims()) {
    if (d >= v - kSnapTolerance * std::max(1.0, v)) return d;
  }
  return space.max_dim();
}

std::vector<double> Softmax(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) z += out[i] = std::exp(v[i] - mx);
  for (double& x : out) x /= z;
  return out;
}

std::vector<double> Diagonal(const Parameter& w) {
  const std::size_t n = std::min(w.rows(), w.cols());
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = w.value.at(i, i);
  return d;
}

}  // namespace

std::vector<TemplateKind> AllTemplateKinds() {
  std::vector<TemplateKind> out;
  for (const NamedTemplate& t : Templates()) out.push_back(t.kind);
  return out;
}

std::string TemplateKindName(TemplateKind kind) { return Lookup(kind).name; }

TemplateKind ParseTemplateKind(const std::string& name) {
  for (const NamedTemplate& t : Templates()) {
    if (name == t.name) return t.kind;
  }
  throw ValidationError("unknown template kind '" + name + "'");
}

DesignSpace ReferenceTemplateSpace() {
  return DesignSpace({120, 240, 360, 480, 540, 600, 768}, 12);
}

ShapeVector TemplatedShape(TemplateKind kind, const DesignSpace& space) {
  const NamedTemplate& t = Lookup(kind);
  const DesignSpace ref = ReferenceTemplateSpace();
  if (space == ref) return ShapeVector{t.dims};
  const std::size_t L = space.num_layers();
  const double ref_span = static_cast<double>(ref.max_dim() - ref.min_dim());
  ShapeVector out;
  for (std::size_t i = 0; i < L; ++i) {
    const double pos = L == 1 ? 0.0
                              : static_cast<double>(i) * static_cast<double>(t.dims.size() - 1) /
                                    static_cast<double>(L - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, t.dims.size() - 1);
    const double w = pos - static_cast<double>(lo);
    const double value = (1.0 - w) * t.dims[lo] + w * t.dims[hi];
    const double frac = (value - ref.min_dim()) / ref_span;
    out.dims.push_back(SnapNearest(
        space, space.min_dim() + frac * static_cast<double>(space.max_dim() - space.min_dim())));
  }
  return out;
}

std::vector<TemplateRow> ReferenceTemplateTable() {
  return {
      {"evo_search_1", 65, 6.86, 4.45, {{480, 360, 360, 240, 240, 360, 480, 480, 360, 480, 540, 540}}},
      {"evo_search_2", 63, 7.09, 4.55, {{480, 240, 360, 240, 540, 480, 360, 360, 360, 360, 540, 480}}},
      {"lower_triangle", 64, 7.31, 4.67, {Lookup(TemplateKind::kLowerTriangle).dims}},
      {"random", 64, 7.49, 4.91, {{480, 360, 360, 540, 480, 540, 360, 480, 540, 120, 360, 540}}},
      {"rectangle", 58, 7.5, 4.72, {Lookup(TemplateKind::kRectangle).dims}},
      {"inverted_diamond", 65, 8.12, 4.93, {Lookup(TemplateKind::kInvertedDiamond).dims}},
      {"bottle", 64, 8.31, 4.9, {Lookup(TemplateKind::kBottle).dims}},
      {"diamond", 64, 8.36, 5.13, {Lookup(TemplateKind::kDiamond).dims}},
      {"upper_triangle", 64, 8.43, 5.16, {Lookup(TemplateKind::kUpperTriangle).dims}},
      {"inverted_bottle", 64, 9.22, 5.37, {Lookup(TemplateKind::kInvertedBottle).dims}},
  };
}

std::pair<std::size_t, std::size_t> EarlyMiddleWindow(std::size_t num_layers) {
  if (num_layers < 3) return {1, 0};
  const double scale = static_cast<double>(num_layers - 1) / 11.0;
  const std::size_t first = std::max<std::size_t>(1, std::llround(1.0 * scale));
  const std::size_t last = std::clamp<std::size_t>(std::llround(4.0 * scale), first,
                                                   num_layers - 2);
  return {first, last};
}

bool IsCigarShaped(const ShapeVector& shape, std::size_t window_first,
                   std::size_t window_last) {
  if (shape.size() == 0) return false;
  for (std::size_t i = window_first; i <= window_last && i < shape.size(); ++i) {
    if (shape[0] < shape[i] || shape.dims.back() < shape[i]) return false;
  }
  return true;
}

ShapeVector CigarScale(const HeuristicSpec& spec, const DesignSpace& space) {
  space.Validate(spec.reference);
  if (!(spec.reference_params > 0.0) || !(spec.target_params > 0.0)) {
    throw ValidationError("reference and target parameter counts must be positive");
  }
  if (!(spec.fixed_params >= 0.0) || spec.fixed_params >= spec.reference_params) {
    throw ValidationError("fixed parameters must be >= 0 and below the reference count");
  }
  if (spec.fixed_params >= spec.target_params) {
    throw InfeasibleError("target of " + FormatDouble(spec.target_params) +
                          " parameters does not exceed the " +
                          FormatDouble(spec.fixed_params) + " width-independent parameters");
  }
  const std::size_t L = space.num_layers();
  auto [first, last] = EarlyMiddleWindow(L);
  if (spec.window_first != SIZE_MAX) first = spec.window_first;
  if (spec.window_last != SIZE_MAX) last = spec.window_last;
  if (first <= last && last >= L) throw ValidationError("early-middle window exceeds depth");
  if (!IsCigarShaped(spec.reference, first, last)) {
    throw ValidationError("reference shape " + spec.reference.ToString() +
                          " is not cigar-shaped: first and last dims must be >= every "
                          "early-middle dim");
  }
  const double k = (spec.target_params - spec.fixed_params) /
                   (spec.reference_params - spec.fixed_params);
  double ref_sum = 0.0;
  for (int d : spec.reference.dims) ref_sum += d;
  const double scaled_sum = k * ref_sum;
  const double lo = static_cast<double>(L) * space.min_dim();
  const double hi = static_cast<double>(L) * space.max_dim();
  if (scaled_sum < lo * (1.0 - kSnapTolerance) || scaled_sum > hi * (1.0 + kSnapTolerance)) {
    throw InfeasibleError("target of " + FormatDouble(spec.target_params) +
                          " parameters lies outside the range spanned by the all-min "
                          "and all-max shapes");
  }
  ShapeVector out;
  for (std::size_t i = 0; i < L; ++i) {
    const double v = k * spec.reference[i];
    const bool early_middle = i >= first && i <= last;
    out.dims.push_back(early_middle ? SnapDown(space, v) : SnapUp(space, v));
  }
  return out;
}

std::string DiagonalProfile::ToCsv() const {
  std::string out = "layer,side,index,weight\n";
  auto emit = [&out](std::size_t layer, const char* side, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      out += std::to_string(layer) + "," + side + "," + std::to_string(i) + "," +
             FormatDouble(v[i]) + "\n";
    }
  };
  for (std::size_t l = 0; l < input.size(); ++l) {
    emit(l, "input", input[l]);
    emit(l, "output", output[l]);
  }
  return out;
}

DiagonalProfile ComputeDiagonalProfile(const Supernet& model) {
  DiagonalProfile p;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const ElasticTransformerLayer& layer = model.layer(l);
    p.input.push_back(Softmax(Diagonal(layer.in_bottleneck().weight())));
    p.output.push_back(Softmax(Diagonal(layer.out_bottleneck().weight())));
  }
  return p;
}

std::vector<bool> LeadingBandAboveMean(const DiagonalProfile& profile, std::size_t prefix) {
  std::vector<bool> out;
  auto lead_excess = [prefix](const std::vector<double>& v) {
    const std::size_t n = std::min(prefix, v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s / static_cast<double>(n) - 1.0 / static_cast<double>(v.size());
  };
  for (std::size_t l = 0; l < profile.input.size(); ++l) {
    out.push_back(lead_excess(profile.input[l]) + lead_excess(profile.output[l]) > 0.0);
  }
  return out;
}

double ShapeDiff(const ShapeVector& a, const ShapeVector& b) {
  if (a.size() != b.size()) {
    throw ValidationError("shape_diff of shapes with " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()) + " layers");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

nlohmann::json CorrelationStudy::ToJson() const {
  return {{"format_version", kStudyFormatVersion},
          {"samples", shape_diffs.size()},
          {"spearman", spearman},
          {"pearson", pearson},
          {"shape_diffs", shape_diffs},
          {"metric_diffs", metric_diffs}};
}

CorrelationStudy RunCorrelationStudy(
    const std::vector<std::pair<ShapeVector, double>>& samples,
    const std::pair<ShapeVector, double>& optimal) {
  if (samples.size() < 3) throw ValidationError("correlation study needs >= 3 samples");
  CorrelationStudy s;
  for (const auto& [shape, metric] : samples) {
    s.shape_diffs.push_back(ShapeDiff(shape, optimal.first));
    s.metric_diffs.push_back(std::abs(metric - optimal.second));
  }
  s.spearman = Spearman(s.shape_diffs, s.metric_diffs);
  s.pearson = Pearson(s.shape_diffs, s.metric_diffs);
  return s;
}

}  // namespace shaper
