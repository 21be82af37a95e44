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

#include "shaper/surrogate.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "shaper/errors.h"
#include "shaper/io.h"
#include "shaper/sampling.h"
#include "shaper/stats.h"

namespace shaper {

namespace {

constexpr int kReportFormatVersion = 1;
constexpr std::size_t kMinFitRows = 20;

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T ParseNumber(const std::string& cell, std::size_t line_no) {
  std::size_t used = 0;
  T v{};
  try {
    if constexpr (std::is_same_v<T, double>) {
      v = std::stod(cell, &used);
    } else {
      if (!cell.empty() && cell[0] == '-') throw std::invalid_argument("negative");
      v = static_cast<T>(std::stoull(cell, &used));
    }
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size()) {
    throw FormatError("dataset line " + std::to_string(line_no) + ": bad number '" +
                      cell + "'");
  }
  return v;
}

std::optional<double> MaybeR2(std::span<const double> y, std::span<const double> p) {
  if (y.size() < 2 || std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
    return std::nullopt;
  }
  return R2(y, p);
}

template <typename F>
std::optional<double> MaybeCorrelation(std::span<const double> a,
                                       std::span<const double> b, F fn) {
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
  };
  if (a.size() < 2 || constant(a) || constant(b)) return std::nullopt;
  return fn(a, b);
}

nlohmann::json OptionalJson(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string SurrogateDataset::ToCsv() const {
  std::string out;
  for (std::size_t i = 0; i < num_layers; ++i) out += "shape_" + std::to_string(i) + ",";
  out += "params,target\n";
  for (const SurrogateSample& r : rows) {
    for (int d : r.shape.dims) out += std::to_string(d) + ",";
    out += std::to_string(r.params) + "," + FormatDouble(r.target) + "\n";
  }
  return out;
}

SurrogateDataset SurrogateDataset::FromCsv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw FormatError("dataset is empty (no header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = SplitCsvLine(line);
  if (header.size() < 3 || header[header.size() - 2] != "params" ||
      header.back() != "target") {
    throw FormatError("dataset header must be shape_0..shape_{L-1},params,target");
  }
  SurrogateDataset data;
  data.num_layers = header.size() - 2;
  for (std::size_t i = 0; i < data.num_layers; ++i) {
    if (header[i] != "shape_" + std::to_string(i)) {
      throw FormatError("dataset header column " + std::to_string(i) + " is '" +
                        header[i] + "', expected shape_" + std::to_string(i));
    }
  }
  std::size_t line_no = 1;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw FormatError("dataset line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " fields, expected " +
                        std::to_string(header.size()));
    }
    SurrogateSample s;
    for (std::size_t i = 0; i < data.num_layers; ++i) {
      s.shape.dims.push_back(static_cast<int>(ParseNumber<std::uint64_t>(cells[i], line_no)));
    }
    s.params = ParseNumber<std::uint64_t>(cells[data.num_layers], line_no);
    s.target = ParseNumber<double>(cells.back(), line_no);
    if (!std::isfinite(s.target)) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": non-finite target");
    }
    data.rows.push_back(std::move(s));
  }
  return data;
}

void SurrogateDataset::Save(const std::string& path) const { WriteFileAtomic(path, ToCsv()); }

SurrogateDataset SurrogateDataset::Load(const std::string& path) {
  return FromCsv(ReadFile(path));
}

const char* PredictorKindName(PredictorKind kind) {
  return kind == PredictorKind::kLatency ? "latency" : "perplexity";
}

PredictorKind ParsePredictorKind(const std::string& name) {
  if (name == "perplexity") return PredictorKind::kPerplexity;
  if (name == "latency") return PredictorKind::kLatency;
  throw ConfigError("unknown predictor kind '" + name + "' (expected perplexity or latency)");
}

std::vector<std::string> FeatureNames(std::size_t num_layers, PredictorKind kind) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < num_layers; ++i) names.push_back("shape_" + std::to_string(i));
  if (kind == PredictorKind::kLatency) names.push_back("params");
  return names;
}

std::vector<double> Features(const ShapeVector& shape, std::uint64_t params,
                             PredictorKind kind) {
  std::vector<double> f(shape.dims.begin(), shape.dims.end());
  if (kind == PredictorKind::kLatency) f.push_back(static_cast<double>(params));
  return f;
}

nlohmann::json FitReport::ToJson() const {
  nlohmann::json imp = nlohmann::json::object();
  for (std::size_t i = 0; i < feature_names.size(); ++i) imp[feature_names[i]] = importance[i];
  return {{"format_version", kReportFormatVersion},
          {"train_size", train_size},
          {"heldout_size", heldout_size},
          {"train_r2", OptionalJson(train_r2)},
          {"heldout_r2", OptionalJson(heldout_r2)},
          {"heldout_spearman", OptionalJson(heldout_spearman)},
          {"heldout_pearson", OptionalJson(heldout_pearson)},
          {"degenerate", degenerate},
          {"importance", imp}};
}

FitResult FitGbt(const std::vector<std::vector<double>>& x,
                 const std::vector<double>& y, std::vector<std::string> names,
                 const GbtParams& params, std::uint64_t seed,
                 double heldout_fraction) {
  if (x.size() != y.size()) throw ValidationError("features and targets differ in length");
  if (x.size() < kMinFitRows) {
    throw DataError("surrogate fit needs >= " + std::to_string(kMinFitRows) +
                    " samples, got " + std::to_string(x.size()));
  }
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) {
    throw ConfigError("held-out fraction must lie in (0, 1)");
  }
  // Canonical order first so the seeded split does not depend on row order.
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.UniformInt(i)]);
  }
  const std::size_t n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(heldout_fraction * static_cast<double>(x.size()))));
  std::vector<std::vector<double>> xtr, xte;
  std::vector<double> ytr, yte;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (k < n_test) {
      xte.push_back(x[i]);
      yte.push_back(y[i]);
    } else {
      xtr.push_back(x[i]);
      ytr.push_back(y[i]);
    }
  }
  FitResult result{GbtModel::Fit(xtr, ytr, names, params), {}};
  FitReport& rep = result.report;
  rep.train_size = xtr.size();
  rep.heldout_size = xte.size();
  rep.feature_names = std::move(names);
  rep.importance = result.model.FeatureImportance();
  rep.degenerate = result.model.degenerate();
  const std::vector<double> ptr = result.model.PredictAll(xtr);
  const std::vector<double> pte = result.model.PredictAll(xte);
  rep.train_r2 = MaybeR2(ytr, ptr);
  rep.heldout_r2 = MaybeR2(yte, pte);
  rep.heldout_spearman = MaybeCorrelation(yte, pte, Spearman);
  rep.heldout_pearson = MaybeCorrelation(yte, pte, Pearson);
  return result;
}

FitResult FitSurrogate(const SurrogateDataset& data, PredictorKind kind,
                       const GbtParams& params, std::uint64_t seed) {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const SurrogateSample& s : data.rows) {
    if (s.shape.size() != data.num_layers) throw ValidationError("row layer count mismatch");
    x.push_back(Features(s.shape, s.params, kind));
    y.push_back(s.target);
  }
  return FitGbt(x, y, FeatureNames(data.num_layers, kind), params, seed);
}

double PredictShape(const GbtModel& model, const BackboneConfig& config,
                    const ShapeVector& shape) {
  const std::size_t nf = model.num_features();
  const bool with_params = !model.feature_names().empty() &&
                           model.feature_names().back() == "params";
  if (nf != shape.size() + (with_params ? 1 : 0)) {
    throw ValidationError("predictor expects " + std::to_string(nf) +
                          " features; shape has " + std::to_string(shape.size()) +
                          " layers");
  }
  const PredictorKind kind = with_params ? PredictorKind::kLatency : PredictorKind::kPerplexity;
  const std::uint64_t params = with_params ? CountParams(config, shape) : 0;
  return model.Predict(Features(shape, params, kind));
}

SurrogateDataset CollectPerplexityDataset(Supernet& model, std::size_t n,
                                          const EvalSet& eval, Rng& rng) {
  if (n == 0) throw ConfigError("dataset size must be >= 1");
  const BackboneConfig& config = model.config();
  SurrogateDataset data;
  data.num_layers = config.num_layers;
  for (std::size_t i = 0; i < n; ++i) {
    SurrogateSample s;
    s.shape = SampleRandom(config.design_space, rng);
    s.params = CountParams(config, s.shape);
    s.target = EvaluatePerplexity(model, s.shape, eval);
    data.rows.push_back(std::move(s));
  }
  return data;
}

}  // namespace shaper
