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

#ifndef SHAPER_SEARCH_H_
#define SHAPER_SEARCH_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shaper/gbt.h"
#include "shaper/random.h"
#include "shaper/shape.h"
#include "shaper/supernet.h"

namespace shaper {

struct Constraint {
  enum class Kind { kNone, kParamRange, kLatencyMax };

  Kind kind = Kind::kNone;
  std::uint64_t min_params = 0;
  std::uint64_t max_params = 0;
  double max_latency_ms = 0.0;
  std::string device;

  static Constraint None() { return {}; }
  static Constraint ParamRange(std::uint64_t min_params, std::uint64_t max_params);
  static Constraint LatencyMax(double max_ms, std::string device);

  // Throws a configuration error unless min <= max and bounds are positive.
  void Validate() const;
  std::string Describe() const;
  nlohmann::json ToJson() const;
  static Constraint FromJson(const nlohmann::json& j);
};

struct ConstraintCheck {
  bool feasible = true;
  double value = 0.0;  // parameter count or predicted latency (ms)
};

// Parameter ranges are checked with the exact enumeration count; latency
// bounds with the latency predictor, which must be given for them.
ConstraintCheck CheckConstraint(const ShapeVector& shape, const Constraint& constraint,
                                const BackboneConfig& config,
                                const GbtModel* latency_predictor = nullptr);

using FitnessFn = std::function<double(const ShapeVector&)>;
using FeasibleFn = std::function<bool(const ShapeVector&)>;
using ParamsFn = std::function<std::uint64_t(const ShapeVector&)>;

// What to search: fitness is minimised over feasible members of `space`.
// An empty `feasible` accepts every shape; an empty `params` records 0.
struct SearchProblem {
  DesignSpace space;
  FitnessFn fitness;
  FeasibleFn feasible;
  ParamsFn params;
  std::string constraint_name = "none";
};

// Builds a problem whose feasibility is CheckConstraint against `config`.
SearchProblem MakeProblem(const BackboneConfig& config, FitnessFn fitness,
                          const Constraint& constraint,
                          const GbtModel* latency_predictor = nullptr);

struct SearchConfig {
  std::size_t population_size = 100;
  double mutation_prob = 0.4;
  std::size_t iterations = 300;
  std::uint64_t seed = 1;
  // Concurrent fitness evaluations; the fitness function must then be safe
  // to call from several threads. Results do not depend on this value.
  std::size_t threads = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  static SearchConfig FromJson(const nlohmann::json& j);
};

struct Candidate {
  ShapeVector shape;
  double fitness = 0.0;
  std::uint64_t params = 0;
  bool feasible = false;
};

struct GenerationStats {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
};

struct SearchResult {
  Candidate best;
  std::vector<GenerationStats> history;
  std::size_t evaluations = 0;  // distinct shapes scored

  // "generation,best_fitness,mean_fitness".
  std::string HistoryCsv() const;
  nlohmann::json ToJson() const;
};

// Each gene independently, with probability `prob`, is replaced by a
// uniformly chosen different allowed dim.
ShapeVector Mutate(const ShapeVector& shape, double prob, const DesignSpace& space,
                   Rng& rng);

// Uniform crossover; throws a validation error on length mismatch.
ShapeVector Crossover(const ShapeVector& a, const ShapeVector& b, Rng& rng);

// Truncation-selection EA. Each generation keeps the best half as parents
// and refills the other half with mutants and crossover children in equal
// numbers. Infeasible children are redrawn up to 50 times before the parent
// is cloned. Ties in fitness are broken by lexicographic shape order.
// Throws an infeasibility error when initialisation finds no feasible shape.
SearchResult Evolve(const SearchProblem& problem, const SearchConfig& config);

// Exact argmin over every feasible shape, ties to the lexicographically
// first. Throws a configuration error when the space exceeds `cap` and an
// infeasibility error when nothing is feasible.
Candidate BruteForceSearch(const SearchProblem& problem, std::uint64_t cap = 1000000);

}  // namespace shaper

#endif  // SHAPER_SEARCH_H_
