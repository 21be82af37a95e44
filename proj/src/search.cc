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

#include "shaper/search.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "shaper/errors.h"
#include "shaper/io.h"
#include "shaper/json_util.h"
#include "shaper/sampling.h"
#include "shaper/surrogate.h"

namespace shaper {

namespace {

constexpr int kResultFormatVersion = 1;
constexpr int kOffspringRetries = 50;
constexpr std::size_t kInitTriesPerMember = 50;

const char* KindName(Constraint::Kind kind) {
  switch (kind) {
    case Constraint::Kind::kNone:
      return "none";
    case Constraint::Kind::kParamRange:
      return "param_range";
    case Constraint::Kind::kLatencyMax:
      return "latency_max";
  }
  return "none";
}

bool Better(const Candidate& a, const Candidate& b) {
  if (a.fitness != b.fitness) return a.fitness < b.fitness;
  return a.shape < b.shape;
}

// Memoised fitness with optional concurrent evaluation of new shapes.
class FitnessCache {
 public:
  FitnessCache(const SearchProblem& problem, std::size_t threads)
      : problem_(problem), threads_(std::max<std::size_t>(1, threads)) {}

  void Score(std::vector<Candidate>& population) {
    std::vector<ShapeVector> pending;
    for (const Candidate& c : population) {
      if (!cache_.count(c.shape) &&
          std::find(pending.begin(), pending.end(), c.shape) == pending.end()) {
        pending.push_back(c.shape);
      }
    }
    std::vector<double> values(pending.size());
    if (threads_ == 1 || pending.size() < 2) {
      for (std::size_t i = 0; i < pending.size(); ++i) values[i] = Evaluate(pending[i]);
    } else {
      std::vector<std::exception_ptr> errors(threads_);
      std::vector<std::thread> workers;
      for (std::size_t t = 0; t < threads_; ++t) {
        workers.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < pending.size(); i += threads_) {
              values[i] = Evaluate(pending[i]);
            }
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
      for (std::thread& w : workers) w.join();
      for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (std::size_t i = 0; i < pending.size(); ++i) cache_[pending[i]] = values[i];
    for (Candidate& c : population) {
      c.fitness = cache_.at(c.shape);
      c.params = problem_.params ? problem_.params(c.shape) : 0;
      c.feasible = true;
    }
  }

  std::size_t size() const { return cache_.size(); }

 private:
  double Evaluate(const ShapeVector& s) const {
    const double v = problem_.fitness(s);
    if (!std::isfinite(v)) {
      throw NumericError("fitness of shape " + s.ToString() + " is not finite");
    }
    return v;
  }

  const SearchProblem& problem_;
  std::size_t threads_;
  std::map<ShapeVector, double> cache_;
};

GenerationStats Summarise(std::size_t generation, const std::vector<Candidate>& pop) {
  double sum = 0.0;
  for (const Candidate& c : pop) sum += c.fitness;
  return {generation, pop.front().fitness, sum / static_cast<double>(pop.size())};
}

}  // namespace

Constraint Constraint::ParamRange(std::uint64_t min_params, std::uint64_t max_params) {
  Constraint c;
  c.kind = Kind::kParamRange;
  c.min_params = min_params;
  c.max_params = max_params;
  c.Validate();
  return c;
}

Constraint Constraint::LatencyMax(double max_ms, std::string device) {
  Constraint c;
  c.kind = Kind::kLatencyMax;
  c.max_latency_ms = max_ms;
  c.device = std::move(device);
  c.Validate();
  return c;
}

void Constraint::Validate() const {
  if (kind == Kind::kParamRange && min_params > max_params) {
    throw ConfigError("param_range constraint has min > max");
  }
  if (kind == Kind::kParamRange && max_params == 0) {
    throw ConfigError("param_range constraint needs a positive max");
  }
  if (kind == Kind::kLatencyMax && !(max_latency_ms > 0.0)) {
    throw ConfigError("latency_max constraint needs a positive bound");
  }
}

std::string Constraint::Describe() const {
  switch (kind) {
    case Kind::kNone:
      return "none";
    case Kind::kParamRange:
      return "param_range [" + std::to_string(min_params) + ", " +
             std::to_string(max_params) + "]";
    case Kind::kLatencyMax:
      return "latency_max " + FormatDouble(max_latency_ms) + " ms" +
             (device.empty() ? "" : " on " + device);
  }
  return "none";
}

nlohmann::json Constraint::ToJson() const {
  nlohmann::json j{{"kind", KindName(kind)}};
  if (kind == Kind::kParamRange) {
    j["min_params"] = min_params;
    j["max_params"] = max_params;
  } else if (kind == Kind::kLatencyMax) {
    j["max_latency_ms"] = max_latency_ms;
    j["device"] = device;
  }
  return j;
}

Constraint Constraint::FromJson(const nlohmann::json& j) {
  const std::string where = "constraint";
  RequireKnownKeys(j, {"kind", "min_params", "max_params", "max_latency_ms", "device"},
                   where);
  std::string kind = "none";
  ReadOptional(j, "kind", kind, where);
  Constraint c;
  if (kind == "none") {
    c.kind = Kind::kNone;
  } else if (kind == "param_range") {
    c.kind = Kind::kParamRange;
  } else if (kind == "latency_max") {
    c.kind = Kind::kLatencyMax;
  } else {
    throw ConfigError("unknown constraint kind '" + kind + "'");
  }
  ReadOptional(j, "min_params", c.min_params, where);
  ReadOptional(j, "max_params", c.max_params, where);
  ReadOptional(j, "max_latency_ms", c.max_latency_ms, where);
  ReadOptional(j, "device", c.device, where);
  c.Validate();
  return c;
}

ConstraintCheck CheckConstraint(const ShapeVector& shape, const Constraint& constraint,
                                const BackboneConfig& config,
                                const GbtModel* latency_predictor) {
  config.design_space.Validate(shape);
  switch (constraint.kind) {
    case Constraint::Kind::kNone:
      return {true, static_cast<double>(CountParams(config, shape))};
    case Constraint::Kind::kParamRange: {
      const std::uint64_t n = CountParams(config, shape);
      return {n >= constraint.min_params && n <= constraint.max_params,
              static_cast<double>(n)};
    }
    case Constraint::Kind::kLatencyMax: {
      if (latency_predictor == nullptr) {
        throw ConfigError("latency constraint requires a latency predictor");
      }
      const double ms = PredictShape(*latency_predictor, config, shape);
      return {ms <= constraint.max_latency_ms, ms};
    }
  }
  return {};
}

SearchProblem MakeProblem(const BackboneConfig& config, FitnessFn fitness,
                          const Constraint& constraint,
                          const GbtModel* latency_predictor) {
  constraint.Validate();
  if (constraint.kind == Constraint::Kind::kLatencyMax && latency_predictor == nullptr) {
    throw ConfigError("latency constraint requires a latency predictor");
  }
  SearchProblem p;
  p.space = config.design_space;
  p.fitness = std::move(fitness);
  p.feasible = [config, constraint, latency_predictor](const ShapeVector& s) {
    return CheckConstraint(s, constraint, config, latency_predictor).feasible;
  };
  p.params = [config](const ShapeVector& s) { return CountParams(config, s); };
  p.constraint_name = constraint.Describe();
  return p;
}

void SearchConfig::Validate() const {
  if (population_size < 2) throw ConfigError("population_size must be >= 2");
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) {
    throw ConfigError("mutation_prob must lie in [0, 1]");
  }
  if (threads == 0) throw ConfigError("threads must be >= 1");
}

nlohmann::json SearchConfig::ToJson() const {
  return {{"population_size", population_size},
          {"mutation_prob", mutation_prob},
          {"iterations", iterations},
          {"seed", seed},
          {"threads", threads}};
}

SearchConfig SearchConfig::FromJson(const nlohmann::json& j) {
  const std::string where = "search";
  RequireKnownKeys(j, {"population_size", "mutation_prob", "iterations", "seed", "threads"},
                   where);
  SearchConfig c;
  ReadOptional(j, "population_size", c.population_size, where);
  ReadOptional(j, "mutation_prob", c.mutation_prob, where);
  ReadOptional(j, "iterations", c.iterations, where);
  ReadOptional(j, "seed", c.seed, where);
  ReadOptional(j, "threads", c.threads, where);
  c.Validate();
  return c;
}

std::string SearchResult::HistoryCsv() const {
  std::string out = "generation,best_fitness,mean_fitness\n";
  for (const GenerationStats& g : history) {
    out += std::to_string(g.generation) + "," + FormatDouble(g.best_fitness) + "," +
           FormatDouble(g.mean_fitness) + "\n";
  }
  return out;
}

nlohmann::json SearchResult::ToJson() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const GenerationStats& g : history) {
    hist.push_back({{"generation", g.generation},
                    {"best_fitness", g.best_fitness},
                    {"mean_fitness", g.mean_fitness}});
  }
  return {{"format_version", kResultFormatVersion},
          {"best",
           {{"shape", best.shape.dims},
            {"shape_string", best.shape.ToString()},
            {"fitness", best.fitness},
            {"params", best.params},
            {"feasible", best.feasible}}},
          {"evaluations", evaluations},
          {"history", hist}};
}

ShapeVector Mutate(const ShapeVector& shape, double prob, const DesignSpace& space,
                   Rng& rng) {
  space.Validate(shape);
  ShapeVector out = shape;
  const std::size_t k = space.num_options();
  if (k < 2) return out;
  for (int& d : out.dims) {
    if (!rng.Bernoulli(prob)) continue;
    const std::size_t cur = static_cast<std::size_t>(space.IndexOf(d));
    std::size_t idx = rng.UniformInt(k - 1);
    if (idx >= cur) ++idx;
    d = space.allowed_dims()[idx];
  }
  return out;
}

ShapeVector Crossover(const ShapeVector& a, const ShapeVector& b, Rng& rng) {
  if (a.size() != b.size()) {
    throw ValidationError("crossover of shapes with " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()) + " layers");
  }
  ShapeVector out = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (rng.Bernoulli(0.5)) out.dims[i] = b.dims[i];
  }
  return out;
}

SearchResult Evolve(const SearchProblem& problem, const SearchConfig& config) {
  config.Validate();
  if (!problem.fitness) throw ConfigError("search problem has no fitness function");
  const DesignSpace& space = problem.space;
  auto feasible = [&](const ShapeVector& s) {
    return !problem.feasible || problem.feasible(s);
  };
  Rng rng(config.seed);
  const std::size_t pop_size = config.population_size;

  std::vector<Candidate> population;
  for (std::size_t tries = 0;
       population.size() < pop_size && tries < kInitTriesPerMember * pop_size; ++tries) {
    ShapeVector s = SampleRandom(space, rng);
    if (feasible(s)) population.push_back({std::move(s), 0.0, 0, true});
  }
  if (population.empty()) {
    throw InfeasibleError("no feasible shape found in " +
                          std::to_string(kInitTriesPerMember * pop_size) +
                          " random draws under constraint " + problem.constraint_name);
  }
  for (std::size_t i = 0; population.size() < pop_size; ++i) {
    population.push_back(population[i]);
  }

  FitnessCache cache(problem, config.threads);
  SearchResult result;
  cache.Score(population);
  std::sort(population.begin(), population.end(), Better);
  result.history.push_back(Summarise(0, population));

  const std::size_t num_parents = std::max<std::size_t>(1, pop_size / 2);
  const std::size_t num_mutants = pop_size / 4;
  const std::size_t num_crossovers = pop_size - num_parents - num_mutants;
  for (std::size_t gen = 1; gen <= config.iterations; ++gen) {
    std::vector<Candidate> next(population.begin(), population.begin() + num_parents);
    auto parent = [&]() -> const ShapeVector& {
      return population[rng.UniformInt(num_parents)].shape;
    };
    for (std::size_t i = 0; i < num_mutants; ++i) {
      const ShapeVector& p = parent();
      ShapeVector child = p;
      bool ok = false;
      for (int attempt = 0; attempt < kOffspringRetries && !ok; ++attempt) {
        child = Mutate(p, config.mutation_prob, space, rng);
        ok = feasible(child);
      }
      next.push_back({ok ? child : p, 0.0, 0, true});
    }
    for (std::size_t i = 0; i < num_crossovers; ++i) {
      const ShapeVector& a = parent();
      const ShapeVector& b = parent();
      ShapeVector child = a;
      bool ok = false;
      for (int attempt = 0; attempt < kOffspringRetries && !ok; ++attempt) {
        child = Crossover(a, b, rng);
        ok = feasible(child);
      }
      next.push_back({ok ? child : a, 0.0, 0, true});
    }
    cache.Score(next);
    std::sort(next.begin(), next.end(), Better);
    population = std::move(next);
    result.history.push_back(Summarise(gen, population));
  }
  result.best = population.front();
  result.evaluations = cache.size();
  return result;
}

Candidate BruteForceSearch(const SearchProblem& problem, std::uint64_t cap) {
  if (!problem.fitness) throw ConfigError("search problem has no fitness function");
  const DesignSpace& space = problem.space;
  const std::uint64_t size = space.Size();
  if (size > cap) {
    throw ConfigError("design space of " + std::to_string(size) +
                      " shapes exceeds the enumeration cap " + std::to_string(cap));
  }
  const std::size_t L = space.num_layers();
  std::vector<std::size_t> idx(L, 0);
  ShapeVector s = space.Smallest();
  Candidate best;
  bool found = false;
  for (std::uint64_t n = 0; n < size; ++n) {
    if (!problem.feasible || problem.feasible(s)) {
      const double f = problem.fitness(s);
      if (!std::isfinite(f)) {
        throw NumericError("fitness of shape " + s.ToString() + " is not finite");
      }
      if (!found || f < best.fitness) {
        best = {s, f, problem.params ? problem.params(s) : 0, true};
        found = true;
      }
    }
    // Odometer increment, last layer fastest: lexicographic order.
    for (std::size_t pos = L; pos-- > 0;) {
      if (++idx[pos] < space.num_options()) {
        s.dims[pos] = space.allowed_dims()[idx[pos]];
        break;
      }
      idx[pos] = 0;
      s.dims[pos] = space.allowed_dims()[0];
    }
  }
  if (!found) {
    throw InfeasibleError("no shape satisfies constraint " + problem.constraint_name);
  }
  return best;
}

}  // namespace shaper
