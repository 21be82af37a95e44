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


#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "shaper/search.h"
#include "shaper/supernet.h"
#include "test_util.h"

namespace shaper {
namespace {

using testing::KindOf;

SearchProblem Quadratic(const DesignSpace& space, const ShapeVector& target) {
  SearchProblem p;
  p.space = space;
  p.fitness = [target](const ShapeVector& s) {
    double f = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) f += std::pow(s[i] - target[i], 2);
    return f;
  };
  p.feasible = [](const ShapeVector&) { return true; };
  p.params = [](const ShapeVector&) { return std::uint64_t{0}; };
  return p;
}

BackboneConfig Toy3x3() {
  BackboneConfig c;
  c.num_layers = 3;
  c.d_model = 8;
  c.d_attn = 8;
  c.d_ff = 16;
  c.heads = 2;
  c.vocab_size = 10;
  c.max_seq_len = 6;
  c.design_space = DesignSpace({2, 4, 8}, 3);
  return c;
}

TEST_CASE("mutation probability zero is the identity") {
  const DesignSpace space({1, 2, 3}, 6);
  Rng rng(1);
  const ShapeVector s{{1, 2, 3, 3, 2, 1}};
  for (int i = 0; i < 50; ++i) CHECK(Mutate(s, 0.0, space, rng) == s);
}

TEST_CASE("mutation probability one flips every gene of a two-option space") {
  const DesignSpace space({5, 9}, 8);
  Rng rng(2);
  const ShapeVector s{{5, 9, 5, 9, 5, 5, 9, 9}};
  const ShapeVector m = Mutate(s, 1.0, space, rng);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(m[i] != s[i]);
}

TEST_CASE("single-option space cannot mutate") {
  const DesignSpace space({7}, 3);
  Rng rng(3);
  CHECK(Mutate(space.Uniform(7), 0.9, space, rng) == space.Uniform(7));
}

TEST_CASE("per-gene mutation rate") {
  const DesignSpace space({120, 240, 360, 480, 540, 600, 768}, 12);
  Rng rng(4);
  const ShapeVector s = space.Uniform(360);
  std::size_t changed = 0, total = 0;
  for (int i = 0; i < 10000; ++i) {
    const ShapeVector m = Mutate(s, 0.4, space, rng);
    for (std::size_t l = 0; l < 12; ++l) {
      changed += m[l] != s[l];
      CHECK(space.Allows(m[l]));
    }
    total += 12;
  }
  const double rate = static_cast<double>(changed) / total;
  CHECK(rate >= 0.37);
  CHECK(rate <= 0.43);
}

TEST_CASE("crossover") {
  Rng rng(5);
  const ShapeVector a{{1, 1, 1, 1, 1, 1}}, b{{2, 2, 2, 2, 2, 2}};
  CHECK(Crossover(a, a, rng) == a);
  std::size_t from_a = 0, total = 0;
  for (int i = 0; i < 10000; ++i) {
    const ShapeVector c = Crossover(a, b, rng);
    for (std::size_t l = 0; l < c.size(); ++l) {
      CHECK((c[l] == a[l] || c[l] == b[l]));
      from_a += c[l] == a[l];
      ++total;
    }
  }
  const double share = static_cast<double>(from_a) / total;
  CHECK(share >= 0.47);
  CHECK(share <= 0.53);
  CHECK(KindOf([&] { Crossover(a, ShapeVector{{1, 2}}, rng); }) == ErrorKind::kValidation);
}

TEST_CASE("evolve finds the optimum of a quadratic landscape") {
  const DesignSpace space({10, 20, 30}, 4);
  const ShapeVector target{{20, 30, 10, 20}};
  const SearchProblem problem = Quadratic(space, target);
  const Candidate brute = BruteForceSearch(problem);
  CHECK(brute.shape == target);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SearchConfig config;
    config.seed = seed;
    config.iterations = 60;
    const SearchResult r = Evolve(problem, config);
    hits += r.best.shape == brute.shape;
    for (std::size_t g = 1; g < r.history.size(); ++g) {
      CHECK(r.history[g].best_fitness <= r.history[g - 1].best_fitness);
    }
    CHECK(r.history.front().generation == 0);
  }
  CHECK(hits >= 19);
}

TEST_CASE("evolve returns the only feasible shape") {
  const DesignSpace space({1, 2, 3}, 3);
  SearchProblem p = Quadratic(space, ShapeVector{{1, 1, 1}});
  const ShapeVector only{{3, 2, 3}};
  p.feasible = [only](const ShapeVector& s) { return s == only; };
  SearchConfig c;
  c.population_size = 10;
  c.iterations = 5;
  const SearchResult r = Evolve(p, c);
  CHECK(r.best.shape == only);
  CHECK(r.best.feasible);
}

TEST_CASE("evolve with nothing feasible is an infeasibility error") {
  const DesignSpace space({1, 2}, 3);
  SearchProblem p = Quadratic(space, ShapeVector{{1, 1, 1}});
  p.feasible = [](const ShapeVector&) { return false; };
  p.constraint_name = "params in [5, 6]";
  SearchConfig c;
  c.population_size = 4;
  c.iterations = 2;
  try {
    Evolve(p, c);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasible);
    CHECK(std::string(e.what()).find("params in [5, 6]") != std::string::npos);
  }
}

TEST_CASE("evolve is reproducible and thread-count independent") {
  const DesignSpace space({1, 2, 3, 4, 5}, 6);
  const SearchProblem p = Quadratic(space, ShapeVector{{5, 1, 4, 2, 3, 3}});
  SearchConfig c;
  c.seed = 17;
  c.iterations = 20;
  const SearchResult a = Evolve(p, c);
  const SearchResult b = Evolve(p, c);
  c.threads = 4;
  const SearchResult t = Evolve(p, c);
  CHECK(a.ToJson() == b.ToJson());
  CHECK(a.ToJson() == t.ToJson());
  CHECK(a.HistoryCsv().starts_with("generation,best_fitness,mean_fitness\n"));
}

TEST_CASE("brute force") {
  SUBCASE("one layer is an argmin over the dims") {
    const DesignSpace space({3, 5, 8, 13}, 1);
    SearchProblem p = Quadratic(space, ShapeVector{{9}});
    CHECK(BruteForceSearch(p).shape == ShapeVector{{8}});
  }
  SUBCASE("ties go to the lexicographically first shape") {
    const DesignSpace space({1, 2, 3}, 2);
    SearchProblem p = Quadratic(space, ShapeVector{{2, 2}});
    p.fitness = [](const ShapeVector&) { return 1.0; };
    CHECK(BruteForceSearch(p).shape == ShapeVector{{1, 1}});
  }
  SUBCASE("empty feasible set") {
    const DesignSpace space({1, 2}, 2);
    SearchProblem p = Quadratic(space, ShapeVector{{1, 1}});
    p.feasible = [](const ShapeVector&) { return false; };
    CHECK(KindOf([&] { BruteForceSearch(p); }) == ErrorKind::kInfeasible);
  }
  SUBCASE("space above the cap") {
    const DesignSpace space({1, 2, 3}, 5);
    const SearchProblem p = Quadratic(space, space.Uniform(1));
    CHECK(KindOf([&] { BruteForceSearch(p, 100); }) == ErrorKind::kConfig);
  }
}

TEST_CASE("parameter constraints") {
  const BackboneConfig config = Toy3x3();
  const std::uint64_t total = CountParams(config, config.design_space.Largest());
  CHECK(CheckConstraint(config.design_space.Largest(), Constraint::ParamRange(0, total), config)
            .feasible);
  const Constraint too_big = Constraint::ParamRange(total + 1, total + 10);
  for (std::uint64_t i = 0; i < config.design_space.Size(); ++i) {
    CHECK_FALSE(CheckConstraint(config.design_space.ShapeAt(i), too_big, config).feasible);
  }
  // Exactly the three permutations of (2, 2, 4).
  const std::uint64_t target = CountParams(config, ShapeVector{{2, 2, 4}});
  const Constraint band = Constraint::ParamRange(target, target);
  int feasible = 0;
  for (std::uint64_t i = 0; i < config.design_space.Size(); ++i) {
    const ShapeVector s = config.design_space.ShapeAt(i);
    const ConstraintCheck check = CheckConstraint(s, band, config);
    const std::uint64_t n = CountParams(config, s);
    CHECK(check.value == static_cast<double>(n));
    CHECK(check.feasible == (n == target));
    feasible += check.feasible;
  }
  CHECK(feasible == 3);
}

TEST_CASE("latency constraint needs a predictor") {
  const BackboneConfig config = Toy3x3();
  CHECK(KindOf([&] {
          CheckConstraint(config.design_space.Largest(), Constraint::LatencyMax(5.0, "cpu"),
                          config);
        }) == ErrorKind::kConfig);
}

TEST_CASE("constraint and config validation") {
  CHECK(KindOf([] { Constraint::ParamRange(10, 5).Validate(); }) == ErrorKind::kConfig);
  CHECK(KindOf([] { Constraint::LatencyMax(-1.0, "cpu").Validate(); }) == ErrorKind::kConfig);
  SearchConfig c;
  c.population_size = 1;
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kConfig);
  c = SearchConfig{};
  c.mutation_prob = 1.5;
  CHECK(KindOf([&] { c.Validate(); }) == ErrorKind::kConfig);
  const Constraint r = Constraint::ParamRange(3, 9);
  CHECK(Constraint::FromJson(r.ToJson()).ToJson() == r.ToJson());
  CHECK(SearchConfig::FromJson(SearchConfig{}.ToJson()).ToJson() == SearchConfig{}.ToJson());
}

TEST_CASE("search over a real backbone respects the parameter band") {
  const BackboneConfig config = Toy3x3();
  const std::uint64_t lo = CountParams(config, ShapeVector{{4, 4, 4}});
  const std::uint64_t hi = CountParams(config, ShapeVector{{8, 4, 4}});
  const SearchProblem p = MakeProblem(
      config, [](const ShapeVector& s) { return -static_cast<double>(s[0] + s[1] + s[2]); },
      Constraint::ParamRange(lo, hi));
  SearchConfig c;
  c.population_size = 12;
  c.iterations = 10;
  const SearchResult r = Evolve(p, c);
  CHECK(r.best.params >= lo);
  CHECK(r.best.params <= hi);
  CHECK(r.best.shape == BruteForceSearch(p).shape);
}

}  // namespace
}  // namespace shaper
