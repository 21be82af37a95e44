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

#ifndef SHAPER_CONFIG_H_
#define SHAPER_CONFIG_H_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "shaper/gbt.h"
#include "shaper/latency.h"
#include "shaper/search.h"
#include "shaper/supernet.h"
#include "shaper/trainer.h"

namespace shaper {

struct PathsConfig {
  std::string corpus;
  std::string eval_corpus;
  std::string vocab;
  std::string checkpoint;
  std::string output_dir = ".";
};

struct EvalConfig {
  std::size_t batch_size = 16;
  std::size_t max_batches = 8;
  std::uint64_t mask_seed = 12345;
};

// Everything a pipeline run needs. Loaded from one JSON document whose
// sections mirror the fields; unknown keys anywhere are rejected.
struct RunConfig {
  BackboneConfig backbone;
  TrainingConfig training;
  EvalConfig eval;
  SearchConfig search;
  Constraint constraint;
  GbtParams surrogate;
  BenchParams bench;
  PathsConfig paths;
  std::uint64_t seed = 1;

  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& j);
  static RunConfig Load(const std::string& path);
};

// 64-bit FNV-1a.
std::uint64_t Fnv1a(std::string_view bytes);
// Hex FNV-1a of the compact dump of `j` (keys are sorted by the JSON library).
std::string ConfigHash(const nlohmann::json& j);

}  // namespace shaper

#endif  // SHAPER_CONFIG_H_
