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

#include "shaper/config.h"

#include <cstdio>

#include "shaper/errors.h"
#include "shaper/io.h"
#include "shaper/json_util.h"

namespace shaper {

namespace {

constexpr int kConfigFormatVersion = 1;

}  // namespace

nlohmann::json RunConfig::ToJson() const {
  return {{"format_version", kConfigFormatVersion},
          {"seed", seed},
          {"backbone", backbone.ToJson()},
          {"training", training.ToJson()},
          {"eval",
           {{"batch_size", eval.batch_size},
            {"max_batches", eval.max_batches},
            {"mask_seed", eval.mask_seed}}},
          {"search", search.ToJson()},
          {"constraint", constraint.ToJson()},
          {"surrogate", surrogate.ToJson()},
          {"bench", bench.ToJson()},
          {"paths",
           {{"corpus", paths.corpus},
            {"eval_corpus", paths.eval_corpus},
            {"vocab", paths.vocab},
            {"checkpoint", paths.checkpoint},
            {"output_dir", paths.output_dir}}}};
}

RunConfig RunConfig::FromJson(const nlohmann::json& j) {
  RequireKnownKeys(j,
                   {"format_version", "seed", "backbone", "training", "eval", "search",
                    "constraint", "surrogate", "bench", "paths"},
                   "config");
  if (j.contains("format_version") && j.at("format_version") != kConfigFormatVersion) {
    throw ConfigError("unsupported config format_version " + j.at("format_version").dump());
  }
  RunConfig c;
  ReadOptional(j, "seed", c.seed, "config");
  if (j.contains("backbone")) c.backbone = BackboneConfig::FromJson(j.at("backbone"));
  if (j.contains("training")) c.training = TrainingConfig::FromJson(j.at("training"));
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    RequireKnownKeys(e, {"batch_size", "max_batches", "mask_seed"}, "eval");
    ReadOptional(e, "batch_size", c.eval.batch_size, "eval");
    ReadOptional(e, "max_batches", c.eval.max_batches, "eval");
    ReadOptional(e, "mask_seed", c.eval.mask_seed, "eval");
    if (c.eval.batch_size == 0 || c.eval.max_batches == 0) {
      throw ConfigError("eval batch_size and max_batches must be >= 1");
    }
  }
  if (j.contains("search")) c.search = SearchConfig::FromJson(j.at("search"));
  if (j.contains("constraint")) c.constraint = Constraint::FromJson(j.at("constraint"));
  if (j.contains("surrogate")) c.surrogate = GbtParams::FromJson(j.at("surrogate"));
  if (j.contains("bench")) c.bench = BenchParams::FromJson(j.at("bench"));
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    RequireKnownKeys(p, {"corpus", "eval_corpus", "vocab", "checkpoint", "output_dir"}, "paths");
    ReadOptional(p, "corpus", c.paths.corpus, "paths");
    ReadOptional(p, "eval_corpus", c.paths.eval_corpus, "paths");
    ReadOptional(p, "vocab", c.paths.vocab, "paths");
    ReadOptional(p, "checkpoint", c.paths.checkpoint, "paths");
    ReadOptional(p, "output_dir", c.paths.output_dir, "paths");
  }
  return c;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return FromJson(j);
}

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ConfigHash(const nlohmann::json& j) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a(j.dump())));
  return buf;
}

}  // namespace shaper
