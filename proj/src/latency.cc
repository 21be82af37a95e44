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

#include "shaper/latency.h"

#include <chrono>
#include <cmath>
#include <fstream>

#include "shaper/errors.h"
#include "shaper/json_util.h"
#include "shaper/sampling.h"
#include "shaper/stats.h"
#include "shaper/vocab.h"

namespace shaper {

namespace {

constexpr int kSidecarFormatVersion = 1;
constexpr std::uint64_t kBenchInputSeed = 0xbe7c4;

}  // namespace

Clock Clock::Steady() {
  using C = std::chrono::steady_clock;
  Clock c;
  c.now_ms = [] {
    return std::chrono::duration<double, std::milli>(C::now().time_since_epoch()).count();
  };
  c.resolution_ms = 1000.0 * static_cast<double>(C::period::num) /
                    static_cast<double>(C::period::den);
  c.name = "steady_clock";
  return c;
}

void BenchParams::Validate() const {
  if (batch_size == 0 || seq_len == 0) throw ConfigError("bench batch and seq must be >= 1");
  if (warmup < 1) throw ConfigError("bench warmup must be >= 1");
  if (reps < 3) throw ConfigError("bench reps must be >= 3");
}

nlohmann::json BenchParams::ToJson() const {
  return {{"batch_size", batch_size}, {"seq_len", seq_len}, {"warmup", warmup}, {"reps", reps}};
}

BenchParams BenchParams::FromJson(const nlohmann::json& j) {
  const std::string where = "bench";
  RequireKnownKeys(j, {"batch_size", "seq_len", "warmup", "reps"}, where);
  BenchParams b;
  ReadOptional(j, "batch_size", b.batch_size, where);
  ReadOptional(j, "seq_len", b.seq_len, where);
  ReadOptional(j, "warmup", b.warmup, where);
  ReadOptional(j, "reps", b.reps, where);
  b.Validate();
  return b;
}

std::string DeviceLabel() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string v = line.substr(colon + 1);
        const auto start = v.find_first_not_of(" \t");
        if (start != std::string::npos) return v.substr(start);
      }
    }
  }
  return "unknown-cpu";
}

namespace {

std::vector<int> BenchInputs(const Supernet& model, const BenchParams& bench) {
  const std::size_t vocab = model.config().vocab_size;
  Rng rng(kBenchInputSeed);
  std::vector<int> ids(bench.batch_size * bench.seq_len);
  for (int& id : ids) {
    id = kNumSpecialTokens + static_cast<int>(rng.UniformInt(vocab - kNumSpecialTokens));
  }
  return ids;
}

void Forward(Supernet& model, const std::vector<int>& ids, const BenchParams& bench) {
  Tape tape(false);
  model.Encode(tape, ids, bench.batch_size, bench.seq_len);
}

LatencyRecord NewRecord(const Supernet& model, const ShapeVector& shape,
                        const BenchParams& bench, const std::string& device) {
  LatencyRecord rec;
  rec.shape = shape;
  rec.params = CountParams(model.config(), shape);
  rec.reps = bench.reps;
  rec.warmup = bench.warmup;
  rec.batch_size = bench.batch_size;
  rec.device = device;
  rec.samples_ms.reserve(bench.reps);
  return rec;
}

// Median, MAD and resolution warning from the collected samples.
void Summarise(LatencyRecord& rec, const Clock& clock) {
  rec.median_ms = Median(rec.samples_ms);
  if (!(rec.median_ms > 0.0) || !std::isfinite(rec.median_ms)) {
    throw NumericError("latency median for shape " + rec.shape.ToString() +
                       " is not positive");
  }
  std::vector<double> dev;
  for (double t : rec.samples_ms) dev.push_back(std::abs(t - rec.median_ms));
  rec.mad_ms = Median(dev);
  if (clock.resolution_ms > 0.01 * rec.median_ms) {
    rec.warning = "clock resolution " + std::to_string(clock.resolution_ms) +
                  " ms exceeds 1% of the median";
  }
}

double TimedForward(Supernet& model, const std::vector<int>& ids, const BenchParams& bench,
                    const Clock& clock) {
  const double t0 = clock.now_ms();
  Forward(model, ids, bench);
  const double t1 = clock.now_ms();
  return t1 - t0;
}

}  // namespace

LatencyRecord MeasureLatency(Supernet& model, const ShapeVector& shape,
                             const BenchParams& bench, const Clock& clock,
                             const std::string& device) {
  bench.Validate();
  if (!clock.now_ms) throw ConfigError("latency clock is not set");
  model.ApplyShape(shape);
  const std::vector<int> ids = BenchInputs(model, bench);
  for (std::size_t i = 0; i < bench.warmup; ++i) Forward(model, ids, bench);
  LatencyRecord rec = NewRecord(model, shape, bench, device);
  for (std::size_t i = 0; i < bench.reps; ++i) {
    rec.samples_ms.push_back(TimedForward(model, ids, bench, clock));
  }
  Summarise(rec, clock);
  return rec;
}

nlohmann::json LatencyDataset::Sidecar(const BenchParams& bench, const Clock& clock,
                                       const std::string& device) const {
  std::size_t warnings = 0;
  for (const LatencyRecord& r : records) warnings += r.warning.empty() ? 0 : 1;
  return {{"format_version", kSidecarFormatVersion},
          {"device", device},
          {"bench", bench.ToJson()},
          {"clock", {{"name", clock.name}, {"resolution_ms", clock.resolution_ms}}},
          {"rows", data.rows.size()},
          {"skipped", skipped},
          {"errors", errors},
          {"resolution_warnings", warnings},
          {"statistic", "median"},
          {"spread", "median_absolute_deviation"}};
}

LatencyDataset BuildLatencyDataset(Supernet& model, std::size_t n,
                                   const BenchParams& bench, Rng& rng,
                                   const Clock& clock, const std::string& device) {
  if (n == 0) throw ConfigError("dataset size must be >= 1");
  bench.Validate();
  if (!clock.now_ms) throw ConfigError("latency clock is not set");
  const DesignSpace& space = model.config().design_space;
  const std::vector<int> ids = BenchInputs(model, bench);
  std::vector<LatencyRecord> recs;
  for (std::size_t i = 0; i < n; ++i) {
    recs.push_back(NewRecord(model, SampleRandom(space, rng), bench, device));
    model.ApplyShape(recs.back().shape);
    for (std::size_t w = 0; w < bench.warmup; ++w) Forward(model, ids, bench);
  }
  // Round-robin timing: each round times one forward of every shape, right
  // after an untimed forward that re-warms caches for that shape. Slow drift
  // in host speed then spreads over all rows instead of biasing a few.
  for (std::size_t rep = 0; rep < bench.reps; ++rep) {
    for (LatencyRecord& rec : recs) {
      model.ApplyShape(rec.shape);
      Forward(model, ids, bench);
      rec.samples_ms.push_back(TimedForward(model, ids, bench, clock));
    }
  }

  LatencyDataset out;
  out.data.num_layers = model.config().num_layers;
  for (LatencyRecord& rec : recs) {
    try {
      Summarise(rec, clock);
    } catch (const Error& e) {
      ++out.skipped;
      out.errors.push_back(rec.shape.ToString() + ": " + e.what());
      continue;
    }
    out.data.rows.push_back({rec.shape, rec.params, rec.median_ms});
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace shaper
