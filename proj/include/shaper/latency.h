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

#ifndef SHAPER_LATENCY_H_
#define SHAPER_LATENCY_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shaper/random.h"
#include "shaper/shape.h"
#include "shaper/supernet.h"
#include "shaper/surrogate.h"

namespace shaper {

// Millisecond clock. Each timed repetition reads it exactly twice (before
// and after the forward), which lets tests inject scripted timings.
struct Clock {
  std::function<double()> now_ms;
  double resolution_ms = 0.0;
  std::string name;

  static Clock Steady();
};

struct BenchParams {
  std::size_t batch_size = 1;
  std::size_t seq_len = 64;
  std::size_t warmup = 5;
  std::size_t reps = 30;

  // Throws a configuration error unless warmup >= 1 and reps >= 3.
  void Validate() const;
  nlohmann::json ToJson() const;
  static BenchParams FromJson(const nlohmann::json& j);
};

struct LatencyRecord {
  ShapeVector shape;
  std::uint64_t params = 0;
  double median_ms = 0.0;
  double mad_ms = 0.0;  // median absolute deviation
  std::size_t reps = 0;
  std::size_t warmup = 0;
  std::size_t batch_size = 0;
  std::string device;
  std::vector<double> samples_ms;
  // Set when the clock resolution exceeds 1% of the median.
  std::string warning;
};

// Host CPU description from /proc/cpuinfo, or "unknown-cpu".
std::string DeviceLabel();

// Applies the shape and builds the input batch (both untimed), runs
// `warmup` untimed encoder forwards, then times `reps` forwards. Single
// threaded; concurrent load on the host voids the measurement.
LatencyRecord MeasureLatency(Supernet& model, const ShapeVector& shape,
                             const BenchParams& bench, const Clock& clock,
                             const std::string& device);

struct LatencyDataset {
  SurrogateDataset data;
  std::vector<LatencyRecord> records;
  std::size_t skipped = 0;
  std::vector<std::string> errors;  // one message per skipped row

  nlohmann::json Sidecar(const BenchParams& bench, const Clock& clock,
                         const std::string& device) const;
};

// n uniformly sampled shapes measured with the MeasureLatency protocol, but
// with the timed forwards interleaved: every round times each shape once,
// preceded by an untimed forward of that shape. Rows whose measurement fails
// are skipped and counted.
LatencyDataset BuildLatencyDataset(Supernet& model, std::size_t n,
                                   const BenchParams& bench, Rng& rng,
                                   const Clock& clock, const std::string& device);

}  // namespace shaper

#endif  // SHAPER_LATENCY_H_
