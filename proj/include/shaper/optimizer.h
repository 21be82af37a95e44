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

#ifndef SHAPER_OPTIMIZER_H_
#define SHAPER_OPTIMIZER_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "shaper/autodiff.h"

namespace shaper {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// AdamW with decoupled weight decay. Each step updates only the touched
// prefix block of each passed-in parameter: moments, decay and the update
// itself are confined to entries that received gradient this step, so shared
// weights outside the active slices stay bit-identical.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  void Step(std::span<Parameter* const> params);

  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const AdamWConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_; }

  struct Moments {
    Tensor first;
    Tensor second;
  };
  const Moments* moments(const std::string& name) const;

 private:
  AdamWConfig config_;
  std::int64_t step_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace shaper

#endif  // SHAPER_OPTIMIZER_H_
