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

#include "shaper/optimizer.h"

#include <cmath>

#include "shaper/errors.h"

namespace shaper {

void AdamW::Step(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (p == nullptr || !p->grad.SameDims(p->value)) {
      throw ContractError("adamw: missing gradient for parameter " +
                          (p ? p->name : std::string("<null>")));
    }
  }
  ++step_;
  const double lr = config_.learning_rate;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double decay = 1.0 - lr * config_.weight_decay;
  for (Parameter* p : params) {
    Moments& m = state_[p->name];
    if (!m.first.SameDims(p->value)) {
      m.first = Tensor(p->value.dims(), 0.0);
      m.second = Tensor(p->value.dims(), 0.0);
    }
    const std::size_t cols = p->cols();
    for (std::size_t r = 0; r < p->touched_rows; ++r) {
      for (std::size_t c = 0; c < p->touched_cols; ++c) {
        const std::size_t i = r * cols + c;
        const double g = p->grad[i];
        double& w = p->value[i];
        w *= decay;
        m.first[i] = b1 * m.first[i] + (1.0 - b1) * g;
        m.second[i] = b2 * m.second[i] + (1.0 - b2) * g * g;
        const double mhat = m.first[i] / bc1;
        const double vhat = m.second[i] / bc2;
        w -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
      }
    }
  }
}

const AdamW::Moments* AdamW::moments(const std::string& name) const {
  auto it = state_.find(name);
  return it == state_.end() ? nullptr : &it->second;
}

}  // namespace shaper
