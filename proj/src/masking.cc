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

#include "shaper/masking.h"

#include <cmath>

#include "shaper/errors.h"

namespace shaper {

void MaskingPolicy::Validate() const {
  if (!(mask_prob > 0.0 && mask_prob <= 1.0)) {
    throw ConfigError("mask_prob must lie in (0, 1]");
  }
  if (replace_mask < 0.0 || replace_random < 0.0 || keep < 0.0 ||
      std::abs(replace_mask + replace_random + keep - 1.0) > 1e-9) {
    throw ConfigError("mask/random/keep probabilities must be >= 0 and sum to 1");
  }
}

MlmBatch MaskBatch(std::span<const int> tokens, std::size_t batch,
                   std::size_t seq, const MaskingPolicy& policy,
                   std::size_t vocab_size, Rng& rng) {
  policy.Validate();
  if (tokens.empty()) throw DataError("cannot mask an empty token sequence");
  if (batch * seq != tokens.size()) {
    throw ValidationError("token count does not match batch x seq");
  }
  if (vocab_size <= static_cast<std::size_t>(kNumSpecialTokens)) {
    throw ConfigError("vocab has no non-special tokens");
  }
  MlmBatch out;
  out.batch = batch;
  out.seq = seq;
  out.inputs.assign(tokens.begin(), tokens.end());
  out.labels.assign(tokens.size(), -1);
  const std::uint64_t regular = vocab_size - kNumSpecialTokens;
  std::size_t selected = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < kNumSpecialTokens) continue;
    if (!rng.Bernoulli(policy.mask_prob)) continue;
    ++selected;
    out.labels[i] = tokens[i];
    const double u = rng.Uniform();
    if (u < policy.replace_mask) {
      out.inputs[i] = policy.mask_id;
    } else if (u < policy.replace_mask + policy.replace_random) {
      out.inputs[i] = kNumSpecialTokens + static_cast<int>(rng.UniformInt(regular));
    }
  }
  if (selected == 0) throw DataError("masking selected no positions");
  return out;
}

}  // namespace shaper
