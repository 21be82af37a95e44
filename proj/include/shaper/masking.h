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

#ifndef SHAPER_MASKING_H_
#define SHAPER_MASKING_H_

#include <cstddef>
#include <span>

#include "shaper/random.h"
#include "shaper/supernet.h"
#include "shaper/vocab.h"

namespace shaper {

// BERT-style masking. Each non-special position is selected with
// probability mask_prob; a selected position is replaced by the mask token,
// by a random non-special token, or kept, with the three probabilities below.
struct MaskingPolicy {
  double mask_prob = 0.15;
  double replace_mask = 0.8;
  double replace_random = 0.1;
  double keep = 0.1;
  int mask_id = kMaskId;

  // Throws a configuration error unless 0 < mask_prob <= 1 and the
  // replacement probabilities are non-negative and sum to 1.
  void Validate() const;
};

// Masks `tokens` laid out as batch x seq. Random replacements are drawn from
// [kNumSpecialTokens, vocab_size). Throws a data error when no position is
// selected (including all-special input).
MlmBatch MaskBatch(std::span<const int> tokens, std::size_t batch,
                   std::size_t seq, const MaskingPolicy& policy,
                   std::size_t vocab_size, Rng& rng);

}  // namespace shaper

#endif  // SHAPER_MASKING_H_
