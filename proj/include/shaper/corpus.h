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

#ifndef SHAPER_CORPUS_H_
#define SHAPER_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace shaper {

// Synthetic English-like text for desk-scale runs. Documents stick to one
// topic, sentences follow a small grammar with determiner/noun/verb number
// agreement, and content words are Zipf-distributed within each topic. The
// lexicon is the same for every seed, so train and eval corpora generated
// with different seeds share a vocabulary.
struct SyntheticCorpusOptions {
  std::size_t target_bytes = 1 << 20;
  std::uint64_t seed = 1;
  std::size_t topics = 12;
};

std::vector<std::string> GenerateSyntheticCorpus(const SyntheticCorpusOptions& options);

}  // namespace shaper

#endif  // SHAPER_CORPUS_H_
