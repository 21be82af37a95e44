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

#ifndef SHAPER_CHECKPOINT_H_
#define SHAPER_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "shaper/supernet.h"

namespace shaper {

// Binary checkpoint layout, all integers little-endian:
//   "SSHP" | u32 version | u32 json_len | json (backbone config, UTF-8)
//   then per tensor, sorted by name:
//   u32 name_len | name | u32 rank | u64 dims[rank] | f32 data[prod(dims)]
inline constexpr char kCheckpointMagic[4] = {'S', 'S', 'H', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> SerializeCheckpoint(const Supernet& model);
// Throws a format error (with byte offset) on bad magic, unsupported
// version, truncation, unknown or missing tensors.
Supernet DeserializeCheckpoint(const std::vector<std::uint8_t>& bytes);

// Writes atomically via a temporary file and rename.
void SaveCheckpoint(const Supernet& model, const std::string& path);
Supernet LoadCheckpoint(const std::string& path);

// Rounds every parameter to 32-bit float, i.e. to what a checkpoint stores.
void RoundToStoragePrecision(Supernet& model);

}  // namespace shaper

#endif  // SHAPER_CHECKPOINT_H_
