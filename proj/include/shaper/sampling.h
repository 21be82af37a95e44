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

#ifndef SHAPER_SAMPLING_H_
#define SHAPER_SAMPLING_H_

#include <cstddef>
#include <vector>

#include "shaper/random.h"
#include "shaper/shape.h"

namespace shaper {

// Each layer drawn independently and uniformly from the allowed dims.
ShapeVector SampleRandom(const DesignSpace& space, Rng& rng);

// [S+, S-, then n - 2 uniform random shapes]. Throws a configuration error
// when n < 2.
std::vector<ShapeVector> SampleSandwich(const DesignSpace& space, std::size_t n,
                                        Rng& rng);

}  // namespace shaper

#endif  // SHAPER_SAMPLING_H_
