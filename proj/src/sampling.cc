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

#include "shaper/sampling.h"

#include "shaper/errors.h"

namespace shaper {

ShapeVector SampleRandom(const DesignSpace& space, Rng& rng) {
  ShapeVector s;
  s.dims.reserve(space.num_layers());
  for (std::size_t i = 0; i < space.num_layers(); ++i) {
    s.dims.push_back(space.allowed_dims()[rng.UniformInt(space.num_options())]);
  }
  return s;
}

std::vector<ShapeVector> SampleSandwich(const DesignSpace& space, std::size_t n,
                                        Rng& rng) {
  if (n < 2) throw ConfigError("sandwich sampling needs n >= 2");
  std::vector<ShapeVector> out{space.Largest(), space.Smallest()};
  for (std::size_t i = 2; i < n; ++i) out.push_back(SampleRandom(space, rng));
  return out;
}

}  // namespace shaper
