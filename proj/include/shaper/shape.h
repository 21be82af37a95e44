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

#ifndef SHAPER_SHAPE_H_
#define SHAPER_SHAPE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace shaper {

// Per-layer hidden dimensions of a sub-network.
struct ShapeVector {
  std::vector<int> dims;

  std::size_t size() const { return dims.size(); }
  int operator[](std::size_t i) const { return dims[i]; }

  // "480-240-360"
  std::string ToString() const;
  static ShapeVector Parse(const std::string& text);

  friend bool operator==(const ShapeVector&, const ShapeVector&) = default;
  friend auto operator<=>(const ShapeVector&, const ShapeVector&) = default;
};

// The allowed hidden dimensions and the layer count; every ShapeVector over
// it is a sub-network of the supernet.
class DesignSpace {
 public:
  DesignSpace() = default;
  // Throws a validation error unless dims are positive and strictly
  // ascending and num_layers >= 1.
  DesignSpace(std::vector<int> allowed_dims, std::size_t num_layers);

  const std::vector<int>& allowed_dims() const { return allowed_; }
  std::size_t num_layers() const { return num_layers_; }
  std::size_t num_options() const { return allowed_.size(); }
  int min_dim() const { return allowed_.front(); }
  int max_dim() const { return allowed_.back(); }

  bool Allows(int dim) const;
  // Index of dim within allowed_dims, or -1.
  int IndexOf(int dim) const;

  // |allowed_dims| ^ num_layers, saturating at UINT64_MAX.
  std::uint64_t Size() const;

  bool Contains(const ShapeVector& shape) const;
  // Throws a validation error naming the offending layer.
  void Validate(const ShapeVector& shape) const;

  ShapeVector Smallest() const;
  ShapeVector Largest() const;
  ShapeVector Uniform(int dim) const;

  // Shapes in lexicographic order of allowed-dim indices; `index` in
  // [0, Size()).
  ShapeVector ShapeAt(std::uint64_t index) const;

  friend bool operator==(const DesignSpace&, const DesignSpace&) = default;

 private:
  std::vector<int> allowed_;
  std::size_t num_layers_ = 0;
};

// Number of design-space steps between two allowed dims.
int StepDistance(const DesignSpace& space, int a, int b);

}  // namespace shaper

#endif  // SHAPER_SHAPE_H_
