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

#include "shaper/shape.h"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "shaper/errors.h"

namespace shaper {

std::string ShapeVector::ToString() const {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(dims[i]);
  }
  return s;
}

ShapeVector ShapeVector::Parse(const std::string& text) {
  ShapeVector shape;
  std::string token;
  std::istringstream in(text);
  const char sep = text.find(',') != std::string::npos ? ',' : '-';
  while (std::getline(in, token, sep)) {
    if (token.empty()) throw ValidationError("empty entry in shape '" + text + "'");
    char* end = nullptr;
    const long v = std::strtol(token.c_str(), &end, 10);
    if (*end != '\0' || v <= 0) {
      throw ValidationError("bad shape entry '" + token + "' in '" + text + "'");
    }
    shape.dims.push_back(static_cast<int>(v));
  }
  if (shape.dims.empty()) throw ValidationError("empty shape");
  return shape;
}

DesignSpace::DesignSpace(std::vector<int> allowed_dims, std::size_t num_layers)
    : allowed_(std::move(allowed_dims)), num_layers_(num_layers) {
  if (allowed_.empty()) throw ValidationError("design space has no dims");
  if (num_layers_ == 0) throw ValidationError("design space has no layers");
  for (std::size_t i = 0; i < allowed_.size(); ++i) {
    if (allowed_[i] <= 0) throw ValidationError("design-space dims must be positive");
    if (i > 0 && allowed_[i] <= allowed_[i - 1]) {
      throw ValidationError("design-space dims must be strictly ascending");
    }
  }
}

bool DesignSpace::Allows(int dim) const { return IndexOf(dim) >= 0; }

int DesignSpace::IndexOf(int dim) const {
  auto it = std::lower_bound(allowed_.begin(), allowed_.end(), dim);
  if (it == allowed_.end() || *it != dim) return -1;
  return static_cast<int>(it - allowed_.begin());
}

std::uint64_t DesignSpace::Size() const {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < num_layers_; ++i) {
    if (n > UINT64_MAX / allowed_.size()) return UINT64_MAX;
    n *= allowed_.size();
  }
  return n;
}

bool DesignSpace::Contains(const ShapeVector& shape) const {
  if (shape.size() != num_layers_) return false;
  return std::all_of(shape.dims.begin(), shape.dims.end(),
                     [this](int d) { return Allows(d); });
}

void DesignSpace::Validate(const ShapeVector& shape) const {
  if (shape.size() != num_layers_) {
    throw ValidationError("shape " + shape.ToString() + " has " +
                          std::to_string(shape.size()) + " layers, expected " +
                          std::to_string(num_layers_));
  }
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (!Allows(shape[i])) {
      throw ValidationError("layer " + std::to_string(i) + " dim " +
                            std::to_string(shape[i]) +
                            " is not in the design space");
    }
  }
}

ShapeVector DesignSpace::Smallest() const { return Uniform(min_dim()); }
ShapeVector DesignSpace::Largest() const { return Uniform(max_dim()); }
ShapeVector DesignSpace::Uniform(int dim) const {
  return ShapeVector{std::vector<int>(num_layers_, dim)};
}

ShapeVector DesignSpace::ShapeAt(std::uint64_t index) const {
  ShapeVector shape{std::vector<int>(num_layers_)};
  for (std::size_t i = num_layers_; i-- > 0;) {
    shape.dims[i] = allowed_[index % allowed_.size()];
    index /= allowed_.size();
  }
  return shape;
}

int StepDistance(const DesignSpace& space, int a, int b) {
  const int ia = space.IndexOf(a), ib = space.IndexOf(b);
  if (ia < 0 || ib < 0) throw ValidationError("dim not in design space");
  return std::abs(ia - ib);
}

}  // namespace shaper
