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

#include "shaper/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "shaper/errors.h"

namespace shaper {

namespace {

std::size_t Product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

void CheckDims(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw ValidationError("tensor must have rank >= 1");
  for (std::size_t d : dims) {
    if (d == 0) {
      throw ValidationError("tensor dims must be positive, got " +
                            DimsString(dims));
    }
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)) {
  CheckDims(dims_);
  data_.assign(Product(dims_), fill);
  cols_ = Product(dims_) / dims_[0];
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(data.begin(), data.end()) {
  CheckDims(dims_);
  if (Product(dims_) != data_.size()) {
    throw ValidationError("tensor data length " + std::to_string(data_.size()) +
                          " does not match dims " + shaper::DimsString(dims_));
  }
  cols_ = data_.size() / dims_[0];
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Tensor::DimsString() const { return shaper::DimsString(dims_); }

std::string DimsString(const std::vector<std::size_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

}  // namespace shaper
