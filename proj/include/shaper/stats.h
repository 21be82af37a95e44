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

#ifndef SHAPER_STATS_H_
#define SHAPER_STATS_H_

#include <span>
#include <vector>

namespace shaper {

// Coefficient of determination 1 - SS_res / SS_tot. Throws a validation
// error on length mismatch, fewer than 2 values or constant y_true.
double R2(std::span<const double> y_true, std::span<const double> y_pred);

// Throws a validation error on length mismatch, fewer than 2 values or a
// constant argument (the correlation is undefined).
double Pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average-tie ranks.
double Spearman(std::span<const double> a, std::span<const double> b);

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> AverageRanks(std::span<const double> values);

double Mean(std::span<const double> values);
double Median(std::vector<double> values);

}  // namespace shaper

#endif  // SHAPER_STATS_H_
