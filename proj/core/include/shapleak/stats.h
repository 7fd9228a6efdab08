// Copyright 2026 The Shapleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAPLEAK_STATS_H_
#define SHAPLEAK_STATS_H_

#include <span>
#include <vector>

#include "shapleak/common.h"

namespace shapleak {

double mean(std::span<const double> x);
// Unbiased sample variance (divides by size - 1). Requires size >= 2.
double sample_variance(std::span<const double> x);

// Sample Pearson correlation. When either input has zero variance the result
// is 0 and *degenerate (if given) is set to true.
double pearson(std::span<const double> x, std::span<const double> y,
               bool* degenerate = nullptr);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);
std::vector<double> average_ranks(std::span<const double> x);

// Mean absolute correlation between a feature column and every column of
// `predictions` (m x c).
double macc(std::span<const double> feature, const Matrix& predictions);

}  // namespace shapleak

#endif  // SHAPLEAK_STATS_H_
