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

#ifndef SHAPLEAK_METRICS_H_
#define SHAPLEAK_METRICS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "shapleak/attack2.h"
#include "shapleak/common.h"

namespace shapleak {

// Mean |x_hat - x| over all cells, or over cells where `mask` is nonzero
// (mask is row-major like the matrices). Throws when the mask selects nothing.
double l1_loss(const Matrix& x_hat, const Matrix& x);
double l1_loss(const Matrix& x_hat, const Matrix& x, std::span<const std::uint8_t> mask);

// Column-wise mean absolute error.
std::vector<double> per_feature_l1(const Matrix& x_hat, const Matrix& x);

struct ReconstructionError {
  double l1 = 0.0;                  // over recovered cells; NaN if none
  std::vector<double> per_feature;  // NaN for features never recovered
  std::size_t recovered = 0;
};

// Compares attack-2 output with the true rows (aligned by index).
ReconstructionError reconstruction_error(std::span<const Reconstruction> reconstructions,
                                         const Matrix& x);

// Random-guess baselines: rows of the auxiliary data, U(0,1), and
// N(0.5, 0.25^2) clipped to [0, 1].
Matrix rg_e(const Matrix& aux, std::size_t m, std::uint64_t seed);
Matrix rg_u(std::size_t n, std::size_t m, std::uint64_t seed);
Matrix rg_n(std::size_t n, std::size_t m, std::uint64_t seed, std::size_t* clipped = nullptr);

}  // namespace shapleak

#endif  // SHAPLEAK_METRICS_H_
