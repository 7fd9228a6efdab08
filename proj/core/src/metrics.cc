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

#include "shapleak/metrics.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace shapleak {
namespace {

void check_shapes(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("l1: matrix shapes differ");
  }
}

}  // namespace

double l1_loss(const Matrix& x_hat, const Matrix& x) {
  check_shapes(x_hat, x);
  if (x.data().empty()) throw std::invalid_argument("l1: no cells");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.data().size(); ++i) sum += std::abs(x_hat.data()[i] - x.data()[i]);
  return sum / static_cast<double>(x.data().size());
}

double l1_loss(const Matrix& x_hat, const Matrix& x, std::span<const std::uint8_t> mask) {
  check_shapes(x_hat, x);
  if (mask.size() != x.data().size()) throw std::invalid_argument("l1: mask size mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    sum += std::abs(x_hat.data()[i] - x.data()[i]);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("l1: empty mask");
  return sum / static_cast<double>(count);
}

std::vector<double> per_feature_l1(const Matrix& x_hat, const Matrix& x) {
  check_shapes(x_hat, x);
  if (x.rows() == 0) throw std::invalid_argument("l1: no rows");
  std::vector<double> out(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += std::abs(x_hat(r, c) - x(r, c));
  }
  for (double& v : out) v /= static_cast<double>(x.rows());
  return out;
}

ReconstructionError reconstruction_error(std::span<const Reconstruction> reconstructions,
                                         const Matrix& x) {
  if (reconstructions.size() != x.rows()) {
    throw std::invalid_argument("reconstruction count differs from row count");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ReconstructionError err;
  std::vector<double> sums(x.cols(), 0.0);
  std::vector<std::size_t> counts(x.cols(), 0);
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto& rec = reconstructions[r];
    if (rec.values.size() != x.cols()) throw std::invalid_argument("reconstruction width mismatch");
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (!rec.values[c]) continue;
      const double e = std::abs(*rec.values[c] - x(r, c));
      sums[c] += e;
      ++counts[c];
      total += e;
    }
  }
  err.per_feature.resize(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    err.per_feature[c] = counts[c] ? sums[c] / static_cast<double>(counts[c]) : nan;
    err.recovered += counts[c];
  }
  err.l1 = err.recovered ? total / static_cast<double>(err.recovered) : nan;
  return err;
}

Matrix rg_e(const Matrix& aux, std::size_t m, std::uint64_t seed) {
  if (aux.rows() == 0) throw std::invalid_argument("rg_e needs a nonempty auxiliary set");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, aux.rows() - 1);
  Matrix out;
  for (std::size_t r = 0; r < m; ++r) out.append_row(aux.row(pick(rng)));
  if (m == 0) out = Matrix(0, aux.cols());
  return out;
}

Matrix rg_u(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  Matrix out(m, n);
  for (double& v : out.data()) v = uniform01(rng);
  return out;
}

Matrix rg_n(std::size_t n, std::size_t m, std::uint64_t seed, std::size_t* clipped) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.5, 0.25);
  Matrix out(m, n);
  std::size_t count = 0;
  for (double& v : out.data()) {
    const double g = gauss(rng);
    v = std::clamp(g, 0.0, 1.0);
    if (v != g) ++count;
  }
  if (clipped) *clipped = count;
  return out;
}

}  // namespace shapleak
