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

#ifndef SHAPLEAK_SYNTH_H_
#define SHAPLEAK_SYNTH_H_

#include <cstdint>

#include "shapleak/dataset.h"

namespace shapleak {

// Five Gaussian clusters on vertices of the unit cube give three key
// features; redundant features are convex combinations of the key features
// and the remaining columns are uniform noise. Column order is
// key (3), redundant (n_r), noise.
struct SynthConfig {
  int n_features = 12;
  double important_fraction = 0.5;  // one of 0.25, 0.5, 0.75
  int n_samples = 10000;
  double cluster_std = 0.15;
  std::uint64_t seed = 0;

  int n_important() const;
  int n_redundant() const { return n_important() - 3; }
  int n_noise() const { return n_features - n_important(); }
  void validate() const;
};

inline constexpr int kSynthClasses = 5;
inline constexpr int kKeyFeatures = 3;

// Output is min-max normalized; metadata records the chosen cube vertices and
// the redundant-feature weights.
Dataset gen_synthetic(const SynthConfig& cfg);

}  // namespace shapleak

#endif  // SHAPLEAK_SYNTH_H_
