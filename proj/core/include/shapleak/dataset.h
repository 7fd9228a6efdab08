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

#ifndef SHAPLEAK_DATASET_H_
#define SHAPLEAK_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shapleak/common.h"

namespace shapleak {

// Feature matrix (m x n) with integer class labels in [0, n_classes).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  int n_classes = 0;
  // Free-form provenance (e.g. synthetic generator parameters).
  std::map<std::string, std::string> metadata;

  std::size_t rows() const { return features.rows(); }
  std::size_t cols() const { return features.cols(); }

  // Throws std::invalid_argument when shapes or labels are inconsistent.
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset head(std::size_t count) const;
};

// Per-feature bounds observed before min-max scaling.
struct MinMaxRecord {
  std::vector<double> min;
  std::vector<double> max;
};

// Reads a numeric CSV with a header row. Label cells that are all integers
// are used as class indices directly; otherwise distinct label strings are
// mapped to indices in lexicographic order.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

// Maps every feature onto [0, 1]. Constant columns map to 0.
std::pair<Dataset, MinMaxRecord> normalize_minmax(const Dataset& d);
Dataset denormalize(const Dataset& d, const MinMaxRecord& record);

// 60/20/20 partition: train gets floor(0.6 m), aux floor(0.2 m), val the rest.
struct Split {
  Dataset train;
  Dataset aux;
  Dataset val;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> aux_rows;
  std::vector<std::size_t> val_rows;
};

Split split(const Dataset& d, std::uint64_t seed);

// Dataset files are JSON documents with format tag "shapleak-dataset".
void save_dataset(const Dataset& d, const std::optional<MinMaxRecord>& record,
                  const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<MinMaxRecord>* record = nullptr);

}  // namespace shapleak

#endif  // SHAPLEAK_DATASET_H_
