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

#ifndef SHAPLEAK_TREE_H_
#define SHAPLEAK_TREE_H_

#include <functional>
#include <span>
#include <vector>

#include "shapleak/common.h"

namespace shapleak {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;       // classification leaves
  double value = 0.0;  // regression leaves

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary CART tree; samples with x[feature] <= threshold go left.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes);

  const TreeNode& leaf_for(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeOptions {
  int max_depth = 5;
  std::size_t min_samples_split = 2;
  // Features examined per split; 0 means all of them.
  std::size_t max_features = 0;
};

// Gini-impurity classification tree. `rows` may contain repeats (bootstrap).
// Split ties resolve to the lowest feature index, then the lowest threshold.
// `rng` is only consulted when max_features restricts the candidate set.
DecisionTree fit_classification_tree(const Matrix& x, std::span<const int> labels,
                                     int n_classes, std::span<const std::size_t> rows,
                                     const TreeOptions& options, Rng* rng = nullptr);

using LeafValueFn = std::function<double(std::span<const std::size_t> rows)>;

// Least-squares regression tree on `target`; leaf values come from
// `leaf_value` (defaults to the mean target of the leaf rows).
DecisionTree fit_regression_tree(const Matrix& x, std::span<const double> target,
                                 std::span<const std::size_t> rows,
                                 const TreeOptions& options,
                                 const LeafValueFn& leaf_value = nullptr);

}  // namespace shapleak

#endif  // SHAPLEAK_TREE_H_
