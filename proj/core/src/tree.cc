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

#include "shapleak/tree.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shapleak {
namespace {

using SortedLists = std::vector<std::vector<std::size_t>>;

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;
};

// Shared recursive builder. The Criterion supplies node statistics and the
// split score (larger is better).
template <typename Criterion>
class Builder {
 public:
  Builder(const Matrix& x, const TreeOptions& options, Criterion criterion, Rng* rng)
      : x_(x), options_(options), criterion_(std::move(criterion)), rng_(rng) {}

  std::vector<TreeNode> build(std::span<const std::size_t> rows) {
    SortedLists lists(x_.cols());
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      lists[f].assign(rows.begin(), rows.end());
      std::ranges::stable_sort(lists[f], [&](std::size_t a, std::size_t b) {
        return x_(a, f) < x_(b, f);
      });
    }
    grow(std::move(lists), 0);
    return std::move(nodes_);
  }

 private:
  int grow(SortedLists lists, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const auto& rows = lists[0];
    criterion_.fill_leaf(rows, nodes_[id]);

    if (depth >= options_.max_depth || rows.size() < options_.min_samples_split ||
        criterion_.is_pure(rows)) {
      return id;
    }
    const SplitChoice best = find_split(lists);
    if (best.feature < 0) return id;

    std::vector<char> goes_left(x_.rows(), 0);
    for (std::size_t r : rows) goes_left[r] = x_(r, best.feature) <= best.threshold;
    SortedLists left(lists.size());
    SortedLists right(lists.size());
    for (std::size_t f = 0; f < lists.size(); ++f) {
      left[f].reserve(lists[f].size());
      right[f].reserve(lists[f].size());
      for (std::size_t r : lists[f]) (goes_left[r] ? left[f] : right[f]).push_back(r);
    }
    lists.clear();
    lists.shrink_to_fit();
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int l = grow(std::move(left), depth + 1);
    nodes_[id].left = l;
    const int r = grow(std::move(right), depth + 1);
    nodes_[id].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(x_.cols());
    std::iota(features.begin(), features.end(), 0);
    if (options_.max_features > 0 && options_.max_features < features.size()) {
      if (rng_ == nullptr) throw std::invalid_argument("feature subsampling needs an rng");
      std::shuffle(features.begin(), features.end(), *rng_);
      features.resize(options_.max_features);
      std::ranges::sort(features);
    }
    return features;
  }

  SplitChoice find_split(const SortedLists& lists) {
    SplitChoice best;
    for (std::size_t f : candidate_features()) {
      const auto& sorted = lists[f];
      auto scan = criterion_.start_scan(sorted);
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        scan.move_left(sorted[i]);
        const double lo = x_(sorted[i], f);
        const double hi = x_(sorted[i + 1], f);
        if (!(lo < hi)) continue;
        const double score = scan.score();
        if (score > best.score) {
          best.feature = static_cast<int>(f);
          best.threshold = lo + 0.5 * (hi - lo);
          if (!(best.threshold < hi)) best.threshold = lo;
          best.score = score;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  TreeOptions options_;
  Criterion criterion_;
  Rng* rng_;
  std::vector<TreeNode> nodes_;
};

class GiniCriterion {
 public:
  GiniCriterion(std::span<const int> labels, int n_classes)
      : labels_(labels), n_classes_(n_classes) {}

  bool is_pure(const std::vector<std::size_t>& rows) const {
    for (std::size_t r : rows) {
      if (labels_[r] != labels_[rows.front()]) return false;
    }
    return true;
  }

  void fill_leaf(const std::vector<std::size_t>& rows, TreeNode& node) const {
    std::vector<std::size_t> counts(n_classes_, 0);
    for (std::size_t r : rows) ++counts[labels_[r]];
    node.label = static_cast<int>(std::ranges::max_element(counts) - counts.begin());
    node.value = 0.0;
  }

  // Score = sum_k L_k^2 / N_L + sum_k R_k^2 / N_R, which is maximal exactly
  // when the weighted Gini impurity of the children is minimal.
  class Scan {
   public:
    Scan(std::span<const int> labels, int n_classes, const std::vector<std::size_t>& rows)
        : labels_(labels), left_(n_classes, 0.0), right_(n_classes, 0.0) {
      for (std::size_t r : rows) right_[labels_[r]] += 1.0;
      n_right_ = static_cast<double>(rows.size());
      for (double c : right_) sq_right_ += c * c;
    }
    void move_left(std::size_t r) {
      const int k = labels_[r];
      sq_left_ += 2.0 * left_[k] + 1.0;
      sq_right_ -= 2.0 * right_[k] - 1.0;
      left_[k] += 1.0;
      right_[k] -= 1.0;
      n_left_ += 1.0;
      n_right_ -= 1.0;
    }
    double score() const { return sq_left_ / n_left_ + sq_right_ / n_right_; }

   private:
    std::span<const int> labels_;
    std::vector<double> left_;
    std::vector<double> right_;
    double n_left_ = 0.0, n_right_ = 0.0, sq_left_ = 0.0, sq_right_ = 0.0;
  };

  Scan start_scan(const std::vector<std::size_t>& rows) const {
    return Scan(labels_, n_classes_, rows);
  }

 private:
  std::span<const int> labels_;
  int n_classes_;
};

class SquaredErrorCriterion {
 public:
  SquaredErrorCriterion(std::span<const double> target, const LeafValueFn& leaf_value)
      : target_(target), leaf_value_(leaf_value) {}

  bool is_pure(const std::vector<std::size_t>& rows) const {
    for (std::size_t r : rows) {
      if (target_[r] != target_[rows.front()]) return false;
    }
    return true;
  }

  void fill_leaf(const std::vector<std::size_t>& rows, TreeNode& node) const {
    if (leaf_value_) {
      node.value = leaf_value_(rows);
    } else {
      double total = 0.0;
      for (std::size_t r : rows) total += target_[r];
      node.value = rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
    }
  }

  // Score = S_L^2 / N_L + S_R^2 / N_R (variance reduction up to a constant).
  class Scan {
   public:
    Scan(std::span<const double> target, const std::vector<std::size_t>& rows)
        : target_(target) {
      for (std::size_t r : rows) sum_right_ += target_[r];
      n_right_ = static_cast<double>(rows.size());
    }
    void move_left(std::size_t r) {
      sum_left_ += target_[r];
      sum_right_ -= target_[r];
      n_left_ += 1.0;
      n_right_ -= 1.0;
    }
    double score() const {
      return sum_left_ * sum_left_ / n_left_ + sum_right_ * sum_right_ / n_right_;
    }

   private:
    std::span<const double> target_;
    double n_left_ = 0.0, n_right_ = 0.0, sum_left_ = 0.0, sum_right_ = 0.0;
  };

  Scan start_scan(const std::vector<std::size_t>& rows) const { return Scan(target_, rows); }

 private:
  std::span<const double> target_;
  const LeafValueFn& leaf_value_;
};

void check_rows(const Matrix& x, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("tree fit needs at least one row");
  for (std::size_t r : rows) {
    if (r >= x.rows()) throw std::out_of_range("tree fit row index out of range");
  }
}

}  // namespace

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("tree needs at least one node");
  const int count = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (!node.is_leaf() && (node.left <= 0 || node.left >= count || node.right <= 0 ||
                            node.right >= count)) {
      throw std::invalid_argument("tree node child index out of range");
    }
  }
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[x[node->feature] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

int DecisionTree::depth() const {
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[nodes_[i].left] = level[i] + 1;
      level[nodes_[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

DecisionTree fit_classification_tree(const Matrix& x, std::span<const int> labels,
                                     int n_classes, std::span<const std::size_t> rows,
                                     const TreeOptions& options, Rng* rng) {
  check_rows(x, rows);
  if (labels.size() != x.rows()) throw std::invalid_argument("label count mismatch");
  Builder builder(x, options, GiniCriterion(labels, n_classes), rng);
  return DecisionTree(builder.build(rows));
}

DecisionTree fit_regression_tree(const Matrix& x, std::span<const double> target,
                                 std::span<const std::size_t> rows,
                                 const TreeOptions& options, const LeafValueFn& leaf_value) {
  check_rows(x, rows);
  if (target.size() != x.rows()) throw std::invalid_argument("target length mismatch");
  Builder builder(x, options, SquaredErrorCriterion(target, leaf_value), nullptr);
  return DecisionTree(builder.build(rows));
}

}  // namespace shapleak
