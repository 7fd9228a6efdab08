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

#ifndef SHAPLEAK_NETWORK_H_
#define SHAPLEAK_NETWORK_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shapleak/common.h"

namespace shapleak {

enum class Activation { kIdentity, kRelu, kSigmoid, kTanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Fully connected feed-forward network with an optional softmax head.
class Network {
 public:
  Network() = default;
  Network(std::vector<DenseLayer> layers, bool softmax_head);

  // Weights drawn from N(0, (gain^2) / fan_in); biases start at zero. The
  // last layer's gain is multiplied by `output_gain`.
  static Network create(std::span<const std::size_t> widths, Activation hidden,
                        Activation output, bool softmax_head, Rng& rng,
                        double hidden_gain = 1.0, double output_gain = 1.0);

  std::size_t n_inputs() const { return layers_.empty() ? 0 : layers_.front().inputs; }
  std::size_t n_outputs() const { return layers_.empty() ? 0 : layers_.back().outputs; }
  bool softmax_head() const { return softmax_head_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  std::vector<std::size_t> widths() const;

  // Inference pass; reentrant.
  void forward(std::span<const double> x, std::span<double> out) const;
  std::vector<double> forward(std::span<const double> x) const;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::vector<DenseLayer> layers_;
  bool softmax_head_ = false;
};

enum class Loss {
  kSoftmaxCrossEntropy,  // targets are one-hot rows
  kSquaredError,         // per-sample sum of squared residuals
};

struct SgdOptions {
  double learning_rate = 0.05;
  int epochs = 200;
  std::size_t batch_size = 64;
  double weight_decay = 0.0;  // L2 coefficient on weights (not biases)
  double dropout_rate = 0.0;  // inverted dropout after each hidden layer
  std::uint64_t seed = 0;
  Loss loss = Loss::kSoftmaxCrossEntropy;
};

// Mini-batch gradient descent. Returns the full-data loss after each epoch.
// Throws DivergenceError when the loss becomes non-finite.
std::vector<double> train_sgd(Network& net, const Matrix& inputs, const Matrix& targets,
                              const SgdOptions& options);

// Mean per-sample loss (without the weight-decay term).
double evaluate_loss(const Network& net, const Matrix& inputs, const Matrix& targets,
                     Loss loss);

void softmax_inplace(std::span<double> z);

}  // namespace shapleak

#endif  // SHAPLEAK_NETWORK_H_
