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

#include "shapleak/network.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shapleak {
namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kIdentity:
      return z;
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kSigmoid:
      return 1.0 / (1.0 + std::exp(-z));
    case Activation::kTanh:
      return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the activation output.
double activation_slope(Activation a, double out) {
  switch (a) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kRelu:
      return out > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid:
      return out * (1.0 - out);
    case Activation::kTanh:
      return 1.0 - out * out;
  }
  return 1.0;
}

void dense_forward(const DenseLayer& layer, std::span<const double> in,
                   std::span<double> out) {
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    const double* w = layer.weights.data() + o * layer.inputs;
    double z = layer.bias[o];
    for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
    out[o] = activate(layer.activation, z);
  }
}

double sample_loss(Loss loss, std::span<const double> out, std::span<const double> target) {
  double total = 0.0;
  if (loss == Loss::kSoftmaxCrossEntropy) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (target[k] > 0.0) total -= target[k] * std::log(std::max(out[k], 1e-300));
    }
  } else {
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double d = out[k] - target[k];
      total += d * d;
    }
  }
  return total;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

void softmax_inplace(std::span<double> z) {
  const double peak = *std::ranges::max_element(z);
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : z) v /= total;
}

Network::Network(std::vector<DenseLayer> layers, bool softmax_head)
    : layers_(std::move(layers)), softmax_head_(softmax_head) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.inputs == 0 || layer.outputs == 0 ||
        layer.weights.size() != layer.inputs * layer.outputs ||
        layer.bias.size() != layer.outputs) {
      throw std::invalid_argument("malformed dense layer " + std::to_string(l));
    }
    if (l > 0 && layers_[l - 1].outputs != layer.inputs) {
      throw std::invalid_argument("layer widths do not chain at layer " + std::to_string(l));
    }
  }
}

Network Network::create(std::span<const std::size_t> widths, Activation hidden,
                        Activation output, bool softmax_head, Rng& rng,
                        double hidden_gain, double output_gain) {
  if (widths.size() < 2) throw std::invalid_argument("need at least input and output widths");
  std::vector<DenseLayer> layers;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.inputs = widths[l];
    layer.outputs = widths[l + 1];
    const bool last = l + 2 == widths.size();
    layer.activation = last ? output : hidden;
    const double gain = last ? hidden_gain * output_gain : hidden_gain;
    const double scale = gain / std::sqrt(static_cast<double>(layer.inputs));
    layer.weights.resize(layer.inputs * layer.outputs);
    for (double& w : layer.weights) w = scale * normal(rng);
    layer.bias.assign(layer.outputs, 0.0);
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers), softmax_head);
}

std::vector<std::size_t> Network::widths() const {
  std::vector<std::size_t> w;
  if (layers_.empty()) return w;
  w.push_back(layers_.front().inputs);
  for (const auto& layer : layers_) w.push_back(layer.outputs);
  return w;
}

void Network::forward(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_inputs()) throw std::invalid_argument("network input width mismatch");
  if (out.size() != n_outputs()) throw std::invalid_argument("network output width mismatch");
  thread_local std::vector<double> a;
  thread_local std::vector<double> b;
  a.assign(x.begin(), x.end());
  for (const auto& layer : layers_) {
    b.resize(layer.outputs);
    dense_forward(layer, a, b);
    std::swap(a, b);
  }
  if (softmax_head_) softmax_inplace(a);
  std::ranges::copy(a, out.begin());
}

std::vector<double> Network::forward(std::span<const double> x) const {
  std::vector<double> out(n_outputs());
  forward(x, out);
  return out;
}

double evaluate_loss(const Network& net, const Matrix& inputs, const Matrix& targets,
                     Loss loss) {
  if (inputs.rows() != targets.rows() || inputs.rows() == 0) {
    throw std::invalid_argument("evaluate_loss: row mismatch or empty input");
  }
  std::vector<double> out(net.n_outputs());
  double total = 0.0;
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    net.forward(inputs.row(r), out);
    total += sample_loss(loss, out, targets.row(r));
  }
  return total / static_cast<double>(inputs.rows());
}

std::vector<double> train_sgd(Network& net, const Matrix& inputs, const Matrix& targets,
                              const SgdOptions& options) {
  if (inputs.rows() != targets.rows() || inputs.rows() == 0) {
    throw std::invalid_argument("train_sgd: row mismatch or empty input");
  }
  if (inputs.cols() != net.n_inputs() || targets.cols() != net.n_outputs()) {
    throw std::invalid_argument("train_sgd: data width does not match network");
  }
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (options.dropout_rate < 0.0 || options.dropout_rate >= 1.0) {
    throw std::invalid_argument("dropout rate must lie in [0, 1)");
  }
  if (options.loss == Loss::kSoftmaxCrossEntropy && !net.softmax_head()) {
    throw std::invalid_argument("cross-entropy training requires a softmax head");
  }

  auto& layers = net.mutable_layers();
  const std::size_t depth = layers.size();
  std::vector<std::vector<double>> acts(depth + 1);
  std::vector<std::vector<double>> masks(depth);
  std::vector<std::vector<double>> deltas(depth);
  std::vector<std::vector<double>> grad_w(depth);
  std::vector<std::vector<double>> grad_b(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    acts[l + 1].resize(layers[l].outputs);
    masks[l].assign(layers[l].outputs, 1.0);
    deltas[l].resize(layers[l].outputs);
    grad_w[l].resize(layers[l].weights.size());
    grad_b[l].resize(layers[l].outputs);
  }

  Rng rng(options.seed);
  std::bernoulli_distribution keep(1.0 - options.dropout_rate);
  const double keep_scale = 1.0 / (1.0 - options.dropout_rate);
  std::vector<std::size_t> order(inputs.rows());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> history;
  history.reserve(options.epochs);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      for (std::size_t l = 0; l < depth; ++l) {
        std::ranges::fill(grad_w[l], 0.0);
        std::ranges::fill(grad_b[l], 0.0);
      }
      for (std::size_t idx = start; idx < stop; ++idx) {
        const std::size_t r = order[idx];
        const auto x = inputs.row(r);
        const auto y = targets.row(r);
        acts[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < depth; ++l) {
          dense_forward(layers[l], acts[l], acts[l + 1]);
          if (options.dropout_rate > 0.0 && l + 1 < depth) {
            for (std::size_t o = 0; o < layers[l].outputs; ++o) {
              masks[l][o] = keep(rng) ? keep_scale : 0.0;
              acts[l + 1][o] *= masks[l][o];
            }
          }
        }
        auto& out = acts[depth];
        auto& top = deltas[depth - 1];
        if (options.loss == Loss::kSoftmaxCrossEntropy) {
          softmax_inplace(out);
          for (std::size_t k = 0; k < out.size(); ++k) top[k] = out[k] - y[k];
        } else {
          const Activation act = layers[depth - 1].activation;
          for (std::size_t k = 0; k < out.size(); ++k) {
            top[k] = 2.0 * (out[k] - y[k]) * activation_slope(act, out[k]);
          }
        }
        for (std::size_t l = depth; l-- > 0;) {
          const auto& layer = layers[l];
          const auto& in = acts[l];
          for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double d = deltas[l][o];
            if (d == 0.0) continue;
            double* gw = grad_w[l].data() + o * layer.inputs;
            for (std::size_t i = 0; i < layer.inputs; ++i) gw[i] += d * in[i];
            grad_b[l][o] += d;
          }
          if (l == 0) break;
          auto& below = deltas[l - 1];
          const auto& below_layer = layers[l - 1];
          std::ranges::fill(below, 0.0);
          for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double d = deltas[l][o];
            if (d == 0.0) continue;
            const double* w = layer.weights.data() + o * layer.inputs;
            for (std::size_t i = 0; i < layer.inputs; ++i) below[i] += d * w[i];
          }
          for (std::size_t i = 0; i < below.size(); ++i) {
            // acts[l] holds the post-dropout value; the slope needs the
            // pre-dropout activation, recovered by undoing the mask scale.
            const double mask = masks[l - 1][i];
            if (mask == 0.0) {
              below[i] = 0.0;
              continue;
            }
            const double raw = acts[l][i] / mask;
            below[i] *= mask * activation_slope(below_layer.activation, raw);
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < depth; ++l) {
        auto& layer = layers[l];
        for (std::size_t k = 0; k < layer.weights.size(); ++k) {
          layer.weights[k] -= options.learning_rate *
                              (grad_w[l][k] * inv + options.weight_decay * layer.weights[k]);
        }
        for (std::size_t o = 0; o < layer.outputs; ++o) {
          layer.bias[o] -= options.learning_rate * grad_b[l][o] * inv;
        }
      }
    }
    const double loss = evaluate_loss(net, inputs, targets, options.loss);
    if (!std::isfinite(loss)) throw DivergenceError("training loss is not finite", epoch);
    history.push_back(loss);
  }
  return history;
}

}  // namespace shapleak
