/* Copyright 2026 The qadv Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Dense feed-forward networks with exact analytic gradients.
//
// Everything here is templated on the scalar type and works on column-major
// batches: an input matrix has one sample per column. Single-vector calls are
// batches of one.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qadv/error.hpp"

namespace qadv::nn {

using Eigen::Index;

enum class Activation { ReLU, PReLU, Linear, Softmax, Tanh };
enum class Mode { Train, Eval };
enum class Loss { CrossEntropy, MSE };

/// Where an upstream gradient enters the final layer.
enum class Seed {
  Output,  // d loss / d (activated output)
  Logits,  // d loss / d (final pre-activation)
};

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct LayerSpec {
  Index in_dim = 0;
  Index out_dim = 0;
  Activation activation = Activation::Linear;
  bool has_batchnorm = false;
  double dropout_rate = 0.0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Trainable tensors of one layer. Unused tensors are empty.
template <typename Scalar>
struct LayerParams {
  MatrixX<Scalar> weight;  // out_dim x in_dim
  VectorX<Scalar> bias;
  VectorX<Scalar> prelu_slope;
  VectorX<Scalar> bn_scale;
  VectorX<Scalar> bn_shift;

  /// Visits every tensor as a flat array, paired with the same tensor of
  /// `other` (which must have identical shapes).
  template <typename Other, typename F>
  void zip(Other& other, F&& f) {
    f(weight.reshaped(), other.weight.reshaped());
    f(bias.reshaped(), other.bias.reshaped());
    f(prelu_slope.reshaped(), other.prelu_slope.reshaped());
    f(bn_scale.reshaped(), other.bn_scale.reshaped());
    f(bn_shift.reshaped(), other.bn_shift.reshaped());
  }
  template <typename F>
  void each(F&& f) {
    f(weight.reshaped());
    f(bias.reshaped());
    f(prelu_slope.reshaped());
    f(bn_scale.reshaped());
    f(bn_shift.reshaped());
  }
  template <typename F>
  void each(F&& f) const {
    f(weight.reshaped());
    f(bias.reshaped());
    f(prelu_slope.reshaped());
    f(bn_scale.reshaped());
    f(bn_shift.reshaped());
  }

  static LayerParams zeros_like(const LayerParams& p) {
    LayerParams z;
    z.weight = MatrixX<Scalar>::Zero(p.weight.rows(), p.weight.cols());
    z.bias = VectorX<Scalar>::Zero(p.bias.size());
    z.prelu_slope = VectorX<Scalar>::Zero(p.prelu_slope.size());
    z.bn_scale = VectorX<Scalar>::Zero(p.bn_scale.size());
    z.bn_shift = VectorX<Scalar>::Zero(p.bn_shift.size());
    return z;
  }
};

template <typename Scalar>
struct Layer {
  LayerSpec spec;
  LayerParams<Scalar> params;
  VectorX<Scalar> running_mean;  // batchnorm only
  VectorX<Scalar> running_var;
};

template <typename Scalar>
struct Network {
  std::vector<Layer<Scalar>> layers;
  Mode mode = Mode::Eval;
  Scalar bn_momentum = Scalar(0.1);
  Scalar bn_epsilon = Scalar(1e-5);

  Index input_dim() const { return layers.empty() ? 0 : layers.front().spec.in_dim; }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().spec.out_dim; }
  std::vector<LayerSpec> specs() const {
    std::vector<LayerSpec> out;
    for (const auto& l : layers) out.push_back(l.spec);
    return out;
  }
};

template <typename Scalar>
using Gradients = std::vector<LayerParams<Scalar>>;

template <typename Scalar>
struct LayerTrace {
  MatrixX<Scalar> input;
  MatrixX<Scalar> linear;          // W a + b
  MatrixX<Scalar> normalized;      // batchnorm x-hat
  VectorX<Scalar> inv_std;         // batchnorm 1/sqrt(var + eps) actually used
  VectorX<Scalar> batch_mean;      // train-mode batchnorm statistics
  VectorX<Scalar> batch_var;
  MatrixX<Scalar> pre_activation;  // after batchnorm
  MatrixX<Scalar> activated;
  MatrixX<Scalar> dropout_mask;    // empty when no dropout was applied
  MatrixX<Scalar> output;
};

template <typename Scalar>
struct ForwardTrace {
  std::vector<LayerTrace<Scalar>> layers;
  Mode mode = Mode::Eval;

  const MatrixX<Scalar>& output() const { return layers.back().output; }
  const MatrixX<Scalar>& logits() const { return layers.back().pre_activation; }
  Index batch_size() const { return layers.front().input.cols(); }
};

/// Regression values (MSE, optional per-entry weights) or class labels (CE).
template <typename Scalar>
struct Target {
  MatrixX<Scalar> values;
  MatrixX<Scalar> weights;
  std::vector<Index> classes;

  static Target regression(MatrixX<Scalar> v, MatrixX<Scalar> w = {}) {
    Target t;
    t.values = std::move(v);
    t.weights = std::move(w);
    return t;
  }
  static Target labels(std::vector<Index> c) {
    Target t;
    t.classes = std::move(c);
    return t;
  }
};

template <typename Scalar>
struct AdamState {
  std::int64_t step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps_adam = Scalar(1e-8);
  Gradients<Scalar> first_moment;
  Gradients<Scalar> second_moment;
};

// ---------------------------------------------------------------------------
// Construction

inline void validate_specs(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.in_dim <= 0 || s.out_dim <= 0)
      throw ShapeError("layer " + std::to_string(i) + " has non-positive dimensions");
    if (i > 0 && specs[i - 1].out_dim != s.in_dim)
      throw ShapeError("layer " + std::to_string(i) + " in_dim " + std::to_string(s.in_dim) +
                       " does not match previous out_dim " + std::to_string(specs[i - 1].out_dim));
    if (s.activation == Activation::Softmax && i + 1 != specs.size())
      throw ShapeError("softmax is only allowed on the final layer");
    if (!(s.dropout_rate >= 0.0 && s.dropout_rate < 1.0))
      throw ShapeError("dropout rate must lie in [0, 1)");
  }
}

/// Xavier-uniform weights in +-sqrt(6 / (in + out)), zero biases, PReLU
/// slopes at 0.25, identity batchnorm.
template <typename Scalar = double>
Network<Scalar> xavier_init(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  validate_specs(specs);
  std::mt19937_64 rng(seed);
  Network<Scalar> net;
  for (const auto& s : specs) {
    Layer<Scalar> layer;
    layer.spec = s;
    const double bound = std::sqrt(6.0 / double(s.in_dim + s.out_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.params.weight.resize(s.out_dim, s.in_dim);
    for (Index c = 0; c < s.in_dim; ++c)
      for (Index r = 0; r < s.out_dim; ++r) layer.params.weight(r, c) = Scalar(dist(rng));
    layer.params.bias = VectorX<Scalar>::Zero(s.out_dim);
    if (s.activation == Activation::PReLU)
      layer.params.prelu_slope = VectorX<Scalar>::Constant(s.out_dim, Scalar(0.25));
    if (s.has_batchnorm) {
      layer.params.bn_scale = VectorX<Scalar>::Ones(s.out_dim);
      layer.params.bn_shift = VectorX<Scalar>::Zero(s.out_dim);
      layer.running_mean = VectorX<Scalar>::Zero(s.out_dim);
      layer.running_var = VectorX<Scalar>::Ones(s.out_dim);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

template <typename Scalar>
bool same_shape(const Network<Scalar>& a, const Network<Scalar>& b) {
  return a.specs() == b.specs();
}

// ---------------------------------------------------------------------------
// Forward

namespace detail {

template <typename Scalar>
void softmax_columns(MatrixX<Scalar>& z) {
  for (Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    const Scalar m = col.maxCoeff();
    col = (col.array() - m).exp().matrix();
    col /= col.sum();
  }
}

}  // namespace detail

/// Runs the network on a batch (one sample per column). Train mode uses batch
/// statistics for batchnorm and draws dropout masks from `rng`; Eval mode is
/// deterministic and ignores `rng`.
template <typename Scalar, typename Rng = std::mt19937_64>
ForwardTrace<Scalar> forward(const Network<Scalar>& net, const MatrixX<Scalar>& input,
                             Rng* rng = nullptr) {
  if (net.layers.empty()) throw ShapeError("forward on empty network");
  if (input.rows() != net.input_dim())
    throw ShapeError("input length " + std::to_string(input.rows()) + " != network input " +
                     std::to_string(net.input_dim()));
  if (!input.allFinite()) throw DataError("non-finite network input");

  ForwardTrace<Scalar> trace;
  trace.mode = net.mode;
  trace.layers.resize(net.layers.size());
  const MatrixX<Scalar>* a = &input;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const auto& layer = net.layers[li];
    const auto& p = layer.params;
    auto& t = trace.layers[li];
    t.input = *a;
    t.linear = p.weight * t.input;
    t.linear.colwise() += p.bias;

    if (layer.spec.has_batchnorm) {
      const Index batch = t.linear.cols();
      VectorX<Scalar> mean, var;
      if (net.mode == Mode::Train) {
        mean = t.linear.rowwise().mean();
        var = ((t.linear.colwise() - mean).array().square().rowwise().sum() / Scalar(batch))
                  .matrix();
        t.batch_mean = mean;
        t.batch_var = var;
      } else {
        mean = layer.running_mean;
        var = layer.running_var;
      }
      t.inv_std = (var.array() + net.bn_epsilon).rsqrt().matrix();
      t.normalized = (t.linear.colwise() - mean).array().colwise() * t.inv_std.array();
      t.pre_activation = (t.normalized.array().colwise() * p.bn_scale.array()).matrix();
      t.pre_activation.colwise() += p.bn_shift;
    } else {
      t.pre_activation = t.linear;
    }

    t.activated = t.pre_activation;
    switch (layer.spec.activation) {
      case Activation::ReLU:
        t.activated = t.activated.cwiseMax(Scalar(0));
        break;
      case Activation::PReLU:
        for (Index c = 0; c < t.activated.cols(); ++c)
          for (Index r = 0; r < t.activated.rows(); ++r)
            if (t.activated(r, c) < Scalar(0)) t.activated(r, c) *= p.prelu_slope(r);
        break;
      case Activation::Tanh:
        t.activated = t.activated.array().tanh().matrix();
        break;
      case Activation::Softmax:
        detail::softmax_columns(t.activated);
        break;
      case Activation::Linear:
        break;
    }

    const double rate = layer.spec.dropout_rate;
    if (net.mode == Mode::Train && rate > 0.0) {
      if (rng == nullptr) throw Error("train-mode dropout requires an rng");
      std::bernoulli_distribution keep(1.0 - rate);
      const Scalar scale = Scalar(1.0 / (1.0 - rate));
      t.dropout_mask.resize(t.activated.rows(), t.activated.cols());
      for (Index c = 0; c < t.dropout_mask.cols(); ++c)
        for (Index r = 0; r < t.dropout_mask.rows(); ++r)
          t.dropout_mask(r, c) = keep(*rng) ? scale : Scalar(0);
      t.output = t.activated.cwiseProduct(t.dropout_mask);
    } else {
      t.output = t.activated;
    }
    a = &t.output;
  }
  return trace;
}

template <typename Scalar, typename Rng = std::mt19937_64>
ForwardTrace<Scalar> forward(const Network<Scalar>& net, const VectorX<Scalar>& input,
                             Rng* rng = nullptr) {
  return forward(net, MatrixX<Scalar>(input), rng);
}

/// Convenience: the output column of a single-sample Eval forward.
template <typename Scalar>
VectorX<Scalar> predict(const Network<Scalar>& net, const VectorX<Scalar>& input) {
  return forward<Scalar, std::mt19937_64>(net, input, nullptr).output().col(0);
}

/// Folds the batch statistics of a Train-mode trace into the running
/// batchnorm statistics (exponential moving average).
template <typename Scalar>
void commit_batchnorm_stats(Network<Scalar>& net, const ForwardTrace<Scalar>& trace) {
  if (trace.mode != Mode::Train) return;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    auto& layer = net.layers[li];
    if (!layer.spec.has_batchnorm) continue;
    const auto& t = trace.layers[li];
    const Scalar m = net.bn_momentum;
    const Index n = t.linear.cols();
    // Unbiased variance for the running estimate.
    const Scalar unbias = n > 1 ? Scalar(n) / Scalar(n - 1) : Scalar(1);
    layer.running_mean = (Scalar(1) - m) * layer.running_mean + m * t.batch_mean;
    layer.running_var = (Scalar(1) - m) * layer.running_var + m * unbias * t.batch_var;
  }
}

// ---------------------------------------------------------------------------
// Backward

template <typename Scalar>
struct Backprop {
  Gradients<Scalar> params;
  MatrixX<Scalar> input;  // d loss / d input, same shape as the forward input
};

/// Reverse pass for an arbitrary upstream gradient. `upstream` has the shape
/// of the network output (one column per sample).
template <typename Scalar>
Backprop<Scalar> backward(const Network<Scalar>& net, const ForwardTrace<Scalar>& trace,
                          const MatrixX<Scalar>& upstream, Seed seed = Seed::Output) {
  if (trace.layers.size() != net.layers.size())
    throw ShapeError("trace does not belong to this network");
  if (upstream.rows() != net.output_dim() || upstream.cols() != trace.batch_size())
    throw ShapeError("upstream gradient shape does not match network output");

  Backprop<Scalar> out;
  out.params.resize(net.layers.size());
  MatrixX<Scalar> grad = upstream;  // gradient w.r.t. current layer output
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& layer = net.layers[k];
    const auto& p = layer.params;
    const auto& t = trace.layers[k];
    auto& g = out.params[k];
    g = LayerParams<Scalar>::zeros_like(p);

    MatrixX<Scalar> d_pre;
    const bool is_last = k + 1 == net.layers.size();
    if (is_last && seed == Seed::Logits) {
      d_pre = grad;
    } else {
      MatrixX<Scalar> d_act = t.dropout_mask.size() ? grad.cwiseProduct(t.dropout_mask) : grad;
      switch (layer.spec.activation) {
        case Activation::ReLU:
          d_pre = (t.pre_activation.array() > Scalar(0)).select(d_act, Scalar(0));
          break;
        case Activation::PReLU:
          d_pre = d_act;
          for (Index c = 0; c < d_pre.cols(); ++c)
            for (Index r = 0; r < d_pre.rows(); ++r)
              if (t.pre_activation(r, c) < Scalar(0)) {
                g.prelu_slope(r) += t.pre_activation(r, c) * d_act(r, c);
                d_pre(r, c) *= p.prelu_slope(r);
              }
          break;
        case Activation::Tanh:
          d_pre = d_act.cwiseProduct(
              (Scalar(1) - t.activated.array().square()).matrix());
          break;
        case Activation::Softmax: {
          d_pre.resize(d_act.rows(), d_act.cols());
          for (Index c = 0; c < d_act.cols(); ++c) {
            const auto pr = t.activated.col(c);
            const Scalar dot = pr.dot(d_act.col(c));
            d_pre.col(c) = pr.cwiseProduct((d_act.col(c).array() - dot).matrix());
          }
          break;
        }
        case Activation::Linear:
          d_pre = d_act;
          break;
      }
    }

    MatrixX<Scalar> d_linear;
    if (layer.spec.has_batchnorm) {
      g.bn_shift = d_pre.rowwise().sum();
      g.bn_scale = d_pre.cwiseProduct(t.normalized).rowwise().sum();
      const MatrixX<Scalar> d_norm = (d_pre.array().colwise() * p.bn_scale.array()).matrix();
      if (trace.mode == Mode::Train) {
        const Scalar n = Scalar(d_norm.cols());
        const VectorX<Scalar> sum_d = d_norm.rowwise().sum();
        const VectorX<Scalar> sum_dx = d_norm.cwiseProduct(t.normalized).rowwise().sum();
        MatrixX<Scalar> centered = (d_norm * n).colwise() - sum_d;
        centered -= (t.normalized.array().colwise() * sum_dx.array()).matrix();
        d_linear = (centered.array().colwise() * (t.inv_std.array() / n)).matrix();
      } else {
        d_linear = (d_norm.array().colwise() * t.inv_std.array()).matrix();
      }
    } else {
      d_linear = std::move(d_pre);
    }

    g.weight = d_linear * t.input.transpose();
    g.bias = d_linear.rowwise().sum();
    grad = p.weight.transpose() * d_linear;
  }
  out.input = std::move(grad);
  return out;
}

/// Loss value averaged over the batch.
template <typename Scalar>
Scalar loss_value(const ForwardTrace<Scalar>& trace, Loss loss, const Target<Scalar>& target) {
  const auto& y = trace.output();
  const Scalar batch = Scalar(y.cols());
  if (loss == Loss::CrossEntropy) {
    if (Index(target.classes.size()) != y.cols())
      throw ShapeError("cross-entropy target count does not match batch");
    Scalar total = 0;
    for (Index c = 0; c < y.cols(); ++c) {
      const Index cls = target.classes[std::size_t(c)];
      if (cls < 0 || cls >= y.rows()) throw ShapeError("class label out of range");
      total -= std::log(std::max(y(cls, c), std::numeric_limits<Scalar>::min()));
    }
    return total / batch;
  }
  if (target.values.rows() != y.rows() || target.values.cols() != y.cols())
    throw ShapeError("MSE target shape does not match output");
  MatrixX<Scalar> diff2 = (y - target.values).array().square().matrix();
  if (target.weights.size()) diff2 = diff2.cwiseProduct(target.weights);
  return diff2.sum() / batch;
}

template <typename Scalar>
struct LossBackprop {
  Scalar loss = 0;
  Backprop<Scalar> grads;
};

template <typename Scalar>
LossBackprop<Scalar> loss_backward(const Network<Scalar>& net, const ForwardTrace<Scalar>& trace,
                                   Loss loss, const Target<Scalar>& target) {
  LossBackprop<Scalar> out;
  out.loss = loss_value(trace, loss, target);
  const auto& y = trace.output();
  const Scalar batch = Scalar(y.cols());
  if (loss == Loss::CrossEntropy) {
    if (net.layers.back().spec.activation != Activation::Softmax)
      throw ShapeError("cross-entropy loss requires a softmax output layer");
    // Softmax + CE collapses to p - onehot at the logits.
    MatrixX<Scalar> d = y;
    for (Index c = 0; c < y.cols(); ++c) d(target.classes[std::size_t(c)], c) -= Scalar(1);
    d /= batch;
    out.grads = backward(net, trace, d, Seed::Logits);
  } else {
    MatrixX<Scalar> d = Scalar(2) * (y - target.values) / batch;
    if (target.weights.size()) d = d.cwiseProduct(target.weights);
    out.grads = backward(net, trace, d, Seed::Output);
  }
  return out;
}

template <typename Scalar>
Gradients<Scalar> grad_params(const Network<Scalar>& net, const ForwardTrace<Scalar>& trace,
                              Loss loss, const Target<Scalar>& target) {
  return loss_backward(net, trace, loss, target).grads.params;
}

/// d loss / d input. Coordinates the caller treats as fixed (for example the
/// mask half of a questionnaire state) still receive a gradient; zero them at
/// the call site.
template <typename Scalar>
MatrixX<Scalar> grad_input(const Network<Scalar>& net, const ForwardTrace<Scalar>& trace,
                           Loss loss, const Target<Scalar>& target) {
  return loss_backward(net, trace, loss, target).grads.input;
}

// ---------------------------------------------------------------------------
// Adam

template <typename Scalar>
AdamState<Scalar> make_adam(const Network<Scalar>& net) {
  AdamState<Scalar> s;
  for (const auto& l : net.layers) {
    s.first_moment.push_back(LayerParams<Scalar>::zeros_like(l.params));
    s.second_moment.push_back(LayerParams<Scalar>::zeros_like(l.params));
  }
  return s;
}

/// One bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(Network<Scalar>& net, const Gradients<Scalar>& grads, AdamState<Scalar>& state,
               Scalar lr) {
  if (grads.size() != net.layers.size() || state.first_moment.size() != net.layers.size())
    throw ShapeError("adam: gradient/state layer count mismatch");
  for (const auto& g : grads) {
    bool finite = true;
    g.each([&](const auto& t) { finite = finite && t.allFinite(); });
    if (!finite) throw DataError("adam: non-finite gradient");
  }
  state.step += 1;
  const Scalar t = Scalar(state.step);
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, t);
  const Scalar b1 = state.beta1, b2 = state.beta2, eps = state.eps_adam;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    auto& p = net.layers[li].params;
    const auto& g = grads[li];
    auto& m = state.first_moment[li];
    auto& v = state.second_moment[li];
    auto step_tensor = [&](auto&& param, auto&& grad, auto&& mom1, auto&& mom2) {
      if (param.size() != grad.size() || param.size() != mom1.size())
        throw ShapeError("adam: tensor shape mismatch");
      mom1 = b1 * mom1 + (Scalar(1) - b1) * grad;
      mom2 = b2 * mom2 + (Scalar(1) - b2) * grad.cwiseAbs2();
      param.array() -= lr * (mom1.array() / c1) / ((mom2.array() / c2).sqrt() + eps);
    };
    step_tensor(p.weight.reshaped(), g.weight.reshaped(), m.weight.reshaped(), v.weight.reshaped());
    step_tensor(p.bias.reshaped(), g.bias.reshaped(), m.bias.reshaped(), v.bias.reshaped());
    step_tensor(p.prelu_slope.reshaped(), g.prelu_slope.reshaped(), m.prelu_slope.reshaped(),
                v.prelu_slope.reshaped());
    step_tensor(p.bn_scale.reshaped(), g.bn_scale.reshaped(), m.bn_scale.reshaped(),
                v.bn_scale.reshaped());
    step_tensor(p.bn_shift.reshaped(), g.bn_shift.reshaped(), m.bn_shift.reshaped(),
                v.bn_shift.reshaped());
  }
}

}  // namespace qadv::nn
