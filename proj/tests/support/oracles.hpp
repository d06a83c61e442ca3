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

// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls the code under test except to
// evaluate a network forward.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "qadv/model.hpp"
#include "qadv/nncore.hpp"

namespace qadv::oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Finite differences

/// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true value
/// is essentially zero from dominating through rounding noise.
inline double rel_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central difference of a scalar function over every entry of `x`.
inline VectorXd central_difference(const std::function<double(const VectorXd&)>& f,
                                   const VectorXd& x, double h = 1e-6) {
  VectorXd g(x.size());
  VectorXd xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double keep = xp(i);
    xp(i) = keep + h;
    const double up = f(xp);
    xp(i) = keep - h;
    const double down = f(xp);
    xp(i) = keep;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

/// A random small network (input <= 16) mixing every activation, batchnorm
/// and softmax or linear heads.
struct RandomNet {
  nn::Network<double> net;
  nn::Loss loss = nn::Loss::MSE;
};

inline RandomNet random_network(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(2, 16), depth(1, 3), act(0, 3), coin(0, 1);
  const nn::Activation hidden_acts[] = {nn::Activation::ReLU, nn::Activation::PReLU,
                                        nn::Activation::Tanh, nn::Activation::Linear};
  std::vector<nn::LayerSpec> specs;
  Index in = dim(rng);
  const int layers = depth(rng);
  for (int l = 0; l + 1 < layers; ++l) {
    const Index out = dim(rng);
    specs.push_back({in, out, hidden_acts[act(rng)], coin(rng) == 1, 0.0});
    in = out;
  }
  const bool classify = coin(rng) == 1;
  specs.push_back({in, classify ? 2 : dim(rng),
                   classify ? nn::Activation::Softmax : nn::Activation::Linear, false, 0.0});
  RandomNet r{nn::xavier_init<double>(specs, rng()),
              classify ? nn::Loss::CrossEntropy : nn::Loss::MSE};
  // Move parameters off their initial values so batchnorm and PReLU
  // gradients are exercised away from the identity.
  std::normal_distribution<double> jitter(0.0, 0.2);
  for (auto& layer : r.net.layers) {
    layer.params.bias = layer.params.bias.unaryExpr([&](double v) { return v + jitter(rng); });
    if (layer.params.prelu_slope.size())
      layer.params.prelu_slope =
          layer.params.prelu_slope.unaryExpr([&](double v) { return v + jitter(rng); });
    if (layer.params.bn_scale.size()) {
      layer.params.bn_scale = layer.params.bn_scale.unaryExpr([&](double v) { return v + jitter(rng); });
      layer.params.bn_shift = layer.params.bn_shift.unaryExpr([&](double v) { return v + jitter(rng); });
      layer.running_mean = layer.running_mean.unaryExpr([&](double v) { return v + jitter(rng); });
      layer.running_var = layer.running_var.unaryExpr([&](double v) { return v + std::abs(jitter(rng)); });
    }
  }
  return r;
}

inline nn::Target<double> random_target(const nn::Network<double>& net, nn::Loss loss, Index batch,
                                        std::mt19937_64& rng) {
  if (loss == nn::Loss::CrossEntropy) {
    std::uniform_int_distribution<Index> cls(0, net.output_dim() - 1);
    std::vector<Index> labels;
    for (Index i = 0; i < batch; ++i) labels.push_back(cls(rng));
    return nn::Target<double>::labels(labels);
  }
  std::normal_distribution<double> v(0.0, 1.0);
  MatrixXd values = MatrixXd::NullaryExpr(net.output_dim(), batch, [&] { return v(rng); });
  return nn::Target<double>::regression(values);
}

/// Maximum relative error of grad_input and grad_params against central
/// differences of the batch loss.
struct GradCheck {
  double input = 0.0;
  double params = 0.0;
};

inline GradCheck check_gradients(const nn::Network<double>& net, nn::Loss loss,
                                 const MatrixXd& input, const nn::Target<double>& target,
                                 double h = 1e-6) {
  auto loss_at = [&](const nn::Network<double>& n, const MatrixXd& in) {
    const auto trace = nn::forward<double, std::mt19937_64>(n, in, nullptr);
    return nn::loss_value(trace, loss, target);
  };
  const auto trace = nn::forward<double, std::mt19937_64>(net, input, nullptr);
  const auto analytic = nn::loss_backward(net, trace, loss, target);

  GradCheck out;
  const VectorXd flat_in = input.reshaped();
  const VectorXd num_in = central_difference(
      [&](const VectorXd& v) { return loss_at(net, v.reshaped(input.rows(), input.cols())); },
      flat_in, h);
  const VectorXd ana_in = analytic.grads.input.reshaped();
  for (Index i = 0; i < num_in.size(); ++i)
    out.input = std::max(out.input, rel_error(ana_in(i), num_in(i)));

  nn::Network<double> probe = net;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& params = probe.layers[l].params;
    const auto& grads = analytic.grads.params[l];
    // Walk each tensor of the layer alongside its gradient.
    std::vector<std::pair<double*, const double*>> entries;
    auto collect = [&](auto& p, const auto& g) {
      for (Index i = 0; i < p.size(); ++i) entries.emplace_back(&p.data()[i], &g.data()[i]);
    };
    collect(params.weight, grads.weight);
    collect(params.bias, grads.bias);
    collect(params.prelu_slope, grads.prelu_slope);
    collect(params.bn_scale, grads.bn_scale);
    collect(params.bn_shift, grads.bn_shift);
    for (auto [p, g] : entries) {
      const double keep = *p;
      *p = keep + h;
      const double up = loss_at(probe, input);
      *p = keep - h;
      const double down = loss_at(probe, input);
      *p = keep;
      out.params = std::max(out.params, rel_error(*g, (up - down) / (2.0 * h)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force distribution functions (composite Simpson)

template <typename F>
double simpson(F&& f, double a, double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// F(d1, d2) CDF by integrating the density; d1 >= 2 keeps it bounded at 0.
inline double f_cdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  const double lognorm = std::lgamma((d1 + d2) / 2) - std::lgamma(d1 / 2) - std::lgamma(d2 / 2) +
                         (d1 / 2) * std::log(d1 / d2);
  auto density = [&](double t) {
    if (t <= 0.0) return d1 == 2.0 ? std::exp(lognorm) : 0.0;
    return std::exp(lognorm + (d1 / 2 - 1) * std::log(t) -
                    ((d1 + d2) / 2) * std::log1p(d1 * t / d2));
  };
  return simpson(density, 0.0, x, 20000);
}

/// Student t CDF by integrating the density from 0.
inline double t_cdf(double x, double df) {
  const double lognorm = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto density = [&](double t) {
    return std::exp(lognorm - ((df + 1) / 2) * std::log1p(t * t / df));
  };
  const double half = simpson(density, 0.0, std::abs(x), 20000);
  return x >= 0 ? 0.5 + half : 0.5 - half;
}

/// P(range of k standard normals <= w).
inline double range_cdf(double w, double k) {
  if (w <= 0.0) return 0.0;
  auto integrand = [&](double z) {
    const double d = Phi(z + w) - Phi(z);
    return d > 0.0 ? k * phi(z) * std::pow(d, k - 1) : 0.0;
  };
  return simpson(integrand, -12.0, 12.0, 2400);
}

/// Studentized range CDF: E over s ~ sqrt(chi2_df / df) of range_cdf(q s).
inline double ptukey(double q, double k, double df) {
  const double lognorm = (df / 2) * std::log(df) - std::lgamma(df / 2) - (df / 2 - 1) * std::log(2.0);
  auto s_density = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::exp(lognorm + (df - 1) * std::log(s) - df * s * s / 2);
  };
  const double hi = 1.0 + 12.0 / std::sqrt(df);
  const double lo = std::max(0.0, 1.0 - 12.0 / std::sqrt(df));
  return simpson([&](double s) { return s_density(s) * range_cdf(q * s, k); }, lo, hi, 1200);
}

// ---------------------------------------------------------------------------
// Linear binary classifiers

/// Guesser over states [x * m, m] whose class-1 logit is w . (x * m) + b and
/// whose class-0 logit is 0, so f(x) = z1 - z0 is affine in the active x.
inline nn::Network<double> linear_guesser(const VectorXd& w, double b) {
  const Index c = w.size();
  auto net = nn::xavier_init<double>({{2 * c, 2, nn::Activation::Softmax, false, 0.0}}, 0);
  net.layers[0].params.weight.setZero();
  net.layers[0].params.weight.row(1).head(c) = w.transpose();
  net.layers[0].params.bias << 0.0, b;
  return net;
}

/// f(x) = w . (x * m) + b.
inline double linear_logit_gap(const VectorXd& w, double b, const VectorXd& x, const VectorXd& m) {
  return w.dot(x.cwiseProduct(m)) + b;
}

/// Minimal L2 distance from x to the decision boundary over active
/// coordinates.
inline double linear_boundary_distance(const VectorXd& w, double b, const VectorXd& x,
                                       const VectorXd& m) {
  return std::abs(linear_logit_gap(w, b, x, m)) / w.cwiseProduct(m).norm();
}

/// A random linear problem whose clean point sits at L2 distance in
/// [0.05, 0.3] from the boundary over the active coordinates.
struct LinearCase {
  VectorXd w, x, m;
  double b = 0.0;
};

inline LinearCase linear_case(std::mt19937_64& gen, Index c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), small(-0.3, 0.3), dist(0.05, 0.3);
  LinearCase lc;
  lc.w = VectorXd::NullaryExpr(c, [&] { return u(gen); });
  lc.x = VectorXd::NullaryExpr(c, [&] { return small(gen); });
  lc.m = VectorXd::Ones(c);
  for (Index i = 0; i < c; ++i)
    if (gen() % 3 == 0) lc.m(i) = 0.0;
  lc.m(0) = 1.0;
  const double wm = lc.w.cwiseProduct(lc.m).norm();
  const double side = gen() % 2 ? 1.0 : -1.0;
  lc.b = side * dist(gen) * wm - lc.w.dot(lc.x.cwiseProduct(lc.m));
  return lc;
}

inline int clean_class(const LinearCase& lc) {
  return linear_logit_gap(lc.w, lc.b, lc.x, lc.m) > 0.0 ? 1 : 0;
}

}  // namespace qadv::oracle
