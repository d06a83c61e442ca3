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

#include "qadv/attacks.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>

#include "qadv/error.hpp"
#include "qadv/qmdp.hpp"

namespace qadv::attacks {

namespace {

constexpr std::string_view kMethodNames[] = {"FGSM", "PGD", "BIM", "CW", "DeepFool", "AutoAttack"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_inputs(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                  int target_class) {
  if (x.size() != mask.size()) throw ShapeError("attack: x and mask lengths differ");
  if (guesser.input_dim() != 2 * x.size())
    throw ShapeError("attack: Guesser input " + std::to_string(guesser.input_dim()) +
                     " does not fit " + std::to_string(x.size()) + " features");
  if (guesser.output_dim() != 2) throw ShapeError("attack: Guesser must have two outputs");
  if (guesser.mode != nn::Mode::Eval) throw Error("attack: Guesser must be in Eval mode");
  if (target_class != 0 && target_class != 1) throw Error("attack: target class must be 0 or 1");
}

nn::ForwardTrace<double> run_forward(const Net& guesser, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& mask) {
  return nn::forward<double, mdp::Rng>(guesser, mdp::make_state(x, mask), nullptr);
}

int predicted_class(const Eigen::Vector2d& p) { return p(1) > p(0) ? 1 : 0; }

/// d (Z_a - Z_b) / d x on the mask, plus the logit difference itself.
std::pair<double, Eigen::VectorXd> logit_gap(const Net& guesser, const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& mask, int a, int b) {
  const auto trace = run_forward(guesser, x, mask);
  Eigen::MatrixXd up = Eigen::MatrixXd::Zero(2, 1);
  up(a, 0) += 1.0;
  up(b, 0) -= 1.0;
  const auto bp = nn::backward(guesser, trace, up, nn::Seed::Logits);
  const Eigen::VectorXd g = bp.input.col(0).head(x.size()).cwiseProduct(mask);
  return {trace.logits()(a, 0) - trace.logits()(b, 0), g};
}

/// Copies inactive coordinates from x, applies the medical projection and
/// scores the result.
AttackResult finish(Method method, const Net& guesser, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& mask, Eigen::VectorXd x_adv, int target_class,
                    const Projector* constraints) {
  AttackResult r;
  r.method = method;
  for (Index i = 0; i < x.size(); ++i)
    if (mask(i) == 0.0) x_adv(i) = x(i);
  if (constraints) {
    auto sat = constraints->project(x_adv, x, mask);
    x_adv = std::move(sat.x);
    for (Index i = 0; i < x.size(); ++i)
      if (mask(i) == 0.0) x_adv(i) = x(i);
    r.constraint_report = std::move(sat.report);
  }
  const Eigen::Vector2d p = probabilities(guesser, x_adv, mask);
  r.predicted = predicted_class(p);
  r.target_probability = p(target_class);
  r.success = r.predicted == target_class;
  r.delta = x_adv - x;
  r.x_adv = std::move(x_adv);
  r.l2_norm = r.delta.norm();
  r.linf_norm = r.delta.size() ? r.delta.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

Eigen::VectorXd sign(const Eigen::VectorXd& g) {
  return g.unaryExpr([](double v) { return double((v > 0.0) - (v < 0.0)); });
}

AttackResult iterate(Method method, const Net& guesser, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& mask, int target_class, const AttackConfig& cfg,
                     Norm norm, const Projector* constraints) {
  const auto t0 = Clock::now();
  check_inputs(guesser, x, mask, target_class);
  cfg.validate();
  const double alpha = cfg.alpha();
  Eigen::VectorXd xt = x;
  for (int it = 0; it < cfg.iterations; ++it) {
    const Eigen::VectorXd g = target_loss_grad(guesser, xt, mask, target_class).grad;
    Eigen::VectorXd step;
    if (norm == Norm::Linf) {
      step = -alpha * sign(g);
    } else {
      const double n = g.norm();
      step = n > 0.0 ? Eigen::VectorXd(-alpha * g / n) : Eigen::VectorXd::Zero(x.size());
    }
    xt = x + project_ball(xt + step - x, cfg.epsilon, norm);
    if (constraints) xt = constraints->project(xt, x, mask).x;
  }
  auto r = finish(method, guesser, x, mask, xt, target_class, constraints);
  r.iterations_run = cfg.iterations;
  r.wall_time_seconds = seconds_since(t0);
  return r;
}

}  // namespace

std::string_view to_string(Method m) { return kMethodNames[int(m)]; }

std::string_view to_string(Norm n) { return n == Norm::Linf ? "Linf" : "L2"; }

Method method_from_string(std::string_view s) {
  const std::string l = lower(s);
  if (l == "c&w") return Method::CW;
  for (int i = 0; i < 6; ++i)
    if (l == lower(kMethodNames[i])) return Method(i);
  throw ConfigError("unknown attack method '" + std::string(s) + "'");
}

Norm norm_from_string(std::string_view s) {
  const std::string l = lower(s);
  if (l == "linf") return Norm::Linf;
  if (l == "l2") return Norm::L2;
  throw ConfigError("unknown norm '" + std::string(s) + "' (expected Linf or L2)");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> m{Method::FGSM, Method::PGD,      Method::BIM,
                                     Method::CW,   Method::DeepFool, Method::AutoAttack};
  return m;
}

const std::vector<double>& default_epsilons() {
  static const std::vector<double> e{0.1, 0.3, 0.5, 0.8, 1.0, 1.5, 2.0};
  return e;
}

double AttackConfig::alpha() const {
  return std::isnan(step_alpha) ? epsilon / double(iterations) : step_alpha;
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0)) throw ConfigError("attack: epsilon must be >= 0");
  if (iterations < 1 || cw_iterations < 1 || deepfool_iterations < 1)
    throw ConfigError("attack: iteration counts must be >= 1");
  if (!std::isnan(step_alpha) && !(step_alpha > 0.0))
    throw ConfigError("attack: step_alpha must be positive");
  if (!(cw_kappa >= 0.0)) throw ConfigError("attack: cw_kappa must be >= 0");
  if (!(cw_c > 0.0) || !(cw_lr > 0.0)) throw ConfigError("attack: cw_c and cw_lr must be positive");
  if (!(overshoot >= 0.0)) throw ConfigError("attack: overshoot must be >= 0");
  if (ensemble.empty()) throw ConfigError("attack: ensemble is empty");
  for (auto m : ensemble)
    if (m == Method::AutoAttack) throw ConfigError("attack: ensemble cannot contain AutoAttack");
}

AttackConfig AttackConfig::with(Method m) const {
  AttackConfig c = *this;
  c.method = m;
  return c;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& delta, double epsilon, Norm norm) {
  if (!(epsilon >= 0.0)) throw ConfigError("project_ball: epsilon must be >= 0");
  if (std::isinf(epsilon)) return delta;
  if (norm == Norm::Linf) return delta.cwiseMax(-epsilon).cwiseMin(epsilon);
  const double n = delta.norm();
  if (n <= epsilon) return delta;
  return delta * (epsilon / n);
}

LossGrad target_loss_grad(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                          int target_class) {
  const auto trace = run_forward(guesser, x, mask);
  const auto lb = nn::loss_backward(guesser, trace, nn::Loss::CrossEntropy,
                                    nn::Target<double>::labels({Index(target_class)}));
  return {lb.loss, lb.grads.input.col(0).head(x.size()).cwiseProduct(mask)};
}

Eigen::Vector2d probabilities(const Net& guesser, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& mask) {
  return mdp::guess(guesser, mdp::make_state(x, mask));
}

AttackResult fgsm(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                  int target_class, double epsilon, const Projector* constraints, Norm norm) {
  const auto t0 = Clock::now();
  check_inputs(guesser, x, mask, target_class);
  if (!(epsilon >= 0.0) || std::isinf(epsilon)) throw ConfigError("fgsm: epsilon must be finite and >= 0");
  const Eigen::VectorXd g = target_loss_grad(guesser, x, mask, target_class).grad;
  Eigen::VectorXd delta;
  if (norm == Norm::Linf) {
    delta = -epsilon * sign(g);
  } else {
    const double n = g.norm();
    delta = n > 0.0 ? Eigen::VectorXd(-epsilon * g / n) : Eigen::VectorXd::Zero(x.size());
  }
  auto r = finish(Method::FGSM, guesser, x, mask, x + delta, target_class, constraints);
  r.iterations_run = 1;
  r.wall_time_seconds = seconds_since(t0);
  return r;
}

AttackResult pgd(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                 int target_class, const AttackConfig& cfg, const Projector* constraints) {
  if (std::isinf(cfg.epsilon)) throw ConfigError("pgd: epsilon must be finite");
  return iterate(Method::PGD, guesser, x, mask, target_class, cfg, cfg.norm, constraints);
}

AttackResult bim(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                 int target_class, const AttackConfig& cfg, const Projector* constraints) {
  if (std::isinf(cfg.epsilon)) throw ConfigError("bim: epsilon must be finite");
  return iterate(Method::BIM, guesser, x, mask, target_class, cfg, Norm::Linf, constraints);
}

AttackResult cw(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                int target_class, const AttackConfig& cfg, const Projector* constraints) {
  const auto t0 = Clock::now();
  check_inputs(guesser, x, mask, target_class);
  cfg.validate();
  const int other = 1 - target_class;
  const Index n = x.size();
  static constexpr double kEdge = 1.0 - 1e-6;

  Eigen::VectorXd w = x.unaryExpr([](double v) { return std::atanh(std::clamp(v, -kEdge, kEdge)); });
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n), m2 = Eigen::VectorXd::Zero(n);
  constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;

  auto image = [&](const Eigen::VectorXd& wv) {
    Eigen::VectorXd xa = x;
    for (Index i = 0; i < n; ++i)
      if (mask(i) != 0.0) xa(i) = std::tanh(wv(i));
    return xa;
  };

  std::optional<Eigen::VectorXd> best_success;
  double best_dist = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_any = image(w);
  double best_obj = std::numeric_limits<double>::infinity();
  int it = 0;
  for (;; ++it) {
    const Eigen::VectorXd xa = image(w);
    auto [gap, g_gap] = logit_gap(guesser, xa, mask, other, target_class);
    const double margin = -gap;  // Z_target - Z_other
    const double dist2 = (xa - x).squaredNorm();
    if (margin >= cfg.cw_kappa && margin > 0.0 && dist2 < best_dist) {
      best_dist = dist2;
      best_success = xa;
    }
    const double f = std::max(gap, -cfg.cw_kappa);
    const double obj = dist2 + cfg.cw_c * f;
    if (obj < best_obj) {
      best_obj = obj;
      best_any = xa;
    }
    if (it == cfg.cw_iterations) break;

    Eigen::VectorXd g = 2.0 * (xa - x);
    if (gap > -cfg.cw_kappa) g += cfg.cw_c * g_gap;
    for (Index i = 0; i < n; ++i) {
      if (mask(i) == 0.0) continue;
      const double th = std::tanh(w(i));
      const double gw = g(i) * (1.0 - th * th);
      m1(i) = b1 * m1(i) + (1.0 - b1) * gw;
      m2(i) = b2 * m2(i) + (1.0 - b2) * gw * gw;
      const double mh = m1(i) / (1.0 - std::pow(b1, it + 1));
      const double vh = m2(i) / (1.0 - std::pow(b2, it + 1));
      w(i) -= cfg.cw_lr * mh / (std::sqrt(vh) + adam_eps);
    }
  }
  Eigen::VectorXd xa = best_success ? *best_success : best_any;
  xa = x + project_ball(xa - x, cfg.epsilon, Norm::L2);
  auto r = finish(Method::CW, guesser, x, mask, xa, target_class, constraints);
  r.iterations_run = cfg.cw_iterations;
  r.wall_time_seconds = seconds_since(t0);
  return r;
}

AttackResult deepfool(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                      const AttackConfig& cfg, const Projector* constraints) {
  const auto t0 = Clock::now();
  check_inputs(guesser, x, mask, 0);
  cfg.validate();
  const int clean = predicted_class(probabilities(guesser, x, mask));
  const int other = 1 - clean;
  Eigen::VectorXd r_tot = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd xi = x;
  int it = 0;
  bool aborted = false;
  for (; it < cfg.deepfool_iterations; ++it) {
    if (predicted_class(probabilities(guesser, xi, mask)) != clean) break;
    auto [f, g] = logit_gap(guesser, xi, mask, other, clean);
    const double g2 = g.squaredNorm();
    if (!(g2 > 0.0)) {
      aborted = true;
      break;
    }
    r_tot += (std::abs(f) / g2) * g;
    xi = x + (1.0 + cfg.overshoot) * r_tot;
  }
  Eigen::VectorXd xa = aborted ? x : xi;
  xa = x + project_ball(xa - x, cfg.epsilon, Norm::L2);
  auto r = finish(Method::DeepFool, guesser, x, mask, xa, other, constraints);
  if (aborted) r.success = false;
  r.iterations_run = it;
  r.wall_time_seconds = seconds_since(t0);
  return r;
}

AttackResult autoattack(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                        int target_class, const AttackConfig& cfg, const Projector* constraints) {
  cfg.validate();
  std::optional<AttackResult> best;
  double total_time = 0.0;
  std::string last_error;
  for (Method m : cfg.ensemble) {
    AttackResult r;
    try {
      r = run(guesser, x, mask, target_class, cfg.with(m), constraints);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      last_error = e.what();
      continue;
    }
    total_time += r.wall_time_seconds;
    if (r.success && !r.irreconcilable()) {
      r.wall_time_seconds = total_time;
      return r;
    }
    if (!best || r.target_probability > best->target_probability) best = std::move(r);
  }
  if (!best) throw Error("autoattack: every component failed: " + last_error);
  best->wall_time_seconds = total_time;
  return *best;
}

AttackResult run(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                 int target_class, const AttackConfig& cfg, const Projector* constraints) {
  switch (cfg.method) {
    case Method::FGSM:
      return fgsm(guesser, x, mask, target_class, cfg.epsilon, constraints, cfg.norm);
    case Method::PGD:
      return pgd(guesser, x, mask, target_class, cfg, constraints);
    case Method::BIM:
      return bim(guesser, x, mask, target_class, cfg, constraints);
    case Method::CW:
      return cw(guesser, x, mask, target_class, cfg, constraints);
    case Method::DeepFool:
      return deepfool(guesser, x, mask, cfg, constraints);
    case Method::AutoAttack:
      return autoattack(guesser, x, mask, target_class, cfg, constraints);
  }
  throw ConfigError("unknown attack method");
}

}  // namespace qadv::attacks
