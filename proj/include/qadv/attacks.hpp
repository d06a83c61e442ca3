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

// White-box evasion attacks on the Guesser's decision under a fixed question
// mask. Every attack works on the normalized feature vector x; the Guesser
// sees the state [x * m, m]. Coordinates outside the mask are never touched.
//
// Targeted attacks descend on -log p(target | s). DeepFool is untargeted and
// flips the clean prediction.

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qadv/medconstraints.hpp"
#include "qadv/model.hpp"

namespace qadv::attacks {

enum class Method { FGSM, PGD, BIM, CW, DeepFool, AutoAttack };
enum class Norm { Linf, L2 };

std::string_view to_string(Method m);
std::string_view to_string(Norm n);
/// Case-insensitive; accepts "C&W" and "CW". Throws ConfigError.
Method method_from_string(std::string_view s);
Norm norm_from_string(std::string_view s);

/// The six methods in reporting order.
const std::vector<Method>& all_methods();
/// The default epsilon grid.
const std::vector<double>& default_epsilons();

struct AttackConfig {
  Method method = Method::PGD;
  double epsilon = 0.1;  // infinity disables the budget (C&W, DeepFool)
  Norm norm = Norm::Linf;
  int iterations = 40;
  /// PGD/BIM step; NaN means epsilon / iterations.
  double step_alpha = std::numeric_limits<double>::quiet_NaN();
  int cw_iterations = 100;
  double cw_c = 1e-4;
  double cw_kappa = 0.0;
  double cw_lr = 0.01;
  int deepfool_iterations = 100;
  double overshoot = 0.02;
  std::vector<Method> ensemble{Method::FGSM, Method::PGD, Method::CW};

  double alpha() const;
  /// Throws ConfigError.
  void validate() const;
  /// Same parameters with another method selected.
  AttackConfig with(Method m) const;
};

struct AttackResult {
  Method method = Method::FGSM;  // for AutoAttack: the component returned
  Eigen::VectorXd x_adv;
  Eigen::VectorXd delta;
  bool success = false;
  int predicted = 0;
  double target_probability = 0.0;  // p(adversarial class | s_adv)
  double l2_norm = 0.0;
  double linf_norm = 0.0;
  double wall_time_seconds = 0.0;
  int iterations_run = 0;
  std::optional<constraints::ViolationReport> constraint_report;

  bool irreconcilable() const {
    return constraint_report &&
           constraint_report->resolution == constraints::Resolution::Irreconcilable;
  }
};

/// Clamp (Linf) or rescale (L2) into the epsilon ball.
Eigen::VectorXd project_ball(const Eigen::VectorXd& delta, double epsilon, Norm norm);

/// -log p(target | [x * m, m]) and its gradient with respect to x, zero
/// outside the mask.
struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};
LossGrad target_loss_grad(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                          int target_class);

/// Guesser probabilities for x under the mask.
Eigen::Vector2d probabilities(const Net& guesser, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& mask);

/// `constraints` may be null (no medical projection).
using constraints::Projector;

AttackResult fgsm(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                  int target_class, double epsilon, const Projector* constraints,
                  Norm norm = Norm::Linf);
AttackResult pgd(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                 int target_class, const AttackConfig& cfg, const Projector* constraints);
/// Iterated FGSM: Linf PGD regardless of cfg.norm.
AttackResult bim(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                 int target_class, const AttackConfig& cfg, const Projector* constraints);
AttackResult cw(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                int target_class, const AttackConfig& cfg, const Projector* constraints);
AttackResult deepfool(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                      const AttackConfig& cfg, const Projector* constraints);
/// Runs cfg.ensemble in order; returns the first success that is not
/// irreconcilable, else the component result with the highest adversarial
/// class probability. Wall time is summed over the components run.
AttackResult autoattack(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                        int target_class, const AttackConfig& cfg, const Projector* constraints);

/// Dispatches on cfg.method.
AttackResult run(const Net& guesser, const Eigen::VectorXd& x, const Eigen::VectorXd& mask,
                 int target_class, const AttackConfig& cfg, const Projector* constraints);

}  // namespace qadv::attacks
