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

// The questionnaire MDP. A state is s = [x * m, m] over model columns; the
// mask is kept per question and expanded through the QuestionLayout, so a
// one-hot question reveals all of its columns at once. Unasked entries of x
// are 0, the centre of the normalized range.

#include <Eigen/Dense>

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qadv/model.hpp"

namespace qadv::mdp {

using Rng = std::mt19937_64;

/// concat(x * m, m). Throws ShapeError on length mismatch and DataError on a
/// non-binary mask.
Eigen::VectorXd make_state(const Eigen::VectorXd& x, const Eigen::VectorXd& column_mask);
Eigen::VectorXd make_state(const Eigen::VectorXd& x, const std::vector<bool>& asked,
                           const QuestionLayout& layout);

/// Epsilon-greedy over unasked questions; greedy ties go to the lowest index.
/// The network must be in Eval mode.
Index select_question(const Net& dqn, const Eigen::VectorXd& state,
                      const std::vector<bool>& asked, double epsilon, Rng& rng);

/// Greedy choice from precomputed Q-values.
Index masked_argmax(const Eigen::VectorXd& q, const std::vector<bool>& asked);

/// (p(low risk), p(high risk)) from an Eval-mode Guesser.
Eigen::Vector2d guess(const Net& guesser, const Eigen::VectorXd& state);

enum class Phase { Intermediate, Guess, Terminal };

/// Intermediate: N(0, sigma) draw (sigma is a standard deviation). Guess:
/// p(y_true | s). Terminal: +1 correct, -1 incorrect.
double step_reward(Phase phase, const Eigen::Vector2d& probs, int true_label, double sigma,
                   Rng& rng);

struct Transition {
  Eigen::VectorXd state;
  Index action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
  std::vector<bool> next_asked;
};

struct EpisodeStep {
  Index question = 0;
  std::vector<double> revealed;  // the question's column values
  double reward = 0.0;
};

struct EpisodeTrace {
  std::vector<EpisodeStep> steps;
  Eigen::Vector2d probs{0.5, 0.5};
  int predicted = 0;
  int label = 0;
  std::vector<bool> asked;        // mask at the guess point
  Eigen::VectorXd final_state;

  Eigen::VectorXd column_mask(const QuestionLayout& layout) const {
    return layout.column_mask(asked);
  }
};

struct EpisodeHooks {
  std::function<void(const Transition&)> on_transition;
  /// Called with every state the agent observes before a question.
  std::function<void(const Eigen::VectorXd&)> on_state;
};

/// Asks up to max_questions questions (or fewer with the early-guess
/// threshold), revealing ground-truth values, then guesses. Intermediate
/// transitions carry an Intermediate reward; the transition into the guess
/// carries Guess + Terminal and done = true.
EpisodeTrace run_episode(const ModelBundle& model, const Eigen::VectorXd& features,
                         int true_label, double epsilon, Rng& rng,
                         const EpisodeHooks* hooks = nullptr);

/// Same, with the networks passed explicitly (training uses live copies).
EpisodeTrace run_episode(const Net& dqn, const Net& guesser, const QuestionLayout& layout,
                         const MDPConfig& mdp, const Eigen::VectorXd& features, int true_label,
                         double epsilon, Rng& rng, const EpisodeHooks* hooks = nullptr);

/// One JSON object per line: the steps, then the guess.
std::string to_jsonl(const EpisodeTrace& trace);

}  // namespace qadv::mdp
