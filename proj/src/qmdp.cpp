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

#include "qadv/qmdp.hpp"

#include "qadv/error.hpp"

namespace qadv::mdp {

Eigen::VectorXd make_state(const Eigen::VectorXd& x, const Eigen::VectorXd& column_mask) {
  if (x.size() != column_mask.size())
    throw ShapeError("make_state: feature length " + std::to_string(x.size()) + " != mask length " +
                     std::to_string(column_mask.size()));
  if (((column_mask.array() != 0.0) && (column_mask.array() != 1.0)).any())
    throw DataError("make_state: mask entries must be 0 or 1");
  Eigen::VectorXd s(2 * x.size());
  s << x.cwiseProduct(column_mask), column_mask;
  return s;
}

Eigen::VectorXd make_state(const Eigen::VectorXd& x, const std::vector<bool>& asked,
                           const QuestionLayout& layout) {
  if (Index(asked.size()) != layout.questions())
    throw ShapeError("make_state: mask has " + std::to_string(asked.size()) + " questions, layout " +
                     std::to_string(layout.questions()));
  return make_state(x, layout.column_mask(asked));
}

namespace {

void require_eval(const Net& net, const char* what) {
  if (net.mode != nn::Mode::Eval) throw Error(std::string(what) + " must be in Eval mode");
}

}  // namespace

Index masked_argmax(const Eigen::VectorXd& q, const std::vector<bool>& asked) {
  Index best = -1;
  for (Index i = 0; i < q.size(); ++i)
    if (!asked[std::size_t(i)] && (best < 0 || q(i) > q(best))) best = i;
  if (best < 0) throw Error("select_question: every question has been asked");
  return best;
}

Index select_question(const Net& dqn, const Eigen::VectorXd& state,
                      const std::vector<bool>& asked, double epsilon, Rng& rng) {
  if (Index(asked.size()) != dqn.output_dim())
    throw ShapeError("select_question: mask length does not match DQN output");
  std::vector<Index> open;
  for (std::size_t i = 0; i < asked.size(); ++i)
    if (!asked[i]) open.push_back(Index(i));
  if (open.empty()) throw Error("select_question: every question has been asked");
  if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon)
    return open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
  require_eval(dqn, "DQN");
  return masked_argmax(nn::predict(dqn, state), asked);
}

Eigen::Vector2d guess(const Net& guesser, const Eigen::VectorXd& state) {
  require_eval(guesser, "Guesser");
  if (guesser.output_dim() != 2) throw ShapeError("guess: Guesser must have two outputs");
  if (state.size() != guesser.input_dim())
    throw ShapeError("guess: state length " + std::to_string(state.size()) +
                     " != Guesser input " + std::to_string(guesser.input_dim()));
  return nn::predict(guesser, state);
}

double step_reward(Phase phase, const Eigen::Vector2d& probs, int true_label, double sigma,
                   Rng& rng) {
  switch (phase) {
    case Phase::Intermediate:
      return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0;
    case Phase::Guess:
      return probs(true_label);
    case Phase::Terminal: {
      const int predicted = probs(1) > probs(0) ? 1 : 0;
      return predicted == true_label ? 1.0 : -1.0;
    }
  }
  return 0.0;
}

EpisodeTrace run_episode(const ModelBundle& model, const Eigen::VectorXd& features, int true_label,
                         double epsilon, Rng& rng, const EpisodeHooks* hooks) {
  return run_episode(model.dqn, model.guesser, model.layout, model.mdp, features, true_label,
                     epsilon, rng, hooks);
}

EpisodeTrace run_episode(const Net& dqn, const Net& guesser, const QuestionLayout& layout,
                         const MDPConfig& mdp, const Eigen::VectorXd& features, int true_label,
                         double epsilon, Rng& rng, const EpisodeHooks* hooks) {
  if (features.size() != layout.columns)
    throw ShapeError("run_episode: feature length " + std::to_string(features.size()) +
                     " != layout columns " + std::to_string(layout.columns));
  if (true_label != 0 && true_label != 1) throw DataError("run_episode: label must be 0 or 1");
  EpisodeTrace trace;
  trace.label = true_label;
  trace.asked.assign(std::size_t(layout.questions()), false);
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(layout.columns);
  Eigen::VectorXd state = make_state(features, mask);

  const Index budget = std::min(mdp.max_questions, layout.questions());
  for (Index t = 0; t < budget; ++t) {
    if (hooks && hooks->on_state) hooks->on_state(state);
    const Index q = select_question(dqn, state, trace.asked, epsilon, rng);
    trace.asked[std::size_t(q)] = true;
    const Index off = layout.offset[std::size_t(q)], w = layout.width[std::size_t(q)];
    mask.segment(off, w).setOnes();
    Eigen::VectorXd next = make_state(features, mask);

    EpisodeStep step;
    step.question = q;
    for (Index c = off; c < off + w; ++c) step.revealed.push_back(features(c));

    bool done = t + 1 == budget;
    Eigen::Vector2d probs;
    if (!done && mdp.early_guess_threshold > 0.0) {
      probs = guess(guesser, next);
      done = probs.maxCoeff() >= mdp.early_guess_threshold;
    }
    if (done) {
      if (mdp.early_guess_threshold <= 0.0) probs = guess(guesser, next);
      step.reward = step_reward(Phase::Guess, probs, true_label, 0.0, rng) +
                    step_reward(Phase::Terminal, probs, true_label, 0.0, rng);
    } else {
      step.reward = step_reward(Phase::Intermediate, probs, true_label,
                                mdp.intermediate_reward_sigma, rng);
    }
    if (hooks && hooks->on_transition)
      hooks->on_transition({state, q, step.reward, next, done, trace.asked});
    trace.steps.push_back(std::move(step));
    state = std::move(next);
    if (done) break;
  }
  if (hooks && hooks->on_state) hooks->on_state(state);
  trace.probs = guess(guesser, state);
  trace.predicted = trace.probs(1) > trace.probs(0) ? 1 : 0;
  trace.final_state = state;
  return trace;
}

std::string to_jsonl(const EpisodeTrace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    out += nlohmann::json{{"step", i}, {"question", s.question}, {"revealed", s.revealed},
                          {"reward", s.reward}}
               .dump() +
           "\n";
  }
  out += nlohmann::json{{"guess", {trace.probs(0), trace.probs(1)}},
                        {"predicted", trace.predicted},
                        {"label", trace.label}}
             .dump() +
         "\n";
  return out;
}

}  // namespace qadv::mdp
