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

#include "qadv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "qadv/error.hpp"
#include "qadv/text_format.hpp"

namespace qadv::train {

double lr_at(std::int64_t step, const TrainConfig& cfg) {
  if (step < 0) throw ConfigError("lr_at: negative step");
  const auto k = double(step / cfg.lr_decay_every);
  return std::max(cfg.lr_min, cfg.lr_initial * std::pow(cfg.lr_decay_factor, k));
}

double epsilon_at(std::int64_t episode, const TrainConfig& cfg) {
  const double horizon = cfg.epsilon_decay_fraction * double(cfg.max_episodes);
  if (horizon <= 0.0) return cfg.epsilon_end;
  const double f = std::min(1.0, double(episode) / horizon);
  return cfg.epsilon_start + f * (cfg.epsilon_end - cfg.epsilon_start);
}

namespace {

// Runs `f` with the network temporarily in Train mode.
template <class F>
auto in_train_mode(Net& net, F&& f) {
  net.mode = nn::Mode::Train;
  try {
    auto r = f();
    net.mode = nn::Mode::Eval;
    return r;
  } catch (...) {
    net.mode = nn::Mode::Eval;
    throw;
  }
}

}  // namespace

double replay_update(const ReplayBuffer& buffer, Net& dqn, const Net& target, Adam& adam,
                     Index batch_size, double gamma, double lr, Rng& rng) {
  if (buffer.size() < batch_size)
    throw Error("replay_update: buffer holds " + std::to_string(buffer.size()) +
                " transitions, batch needs " + std::to_string(batch_size));
  const auto batch = buffer.sample(batch_size, rng);
  const Index sdim = dqn.input_dim();
  Eigen::MatrixXd states(sdim, batch_size), next(sdim, batch_size);
  for (Index i = 0; i < batch_size; ++i) {
    states.col(i) = batch[std::size_t(i)]->state;
    next.col(i) = batch[std::size_t(i)]->next_state;
  }
  if (target.mode != nn::Mode::Eval) throw Error("replay_update: target network must be in Eval mode");
  const Eigen::MatrixXd q_next = nn::forward<double, Rng>(target, next, nullptr).output();

  return in_train_mode(dqn, [&] {
    auto trace = nn::forward(dqn, states, &rng);
    const Eigen::MatrixXd& q = trace.output();
    Eigen::MatrixXd values = q;
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    for (Index i = 0; i < batch_size; ++i) {
      const auto& t = *batch[std::size_t(i)];
      double y = t.reward;
      if (!t.done) {
        double best = -std::numeric_limits<double>::infinity();
        for (Index a = 0; a < q_next.rows(); ++a)
          if (!t.next_asked[std::size_t(a)]) best = std::max(best, q_next(a, i));
        if (std::isfinite(best)) y += gamma * best;
      }
      values(t.action, i) = y;
      weights(t.action, i) = 1.0;
    }
    auto lb = nn::loss_backward(dqn, trace, nn::Loss::MSE,
                                nn::Target<double>::regression(values, weights));
    nn::adam_step(dqn, lb.grads.params, adam, lr);
    nn::commit_batchnorm_stats(dqn, trace);
    return lb.loss;
  });
}

double guesser_update(const GuesserBuffer& buffer, Net& guesser, Adam& adam, Index batch_size,
                      double lr, Rng& rng) {
  const auto batch = buffer.sample(batch_size, rng);
  Eigen::MatrixXd states(guesser.input_dim(), batch_size);
  std::vector<Index> labels;
  for (Index i = 0; i < batch_size; ++i) {
    states.col(i) = batch[std::size_t(i)]->state;
    labels.push_back(batch[std::size_t(i)]->label);
  }
  return in_train_mode(guesser, [&] {
    auto trace = nn::forward(guesser, states, &rng);
    auto lb = nn::loss_backward(guesser, trace, nn::Loss::CrossEntropy,
                                nn::Target<double>::labels(labels));
    nn::adam_step(guesser, lb.grads.params, adam, lr);
    nn::commit_batchnorm_stats(guesser, trace);
    return lb.loss;
  });
}

void update_target(const Net& dqn, Net& target) {
  if (!nn::same_shape(dqn, target)) throw ShapeError("update_target: architectures differ");
  target = dqn;
  target.mode = nn::Mode::Eval;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Average ranks over ties.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double r = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("auc: labels must be 0 or 1");
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double neg = double(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw DataError("auc: both classes must be present");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Evaluation evaluate(const Net& dqn, const Net& guesser, const QuestionLayout& layout,
                    const MDPConfig& mdp, const data::Dataset& rows, std::uint64_t seed) {
  Evaluation ev;
  Rng rng(seed);
  Index correct = 0;
  for (Index r = 0; r < rows.rows(); ++r) {
    const auto t = mdp::run_episode(dqn, guesser, layout, mdp, rows.x.row(r).transpose(),
                                    rows.labels[std::size_t(r)], 0.0, rng);
    ev.scores.push_back(t.probs(1));
    correct += (t.probs(1) >= 0.5 ? 1 : 0) == rows.labels[std::size_t(r)] ? 1 : 0;
  }
  ev.accuracy = rows.rows() ? double(correct) / double(rows.rows()) : 0.0;
  ev.auc = auc(ev.scores, rows.labels);
  return ev;
}

TrainResult train(const data::Dataset& train_set, const ArchConfig& arch, const MDPConfig& mdp,
                  const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (train_set.rows() < 2) throw DataError("train: need at least two rows");
  {
    const std::set<int> classes(train_set.labels.begin(), train_set.labels.end());
    if (classes != std::set<int>{0, 1}) throw DataError("train: dataset must contain both labels");
  }

  // Hold out the validation rows.
  Rng split_rng(cfg.seed ^ 0x5eedULL);
  std::vector<Index> order(std::size_t(train_set.rows()));
  std::iota(order.begin(), order.end(), Index(0));
  std::shuffle(order.begin(), order.end(), split_rng);
  const Index n_val = std::clamp<Index>(
      Index(std::llround(cfg.val_fraction * double(train_set.rows()))), 1,
      std::min<Index>(cfg.val_cap, train_set.rows() - 1));
  std::vector<Index> val_rows(order.begin(), order.begin() + n_val);
  std::vector<Index> fit_rows(order.begin() + n_val, order.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(fit_rows.begin(), fit_rows.end());
  const data::Dataset val = train_set.subset(val_rows);
  {
    const std::set<int> classes(val.labels.begin(), val.labels.end());
    if (classes.size() < 2) throw DataError("train: validation split holds a single class");
  }

  TrainResult result;
  ModelBundle& model = result.model;
  Rng rng(cfg.seed);
  std::int64_t episode = 0, env_steps = 0;
  Index validations = 0, since_best = 0;
  Net dqn, guesser, target;
  Adam dqn_adam, guesser_adam;

  if (options.resume && options.resume->checkpoint) {
    model = *options.resume;
    model.train = cfg;
    const auto& cp = *model.checkpoint;
    episode = cp.episode;
    env_steps = cp.env_steps;
    validations = cp.validations;
    since_best = cp.since_best;
    dqn = cp.dqn;
    guesser = cp.guesser;
    target = cp.target;
    dqn_adam = cp.dqn_adam;
    guesser_adam = cp.guesser_adam;
    std::istringstream(cp.rng_state) >> rng;
    if (model.state_dim() != 2 * train_set.cols())
      throw ShapeError("train: checkpoint does not match the dataset columns");
  } else {
    model = make_bundle(train_set.schema, arch, mdp, cfg, cfg.seed);
    dqn = model.dqn;
    guesser = model.guesser;
    target = dqn;
    dqn_adam = nn::make_adam(dqn);
    guesser_adam = nn::make_adam(guesser);
  }
  dqn.mode = guesser.mode = target.mode = nn::Mode::Eval;

  ReplayBuffer replay(cfg.replay_capacity);
  GuesserBuffer samples(cfg.guesser_buffer_capacity);
  bool dqn_phase = false;
  int label = 0;

  mdp::EpisodeHooks hooks;
  hooks.on_state = [&](const Eigen::VectorXd& s) { samples.push({s, label}); };
  hooks.on_transition = [&](const Transition& t) {
    replay.push(t);
    ++env_steps;
    if (env_steps % cfg.replay_update_every != 0) return;
    if (dqn_phase && replay.size() >= cfg.batch_size) {
      replay_update(replay, dqn, target, dqn_adam, cfg.batch_size, model.mdp.gamma,
                    lr_at(dqn_adam.step, cfg), rng);
    } else if (!dqn_phase && samples.size() >= cfg.batch_size) {
      guesser_update(samples, guesser, guesser_adam, cfg.batch_size,
                     lr_at(guesser_adam.step, cfg), rng);
    }
  };

  auto validate = [&] {
    const auto ev = evaluate(dqn, guesser, model.layout, model.mdp, val, cfg.seed + 1);
    ++validations;
    HistoryRow row{episode, ev.auc, ev.accuracy,
                   lr_at(dqn_phase ? dqn_adam.step : guesser_adam.step, cfg)};
    result.history.push_back(row);
    if (options.on_validation) options.on_validation(row);
    if (ev.auc > model.best_auc) {
      model.best_auc = ev.auc;
      model.best_episode = episode;
      model.dqn = dqn;
      model.guesser = guesser;
      since_best = 0;
    } else {
      ++since_best;
    }
  };

  std::uniform_int_distribution<std::size_t> pick_row(0, fit_rows.size() - 1);
  bool validated_last = false;
  while (episode < cfg.max_episodes) {
    const bool second_block = (episode / cfg.alternate_every) % 2 == 1;
    dqn_phase = cfg.guesser_first ? second_block : !second_block;
    const double eps = epsilon_at(episode, cfg);
    const Index r = fit_rows[pick_row(rng)];
    label = train_set.labels[std::size_t(r)];
    mdp::run_episode(dqn, guesser, model.layout, model.mdp, train_set.x.row(r).transpose(), label,
                     eps, rng, &hooks);
    ++episode;
    if (episode > cfg.target_freeze_episodes && episode % cfg.target_update_every == 0)
      update_target(dqn, target);
    validated_last = false;
    if (episode % cfg.val_every == 0) {
      validate();
      validated_last = true;
      if (since_best >= cfg.early_stop_patience) {
        result.early_stopped = true;
        break;
      }
    }
  }
  if (!validated_last && episode > 0) validate();

  model.episodes_run = episode;
  TrainerCheckpoint cp;
  cp.episode = episode;
  cp.env_steps = env_steps;
  cp.validations = validations;
  cp.since_best = since_best;
  cp.dqn = dqn;
  cp.guesser = guesser;
  cp.target = target;
  cp.dqn_adam = dqn_adam;
  cp.guesser_adam = guesser_adam;
  std::ostringstream rs;
  rs << rng;
  cp.rng_state = rs.str();
  model.checkpoint = std::move(cp);
  return result;
}

std::string history_csv(const std::vector<HistoryRow>& history) {
  std::string out = "episode,auc,accuracy,lr\n";
  for (const auto& h : history)
    out += std::to_string(h.episode) + "," + text::format_double(h.auc) + "," +
           text::format_double(h.accuracy) + "," + text::format_double(h.lr) + "\n";
  return out;
}

}  // namespace qadv::train
