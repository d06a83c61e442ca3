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

// Alternating DQN / Guesser training with experience replay, a hard-copied
// target network, a step-decayed learning rate and AUC early stopping.

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qadv/dataio.hpp"
#include "qadv/qmdp.hpp"

namespace qadv::train {

using mdp::Rng;
using mdp::Transition;

/// max(lr_min, lr_initial * decay^floor(step / decay_every)).
double lr_at(std::int64_t step, const TrainConfig& cfg);

/// Linear decay from epsilon_start to epsilon_end over the first
/// epsilon_decay_fraction of max_episodes.
double epsilon_at(std::int64_t episode, const TrainConfig& cfg);

/// Fixed-capacity FIFO ring.
template <typename T>
class Ring {
 public:
  explicit Ring(Index capacity) : capacity_(capacity) {
    if (capacity <= 0) throw ConfigError("buffer capacity must be positive");
  }
  void push(T item) {
    if (Index(items_.size()) == capacity_) items_.pop_front();
    items_.push_back(std::move(item));
  }
  Index size() const { return Index(items_.size()); }
  Index capacity() const { return capacity_; }
  /// Oldest first.
  const T& operator[](Index i) const { return items_[std::size_t(i)]; }
  /// Uniform sample with replacement.
  std::vector<const T*> sample(Index n, Rng& rng) const {
    if (size() < n) throw Error("buffer holds " + std::to_string(size()) + " items, need " +
                                std::to_string(n));
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<const T*> out;
    out.reserve(std::size_t(n));
    for (Index i = 0; i < n; ++i) out.push_back(&items_[pick(rng)]);
    return out;
  }

 private:
  Index capacity_;
  std::deque<T> items_;
};

using ReplayBuffer = Ring<Transition>;

struct LabeledState {
  Eigen::VectorXd state;
  int label = 0;
};
using GuesserBuffer = Ring<LabeledState>;

/// One Adam step on the TD error of a uniform minibatch. Bootstraps with the
/// max target Q over questions still unasked in the next state. Returns the
/// minibatch loss before the step.
double replay_update(const ReplayBuffer& buffer, Net& dqn, const Net& target, Adam& adam,
                     Index batch_size, double gamma, double lr, Rng& rng);

/// One Adam step of cross-entropy on a minibatch of (state, label) pairs.
double guesser_update(const GuesserBuffer& buffer, Net& guesser, Adam& adam, Index batch_size,
                      double lr, Rng& rng);

/// Hard copy. Throws ShapeError when architectures differ.
void update_target(const Net& dqn, Net& target);

/// Mann-Whitney AUC; tied scores count one half. Throws DataError when only
/// one class is present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct Evaluation {
  double auc = 0.0;
  double accuracy = 0.0;
  std::vector<double> scores;  // p(high risk)
};

/// Greedy episodes over every row.
Evaluation evaluate(const Net& dqn, const Net& guesser, const QuestionLayout& layout,
                    const MDPConfig& mdp, const data::Dataset& rows, std::uint64_t seed);

struct HistoryRow {
  std::int64_t episode = 0;
  double auc = 0.0;
  double accuracy = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ModelBundle model;  // best-AUC networks plus a resumable checkpoint
  std::vector<HistoryRow> history;
  bool early_stopped = false;
};

struct TrainOptions {
  std::function<void(const HistoryRow&)> on_validation;
  /// Continue from this bundle's checkpoint instead of a fresh init.
  const ModelBundle* resume = nullptr;
};

/// `train_set` must carry both labels. A validation subset of val_fraction
/// (at most val_cap rows) is held out from it.
TrainResult train(const data::Dataset& train_set, const ArchConfig& arch, const MDPConfig& mdp,
                  const TrainConfig& cfg, const TrainOptions& options = {});

std::string history_csv(const std::vector<HistoryRow>& history);

}  // namespace qadv::train
