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

// Plain configuration records for the networks, the questionnaire MDP and
// training, with strict JSON conversion (unknown keys are a ConfigError).

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "qadv/nncore.hpp"

namespace qadv {

using Eigen::Index;

struct ArchConfig {
  std::vector<Index> dqn_hidden{128, 128};
  std::vector<Index> guesser_hidden{256, 256, 128};
  nn::Activation dqn_activation = nn::Activation::ReLU;
  nn::Activation guesser_activation = nn::Activation::PReLU;
  double dropout = 0.1;
  bool dqn_batchnorm = false;
  bool guesser_batchnorm = true;

  void validate() const;
};

/// DQN: 2C -> hidden -> questions (linear). Guesser: 2C -> hidden -> 2 (softmax).
std::vector<nn::LayerSpec> dqn_specs(const ArchConfig& arch, Index state_dim, Index questions);
std::vector<nn::LayerSpec> guesser_specs(const ArchConfig& arch, Index state_dim);

struct MDPConfig {
  Index max_questions = 8;
  double gamma = 0.9;
  double intermediate_reward_sigma = 0.01;
  /// Guess early once max class probability reaches this; 0 disables.
  double early_guess_threshold = 0.0;

  void validate(Index questions) const;
};

struct TrainConfig {
  double lr_initial = 1e-4;
  double lr_decay_factor = 0.1;
  std::int64_t lr_decay_every = 17500;
  double lr_min = 1e-6;
  Index batch_size = 32;
  Index replay_capacity = 1000;
  Index guesser_buffer_capacity = 1000;
  Index replay_update_every = 4;
  Index target_update_every = 10;
  Index target_freeze_episodes = 100;
  Index alternate_every = 1000;
  bool guesser_first = true;
  Index max_episodes = 50000;
  Index val_every = 1000;
  Index early_stop_patience = 50;
  double val_fraction = 0.05;
  Index val_cap = 20000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const ArchConfig& c);
void from_json(const nlohmann::json& j, ArchConfig& c);
void to_json(nlohmann::json& j, const MDPConfig& c);
void from_json(const nlohmann::json& j, MDPConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Throws ConfigError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const char* section);

}  // namespace qadv
