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

#include "qadv/config.hpp"

#include <string>

#include "qadv/error.hpp"

namespace qadv {

namespace nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::PReLU: return "prelu";
    case Activation::Linear: return "linear";
    case Activation::Softmax: return "softmax";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  for (auto a : {Activation::ReLU, Activation::PReLU, Activation::Linear, Activation::Softmax,
                 Activation::Tanh})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown activation '" + s + "'");
}

}  // namespace nn

void ArchConfig::validate() const {
  for (Index h : dqn_hidden)
    if (h <= 0) throw ConfigError("arch.dqn_hidden entries must be positive");
  for (Index h : guesser_hidden)
    if (h <= 0) throw ConfigError("arch.guesser_hidden entries must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("arch.dropout must lie in [0, 1)");
  if (dqn_activation == nn::Activation::Softmax || guesser_activation == nn::Activation::Softmax)
    throw ConfigError("softmax is not a hidden activation");
}

namespace {

std::vector<nn::LayerSpec> hidden_stack(const std::vector<Index>& hidden, Index in,
                                        nn::Activation act, bool bn, double dropout) {
  std::vector<nn::LayerSpec> specs;
  for (Index h : hidden) {
    specs.push_back({in, h, act, bn, dropout});
    in = h;
  }
  return specs;
}

}  // namespace

std::vector<nn::LayerSpec> dqn_specs(const ArchConfig& arch, Index state_dim, Index questions) {
  auto specs = hidden_stack(arch.dqn_hidden, state_dim, arch.dqn_activation, arch.dqn_batchnorm,
                            arch.dropout);
  specs.push_back({specs.empty() ? state_dim : specs.back().out_dim, questions,
                   nn::Activation::Linear, false, 0.0});
  return specs;
}

std::vector<nn::LayerSpec> guesser_specs(const ArchConfig& arch, Index state_dim) {
  auto specs = hidden_stack(arch.guesser_hidden, state_dim, arch.guesser_activation,
                            arch.guesser_batchnorm, arch.dropout);
  specs.push_back({specs.empty() ? state_dim : specs.back().out_dim, 2, nn::Activation::Softmax,
                   false, 0.0});
  return specs;
}

void MDPConfig::validate(Index questions) const {
  if (max_questions < 0) throw ConfigError("mdp.max_questions must be >= 0");
  if (questions >= 0 && max_questions > questions)
    throw ConfigError("mdp.max_questions (" + std::to_string(max_questions) +
                      ") exceeds the number of questions (" + std::to_string(questions) + ")");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("mdp.gamma must lie in (0, 1]");
  if (!(intermediate_reward_sigma >= 0.0))
    throw ConfigError("mdp.intermediate_reward_sigma must be >= 0");
  if (!(early_guess_threshold >= 0.0 && early_guess_threshold <= 1.0))
    throw ConfigError("mdp.early_guess_threshold must lie in [0, 1]");
}

void TrainConfig::validate() const {
  auto positive = [](auto v, const char* name) {
    if (!(v > 0)) throw ConfigError(std::string("train.") + name + " must be positive");
  };
  positive(lr_initial, "lr_initial");
  positive(lr_decay_factor, "lr_decay_factor");
  positive(lr_decay_every, "lr_decay_every");
  positive(lr_min, "lr_min");
  positive(batch_size, "batch_size");
  positive(replay_capacity, "replay_capacity");
  positive(guesser_buffer_capacity, "guesser_buffer_capacity");
  positive(replay_update_every, "replay_update_every");
  positive(target_update_every, "target_update_every");
  positive(alternate_every, "alternate_every");
  positive(max_episodes, "max_episodes");
  positive(val_every, "val_every");
  positive(val_fraction, "val_fraction");
  positive(val_cap, "val_cap");
  if (lr_min > lr_initial) throw ConfigError("train.lr_min exceeds train.lr_initial");
  if (early_stop_patience < 0) throw ConfigError("train.early_stop_patience must be >= 0");
  if (target_freeze_episodes < 0) throw ConfigError("train.target_freeze_episodes must be >= 0");
  if (batch_size > replay_capacity || batch_size > guesser_buffer_capacity)
    throw ConfigError("train.batch_size exceeds a buffer capacity");
  if (!(val_fraction < 1.0)) throw ConfigError("train.val_fraction must be < 1");
  if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start && epsilon_start <= 1.0))
    throw ConfigError("train.epsilon_* must satisfy 0 <= end <= start <= 1");
  if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0))
    throw ConfigError("train.epsilon_decay_fraction must lie in [0, 1]");
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

namespace {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const char* section) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(section) + "." + key + ": wrong type");
  }
}

void read_activation(const nlohmann::json& j, const char* key, nn::Activation& out,
                     const char* section) {
  std::string s;
  read(j, key, s, section);
  if (!s.empty()) out = nn::activation_from_string(s);
}

}  // namespace

void to_json(nlohmann::json& j, const ArchConfig& c) {
  j = {{"dqn_hidden", c.dqn_hidden},
       {"guesser_hidden", c.guesser_hidden},
       {"dqn_activation", nn::to_string(c.dqn_activation)},
       {"guesser_activation", nn::to_string(c.guesser_activation)},
       {"dropout", c.dropout},
       {"dqn_batchnorm", c.dqn_batchnorm},
       {"guesser_batchnorm", c.guesser_batchnorm}};
}

void from_json(const nlohmann::json& j, ArchConfig& c) {
  constexpr const char* s = "arch";
  reject_unknown_keys(j, {"dqn_hidden", "guesser_hidden", "dqn_activation", "guesser_activation",
                          "dropout", "dqn_batchnorm", "guesser_batchnorm"},
                      s);
  read(j, "dqn_hidden", c.dqn_hidden, s);
  read(j, "guesser_hidden", c.guesser_hidden, s);
  read_activation(j, "dqn_activation", c.dqn_activation, s);
  read_activation(j, "guesser_activation", c.guesser_activation, s);
  read(j, "dropout", c.dropout, s);
  read(j, "dqn_batchnorm", c.dqn_batchnorm, s);
  read(j, "guesser_batchnorm", c.guesser_batchnorm, s);
  c.validate();
}

void to_json(nlohmann::json& j, const MDPConfig& c) {
  j = {{"max_questions", c.max_questions},
       {"gamma", c.gamma},
       {"intermediate_reward_sigma", c.intermediate_reward_sigma},
       {"early_guess_threshold", c.early_guess_threshold}};
}

void from_json(const nlohmann::json& j, MDPConfig& c) {
  constexpr const char* s = "mdp";
  reject_unknown_keys(
      j, {"max_questions", "gamma", "intermediate_reward_sigma", "early_guess_threshold"}, s);
  read(j, "max_questions", c.max_questions, s);
  read(j, "gamma", c.gamma, s);
  read(j, "intermediate_reward_sigma", c.intermediate_reward_sigma, s);
  read(j, "early_guess_threshold", c.early_guess_threshold, s);
  c.validate(-1);
}

#define QADV_TRAIN_FIELDS(X)                                                                     \
  X(lr_initial) X(lr_decay_factor) X(lr_decay_every) X(lr_min) X(batch_size) X(replay_capacity) \
  X(guesser_buffer_capacity) X(replay_update_every) X(target_update_every)                      \
  X(target_freeze_episodes) X(alternate_every) X(guesser_first) X(max_episodes) X(val_every)    \
  X(early_stop_patience) X(val_fraction) X(val_cap) X(epsilon_start) X(epsilon_end)             \
  X(epsilon_decay_fraction) X(seed)

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json::object();
#define X(name) j[#name] = c.name;
  QADV_TRAIN_FIELDS(X)
#undef X
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  constexpr const char* s = "train";
#define X(name) #name,
  reject_unknown_keys(j, {QADV_TRAIN_FIELDS(X)}, s);
#undef X
#define X(name) read(j, #name, c.name, s);
  QADV_TRAIN_FIELDS(X)
#undef X
  c.validate();
}

#undef QADV_TRAIN_FIELDS

}  // namespace qadv
