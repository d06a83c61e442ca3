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

// ModelBundle: DQN + Guesser with everything needed to reuse them (schema
// after preprocessing, imputer fills, configs), serialized as one JSON file.
// Doubles are written in shortest round-trip form, so save/load is bit-exact.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qadv/config.hpp"
#include "qadv/nncore.hpp"
#include "qadv/schema.hpp"

namespace qadv {

using Net = nn::Network<double>;
using Adam = nn::AdamState<double>;

/// Mutable training state beyond the best checkpoint, for resuming.
struct TrainerCheckpoint {
  std::int64_t episode = 0;
  std::int64_t env_steps = 0;
  Index validations = 0;
  Index since_best = 0;
  Net dqn;  // latest (not best) parameters
  Net guesser;
  Net target;
  Adam dqn_adam;
  Adam guesser_adam;
  std::string rng_state;
};

struct ModelBundle {
  ArchConfig arch;
  MDPConfig mdp;
  TrainConfig train;
  Schema schema;  // after correlated-feature removal
  QuestionLayout layout;
  std::vector<Column> columns;
  std::vector<double> imputer_fill;
  std::vector<std::string> dropped;

  Net dqn;
  Net guesser;
  double best_auc = -1.0;
  std::int64_t best_episode = -1;
  std::int64_t episodes_run = 0;
  std::optional<TrainerCheckpoint> checkpoint;

  Index questions() const { return layout.questions(); }
  Index columns_count() const { return layout.columns; }
  Index state_dim() const { return 2 * layout.columns; }
};

/// Fresh Xavier-initialized networks sized for `schema`.
ModelBundle make_bundle(const Schema& schema, const ArchConfig& arch, const MDPConfig& mdp,
                        const TrainConfig& train, std::uint64_t seed);

nlohmann::json network_to_json(const Net& net);
Net network_from_json(const nlohmann::json& j);

std::string model_to_json(const ModelBundle& bundle);
ModelBundle model_from_json(std::string_view text, const std::string& source = "<model>");
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace qadv
