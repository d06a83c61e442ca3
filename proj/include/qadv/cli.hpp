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

// Commands behind the qadv executable, callable in-process. Each command
// takes a fully resolved RunConfig, writes its artifacts and returns a short
// summary; failures surface as the usual qadv exceptions, which exit_code()
// maps onto process exit codes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qadv/attacks.hpp"
#include "qadv/config.hpp"
#include "qadv/dataio.hpp"
#include "qadv/evalharness.hpp"
#include "qadv/statlab.hpp"

namespace qadv::cli {

namespace fs = std::filesystem;

enum ExitCode : int { Ok = 0, ConfigFailure = 2, DataFailure = 3, RuntimeFailure = 4 };

/// File locations. Empty entries fall back to defaults under data_dir or
/// run_dir (see the resolved_* helpers).
struct Paths {
  std::string data_dir = "data/synth";
  std::string run_dir = "runs/default";
  std::string catalog;    // <data_dir>/catalog.txt
  std::string grid;       // <run_dir>/grid.csv
  std::string stats_dir;  // <run_dir>/stats
  std::string records;    // <data_dir>/records.csv
  std::string schema;     // <data_dir>/schema.txt
  std::string originals;  // optional clean records paired with `records`
  std::string report;     // validate output; empty writes to the log stream
};

struct SynthSection {
  Index features = 50;
  Index records = 20000;
  double difficulty = 0.25;
};

struct SweepSection {
  eval::SweepConfig sweep;  // seed and threads come from the top level
  bool constraints = true;
  int max_rounds = 10;
};

struct StatsSection {
  stats::Grouping grouping = stats::Grouping::Method;
  double alpha = 0.05;
};

struct RunConfig {
  /// Master seed; copied into every section that draws random numbers.
  std::uint64_t seed = 0;
  /// Worker cap; 0 means hardware concurrency.
  unsigned threads = 0;
  SynthSection synth;
  data::PipelineConfig data;
  ArchConfig arch;
  MDPConfig mdp;
  TrainConfig train;
  attacks::AttackConfig attack;
  SweepSection sweep;
  StatsSection stats;
  Paths paths;

  /// Propagates seed and threads into the sections.
  void resolve();
  /// Throws ConfigError.
  void validate() const;

  fs::path catalog_path() const;
  fs::path grid_path() const;
  fs::path stats_dir() const;
  fs::path records_path() const;
  fs::path schema_path() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Strict: unknown keys anywhere are a ConfigError. Missing keys keep their
/// defaults. The result is resolved and validated.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const fs::path& path);

/// Environment variable naming the directory searched for config files.
inline constexpr const char* kConfigDirEnv = "QADV_CONFIG_DIR";
inline constexpr const char* kDefaultConfigName = "qadv.json";

/// An explicit path is used as given when it exists, else looked up in
/// $QADV_CONFIG_DIR. Without one, $QADV_CONFIG_DIR/qadv.json is used when
/// present. Throws ConfigError when an explicit path cannot be found.
std::optional<fs::path> find_config(const std::string& explicit_path);

/// Maps the current exception (call inside a catch block) to an exit code
/// and writes a one-line diagnostic.
int exit_code_for_current_exception(std::ostream& err);

/// Runs `body`, returning Ok or the mapped failure code.
int guarded(const std::function<void()>& body, std::ostream& err);

// ---------------------------------------------------------------------------
// Commands

struct SynthSummary {
  fs::path records;
  fs::path schema;
  fs::path catalog;
  Index rows = 0;
  Index features = 0;
};
/// Writes records.csv, schema.txt, catalog.txt and synth.json into data_dir.
/// Refuses to overwrite unless `force`.
SynthSummary cmd_synth(const RunConfig& cfg, bool force, std::ostream& log);

struct TrainSummary {
  double best_auc = 0.0;
  std::int64_t best_episode = -1;
  std::int64_t episodes_run = 0;
  bool early_stopped = false;
  Index train_rows = 0;
  Index test_rows = 0;
};
/// Trains on <data_dir>, writing model.json, history.csv, test.qds and
/// train.json into run_dir. With `resume`, continues from run_dir/model.json.
TrainSummary cmd_train(const RunConfig& cfg, bool resume, std::ostream& log);

struct SweepSummary {
  Index cells = 0;
  Index samples = 0;
  Index inversions = 0;
  std::string warning;
};
/// Attacks the trained model over the configured grid, writing grid.csv,
/// heatmap.csv, timing.csv, summary.csv and sweep.json into run_dir.
SweepSummary cmd_sweep(const RunConfig& cfg, std::ostream& log);

struct StatsSummary {
  Index groups = 0;
  std::string checksum;
  double anova_p = 0.0;
};
/// Reads the grid CSV and writes the statistics tables and report into
/// stats_dir.
StatsSummary cmd_stats(const RunConfig& cfg, std::ostream& log);

struct ValidateSummary {
  Index records = 0;
  Index valid = 0;
  Index violated = 0;
  Index irreconcilable = 0;
  Index incomplete = 0;  // records with missing cells, not checked
};
/// Checks each record against the catalog and streams one JSON object per
/// record (violations plus the suggested repairs) to paths.report or `log`.
ValidateSummary cmd_validate(const RunConfig& cfg, std::ostream& log);

/// Output file names, shared with the tests.
namespace files {
inline constexpr const char* kRecords = "records.csv";
inline constexpr const char* kSchema = "schema.txt";
inline constexpr const char* kCatalog = "catalog.txt";
inline constexpr const char* kSynthMeta = "synth.json";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kHistory = "history.csv";
inline constexpr const char* kTestCache = "test.qds";
inline constexpr const char* kTrainMeta = "train.json";
inline constexpr const char* kGrid = "grid.csv";
inline constexpr const char* kHeatmap = "heatmap.csv";
inline constexpr const char* kTiming = "timing.csv";
inline constexpr const char* kSummary = "summary.csv";
inline constexpr const char* kSweepReport = "sweep.json";
inline constexpr const char* kDescriptive = "descriptive.csv";
inline constexpr const char* kTests = "tests.csv";
inline constexpr const char* kTukey = "tukey.csv";
inline constexpr const char* kTukeySignificant = "tukey_significant.csv";
inline constexpr const char* kBonferroni = "bonferroni.csv";
inline constexpr const char* kEffectSizes = "effect_sizes.csv";
inline constexpr const char* kStatsReport = "stats_report.txt";
}  // namespace files

}  // namespace qadv::cli
