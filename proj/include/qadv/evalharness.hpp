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

// Attack sweeps over methods x epsilon on correctly classified test rows.
//
// Outputs: grid.csv (one row per cell, deterministic), heatmap.csv (ASR,
// methods x epsilon), timing.csv (wall-clock per cell) and a JSON report with
// the resolved config, an environment stamp and per-cell detail.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qadv/attacks.hpp"
#include "qadv/dataio.hpp"
#include "qadv/medconstraints.hpp"
#include "qadv/model.hpp"

namespace qadv::eval {

using attacks::Method;

enum class Mode {
  FixedMask,  // Guesser decision under the clean episode's mask
  Episodic,   // experimental: re-run question selection on the perturbed record
};
std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct SweepConfig {
  std::vector<Method> methods = attacks::all_methods();
  std::vector<double> epsilons = attacks::default_epsilons();
  Index sample_count = 1000;
  std::uint64_t seed = 0;
  Mode mode = Mode::FixedMask;
  /// Count irreconcilable adversarial records as successes.
  bool keep_irreconcilable = false;
  /// Shared attack parameters; method and epsilon are set per cell.
  attacks::AttackConfig attack;
  /// Worker threads; 0 means hardware concurrency.
  unsigned threads = 0;
  /// Value of the grid's library column.
  std::string library = "native";

  /// Throws ConfigError (unsorted grid, empty lists, sample_count < 1).
  void validate() const;
};

struct Sample {
  Index row = 0;  // row in the test set
  Eigen::VectorXd x;
  Eigen::VectorXd mask;  // column mask at the clean guess point
  int label = 0;
  int target = 0;  // the opposite class
};

/// Uniform draw without replacement among rows the greedy policy classifies
/// correctly, returned in row order. Returns every correct row (and sets
/// `warning`) when fewer than n exist; throws DataError on an empty test set.
std::vector<Sample> select_correct(const ModelBundle& model, const data::Dataset& test, Index n,
                                   std::uint64_t seed, std::string* warning = nullptr);

/// Stable per-sample stream seed from (seed, method, epsilon, index).
std::uint64_t sample_seed(std::uint64_t seed, Method method, double epsilon, Index index);

struct SampleOutcome {
  Index row = 0;
  bool attack_success = false;  // raw attack verdict
  bool counted = false;         // success after the irreconcilable policy
  bool error = false;
  Method component = Method::FGSM;
  double l2 = 0.0;
  double linf = 0.0;
  double seconds = 0.0;
  int resolution = -1;  // constraints::Resolution, -1 without constraints
};

struct CellResult {
  Method method = Method::FGSM;
  double epsilon = 0.0;
  Index n = 0;
  Index successes = 0;
  double asr = 0.0;
  double robust_accuracy = 0.0;
  double mean_l2 = 0.0;
  double mean_linf = 0.0;
  double mean_time_s = 0.0;
  double std_time_s = 0.0;
  /// Automatic, Iterative, Irreconcilable.
  std::array<Index, 3> resolutions{0, 0, 0};
  Index unconstrained = 0;
  Index errors = 0;
  std::vector<SampleOutcome> samples;
};

/// Attacks every sample at one (method, epsilon). Per-sample failures are
/// counted, never fatal. `constraints` may be null.
CellResult run_cell(const ModelBundle& model, const std::vector<Sample>& samples, Method method,
                    double epsilon, const SweepConfig& cfg,
                    const constraints::Projector* constraints);

struct Inversion {
  Method method = Method::FGSM;
  double from_epsilon = 0.0;
  double to_epsilon = 0.0;
  double drop = 0.0;  // ASR decrease, as a fraction
};

struct SweepResult {
  std::vector<Method> methods;
  std::vector<double> epsilons;
  std::vector<CellResult> cells;  // method-major
  Eigen::MatrixXd heatmap;        // methods x epsilons, ASR
  std::vector<Inversion> inversions;
  Index samples = 0;
  std::string warning;

  const CellResult& cell(Index method_index, Index epsilon_index) const {
    return cells[std::size_t(method_index * Index(epsilons.size()) + epsilon_index)];
  }
};

SweepResult run_sweep(const ModelBundle& model, const data::Dataset& test, const SweepConfig& cfg,
                      const constraints::Projector* constraints);

/// Drops in ASR between consecutive epsilons, per method.
std::vector<Inversion> find_inversions(const SweepResult& sweep);

/// (L2, Linf) of x_adv - x. Throws ShapeError on length mismatch.
std::pair<double, double> perturbation_norms(const Eigen::VectorXd& x, const Eigen::VectorXd& x_adv);

std::string grid_csv(const SweepResult& sweep, const SweepConfig& cfg);
std::string heatmap_csv(const SweepResult& sweep);
std::string timing_csv(const SweepResult& sweep);
/// Per method: unweighted means over the epsilon grid, with an efficiency
/// rank by mean time.
std::string summary_csv(const SweepResult& sweep);
std::string report_json(const SweepResult& sweep, const SweepConfig& cfg,
                        const std::string& config_echo);

/// One parsed grid.csv row (the fields the statistics need).
struct GridRow {
  std::string method;
  std::string library;
  double epsilon = 0.0;
  double asr = 0.0;
};
std::vector<GridRow> parse_grid_csv(std::string_view text, const std::string& source = "<grid>");

}  // namespace qadv::eval
