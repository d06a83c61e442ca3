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

// qadv: synth | train | sweep | stats | validate.
//
// Settings come from a JSON config (--config, or $QADV_CONFIG_DIR/qadv.json)
// and flags override individual values. Exit codes: 0 success, 2 config
// error, 3 data error, 4 runtime failure.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qadv/cli.hpp"
#include "qadv/error.hpp"

namespace {

using namespace qadv;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string data_dir, run_dir, catalog, grid, out, records, schema, originals;

  // synth
  Index features = 0, rows = 0;
  double difficulty = 0.0;
  bool force = false;
  // train
  Index episodes = 0;
  bool resume = false;
  // sweep
  std::string methods, epsilons, mode;
  Index samples = 0;
  bool no_constraints = false;
  // stats
  std::string grouping;
  double alpha = 0.0;
};

struct Commands {
  CLI::App* synth;
  CLI::App* train;
  CLI::App* sweep;
  CLI::App* stats;
  CLI::App* validate;
};

bool given(const CLI::App* app, const std::string& name) { return app->count(name) > 0; }

cli::RunConfig resolve(const CLI::App& app, const Commands& cmd, const Flags& f) {
  cli::RunConfig cfg;
  if (const auto path = cli::find_config(f.config)) cfg = cli::load_config(*path);

  if (given(&app, "--seed")) cfg.seed = f.seed;
  if (given(&app, "--threads")) cfg.threads = f.threads;
  if (given(&app, "--data-dir")) cfg.paths.data_dir = f.data_dir;
  if (given(&app, "--run-dir")) cfg.paths.run_dir = f.run_dir;

  if (cmd.synth->parsed()) {
    if (given(cmd.synth, "--features")) cfg.synth.features = f.features;
    if (given(cmd.synth, "--records")) cfg.synth.records = f.rows;
    if (given(cmd.synth, "--difficulty")) cfg.synth.difficulty = f.difficulty;
  }
  if (cmd.train->parsed() && given(cmd.train, "--episodes")) cfg.train.max_episodes = f.episodes;
  if (cmd.sweep->parsed()) {
    if (given(cmd.sweep, "--methods")) {
      cfg.sweep.sweep.methods.clear();
      for (const auto& m : split_list(f.methods))
        cfg.sweep.sweep.methods.push_back(attacks::method_from_string(m));
    }
    if (given(cmd.sweep, "--epsilons")) {
      cfg.sweep.sweep.epsilons.clear();
      for (const auto& e : split_list(f.epsilons)) {
        try {
          cfg.sweep.sweep.epsilons.push_back(std::stod(e));
        } catch (const std::exception&) {
          throw ConfigError("--epsilons: bad number '" + e + "'");
        }
      }
    }
    if (given(cmd.sweep, "--samples")) cfg.sweep.sweep.sample_count = f.samples;
    if (given(cmd.sweep, "--mode")) cfg.sweep.sweep.mode = eval::mode_from_string(f.mode);
    if (given(cmd.sweep, "--no-constraints")) cfg.sweep.constraints = false;
    if (given(cmd.sweep, "--catalog")) cfg.paths.catalog = f.catalog;
  }
  if (cmd.stats->parsed()) {
    if (given(cmd.stats, "--grid")) cfg.paths.grid = f.grid;
    if (given(cmd.stats, "--grouping")) cfg.stats.grouping = stats::grouping_from_string(f.grouping);
    if (given(cmd.stats, "--alpha")) cfg.stats.alpha = f.alpha;
    if (given(cmd.stats, "--out")) cfg.paths.stats_dir = f.out;
  }
  if (cmd.validate->parsed()) {
    if (given(cmd.validate, "--records")) cfg.paths.records = f.records;
    if (given(cmd.validate, "--schema")) cfg.paths.schema = f.schema;
    if (given(cmd.validate, "--catalog")) cfg.paths.catalog = f.catalog;
    if (given(cmd.validate, "--originals")) cfg.paths.originals = f.originals;
    if (given(cmd.validate, "--out")) cfg.paths.report = f.out;
  }
  cfg.resolve();
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial robustness toolkit for an RL medical questionnaire"};
  app.require_subcommand(1);
  // Global flags may follow the subcommand.
  app.fallthrough();
  Flags f;

  app.add_option("--config", f.config, "JSON config file (also looked up in $QADV_CONFIG_DIR)");
  app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--threads", f.threads, "Worker thread cap (0 = all cores)");
  app.add_option("--data-dir", f.data_dir, "Dataset directory");
  app.add_option("--run-dir", f.run_dir, "Run directory (model, grid, stats)");

  Commands cmd{};
  cmd.synth = app.add_subcommand("synth", "Generate a synthetic dataset with its catalog");
  cmd.synth->add_option("--features", f.features, "Question features");
  cmd.synth->add_option("--records", f.rows, "Records");
  cmd.synth->add_option("--difficulty", f.difficulty, "Label noise scale (0 = separable)");
  cmd.synth->add_flag("--force", f.force, "Overwrite existing files");

  cmd.train = app.add_subcommand("train", "Train the DQN and Guesser");
  cmd.train->add_option("--episodes", f.episodes, "Maximum episodes");
  cmd.train->add_flag("--resume", f.resume, "Continue from the run directory's checkpoint");

  cmd.sweep = app.add_subcommand("sweep", "Attack sweep over methods x epsilon");
  cmd.sweep->add_option("--methods", f.methods, "Comma-separated subset, e.g. fgsm,pgd");
  cmd.sweep->add_option("--epsilons", f.epsilons, "Comma-separated ascending epsilons");
  cmd.sweep->add_option("--samples", f.samples, "Correctly classified samples to attack");
  cmd.sweep->add_option("--mode", f.mode, "fixed_mask or episodic");
  cmd.sweep->add_option("--catalog", f.catalog, "Constraint catalog");
  cmd.sweep->add_flag("--no-constraints", f.no_constraints, "Skip constraint projection");

  cmd.stats = app.add_subcommand("stats", "Statistical analysis of a sweep grid");
  cmd.stats->add_option("--grid", f.grid, "grid.csv to analyze");
  cmd.stats->add_option("--grouping", f.grouping, "method or library");
  cmd.stats->add_option("--alpha", f.alpha, "Significance level");
  cmd.stats->add_option("--out", f.out, "Output directory for the tables");

  cmd.validate = app.add_subcommand("validate", "Check records against a constraint catalog");
  cmd.validate->add_option("--records", f.records, "Records CSV");
  cmd.validate->add_option("--schema", f.schema, "Schema file");
  cmd.validate->add_option("--catalog", f.catalog, "Constraint catalog");
  cmd.validate->add_option("--originals", f.originals, "Clean records paired row by row");
  cmd.validate->add_option("--out", f.out, "JSON lines report (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::ConfigFailure;
  }

  return cli::guarded(
      [&] {
        const auto cfg = resolve(app, cmd, f);
        if (cmd.synth->parsed()) cli::cmd_synth(cfg, f.force, std::cout);
        if (cmd.train->parsed()) cli::cmd_train(cfg, f.resume, std::cout);
        if (cmd.sweep->parsed()) cli::cmd_sweep(cfg, std::cout);
        if (cmd.stats->parsed()) cli::cmd_stats(cfg, std::cout);
        if (cmd.validate->parsed()) cli::cmd_validate(cfg, std::cout);
      },
      std::cerr);
}
