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

#include "qadv/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "qadv/error.hpp"
#include "qadv/medconstraints.hpp"
#include "qadv/model.hpp"
#include "qadv/text_format.hpp"
#include "qadv/trainer.hpp"

namespace qadv::cli {

using nlohmann::json;

namespace {

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type");
  }
}

json section_or_empty(const json& j, const char* key) {
  if (!j.contains(key)) return json::object();
  return j.at(key);
}

// NaN and infinity have no JSON literal: null stands for NaN, strings for the
// infinities.
json number_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const json& j, const std::string& where) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

json methods_to_json(const std::vector<attacks::Method>& ms) {
  json out = json::array();
  for (auto m : ms) out.push_back(std::string(attacks::to_string(m)));
  return out;
}

std::vector<attacks::Method> methods_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of method names");
  std::vector<attacks::Method> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw ConfigError(where + ": expected method names");
    out.push_back(attacks::method_from_string(e.get<std::string>()));
  }
  return out;
}

json attack_to_json(const attacks::AttackConfig& a) {
  return {{"norm", std::string(attacks::to_string(a.norm))},
          {"iterations", a.iterations},
          {"step_alpha", number_to_json(a.step_alpha)},
          {"cw_iterations", a.cw_iterations},
          {"cw_c", a.cw_c},
          {"cw_kappa", a.cw_kappa},
          {"cw_lr", a.cw_lr},
          {"deepfool_iterations", a.deepfool_iterations},
          {"overshoot", a.overshoot},
          {"ensemble", methods_to_json(a.ensemble)}};
}

void attack_from_json(const json& j, attacks::AttackConfig& a) {
  const std::string s = "attack";
  reject_unknown_keys(j,
                      {"norm", "iterations", "step_alpha", "cw_iterations", "cw_c", "cw_kappa",
                       "cw_lr", "deepfool_iterations", "overshoot", "ensemble"},
                      "attack");
  std::string norm;
  read(j, "norm", norm, s);
  if (!norm.empty()) a.norm = attacks::norm_from_string(norm);
  read(j, "iterations", a.iterations, s);
  if (j.contains("step_alpha")) a.step_alpha = number_from_json(j.at("step_alpha"), "attack.step_alpha");
  read(j, "cw_iterations", a.cw_iterations, s);
  read(j, "cw_c", a.cw_c, s);
  read(j, "cw_kappa", a.cw_kappa, s);
  read(j, "cw_lr", a.cw_lr, s);
  read(j, "deepfool_iterations", a.deepfool_iterations, s);
  read(j, "overshoot", a.overshoot, s);
  if (j.contains("ensemble")) a.ensemble = methods_from_json(j.at("ensemble"), "attack.ensemble");
}

json sweep_to_json(const SweepSection& s) {
  return {{"methods", methods_to_json(s.sweep.methods)},
          {"epsilons", s.sweep.epsilons},
          {"sample_count", s.sweep.sample_count},
          {"mode", std::string(eval::to_string(s.sweep.mode))},
          {"keep_irreconcilable", s.sweep.keep_irreconcilable},
          {"library", s.sweep.library},
          {"constraints", s.constraints},
          {"max_rounds", s.max_rounds}};
}

void sweep_from_json(const json& j, SweepSection& s) {
  const std::string sec = "sweep";
  reject_unknown_keys(j,
                      {"methods", "epsilons", "sample_count", "mode", "keep_irreconcilable",
                       "library", "constraints", "max_rounds"},
                      "sweep");
  if (j.contains("methods")) s.sweep.methods = methods_from_json(j.at("methods"), "sweep.methods");
  read(j, "epsilons", s.sweep.epsilons, sec);
  read(j, "sample_count", s.sweep.sample_count, sec);
  std::string mode;
  read(j, "mode", mode, sec);
  if (!mode.empty()) s.sweep.mode = eval::mode_from_string(mode);
  read(j, "keep_irreconcilable", s.sweep.keep_irreconcilable, sec);
  read(j, "library", s.sweep.library, sec);
  read(j, "constraints", s.constraints, sec);
  read(j, "max_rounds", s.max_rounds, sec);
}

json data_to_json(const data::PipelineConfig& p) {
  return {{"train_years", p.train_years},
          {"test_years", p.test_years},
          {"correlation_threshold", p.correlation_threshold},
          {"test_fraction", p.test_fraction}};
}

void data_from_json(const json& j, data::PipelineConfig& p) {
  const std::string s = "data";
  reject_unknown_keys(j, {"train_years", "test_years", "correlation_threshold", "test_fraction"},
                      "data");
  read(j, "train_years", p.train_years, s);
  read(j, "test_years", p.test_years, s);
  read(j, "correlation_threshold", p.correlation_threshold, s);
  read(j, "test_fraction", p.test_fraction, s);
}

json paths_to_json(const Paths& p) {
  return {{"data_dir", p.data_dir},   {"run_dir", p.run_dir}, {"catalog", p.catalog},
          {"grid", p.grid},           {"stats_dir", p.stats_dir}, {"records", p.records},
          {"schema", p.schema},       {"originals", p.originals}, {"report", p.report}};
}

void paths_from_json(const json& j, Paths& p) {
  const std::string s = "paths";
  reject_unknown_keys(j,
                      {"data_dir", "run_dir", "catalog", "grid", "stats_dir", "records", "schema",
                       "originals", "report"},
                      "paths");
  read(j, "data_dir", p.data_dir, s);
  read(j, "run_dir", p.run_dir, s);
  read(j, "catalog", p.catalog, s);
  read(j, "grid", p.grid, s);
  read(j, "stats_dir", p.stats_dir, s);
  read(j, "records", p.records, s);
  read(j, "schema", p.schema, s);
  read(j, "originals", p.originals, s);
  read(j, "report", p.report, s);
}

fs::path or_default(const std::string& set, const std::string& dir, const char* name) {
  return set.empty() ? fs::path(dir) / name : fs::path(set);
}

void write(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  text::write_file(path, contents);
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw DataError(std::string(what) + " not found: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::resolve() {
  data.seed = seed;
  train.seed = seed;
  sweep.sweep.seed = seed;
  sweep.sweep.threads = threads;
  sweep.sweep.attack = attack;
}

void RunConfig::validate() const {
  if (synth.features < 4) throw ConfigError("synth.features must be >= 4");
  if (synth.records < 10) throw ConfigError("synth.records must be >= 10");
  if (!(synth.difficulty >= 0.0)) throw ConfigError("synth.difficulty must be >= 0");
  if (!(data.correlation_threshold > 0.0 && data.correlation_threshold <= 1.0))
    throw ConfigError("data.correlation_threshold must lie in (0, 1]");
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0))
    throw ConfigError("data.test_fraction must lie in (0, 1)");
  arch.validate();
  mdp.validate(-1);
  train.validate();
  attack.validate();
  sweep.sweep.validate();
  if (sweep.max_rounds < 1) throw ConfigError("sweep.max_rounds must be >= 1");
  if (!(stats.alpha > 0.0 && stats.alpha < 1.0)) throw ConfigError("stats.alpha must lie in (0, 1)");
}

fs::path RunConfig::catalog_path() const { return or_default(paths.catalog, paths.data_dir, files::kCatalog); }
fs::path RunConfig::grid_path() const { return or_default(paths.grid, paths.run_dir, files::kGrid); }
fs::path RunConfig::stats_dir() const {
  return paths.stats_dir.empty() ? fs::path(paths.run_dir) / "stats" : fs::path(paths.stats_dir);
}
fs::path RunConfig::records_path() const { return or_default(paths.records, paths.data_dir, files::kRecords); }
fs::path RunConfig::schema_path() const { return or_default(paths.schema, paths.data_dir, files::kSchema); }

json to_json(const RunConfig& cfg) {
  json arch, mdp, train;
  to_json(arch, cfg.arch);
  to_json(mdp, cfg.mdp);
  to_json(train, cfg.train);
  train.erase("seed");
  return {{"seed", cfg.seed},
          {"threads", cfg.threads},
          {"synth",
           {{"features", cfg.synth.features},
            {"records", cfg.synth.records},
            {"difficulty", cfg.synth.difficulty}}},
          {"data", data_to_json(cfg.data)},
          {"arch", arch},
          {"mdp", mdp},
          {"train", train},
          {"attack", attack_to_json(cfg.attack)},
          {"sweep", sweep_to_json(cfg.sweep)},
          {"stats",
           {{"grouping", std::string(stats::to_string(cfg.stats.grouping))},
            {"alpha", cfg.stats.alpha}}},
          {"paths", paths_to_json(cfg.paths)}};
}

RunConfig config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"seed", "threads", "synth", "data", "arch", "mdp", "train", "attack",
                       "sweep", "stats", "paths"},
                      "config");
  RunConfig cfg;
  read(j, "seed", cfg.seed, "config");
  read(j, "threads", cfg.threads, "config");

  const json synth = section_or_empty(j, "synth");
  reject_unknown_keys(synth, {"features", "records", "difficulty"}, "synth");
  read(synth, "features", cfg.synth.features, "synth");
  read(synth, "records", cfg.synth.records, "synth");
  read(synth, "difficulty", cfg.synth.difficulty, "synth");

  data_from_json(section_or_empty(j, "data"), cfg.data);
  // The nested converters validate on their own.
  if (j.contains("arch")) cfg.arch = j.at("arch").get<ArchConfig>();
  if (j.contains("mdp")) cfg.mdp = j.at("mdp").get<MDPConfig>();
  if (j.contains("train")) {
    if (j.at("train").contains("seed"))
      throw ConfigError("train.seed: set the top-level seed instead");
    cfg.train = j.at("train").get<TrainConfig>();
  }
  attack_from_json(section_or_empty(j, "attack"), cfg.attack);
  sweep_from_json(section_or_empty(j, "sweep"), cfg.sweep);

  const json st = section_or_empty(j, "stats");
  reject_unknown_keys(st, {"grouping", "alpha"}, "stats");
  std::string grouping;
  read(st, "grouping", grouping, "stats");
  if (!grouping.empty()) cfg.stats.grouping = stats::grouping_from_string(grouping);
  read(st, "alpha", cfg.stats.alpha, "stats");

  paths_from_json(section_or_empty(j, "paths"), cfg.paths);
  cfg.resolve();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  const std::string text = text::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::optional<fs::path> find_config(const std::string& explicit_path) {
  const char* dir = std::getenv(kConfigDirEnv);
  if (!explicit_path.empty()) {
    const fs::path p(explicit_path);
    if (fs::exists(p)) return p;
    if (dir && *dir && p.is_relative() && fs::exists(fs::path(dir) / p)) return fs::path(dir) / p;
    throw ConfigError("config file not found: " + explicit_path);
  }
  if (dir && *dir) {
    const fs::path p = fs::path(dir) / kDefaultConfigName;
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return ConfigFailure;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return DataFailure;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return DataFailure;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return DataFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return RuntimeFailure;
  } catch (...) {
    err << "error: unknown failure\n";
    return RuntimeFailure;
  }
}

int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return Ok;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

// ---------------------------------------------------------------------------
// synth

SynthSummary cmd_synth(const RunConfig& cfg, bool force, std::ostream& log) {
  const fs::path dir(cfg.paths.data_dir);
  SynthSummary out;
  out.records = dir / files::kRecords;
  out.schema = dir / files::kSchema;
  out.catalog = dir / files::kCatalog;
  const fs::path meta = dir / files::kSynthMeta;
  if (!force)
    for (const auto& p : {out.records, out.schema, out.catalog, meta})
      if (fs::exists(p))
        throw ConfigError(p.string() + " exists; pass --force to overwrite");

  const auto s = data::synth_generate(cfg.synth.features, cfg.synth.records, cfg.seed,
                                      cfg.synth.difficulty);
  write(out.records, data::to_csv(s.table, s.schema));
  write(out.schema, s.schema.to_text());
  write(out.catalog, s.catalog_text);

  json weights = json::array();
  for (Index i = 0; i < s.weights.size(); ++i) weights.push_back(s.weights(i));
  const json m = {{"command", "synth"},
                  {"seed", cfg.seed},
                  {"config", to_json(cfg)},
                  {"columns", s.schema.column_names()},
                  {"weights", weights},
                  {"informative", s.informative}};
  write(meta, m.dump(2) + "\n");

  out.rows = s.table.rows();
  out.features = cfg.synth.features;
  log << "synth: " << out.rows << " records, " << out.features << " features -> " << dir.string()
      << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// train

TrainSummary cmd_train(const RunConfig& cfg, bool resume, std::ostream& log) {
  const fs::path schema_path = cfg.schema_path();
  const fs::path records_path = cfg.records_path();
  require_file(schema_path, "schema");
  require_file(records_path, "records");
  const Schema schema = Schema::load(schema_path);
  auto prep = data::prepare(data::load_csv(records_path, schema), schema, cfg.data);
  log << "train: " << prep.train.rows() << " training rows, " << prep.test.rows() << " test rows";
  if (!prep.dropped.empty()) {
    log << ", dropped";
    for (const auto& d : prep.dropped) log << " " << d;
  }
  log << "\n";

  const fs::path run(cfg.paths.run_dir);
  std::optional<ModelBundle> previous;
  train::TrainOptions opts;
  if (resume) {
    require_file(run / files::kModel, "model");
    previous = load_model(run / files::kModel);
    if (!previous->checkpoint) throw DataError("model has no checkpoint to resume from");
    opts.resume = &*previous;
    log << "train: resuming at episode " << previous->checkpoint->episode << "\n";
  }
  opts.on_validation = [&log](const train::HistoryRow& h) {
    log << "  episode " << h.episode << "  auc " << text::fixed(h.auc, 4) << "  acc "
        << text::fixed(h.accuracy, 4) << "\n";
  };

  auto result = train::train(prep.train, cfg.arch, cfg.mdp, cfg.train, opts);
  result.model.imputer_fill = prep.imputer.fill;
  result.model.dropped = prep.dropped;

  fs::create_directories(run);
  save_model(result.model, run / files::kModel);
  write(run / files::kHistory, train::history_csv(result.history));
  data::save_cache(prep.test, run / files::kTestCache);

  TrainSummary out;
  out.best_auc = result.model.best_auc;
  out.best_episode = result.model.best_episode;
  out.episodes_run = result.model.episodes_run;
  out.early_stopped = result.early_stopped;
  out.train_rows = prep.train.rows();
  out.test_rows = prep.test.rows();

  const json m = {{"command", "train"},
                  {"seed", cfg.seed},
                  {"config", to_json(cfg)},
                  {"resumed", resume},
                  {"best_auc", out.best_auc},
                  {"best_episode", out.best_episode},
                  {"episodes_run", out.episodes_run},
                  {"early_stopped", out.early_stopped},
                  {"train_rows", out.train_rows},
                  {"test_rows", out.test_rows},
                  {"flagged_rows", prep.flagged_rows},
                  {"excluded_rows", prep.excluded_rows},
                  {"dropped", prep.dropped}};
  write(run / files::kTrainMeta, m.dump(2) + "\n");

  log << "train: best validation AUC " << text::fixed(out.best_auc, 4) << " at episode "
      << out.best_episode << " (" << out.episodes_run << " episodes"
      << (out.early_stopped ? ", early stop" : "") << ")\n";
  return out;
}

// ---------------------------------------------------------------------------
// sweep

SweepSummary cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  const fs::path run(cfg.paths.run_dir);
  require_file(run / files::kModel, "model");
  require_file(run / files::kTestCache, "test split");
  const ModelBundle model = load_model(run / files::kModel);
  const data::Dataset test = data::load_cache(run / files::kTestCache);
  if (test.columns.size() != model.columns.size())
    throw ShapeError("test split has " + std::to_string(test.columns.size()) +
                     " columns, model expects " + std::to_string(model.columns.size()));

  std::optional<constraints::Projector> projector;
  if (cfg.sweep.constraints) {
    const fs::path cat = cfg.catalog_path();
    require_file(cat, "constraint catalog");
    std::vector<std::string> names;
    for (const auto& c : model.columns) names.push_back(c.name);
    auto cset = constraints::ConstraintSet::load(cat, names, true);
    for (const auto& s : cset.skipped) log << "sweep: catalog entry skipped: " << s << "\n";
    projector.emplace(std::move(cset), model.columns, cfg.sweep.max_rounds);
  }

  eval::SweepConfig sc = cfg.sweep.sweep;
  sc.seed = cfg.seed;
  sc.threads = cfg.threads;
  sc.attack = cfg.attack;
  log << "sweep: " << sc.methods.size() << " methods x " << sc.epsilons.size()
      << " epsilons, up to " << sc.sample_count << " samples\n";
  const auto sweep = eval::run_sweep(model, test, sc, projector ? &*projector : nullptr);

  const json echo = {{"command", "sweep"}, {"seed", cfg.seed}, {"config", to_json(cfg)}};
  write(run / files::kGrid, eval::grid_csv(sweep, sc));
  write(run / files::kHeatmap, eval::heatmap_csv(sweep));
  write(run / files::kTiming, eval::timing_csv(sweep));
  write(run / files::kSummary, eval::summary_csv(sweep));
  write(run / files::kSweepReport, eval::report_json(sweep, sc, echo.dump()));

  SweepSummary out;
  out.cells = Index(sweep.cells.size());
  out.samples = sweep.samples;
  out.inversions = Index(sweep.inversions.size());
  out.warning = sweep.warning;
  if (!out.warning.empty()) log << "sweep: warning: " << out.warning << "\n";
  for (const auto& inv : sweep.inversions)
    log << "sweep: ASR inversion for " << attacks::to_string(inv.method) << " between eps "
        << text::format_double(inv.from_epsilon) << " and " << text::format_double(inv.to_epsilon)
        << " (" << text::fixed(100.0 * inv.drop, 2) << " points)\n";
  log << "sweep: " << out.cells << " cells on " << out.samples << " samples -> " << run.string()
      << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// stats

StatsSummary cmd_stats(const RunConfig& cfg, std::ostream& log) {
  const fs::path grid = cfg.grid_path();
  require_file(grid, "grid");
  const std::string text = text::read_file(grid);
  const auto rows = eval::parse_grid_csv(text, grid.string());
  const auto groups = stats::group_rates(rows, cfg.stats.grouping);
  auto tables = stats::analyze(groups, cfg.stats.grouping, text, cfg.stats.alpha);

  // Echo only what shapes the statistics, so the report does not change with
  // unrelated training or attack settings.
  const json echo = {{"grid", grid.generic_string()},
                     {"grouping", std::string(stats::to_string(cfg.stats.grouping))},
                     {"alpha", cfg.stats.alpha},
                     {"seed", cfg.seed}};
  const auto nl = tables.report.find('\n');
  tables.report.insert(nl == std::string::npos ? tables.report.size() : nl + 1,
                       "config: " + echo.dump() + "\n");

  const fs::path dir = cfg.stats_dir();
  write(dir / files::kDescriptive, tables.descriptive);
  write(dir / files::kTests, tables.tests);
  write(dir / files::kTukey, tables.tukey);
  write(dir / files::kTukeySignificant, tables.tukey_significant);
  write(dir / files::kBonferroni, tables.bonferroni);
  write(dir / files::kEffectSizes, tables.effect_sizes);
  write(dir / files::kStatsReport, tables.report);

  StatsSummary out;
  out.groups = Index(groups.size());
  out.checksum = stats::checksum(text);
  out.anova_p = stats::anova_oneway(groups).p;
  log << "stats: " << out.groups << " groups by " << stats::to_string(cfg.stats.grouping)
      << ", ANOVA p = " << text::format_double(out.anova_p) << " -> " << dir.string() << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// validate

namespace {

// Raw column vector of one record; NaN where the feature is missing.
Eigen::VectorXd raw_record(const data::RawTable& table, Index row,
                           const std::vector<Column>& columns) {
  Eigen::VectorXd x(Index(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const double cell = table.cells(row, columns[c].feature);
    if (std::isnan(cell))
      x(Index(c)) = cell;
    else if (columns[c].category >= 0)
      x(Index(c)) = cell == double(columns[c].category) ? 1.0 : 0.0;
    else
      x(Index(c)) = cell;
  }
  return x;
}

std::string_view kind_name(constraints::Violation::Kind k) {
  switch (k) {
    case constraints::Violation::Kind::Bound: return "bound";
    case constraints::Violation::Kind::Rule: return "rule";
    case constraints::Violation::Kind::Correlation: return "correlation";
  }
  return "?";
}

json violation_json(const constraints::Violation& v, const std::vector<std::string>& names) {
  json cols = json::array();
  for (Index c : v.columns) cols.push_back(names[std::size_t(c)]);
  return {{"id", v.id},
          {"kind", std::string(kind_name(v.kind))},
          {"category", std::string(constraints::to_string(v.category))},
          {"columns", cols},
          {"observed", number_to_json(v.observed)},
          {"required_lower", number_to_json(v.required_lower)},
          {"required_upper", number_to_json(v.required_upper)},
          {"repair", v.repair}};
}

}  // namespace

ValidateSummary cmd_validate(const RunConfig& cfg, std::ostream& log) {
  const fs::path schema_path = cfg.schema_path();
  const fs::path records_path = cfg.records_path();
  const fs::path catalog_path = cfg.catalog_path();
  require_file(schema_path, "schema");
  require_file(records_path, "records");
  require_file(catalog_path, "constraint catalog");
  const Schema schema = Schema::load(schema_path);
  const auto columns = schema.columns();
  const auto names = schema.column_names();
  const auto cset = constraints::ConstraintSet::load(catalog_path, names);
  const auto table = data::load_csv(records_path, schema);

  std::optional<data::RawTable> originals;
  if (!cfg.paths.originals.empty()) {
    require_file(cfg.paths.originals, "original records");
    originals = data::load_csv(cfg.paths.originals, schema);
    if (originals->rows() != table.rows())
      throw DataError("originals hold " + std::to_string(originals->rows()) +
                      " records, records hold " + std::to_string(table.rows()));
  }

  std::ofstream file;
  std::ostream* out = &log;
  if (!cfg.paths.report.empty()) {
    const fs::path p(cfg.paths.report);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    file.open(p, std::ios::binary);
    if (!file) throw Error("cannot write " + p.string());
    out = &file;
  }

  *out << json{{"type", "config"},
               {"seed", cfg.seed},
               {"schema", schema_path.generic_string()},
               {"records", records_path.generic_string()},
               {"originals", cfg.paths.originals},
               {"catalog", catalog_path.generic_string()},
               {"bounds", cset.bounds.size()},
               {"rules", cset.rules.size()}}
              .dump()
       << "\n";

  ValidateSummary sum;
  for (Index r = 0; r < table.rows(); ++r) {
    ++sum.records;
    json rec = {{"type", "record"},
                {"record", r},
                {"line", r < Index(table.source_lines.size()) ? table.source_lines[std::size_t(r)]
                                                              : std::size_t(0)}};
    const Eigen::VectorXd x = raw_record(table, r, columns);
    const Eigen::VectorXd orig = originals ? raw_record(*originals, r, columns) : x;
    if (!x.allFinite() || !orig.allFinite()) {
      ++sum.incomplete;
      json missing = json::array();
      for (std::size_t c = 0; c < columns.size(); ++c)
        if (!std::isfinite(x(Index(c))) || !std::isfinite(orig(Index(c))))
          missing.push_back(names[c]);
      rec["status"] = "incomplete";
      rec["missing"] = missing;
      *out << rec.dump() << "\n";
      continue;
    }

    const auto found = constraints::check(x, orig, cset);
    if (found.valid()) {
      ++sum.valid;
      rec["status"] = "valid";
      rec["violations"] = json::array();
      *out << rec.dump() << "\n";
      continue;
    }

    ++sum.violated;
    const auto fixed = constraints::satisfy(x, orig, cset);
    json vs = json::array();
    for (const auto& v : fixed.report.violations) vs.push_back(violation_json(v, names));
    json repaired = json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const double from = x(Index(c));
      const double to = fixed.x(Index(c));
      if (from == to) continue;
      json change = {{"from", from}, {"to", to}};
      const auto& f = schema.features[std::size_t(columns[c].feature)];
      if (f.kind == FeatureKind::Categorical && columns[c].category < 0) {
        const auto k = std::size_t(std::lround(to));
        if (k < f.categories.size() && std::abs(to - double(k)) < 1e-9)
          change["category"] = f.categories[k];
      }
      repaired[names[c]] = change;
    }
    const auto res = fixed.report.resolution;
    if (res == constraints::Resolution::Irreconcilable) ++sum.irreconcilable;
    rec["status"] = "violated";
    rec["violations"] = vs;
    rec["resolution"] = std::string(constraints::to_string(res));
    rec["rounds"] = fixed.report.rounds;
    rec["rejected"] = fixed.report.rejected;
    rec["repaired"] = repaired;
    *out << rec.dump() << "\n";
  }

  *out << json{{"type", "summary"},
               {"records", sum.records},
               {"valid", sum.valid},
               {"violated", sum.violated},
               {"irreconcilable", sum.irreconcilable},
               {"incomplete", sum.incomplete}}
              .dump()
       << "\n";
  if (out != &log)
    log << "validate: " << sum.records << " records, " << sum.violated << " with violations, "
        << sum.irreconcilable << " irreconcilable -> " << cfg.paths.report << "\n";
  return sum;
}

}  // namespace qadv::cli
