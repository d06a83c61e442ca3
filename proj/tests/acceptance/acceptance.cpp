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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
//
//   acceptance [--work DIR] [--only N]...

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qadv/attacks.hpp"
#include "qadv/cli.hpp"
#include "qadv/dataio.hpp"
#include "qadv/error.hpp"
#include "qadv/evalharness.hpp"
#include "qadv/medconstraints.hpp"
#include "qadv/model.hpp"
#include "qadv/statlab.hpp"

namespace {

using namespace qadv;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks without stopping at the first one.
struct Checks {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  Outcome outcome(std::string detail) const {
    if (failures.empty()) return {true, std::move(detail)};
    std::string msg = std::move(detail) + " | failed: " + failures.front();
    if (failures.size() > 1) msg += " (+" + std::to_string(failures.size() - 1) + " more)";
    return {false, msg};
  }
};

std::string sci(double v, int digits = 2) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(digits) << v;
  return s.str();
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Net random_guesser(std::mt19937_64& gen, Index c) {
  ArchConfig arch;
  arch.guesser_hidden = {Index(4 + gen() % 12), Index(4 + gen() % 8)};
  auto net = nn::xavier_init<double>(guesser_specs(arch, 2 * c), gen());
  net.mode = nn::Mode::Eval;
  return net;
}

// ---------------------------------------------------------------------------
// 1. Gradient oracle

Outcome gradient_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_in = 0.0, worst_params = 0.0;
  Checks c;
  for (int trial = 0; trial < 100; ++trial) {
    auto r = oracle::random_network(rng);
    const Index batch = 1 + trial % 4;
    // Every other network is checked with batch statistics.
    if (trial % 2 && batch > 1) r.net.mode = nn::Mode::Train;
    const MatrixXd x = MatrixXd::NullaryExpr(r.net.input_dim(), batch, [&] { return u(rng); });
    const auto target = oracle::random_target(r.net, r.loss, batch, rng);
    const auto g = oracle::check_gradients(r.net, r.loss, x, target);
    worst_in = std::max(worst_in, g.input);
    worst_params = std::max(worst_params, g.params);
    c.expect(g.input < 1e-4 && g.params < 1e-4, "network " + std::to_string(trial));
  }
  return c.outcome("100 networks, max rel err input " + sci(worst_in) + " params " +
                   sci(worst_params));
}

// ---------------------------------------------------------------------------
// 2. Attack budget suite

Outcome budget_suite() {
  using attacks::Method;
  using attacks::Norm;
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0), eps(0.01, 2.0);
  Checks c;
  double worst_excess = 0.0;
  Index calls = 0;
  for (int n = 0; n < 100; ++n) {
    const Index cols = 2 + Index(gen() % 15);
    const auto net = random_guesser(gen, cols);
    for (int k = 0; k < 100; ++k, ++calls) {
      const VectorXd x = VectorXd::NullaryExpr(cols, [&] { return u(gen); });
      const VectorXd m = VectorXd::NullaryExpr(cols, [&] { return double(gen() % 2); });
      attacks::AttackConfig cfg;
      cfg.method = std::array{Method::FGSM, Method::PGD, Method::BIM}[gen() % 3];
      cfg.norm = gen() % 2 ? Norm::Linf : Norm::L2;
      cfg.epsilon = eps(gen);
      cfg.iterations = 1 + int(gen() % 8);
      const auto r = attacks::run(net, x, m, int(gen() % 2), cfg, nullptr);
      const Norm effective = cfg.method == Method::BIM ? Norm::Linf : cfg.norm;
      const double size = effective == Norm::Linf ? r.linf_norm : r.l2_norm;
      worst_excess = std::max(worst_excess, size - cfg.epsilon);
      c.expect(size <= cfg.epsilon + 1e-9, "ball exceeded at call " + std::to_string(calls));
      for (Index i = 0; i < cols; ++i)
        if (m(i) == 0.0 && r.delta(i) != 0.0)
          c.expect(false, "inactive coordinate moved at call " + std::to_string(calls));
    }
  }
  return c.outcome(std::to_string(calls) + " calls, max excess over epsilon " + sci(worst_excess));
}

// ---------------------------------------------------------------------------
// 3. Linear-model oracles

Outcome linear_oracles() {
  using attacks::Method;
  Checks c;
  std::mt19937_64 gen(314);
  for (int i = 0; i < 50; ++i) {
    const auto lc = oracle::linear_case(gen, 8);
    const auto net = oracle::linear_guesser(lc.w, lc.b);
    const int target = 1 - oracle::clean_class(lc);
    const double eps = 0.05 + 0.05 * (i % 6);
    const auto r = attacks::fgsm(net, lc.x, lc.m, target, eps, nullptr);
    const double dir = target == 1 ? 1.0 : -1.0;
    for (Index k = 0; k < 8; ++k) {
      const double wk = lc.w(k) * lc.m(k);
      c.expect(r.x_adv(k) == lc.x(k) + dir * eps * double((wk > 0) - (wk < 0)),
               "FGSM closed form, instance " + std::to_string(i));
    }
  }

  attacks::AttackConfig df;
  df.epsilon = std::numeric_limits<double>::infinity();
  double worst_df = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto lc = oracle::linear_case(gen, 10);
    const auto net = oracle::linear_guesser(lc.w, lc.b);
    const double expected = 1.02 * oracle::linear_boundary_distance(lc.w, lc.b, lc.x, lc.m);
    const auto r = attacks::deepfool(net, lc.x, lc.m, df, nullptr);
    worst_df = std::max(worst_df, std::abs(r.l2_norm - expected));
    c.expect(std::abs(r.l2_norm - expected) <= 1e-9, "DeepFool instance " + std::to_string(i));
  }

  attacks::AttackConfig cw;
  cw.epsilon = std::numeric_limits<double>::infinity();
  cw.cw_c = 10.0;
  cw.cw_iterations = 1000;
  double worst_cw = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto lc = oracle::linear_case(gen, 6);
    const auto net = oracle::linear_guesser(lc.w, lc.b);
    const double dstar = oracle::linear_boundary_distance(lc.w, lc.b, lc.x, lc.m);
    const auto r = attacks::cw(net, lc.x, lc.m, 1 - oracle::clean_class(lc), cw, nullptr);
    const double rel = std::abs(r.l2_norm - dstar) / dstar;
    worst_cw = std::max(worst_cw, rel);
    c.expect(r.success && rel <= 0.10, "C&W instance " + std::to_string(i));
  }
  return c.outcome("FGSM exact on 50; DeepFool max abs err " + sci(worst_df) +
                   " on 50; C&W max rel gap " + fixed(100 * worst_cw, 2) + "% on 20");
}

// ---------------------------------------------------------------------------
// 4. Constraint suite

Outcome constraint_suite(const fs::path& source) {
  using namespace constraints;
  Checks c;
  const Schema schema = Schema::load(source / "data/clinical_schema.txt");
  const auto catalog =
      ConstraintSet::load(source / "data/clinical_catalog.txt", schema.column_names());
  auto record = [](double age, double sex, double bmi, double sbp, double glu, double dia,
                   double preg, double smoke, double copd, double expo) {
    VectorXd x(10);
    x << age, sex, bmi, sbp, glu, dia, preg, smoke, copd, expo;
    return x;
  };

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> age(10, 95), bmi(10, 50), sbp(70, 220), glu(30, 450);
  std::bernoulli_distribution bit(0.4);
  Index resolved = 0;
  for (int i = 0; i < 1000; ++i) {
    const VectorXd orig = record(age(rng), bit(rng), bmi(rng), sbp(rng), glu(rng), bit(rng),
                                 bit(rng), bit(rng), bit(rng), bit(rng));
    const VectorXd pert = record(age(rng), bit(rng), bmi(rng), sbp(rng), glu(rng), bit(rng),
                                 bit(rng), bit(rng), bit(rng), bit(rng));
    const auto once = satisfy(pert, orig, catalog);
    const auto twice = satisfy(once.x, orig, catalog);
    c.expect(twice.x == once.x, "idempotence, record " + std::to_string(i));
    if (once.report.resolution != Resolution::Irreconcilable) ++resolved;
  }

  const std::vector<std::string> cols{"a", "b", "c"};
  const auto bounds = ConstraintSet::parse("[bounds]\na 0 1\nb -5 5\nc 10 20\n", cols);
  std::uniform_real_distribution<double> wide(-30, 30);
  const Eigen::Vector3d lo(0, -5, 10), hi(1, 5, 20);
  for (int i = 0; i < 1000; ++i) {
    const VectorXd x = Eigen::Vector3d(wide(rng), wide(rng), wide(rng));
    c.expect(satisfy(x, x, bounds).x == VectorXd(x.cwiseMax(lo).cwiseMin(hi)), "clamp");
  }

  const auto contradictory = ConstraintSet::parse(
      "[rules]\n"
      "rule up: if b >= 0 then a >= 5 repair clamp a >= 5\n"
      "rule down: if b >= 0 then a <= 3 repair clamp a <= 3\n",
      {"a", "b"});
  const auto irr = satisfy(Eigen::Vector2d(4, 1), Eigen::Vector2d(4, 1), contradictory);
  c.expect(irr.report.resolution == Resolution::Irreconcilable && irr.report.rounds <= 10,
           "contradictory rules");

  c.expect(sbp_upper(45) == 140.0 && sbp_upper(65) == 150.0 && sbp_upper(85) == 160.0,
           "sbp_upper bands");

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst_trip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const VectorXd x = VectorXd::NullaryExpr(10, [&] { return unit(rng); });
    worst_trip = std::max(worst_trip, (to_norm(to_raw(x, schema), schema) - x).cwiseAbs().maxCoeff());
  }
  c.expect(worst_trip <= 1e-12, "normalization round trip");
  const VectorXd zero = VectorXd::Zero(10);
  auto offset = [&](Index col, double d) {
    VectorXd x = zero;
    x(col) = d;
    return to_raw(x, schema)(col) - to_raw(zero, schema)(col);
  };
  c.expect(std::abs(offset(0, 0.3) - 10.05) <= 1e-12, "age offset 10.05");
  c.expect(std::abs(offset(2, 0.5) - 7.5) <= 1e-12, "bmi offset 7.5");
  c.expect(std::abs(offset(3, 0.4) - 24.0) <= 1e-12, "sbp offset 24");

  return c.outcome("idempotent on 1000 (" + std::to_string(resolved) +
                   " resolved), clamp on 1000, round trip max err " + sci(worst_trip));
}

// ---------------------------------------------------------------------------
// 5. End-to-end desk-scale run

struct GridCell {
  std::string method;
  double epsilon = 0.0;
  double asr = 0.0;
  Index automatic = 0, iterative = 0, irreconcilable = 0;
};

std::vector<GridCell> read_grid(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::size_t> col;
  {
    std::stringstream hs(line);
    std::string h;
    for (std::size_t i = 0; std::getline(hs, h, ','); ++i) col[h] = i;
  }
  std::vector<GridCell> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    GridCell g;
    g.method = cells.at(col.at("method"));
    g.epsilon = std::stod(cells.at(col.at("epsilon")));
    g.asr = std::stod(cells.at(col.at("asr")));
    g.automatic = std::stol(cells.at(col.at("automatic")));
    g.iterative = std::stol(cells.at(col.at("iterative")));
    g.irreconcilable = std::stol(cells.at(col.at("irreconcilable")));
    out.push_back(g);
  }
  return out;
}

Outcome end_to_end(const fs::path& work) {
  Checks c;
  const fs::path root = work / "desk";
  fs::remove_all(root);
  cli::RunConfig cfg;
  cfg.seed = 7;
  cfg.synth = {50, 20000, 0.25};
  cfg.train.max_episodes = 10000;
  cfg.train.val_every = 1000;
  cfg.sweep.sweep.sample_count = 200;
  cfg.paths.data_dir = (root / "data").string();
  cfg.paths.run_dir = (root / "run").string();
  cfg.resolve();
  cfg.validate();
  std::ostringstream log;

  cli::cmd_synth(cfg, false, log);
  const auto trained = cli::cmd_train(cfg, false, log);
  c.expect(trained.best_auc >= 0.80, "validation AUC " + fixed(trained.best_auc) + " < 0.80");
  c.expect(trained.episodes_run <= 10000, "more than 10000 episodes");
  const auto swept = cli::cmd_sweep(cfg, log);
  c.expect(swept.samples == 200, "only " + std::to_string(swept.samples) + " samples");
  const auto grid = read_grid(slurp(cfg.grid_path()));
  c.expect(grid.size() == 42, "grid has " + std::to_string(grid.size()) + " cells");

  // The epsilon = 0 column, same samples, same constraint pipeline.
  {
    const auto model = load_model(fs::path(cfg.paths.run_dir) / cli::files::kModel);
    const auto test = data::load_cache(fs::path(cfg.paths.run_dir) / cli::files::kTestCache);
    const constraints::Projector projector(
        constraints::ConstraintSet::load(cfg.catalog_path(), model.schema.column_names(), true),
        model.columns,
        cfg.sweep.max_rounds);
    auto zero = cfg.sweep.sweep;
    zero.epsilons = {0.0};
    const auto z = eval::run_sweep(model, test, zero, &projector);
    for (const auto& cell : z.cells)
      c.expect(cell.asr == 0.0, std::string(attacks::to_string(cell.method)) + " ASR at epsilon 0 is " +
                                    fixed(cell.asr));
  }

  std::map<std::string, std::vector<const GridCell*>> by_method;
  for (const auto& g : grid) by_method[g.method].push_back(&g);
  Index total_inversions = 0;
  for (const auto& [method, cells] : by_method) {
    int inversions = 0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const double drop = cells[i - 1]->asr - cells[i]->asr;
      if (drop > 0.0) {
        ++inversions;
        c.expect(drop <= 0.02 + 1e-12, method + " drops " + fixed(100 * drop, 1) + " pp");
      }
    }
    total_inversions += inversions;
    c.expect(inversions <= 1, method + " has " + std::to_string(inversions) + " inversions");
  }

  for (const auto& auto_cell : by_method["AutoAttack"])
    for (const char* comp : {"FGSM", "PGD", "CW"})
      for (const auto* cell : by_method[comp])
        if (cell->epsilon == auto_cell->epsilon)
          c.expect(auto_cell->asr >= cell->asr,
                   std::string("AutoAttack below ") + comp + " at epsilon " + fixed(cell->epsilon, 1));

  Index ok = 0, total = 0;
  for (const auto& g : grid) {
    ok += g.automatic + g.iterative;
    total += g.automatic + g.iterative + g.irreconcilable;
  }
  const double compliance = total ? double(ok) / double(total) : 0.0;
  c.expect(compliance >= 0.90, "constraint compliance " + fixed(100 * compliance, 1) + "%");

  return c.outcome("AUC " + fixed(trained.best_auc) + " after " + std::to_string(trained.episodes_run) +
                   " episodes, 42 cells x 200 samples, " + std::to_string(total_inversions) +
                   " inversions, compliance " + fixed(100 * compliance, 1) + "% (target 95%)");
}

// ---------------------------------------------------------------------------
// 6. Statistics oracle

Outcome statistics_oracle() {
  using namespace stats;
  Checks c;
  const auto a = anova_oneway({{"a", {1, 2, 3}}, {"b", {2, 3, 4}}, {"c", {3, 4, 5}}});
  c.expect(std::abs(a.f - 3.0) < 1e-12 && std::abs(a.eta_squared - 0.5) < 1e-12, "ANOVA F, eta^2");
  c.expect(a.df1 == 2.0 && a.df2 == 6.0, "ANOVA df");

  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0.5, 0.2);
  double worst_ss = 0.0;
  for (int i = 0; i < 50; ++i) {
    std::vector<Group> groups;
    for (int g = 0; g < 2 + i % 5; ++g) {
      Group grp{"g" + std::to_string(g), {}};
      for (int k = 0; k < 3 + (i + g) % 6; ++k) grp.values.push_back(nd(gen) + 0.05 * g);
      groups.push_back(grp);
    }
    const auto r = anova_oneway(groups);
    worst_ss = std::max(worst_ss, std::abs(r.ss_between + r.ss_within - r.ss_total) / r.ss_total);
    if (groups.size() == 2) {
      const auto tk = tukey_hsd(groups);
      const auto tt = pooled_ttest(groups[0].values, groups[1].values);
      c.expect(std::abs(tk[0].p - tt.p) <= 1e-6, "k=2 Tukey vs t, case " + std::to_string(i));
    }
  }
  c.expect(worst_ss <= 1e-9, "SS decomposition");

  c.expect(std::abs(cohens_d({1, 2, 3}, {2, 3, 4}) + 1.0) < 1e-12, "cohens_d -1");
  c.expect(std::abs(cohens_d({2, 4, 6}, {1, 3, 5}) - 0.5) < 1e-12, "cohens_d 0.5");
  std::vector<Group> six;
  for (int g = 0; g < 6; ++g) six.push_back({"g" + std::to_string(g), {0.1 * g, 0.1 * g + 0.03, 0.1 * g + 0.01}});
  const auto bonf = bonferroni_ttests(six);
  c.expect(std::abs(bonf.threshold - 0.05 / 15) < 1e-15, "Bonferroni threshold");
  c.expect(fixed(bonf.threshold, 4) == "0.0033", "Bonferroni threshold to 4 dp");

  std::uniform_real_distribution<double> xs(0.05, 6.0), ts(-4.0, 4.0), qs(0.5, 6.0);
  std::uniform_int_distribution<int> d1(2, 12), d2(3, 60), ks(2, 8);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double x = xs(gen), p = d1(gen), q = d2(gen);
    worst = std::max(worst, std::abs(f_cdf(x, p, q) - oracle::f_cdf(x, p, q)));
    const double t = ts(gen), df = 1.5 + q / 2.0;
    worst = std::max(worst, std::abs(t_cdf(t, df) - oracle::t_cdf(t, df)));
    const double qq = qs(gen), k = ks(gen), dfe = 5 + d2(gen);
    worst = std::max(worst, std::abs(ptukey(qq, k, dfe) - oracle::ptukey(qq, k, dfe)));
  }
  c.expect(worst <= 1e-4, "distribution CDFs vs integration");
  return c.outcome("hand cases exact, SS rel err " + sci(worst_ss) + ", CDF max err " + sci(worst));
}

// ---------------------------------------------------------------------------
// 7. Determinism

Outcome determinism(const fs::path& work) {
  Checks c;
  const fs::path root = work / "rerun";
  fs::remove_all(root);
  cli::RunConfig cfg;
  cfg.seed = 11;
  cfg.synth = {16, 4000, 0.25};
  cfg.arch.dqn_hidden = {64};
  cfg.arch.guesser_hidden = {64, 32};
  cfg.train.max_episodes = 2000;
  cfg.train.val_every = 500;
  cfg.train.alternate_every = 500;
  cfg.sweep.sweep.sample_count = 40;
  cfg.sweep.sweep.epsilons = {0.1, 0.5, 1.0};
  cfg.attack.iterations = 10;
  cfg.paths.data_dir = (root / "data").string();
  cfg.paths.run_dir = (root / "run").string();
  cfg.resolve();
  cfg.validate();
  std::ostringstream log;

  const fs::path run = cfg.paths.run_dir;
  const fs::path st = cfg.stats_dir();
  const std::vector<fs::path> outputs{
      fs::path(cfg.paths.data_dir) / cli::files::kRecords,
      run / cli::files::kModel,
      run / cli::files::kHistory,
      run / cli::files::kTestCache,
      run / cli::files::kGrid,
      run / cli::files::kHeatmap,
      st / cli::files::kDescriptive,
      st / cli::files::kTests,
      st / cli::files::kTukey,
      st / cli::files::kTukeySignificant,
      st / cli::files::kBonferroni,
      st / cli::files::kEffectSizes,
      st / cli::files::kStatsReport};

  auto pipeline = [&](bool force) {
    cli::cmd_synth(cfg, force, log);
    cli::cmd_train(cfg, false, log);
    cli::cmd_sweep(cfg, log);
    cli::cmd_stats(cfg, log);
    std::vector<std::string> bytes;
    for (const auto& p : outputs) bytes.push_back(slurp(p));
    return bytes;
  };
  const auto first = pipeline(false);
  const auto second = pipeline(true);
  for (std::size_t i = 0; i < outputs.size(); ++i)
    c.expect(first[i] == second[i], outputs[i].filename().string() + " differs");
  return c.outcome(std::to_string(outputs.size()) + " files byte-identical across reruns");
}

// ---------------------------------------------------------------------------
// 8. Table-format fidelity

Outcome table_format(const fs::path& work, const fs::path& golden) {
  Checks c;
  const std::map<std::string, std::string> headers{
      {cli::files::kTests, "Statistical Test,Test Statistic,p-value,Effect Size,Interpretation"},
      {cli::files::kTukeySignificant, "Group 1,Group 2,Mean Diff(%),p-value,Significant,Level"},
      {cli::files::kTukey, "Group 1,Group 2,Mean Diff,95% CI Lower,95% CI Upper,p-value"},
      {cli::files::kBonferroni, "Group 1,Group 2,Mean Diff,t,p-value,Cohen's d,Sig"},
      {cli::files::kEffectSizes, "Group 1,Group 2,Cohen's d,Effect Size"}};
  Index compared = 0;
  for (const char* grouping : {"method", "library"}) {
    cli::RunConfig cfg;
    cfg.paths.grid = (golden / "grid.csv").string();
    cfg.paths.stats_dir = (work / "golden" / grouping).string();
    cfg.stats.grouping = stats::grouping_from_string(grouping);
    cfg.resolve();
    std::ostringstream log;
    cli::cmd_stats(cfg, log);
    const std::string label = grouping == std::string("method") ? "Method" : "Library";
    auto expected_headers = headers;
    expected_headers[cli::files::kDescriptive] = label + ",N,Mean(%),Std(%),Min(%),Max(%)";
    for (const auto& [file, header] : expected_headers) {
      const std::string got = slurp(fs::path(cfg.paths.stats_dir) / file);
      c.expect(got.substr(0, got.find('\n')) == header, std::string(grouping) + "/" + file + " header");
      c.expect(got == slurp(golden / grouping / file), std::string(grouping) + "/" + file + " differs from golden");
      ++compared;
    }
    if (grouping == std::string("method")) {
      const std::string effects = slurp(fs::path(cfg.paths.stats_dir) / cli::files::kEffectSizes);
      for (const char* l : {",Large\n", ",Medium\n", ",Small\n"})
        c.expect(effects.find(l) != std::string::npos, std::string("effect label") + l);
      const std::string bonf = slurp(fs::path(cfg.paths.stats_dir) / cli::files::kBonferroni);
      c.expect(bonf.find(",***\n") != std::string::npos, "Bonferroni significance stars");
      const std::string tukey = slurp(fs::path(cfg.paths.stats_dir) / cli::files::kTukey);
      c.expect(tukey.find("**\n") != std::string::npos, "Tukey p-value stars");
    }
  }
  return c.outcome(std::to_string(compared) + " tables match golden files and column layouts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qadv acceptance criteria"};
  std::string work = (fs::temp_directory_path() / "qadv_acceptance").string();
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory for end-to-end runs");
  app.add_option("--only", only, "Run only these criteria (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const fs::path data = QADV_TEST_DATA;
  const fs::path source = QADV_SOURCE_DIR;
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient oracle", 10, gradient_oracle},
      {2, "attack budget suite", 30, budget_suite},
      {3, "linear-model oracles", 60, linear_oracles},
      {4, "constraint suite", 20, [&] { return constraint_suite(source); }},
      {5, "end-to-end desk run", 900, [&] { return end_to_end(work); }},
      {6, "statistics oracle", 30, statistics_oracle},
      {7, "determinism", 0, [&] { return determinism(work); }},
      {8, "table-format fidelity", 0, [&] { return table_format(work, data / "golden"); }},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), cr.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = cr.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0 && secs > cr.budget_s) {
      out.pass = false;
      out.detail += " | over the " + fixed(cr.budget_s, 0) + " s budget";
    }
    failed += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << "  [" << cr.id << "] " << cr.name << ": "
              << out.detail << " (" << fixed(secs, 1) << " s)" << std::endl;
  }
  return failed ? 1 : 0;
}
