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

#include <gtest/gtest.h>

#include <set>

#include "qadv/error.hpp"
#include "qadv/evalharness.hpp"
#include "qadv/trainer.hpp"

namespace {

using namespace qadv;
using namespace qadv::eval;
using Eigen::VectorXd;

struct Fixture {
  ModelBundle model;
  data::Dataset test;
};

// One small trained model shared by the sweep tests.
const Fixture& fixture() {
  static const Fixture f = [] {
    const auto s = data::synth_generate(6, 1500, 4, 0.05);
    const auto ds = data::encode_and_normalize(s.table, s.schema);
    std::vector<Index> train_rows, test_rows;
    for (Index i = 0; i < ds.rows(); ++i) (i % 5 ? train_rows : test_rows).push_back(i);
    ArchConfig arch;
    arch.dqn_hidden = {32};
    arch.guesser_hidden = {32, 16};
    MDPConfig mdp;
    mdp.max_questions = 4;
    TrainConfig cfg;
    cfg.max_episodes = 1500;
    cfg.val_every = 250;
    cfg.alternate_every = 250;
    cfg.lr_initial = 1e-3;
    cfg.seed = 11;
    auto result = train::train(ds.subset(train_rows), arch, mdp, cfg);
    return Fixture{std::move(result.model), ds.subset(test_rows)};
  }();
  return f;
}

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.methods = {Method::FGSM, Method::PGD, Method::DeepFool};
  cfg.epsilons = {0.0, 0.1, 0.5};
  cfg.sample_count = 20;
  cfg.seed = 3;
  cfg.attack.iterations = 10;
  cfg.attack.cw_iterations = 20;
  cfg.threads = 1;
  return cfg;
}

TEST(Eval, PerturbationNorms) {
  const auto [l2, linf] = perturbation_norms(VectorXd::Zero(2), (VectorXd(2) << 3, 4).finished());
  EXPECT_DOUBLE_EQ(l2, 5.0);
  EXPECT_DOUBLE_EQ(linf, 4.0);
  EXPECT_THROW(perturbation_norms(VectorXd::Zero(2), VectorXd::Zero(3)), ShapeError);
}

TEST(Eval, SelectsDistinctCorrectRowsInOrder) {
  const auto& f = fixture();
  const auto samples = select_correct(f.model, f.test, 25, 9);
  ASSERT_EQ(samples.size(), 25u);
  std::set<Index> rows;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    EXPECT_TRUE(rows.insert(s.row).second);
    if (i) EXPECT_LT(samples[i - 1].row, s.row);
    EXPECT_EQ(s.label, f.test.labels[std::size_t(s.row)]);
    EXPECT_EQ(s.target, 1 - s.label);
    const Eigen::Vector2d p = attacks::probabilities(f.model.guesser, s.x, s.mask);
    EXPECT_EQ(p(1) > p(0) ? 1 : 0, s.label);
  }
  std::string warning;
  const auto all = select_correct(f.model, f.test, 100000, 9, &warning);
  EXPECT_FALSE(warning.empty());
  EXPECT_LT(Index(all.size()), f.test.rows() + 1);
  EXPECT_EQ(select_correct(f.model, f.test, 25, 9)[3].row, samples[3].row);
}

TEST(Eval, ZeroEpsilonNeverSucceedsAndSweepIsThreadInvariant) {
  const auto& f = fixture();
  auto cfg = small_sweep();
  const auto a = run_sweep(f.model, f.test, cfg, nullptr);
  cfg.threads = 3;
  const auto b = run_sweep(f.model, f.test, cfg, nullptr);
  EXPECT_EQ(grid_csv(a, cfg), grid_csv(b, cfg));
  EXPECT_EQ(heatmap_csv(a), heatmap_csv(b));
  ASSERT_EQ(a.cells.size(), 9u);
  for (Index m = 0; m < 3; ++m) {
    EXPECT_EQ(a.cell(m, 0).asr, 0.0);
    EXPECT_EQ(a.cell(m, 0).mean_l2, 0.0);
    for (Index e = 0; e < 3; ++e) {
      const auto& c = a.cell(m, e);
      EXPECT_EQ(c.n, 20);
      EXPECT_DOUBLE_EQ(c.asr + c.robust_accuracy, 1.0);
      EXPECT_EQ(a.heatmap(m, e), c.asr);
      EXPECT_EQ(c.unconstrained, c.n);
    }
  }
  // The larger budget finds at least as many FGSM flips on a near-linear model.
  EXPECT_GE(a.cell(0, 2).asr, a.cell(0, 1).asr);
}

TEST(Eval, ConstrainedCellsReportResolutions) {
  const auto& f = fixture();
  auto cfg = small_sweep();
  cfg.methods = {Method::PGD};
  cfg.epsilons = {0.3};
  const auto synth = data::synth_generate(6, 10, 4, 0.05);
  const constraints::Projector projector(
      constraints::ConstraintSet::parse(synth.catalog_text, f.model.schema.column_names(), "<t>", true),
      f.model.columns);
  const auto r = run_sweep(f.model, f.test, cfg, &projector);
  const auto& c = r.cell(0, 0);
  EXPECT_EQ(c.resolutions[0] + c.resolutions[1] + c.resolutions[2], c.n - c.errors);
  EXPECT_EQ(c.unconstrained, 0);
}

TEST(Eval, GridCsvRoundTripsThroughParser) {
  const auto& f = fixture();
  const auto cfg = small_sweep();
  const auto sweep = run_sweep(f.model, f.test, cfg, nullptr);
  const std::string grid = grid_csv(sweep, cfg);
  EXPECT_EQ(grid.substr(0, grid.find('\n')),
            "method,library,epsilon,norm,n,successes,asr,robust_accuracy,mean_l2,mean_linf,"
            "automatic,iterative,irreconcilable,unconstrained,errors");
  const auto rows = parse_grid_csv(grid);
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[3].method, "PGD");
  EXPECT_EQ(rows[3].library, "native");
  EXPECT_EQ(rows[4].epsilon, 0.1);
  EXPECT_EQ(rows[4].asr, sweep.cell(1, 1).asr);
  EXPECT_EQ(heatmap_csv(sweep).substr(0, 16), "method,0,0.1,0.5");
  EXPECT_NE(timing_csv(sweep).find("mean_time_s"), std::string::npos);
  EXPECT_NE(summary_csv(sweep).find("DeepFool"), std::string::npos);
  const auto report = nlohmann::json::parse(report_json(sweep, cfg, "{}"));
  EXPECT_EQ(report["cells"].size(), 9u);
}

TEST(Eval, GridParserRejectsMalformedInput) {
  EXPECT_THROW(parse_grid_csv(""), ParseError);
  EXPECT_THROW(parse_grid_csv("method,asr\nFGSM,0.1\n"), ParseError);
  try {
    parse_grid_csv("method,epsilon,asr\nFGSM,0.1,0.2\nPGD,x,0.3\n", "g.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_grid_csv("method,epsilon,asr\nFGSM,0.1,1.2\n"), ParseError);
  const auto rows = parse_grid_csv("method,epsilon,asr\r\nFGSM,0.1,0.2\r\n");
  EXPECT_EQ(rows[0].library, "native");
}

TEST(Eval, FindsInversions) {
  SweepResult s;
  s.methods = {Method::FGSM, Method::PGD};
  s.epsilons = {0.1, 0.3, 0.5};
  for (auto m : s.methods)
    for (double e : s.epsilons) {
      CellResult c;
      c.method = m;
      c.epsilon = e;
      s.cells.push_back(c);
    }
  s.cells[0].asr = 0.2;
  s.cells[1].asr = 0.15;
  s.cells[2].asr = 0.5;
  s.cells[3].asr = 0.1;
  s.cells[4].asr = 0.2;
  s.cells[5].asr = 0.3;
  s.heatmap.resize(2, 3);
  for (Index i = 0; i < 6; ++i) s.heatmap(i / 3, i % 3) = s.cells[std::size_t(i)].asr;
  const auto inv = find_inversions(s);
  ASSERT_EQ(inv.size(), 1u);
  EXPECT_EQ(inv[0].method, Method::FGSM);
  EXPECT_EQ(inv[0].from_epsilon, 0.1);
  EXPECT_EQ(inv[0].to_epsilon, 0.3);
  EXPECT_NEAR(inv[0].drop, 0.05, 1e-15);
}

TEST(Eval, ConfigValidation) {
  SweepConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epsilons = {0.3, 0.1};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SweepConfig{};
  cfg.methods.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SweepConfig{};
  cfg.sample_count = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SweepConfig{};
  cfg.library = "a,b";
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(mode_from_string(to_string(Mode::Episodic)), Mode::Episodic);
  EXPECT_THROW(mode_from_string("sideways"), ConfigError);
}

TEST(Eval, SampleSeedsDifferAcrossCells) {
  std::set<std::uint64_t> seen;
  for (auto m : attacks::all_methods())
    for (double e : {0.1, 0.3})
      for (Index i = 0; i < 5; ++i) seen.insert(sample_seed(1, m, e, i));
  EXPECT_EQ(seen.size(), 60u);
  EXPECT_EQ(sample_seed(1, Method::CW, 0.3, 2), sample_seed(1, Method::CW, 0.3, 2));
}

}  // namespace
