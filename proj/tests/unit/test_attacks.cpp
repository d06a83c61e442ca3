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

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "qadv/attacks.hpp"
#include "qadv/error.hpp"

namespace {

using namespace qadv;
using namespace qadv::attacks;
using Eigen::VectorXd;

using oracle::clean_class;
using oracle::linear_case;

TEST(Attacks, ProjectBallExamples) {
  const VectorXd d = (VectorXd(2) << 3.0, -4.0).finished();
  EXPECT_EQ(project_ball(d, 1.0, Norm::Linf), (VectorXd(2) << 1.0, -1.0).finished());
  EXPECT_TRUE(project_ball(d, 1.0, Norm::L2).isApprox((VectorXd(2) << 0.6, -0.8).finished(), 1e-15));
  EXPECT_EQ(project_ball(d, 10.0, Norm::L2), d);
  EXPECT_EQ(project_ball(d, std::numeric_limits<double>::infinity(), Norm::Linf), d);
  EXPECT_TRUE(project_ball(d, 0.0, Norm::L2).isZero());
  EXPECT_THROW(project_ball(d, -1.0, Norm::L2), ConfigError);
}

TEST(Attacks, FgsmOnLinearModelMovesAlongSignOfWeights) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto lc = linear_case(gen, 8);
    const auto net = oracle::linear_guesser(lc.w, lc.b);
    const int target = 1 - clean_class(lc);
    const double eps = 0.1 + 0.05 * (trial % 5);
    const auto r = fgsm(net, lc.x, lc.m, target, eps, nullptr);
    // Raising class 1 means moving along +w; class 0 along -w.
    const double dir = target == 1 ? 1.0 : -1.0;
    for (Index i = 0; i < 8; ++i) {
      const double wi = lc.w(i) * lc.m(i);
      const double expected = lc.x(i) + dir * eps * double((wi > 0) - (wi < 0));
      EXPECT_DOUBLE_EQ(r.x_adv(i), expected) << "trial " << trial << " i " << i;
    }
    const double gap = oracle::linear_logit_gap(lc.w, lc.b, r.x_adv, lc.m);
    EXPECT_EQ(r.success, (gap > 0.0) == (target == 1));
  }
}

TEST(Attacks, DeepFoolOnLinearModelIsExactProjection) {
  std::mt19937_64 gen(5);
  AttackConfig cfg;
  cfg.method = Method::DeepFool;
  cfg.epsilon = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const auto lc = linear_case(gen, 10);
    const auto net = oracle::linear_guesser(lc.w, lc.b);
    const double dstar = oracle::linear_boundary_distance(lc.w, lc.b, lc.x, lc.m);
    const auto r = deepfool(net, lc.x, lc.m, cfg, nullptr);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.iterations_run, 1);
    EXPECT_NEAR(r.l2_norm, 1.02 * dstar, 1e-9);
    // Direction is along the masked weight vector.
    const VectorXd wm = lc.w.cwiseProduct(lc.m);
    EXPECT_NEAR(std::abs(r.delta.dot(wm)) / (r.delta.norm() * wm.norm()), 1.0, 1e-9);
  }
}

TEST(Attacks, CarliniWagnerOnLinearModelNearsBoundaryDistance) {
  std::mt19937_64 gen(13);
  AttackConfig cfg;
  cfg.method = Method::CW;
  cfg.epsilon = std::numeric_limits<double>::infinity();
  cfg.cw_c = 10.0;
  cfg.cw_iterations = 1000;
  for (int trial = 0; trial < 40; ++trial) {
    const auto lc = linear_case(gen, 6);
    const auto net = oracle::linear_guesser(lc.w, lc.b);
    const double dstar = oracle::linear_boundary_distance(lc.w, lc.b, lc.x, lc.m);
    const int target = 1 - clean_class(lc);
    const auto r = cw(net, lc.x, lc.m, target, cfg, nullptr);
    ASSERT_TRUE(r.success) << "trial " << trial;
    EXPECT_GE(r.l2_norm, dstar * (1.0 - 1e-9));
    EXPECT_LE(r.l2_norm, 1.10 * dstar) << "trial " << trial;
  }
}

TEST(Attacks, CarliniWagnerWithTinyConstantRarelySucceeds) {
  std::mt19937_64 gen(2);
  AttackConfig cfg;
  cfg.method = Method::CW;
  int successes = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto lc = linear_case(gen, 6);
    const auto net = oracle::linear_guesser(lc.w, lc.b);
    successes += cw(net, lc.x, lc.m, 1 - clean_class(lc), cfg, nullptr).success;
  }
  EXPECT_EQ(successes, 0);
}

Net random_guesser(std::mt19937_64& gen, Index c) {
  ArchConfig arch;
  arch.guesser_hidden = {Index(4 + gen() % 12), Index(4 + gen() % 8)};
  auto net = nn::xavier_init<double>(guesser_specs(arch, 2 * c), gen());
  net.mode = nn::Mode::Eval;
  return net;
}

TEST(Attacks, IterativeAttacksStayInBallAndOffInactiveCoordinates) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const Index c = 3 + Index(gen() % 8);
    const auto net = random_guesser(gen, c);
    const VectorXd x = VectorXd::NullaryExpr(c, [&] { return u(gen); });
    VectorXd m = VectorXd::NullaryExpr(c, [&] { return double(gen() % 2); });
    AttackConfig cfg;
    cfg.epsilon = 0.05 + 0.3 * (trial % 4);
    cfg.iterations = 10;
    for (auto [method, norm] : {std::pair{Method::FGSM, Norm::Linf}, {Method::PGD, Norm::Linf},
                                {Method::PGD, Norm::L2}, {Method::BIM, Norm::L2}}) {
      cfg.method = method;
      cfg.norm = norm;
      const auto r = run(net, x, m, int(trial % 2), cfg, nullptr);
      const Norm effective = method == Method::BIM ? Norm::Linf : norm;
      const double size = effective == Norm::Linf ? r.linf_norm : r.l2_norm;
      EXPECT_LE(size, cfg.epsilon * (1.0 + 1e-12));
      for (Index i = 0; i < c; ++i)
        if (m(i) == 0.0) EXPECT_EQ(r.delta(i), 0.0);
    }
  }
}

TEST(Attacks, BimMatchesLinfPgd) {
  std::mt19937_64 gen(3);
  const auto net = random_guesser(gen, 5);
  const VectorXd x = VectorXd::LinSpaced(5, -0.5, 0.5);
  const VectorXd m = VectorXd::Ones(5);
  AttackConfig cfg;
  cfg.epsilon = 0.3;
  cfg.norm = Norm::Linf;
  EXPECT_EQ(bim(net, x, m, 1, cfg, nullptr).x_adv, pgd(net, x, m, 1, cfg, nullptr).x_adv);
}

TEST(Attacks, AutoAttackSucceedsWhenAnyComponentDoes) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int any_count = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Index c = 4;
    const auto net = random_guesser(gen, c);
    const VectorXd x = VectorXd::NullaryExpr(c, [&] { return u(gen); });
    const VectorXd m = VectorXd::Ones(c);
    AttackConfig cfg;
    cfg.method = Method::AutoAttack;
    cfg.epsilon = 0.3;
    cfg.iterations = 10;
    cfg.cw_iterations = 50;
    const int target = 1 - int(probabilities(net, x, m)(1) > probabilities(net, x, m)(0));
    bool any = false;
    for (Method comp : cfg.ensemble) any |= run(net, x, m, target, cfg.with(comp), nullptr).success;
    const auto r = autoattack(net, x, m, target, cfg, nullptr);
    EXPECT_EQ(r.success, any);
    any_count += any;
  }
  EXPECT_GT(any_count, 0);
}

TEST(Attacks, ConstraintProjectionLeavesInactiveCoordinatesAlone) {
  const auto schema = Schema::load(std::filesystem::path(QADV_SOURCE_DIR) / "data/clinical_schema.txt");
  const auto cset = constraints::ConstraintSet::load(
      std::filesystem::path(QADV_SOURCE_DIR) / "data/clinical_catalog.txt", schema.column_names());
  const Projector projector(cset, schema.columns());
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = random_guesser(gen, 10);
    VectorXd x = VectorXd::NullaryExpr(10, [&] { return u(gen); });
    for (Index i = 5; i < 10; ++i) x(i) = -1.0;  // binary columns at "no"
    x(1) = -1.0;
    VectorXd m = VectorXd::NullaryExpr(10, [&] { return double(gen() % 2); });
    AttackConfig cfg;
    cfg.method = Method::PGD;
    cfg.epsilon = 0.8;
    const auto r = run(net, x, m, int(trial % 2), cfg, &projector);
    ASSERT_TRUE(r.constraint_report.has_value());
    for (Index i = 0; i < 10; ++i)
      if (m(i) == 0.0) EXPECT_EQ(r.delta(i), 0.0);
    // Bounded continuous columns land inside their range; binary columns
    // are perturbed continuously and only re-binarized by rules.
    for (Index i : {0, 2, 3, 4}) EXPECT_LE(std::abs(r.x_adv(i)), 1.0 + 1e-12) << "column " << i;
  }
}

TEST(Attacks, ConfigValidationAndNames) {
  EXPECT_EQ(method_from_string("C&W"), Method::CW);
  EXPECT_EQ(method_from_string("cw"), Method::CW);
  EXPECT_EQ(method_from_string("autoattack"), Method::AutoAttack);
  EXPECT_THROW(method_from_string("bogus"), ConfigError);
  EXPECT_EQ(norm_from_string("l2"), Norm::L2);
  EXPECT_THROW(norm_from_string("L1"), ConfigError);
  AttackConfig cfg;
  cfg.epsilon = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AttackConfig{};
  cfg.ensemble = {Method::AutoAttack};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AttackConfig{};
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AttackConfig{};
  EXPECT_DOUBLE_EQ(cfg.alpha(), 0.1 / 40);
  const auto net = oracle::linear_guesser(VectorXd::Ones(3), 0.0);
  EXPECT_THROW(fgsm(net, VectorXd::Zero(4), VectorXd::Ones(4), 1, 0.1, nullptr), ShapeError);
  cfg.epsilon = std::numeric_limits<double>::infinity();
  EXPECT_THROW(pgd(net, VectorXd::Zero(3), VectorXd::Ones(3), 1, cfg, nullptr), ConfigError);
  EXPECT_THROW(fgsm(net, VectorXd::Zero(3), VectorXd::Ones(3), 2, 0.1, nullptr), Error);
}

}  // namespace
