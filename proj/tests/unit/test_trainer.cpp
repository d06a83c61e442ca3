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

#include <random>

#include "qadv/error.hpp"
#include "qadv/trainer.hpp"

namespace {

using namespace qadv;
using Eigen::VectorXd;

TEST(Trainer, LearningRateSteps) {
  const TrainConfig cfg;
  EXPECT_DOUBLE_EQ(train::lr_at(0, cfg), 1e-4);
  EXPECT_DOUBLE_EQ(train::lr_at(17499, cfg), 1e-4);
  EXPECT_NEAR(train::lr_at(17500, cfg), 1e-5, 1e-18);
  EXPECT_NEAR(train::lr_at(35000, cfg), 1e-6, 1e-18);
  EXPECT_NEAR(train::lr_at(52500, cfg), 1e-6, 1e-18);  // floored
  EXPECT_NEAR(train::lr_at(10'000'000, cfg), 1e-6, 1e-18);
}

TEST(Trainer, EpsilonDecaysLinearlyThenHolds) {
  TrainConfig cfg;
  cfg.max_episodes = 1000;
  EXPECT_DOUBLE_EQ(train::epsilon_at(0, cfg), 1.0);
  EXPECT_NEAR(train::epsilon_at(100, cfg), 1.0 - 0.5 * 0.95, 1e-12);
  EXPECT_NEAR(train::epsilon_at(200, cfg), 0.05, 1e-12);
  EXPECT_NEAR(train::epsilon_at(900, cfg), 0.05, 1e-12);
}

TEST(Trainer, RingKeepsNewestInOrder) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Index cap = 1 + Index(gen() % 20);
    const int pushes = int(gen() % 60);
    train::Ring<int> ring(cap);
    for (int i = 0; i < pushes; ++i) ring.push(i);
    ASSERT_EQ(ring.size(), std::min<Index>(cap, pushes));
    for (Index i = 0; i < ring.size(); ++i)
      EXPECT_EQ(ring[i], pushes - ring.size() + int(i));
  }
  train::Ring<int> ring(3);
  mdp::Rng rng(1);
  EXPECT_THROW(ring.sample(1, rng), Error);
  ring.push(7);
  EXPECT_EQ(*ring.sample(1, rng)[0], 7);
  EXPECT_THROW(ring.sample(2, rng), Error);
  EXPECT_THROW(train::Ring<int>(0), ConfigError);
}

TEST(Trainer, AucCountsTiesAsHalf) {
  EXPECT_DOUBLE_EQ(train::auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}), 0.75);
  EXPECT_DOUBLE_EQ(train::auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}), 0.5);
  EXPECT_DOUBLE_EQ(train::auc({0.9, 0.1}, {0, 1}), 0.0);
  EXPECT_THROW(train::auc({0.1, 0.2}, {1, 1}), DataError);
}

TEST(Trainer, AucMatchesPairCount) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> bucket(0, 9), coin(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      s.push_back(bucket(gen) / 10.0);
      y.push_back(i < 2 ? i : coin(gen));
    }
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j)
        if (y[i] == 1 && y[j] == 0) {
          ++pairs;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    EXPECT_NEAR(train::auc(s, y), wins / pairs, 1e-12);
  }
}

TEST(Trainer, UpdateTargetCopiesAndChecksShape) {
  ArchConfig arch;
  arch.dqn_hidden = {8};
  const auto a = nn::xavier_init<double>(dqn_specs(arch, 6, 3), 1);
  auto b = nn::xavier_init<double>(dqn_specs(arch, 6, 3), 2);
  train::update_target(a, b);
  EXPECT_EQ(a.layers[0].params.weight, b.layers[0].params.weight);
  auto c = nn::xavier_init<double>(dqn_specs(arch, 8, 3), 2);
  EXPECT_THROW(train::update_target(a, c), ShapeError);
}

TEST(Trainer, ReplayUpdateFitsTerminalRewards) {
  // All transitions terminal: the TD target is the reward itself.
  ArchConfig arch;
  arch.dqn_hidden = {16};
  auto dqn = nn::xavier_init<double>(dqn_specs(arch, 4, 2), 5);
  const auto target = dqn;
  auto adam = nn::make_adam(dqn);
  train::ReplayBuffer buffer(100);
  for (int i = 0; i < 40; ++i) {
    mdp::Transition t;
    t.state = (VectorXd(4) << (i % 2 ? 0.5 : -0.5), 0.0, 1.0, 0.0).finished();
    t.action = 1;
    t.reward = i % 2 ? 1.0 : -1.0;
    t.next_state = VectorXd::Ones(4);
    t.done = true;
    buffer.push(t);
  }
  mdp::Rng rng(2);
  const double first = train::replay_update(buffer, dqn, target, adam, 16, 0.9, 1e-2, rng);
  double last = first;
  for (int i = 0; i < 300; ++i) last = train::replay_update(buffer, dqn, target, adam, 16, 0.9, 1e-2, rng);
  EXPECT_LT(last, 0.1 * first);
}

data::Dataset easy_dataset(Index rows, std::uint64_t seed) {
  const auto s = data::synth_generate(6, rows, seed, 0.05);
  return data::encode_and_normalize(s.table, s.schema);
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.max_episodes = 1500;
  cfg.val_every = 250;
  cfg.alternate_every = 250;
  cfg.lr_initial = 1e-3;
  cfg.lr_decay_every = 1000000;
  cfg.val_fraction = 0.1;
  cfg.seed = 11;
  return cfg;
}

ArchConfig quick_arch() {
  ArchConfig arch;
  arch.dqn_hidden = {32};
  arch.guesser_hidden = {32, 16};
  return arch;
}

MDPConfig quick_mdp() {
  MDPConfig mdp;
  mdp.max_questions = 4;
  return mdp;
}

TEST(Trainer, LearnsAnEasyTaskAndIsDeterministic) {
  const auto ds = easy_dataset(1500, 4);
  const auto a = train::train(ds, quick_arch(), quick_mdp(), quick_config());
  const auto b = train::train(ds, quick_arch(), quick_mdp(), quick_config());
  EXPECT_EQ(train::history_csv(a.history), train::history_csv(b.history));
  EXPECT_EQ(model_to_json(a.model), model_to_json(b.model));
  ASSERT_EQ(a.history.size(), 6u);
  EXPECT_EQ(a.history.front().episode, 250);
  EXPECT_GT(a.model.best_auc, 0.7);
  EXPECT_EQ(a.model.episodes_run, 1500);
  ASSERT_TRUE(a.model.checkpoint.has_value());
  EXPECT_EQ(a.model.checkpoint->episode, 1500);
}

TEST(Trainer, ResumeContinuesFromCheckpoint) {
  const auto ds = easy_dataset(800, 6);
  auto cfg = quick_config();
  cfg.max_episodes = 500;
  const auto first = train::train(ds, quick_arch(), quick_mdp(), cfg);
  const auto reloaded = model_from_json(model_to_json(first.model));
  cfg.max_episodes = 1000;
  train::TrainOptions opts;
  opts.resume = &reloaded;
  const auto second = train::train(ds, quick_arch(), quick_mdp(), cfg, opts);
  ASSERT_FALSE(second.history.empty());
  EXPECT_EQ(second.history.front().episode, 750);
  EXPECT_EQ(second.model.episodes_run, 1000);
  EXPECT_GE(second.model.best_auc, first.model.best_auc);
  EXPECT_GT(second.model.checkpoint->dqn_adam.step + second.model.checkpoint->guesser_adam.step,
            first.model.checkpoint->dqn_adam.step + first.model.checkpoint->guesser_adam.step);
}

TEST(Trainer, EarlyStopsAfterPatience) {
  const auto ds = easy_dataset(600, 2);
  auto cfg = quick_config();
  cfg.max_episodes = 100000;
  cfg.val_every = 50;
  cfg.early_stop_patience = 2;
  cfg.lr_initial = 1e-9;  // nothing improves
  cfg.lr_min = 1e-9;
  const auto r = train::train(ds, quick_arch(), quick_mdp(), cfg);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_LT(r.model.episodes_run, 100000);
}

TEST(Trainer, RejectsSingleClassData) {
  auto ds = easy_dataset(100, 1);
  std::fill(ds.labels.begin(), ds.labels.end(), 0);
  EXPECT_THROW(train::train(ds, quick_arch(), quick_mdp(), quick_config()), DataError);
}

}  // namespace
