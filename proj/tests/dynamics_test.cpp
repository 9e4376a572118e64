// Copyright 2026 The conjstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "conjstack/analysis.hpp"
#include "conjstack/builtin_games.hpp"
#include "conjstack/dynamics.hpp"
#include "conjstack/experiment.hpp"
#include "test_support.hpp"

namespace conjstack {
namespace {

ConjectureSet affine_pair(double s12, double s21, std::optional<std::pair<double, double>> follower = std::nullopt) {
  ConjectureSet c;
  c.leaders.resize(2);
  c.leaders[0].about.emplace(1, ConjectureModel(Affine{s12, 0.0}));
  c.leaders[1].about.emplace(0, ConjectureModel(Affine{s21, 0.0}));
  if (follower) {
    c.leaders[0].follower = ConjectureModel(Affine{follower->first, 0.0});
    c.leaders[1].follower = ConjectureModel(Affine{follower->second, 0.0});
  }
  return c;
}

LinearQuadraticOptions lq_options() {
  LinearQuadraticOptions o;
  o.a = {0.4, -0.2};
  o.b = {{0.0, 0.7}, {-0.3, 0.0}};
  o.c = {-1.0, 0.6};
  o.q = 2.0;
  o.p = {1.0, -0.5};
  o.r = 0.3;
  o.follower_box = ActionBox(-5.0, 5.0);
  return o;
}

PlayConfig play_config(std::size_t iterations, double eta, PlayMode mode) {
  PlayConfig c;
  c.iterations = iterations;
  c.schedule = StepSchedule::constant(eta);
  c.mode = mode;
  return c;
}

TEST(StepSchedule, Validation) {
  EXPECT_THROW(StepSchedule::constant(0.0), config_error);
  EXPECT_THROW(StepSchedule::robbins_monro(0.1, 0.5), config_error);
  EXPECT_THROW(StepSchedule::robbins_monro(0.1, 1.01), config_error);
  EXPECT_THROW(StepSchedule::robbins_monro(-0.1, 0.6), config_error);
  EXPECT_NO_THROW(StepSchedule::robbins_monro(0.1, 1.0));
  const auto rm = StepSchedule::robbins_monro(0.02, 0.6);
  EXPECT_EQ(rm.at(0), 0.02);
  EXPECT_DOUBLE_EQ(rm.at(9), 0.02 / std::pow(10.0, 0.6));
  EXPECT_EQ(StepSchedule::constant(0.3).at(1000), 0.3);
}

TEST(PlayConfig, Validation) {
  PlayConfig c;
  c.iterations = 0;
  EXPECT_THROW(c.validate(), config_error);
  c = PlayConfig{};
  c.stop_tolerance = -1.0;
  EXPECT_THROW(c.validate(), config_error);
  c = PlayConfig{};
  c.gradient_noise_std = -0.1;
  EXPECT_THROW(c.validate(), config_error);
}

TEST(ConjecturedGradient, ConstantConjecturesGiveTruePartial) {
  const GameSpec g = olsder_game();
  const ConjectureSet c = affine_pair(0.0, 0.0);
  ConjectureSet shifted = c;
  shifted.leaders[0].about.at(1) = ConjectureModel(Affine{0.0, 61.6});
  const auto d = conjectured_gradient(g, shifted, 0, 123.98, PlayMode::simultaneous);
  EXPECT_EQ(d.others, 0.0);
  EXPECT_EQ(d.follower, 0.0);
  EXPECT_EQ(d.total, -olsder::df1_dx1(123.98, 61.6));
}

TEST(ConjecturedGradient, LinearQuadraticFormula) {
  const GameSpec g = linear_quadratic(lq_options());
  const ConjectureSet c = affine_pair(0.3, -0.6, std::pair{0.5, 0.2});
  const auto d1 = conjectured_gradient(g, c, 0, 0.1, PlayMode::stackelberg);
  const auto d2 = conjectured_gradient(g, c, 1, -0.4, PlayMode::stackelberg);
  EXPECT_DOUBLE_EQ(d1.own, 0.4);
  EXPECT_DOUBLE_EQ(d1.others, 0.7 * 0.3);
  EXPECT_DOUBLE_EQ(d1.follower, -1.0 * 0.5);
  EXPECT_DOUBLE_EQ(d1.total, 0.4 + 0.7 * 0.3 - 0.5);
  EXPECT_DOUBLE_EQ(d2.total, -0.2 + (-0.3) * (-0.6) + 0.6 * 0.2);
  const auto s1 = conjectured_gradient(g, c, 0, 0.1, PlayMode::simultaneous);
  EXPECT_EQ(s1.follower, 0.0);
  EXPECT_DOUBLE_EQ(s1.total, 0.4 + 0.7 * 0.3);
}

TEST(ConjecturedGradient, IdentityConjecturesAtDilemmaSaddle) {
  const GameSpec g = leaders_dilemma(-1.5);
  const ConjectureSet c = affine_pair(1.0, 1.0, std::pair{1.0, 1.0});
  const auto p = conjectured_profile(g, c, 0, 0.0, PlayMode::stackelberg);
  EXPECT_EQ(p.leader_actions, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(p.follower_action, 0.0);
  const auto d = conjectured_gradient(g, c, 0, 0.0, PlayMode::stackelberg);
  EXPECT_EQ(d.own, 0.0);
  EXPECT_EQ(d.others, 0.0);
  EXPECT_EQ(d.follower, 0.0);
  EXPECT_EQ(d.total, 0.0);
}

TEST(ConjecturedGradient, MatchesDifferenceOfConjecturedObjective) {
  const GameSpec g = leaders_dilemma(-1.5);
  ConjectureSet c = affine_pair(0.7, -0.4);
  c.leaders[0].follower = ConjectureModel(Polynomial{{0.0, 1.0, 1.0}});
  c.leaders[1].follower = ConjectureModel(NeuralNet::initialized(5, 3));
  for (double x : {-1.5, -0.2, 0.3, 1.1}) {
    for (std::size_t i = 0; i < 2; ++i) {
      const double h = 1e-6;
      const double fd = (conjectured_objective(g, c, i, x + h, PlayMode::stackelberg) -
                         conjectured_objective(g, c, i, x - h, PlayMode::stackelberg)) /
                        (2 * h);
      // Leaders maximize, so the descent-form gradient is the negative derivative.
      EXPECT_LE(testing::rel_err(conjectured_gradient(g, c, i, x, PlayMode::stackelberg).total, -fd), 1e-6);
    }
  }
}

TEST(ConjecturedGradient, MissingConjectureIsConfigError) {
  const GameSpec g = leaders_dilemma(-1.5);
  const ConjectureSet c = affine_pair(1.0, 1.0);
  EXPECT_THROW(conjectured_gradient(g, c, 0, 0.0, PlayMode::stackelberg), config_error);
  EXPECT_NO_THROW(conjectured_gradient(g, c, 0, 0.0, PlayMode::simultaneous));
  EXPECT_THROW(run_conjectural_dynamics(g, c, play_config(10, 0.01, PlayMode::stackelberg), {{0.0, 0.0}, 0.0}),
               config_error);
}

TEST(Play, StackelbergNeedsFollower) {
  EXPECT_THROW(run_gd_baseline(olsder_game(), play_config(10, 0.01, PlayMode::stackelberg), {{1.0, 1.0}, 0.0}),
               config_error);
}

TEST(Play, ZeroGradientStartGivesConstantTrace) {
  const GameSpec g = leaders_dilemma(-1.5);
  const ConjectureSet c = affine_pair(1.0, 1.0, std::pair{1.0, 1.0});
  const StrategyProfile origin{{0.0, 0.0}, 0.0};
  for (const RunTrace& t : {run_conjectural_dynamics(g, c, play_config(200, 0.01, PlayMode::stackelberg), origin),
                            run_gd_baseline(g, play_config(200, 0.01, PlayMode::stackelberg), origin)}) {
    ASSERT_EQ(t.rows.size(), 201u);
    for (const auto& r : t.rows) {
      EXPECT_EQ(r.leader_actions, origin.leader_actions);
      EXPECT_EQ(r.follower_action, 0.0);
    }
  }
}

TEST(Play, FirstRowIsInitialProfileAndFollowerBestResponds) {
  const GameSpec g = olsder_game({400.0, OlsderMode::stackelberg});
  const RunTrace t = run_gd_baseline(g, play_config(5, 1e-3, PlayMode::stackelberg), {{100.0}, 0.0});
  EXPECT_EQ(t.rows.front().leader_actions, std::vector<double>{100.0});
  EXPECT_DOUBLE_EQ(*t.rows.front().follower_action, 0.25 * 100.0 + 30.6);
  for (const auto& r : t.rows) EXPECT_DOUBLE_EQ(*r.follower_action, 0.25 * r.leader_actions[0] + 30.6);
  EXPECT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.final_row().t, 5u);
}

TEST(Play, GdBaselineStaysInDilemmaSaddleFromSymmetricStart) {
  const GameSpec g = leaders_dilemma(-1.5);
  const RunTrace t = run_gd_baseline(g, play_config(10000, 0.01, PlayMode::stackelberg), {{0.5, 0.5}, 0.0});
  const auto& r = t.final_row();
  EXPECT_LT(std::abs(r.leader_actions[0] - r.leader_actions[1]), 1e-3);
  EXPECT_NEAR(r.leader_objectives[0], 0.0, 1e-3);
  EXPECT_NEAR(r.leader_objectives[1], 0.0, 1e-3);
}

TEST(Play, GdBaselineReachesOlsderNash) {
  const RunTrace t = run_gd_baseline(olsder_game(), play_config(5000, 1e-3, PlayMode::simultaneous), {{100.0, 50.0}, 0.0});
  EXPECT_NEAR(t.final_row().leader_actions[0], 123.98, 0.5);
  EXPECT_NEAR(t.final_row().leader_actions[1], 61.6, 0.5);
}

class PipelineRun : public ::testing::Test {
 protected:
  static RunTrace train_and_play(const std::string& experiment, const std::string& label,
                                 std::optional<std::vector<double>> x0 = std::nullopt) {
    ExperimentConfig cfg = builtin_config(experiment);
    select_runs(cfg, {label});
    if (x0) cfg.runs[0].x0 = *x0;
    const auto out = testing::scratch_dir("dynamics_" + label);
    (void)train_run(cfg, cfg.runs[0], out);
    return play_run(cfg, cfg.runs[0], out);
  }
};

TEST_F(PipelineRun, OlsderStackelbergAffineBetweenNashAndStackelberg) {
  const RunTrace t = train_and_play("olsder", "S_affine");
  const auto f = t.final_player_objectives();
  ASSERT_EQ(f.size(), 2u);
  EXPECT_GE(f[0], 19979.8 * 0.98);
  EXPECT_GE(f[1], 6722.13 * 0.98);
  EXPECT_LE(f[0], 21411.6 * 1.02);
  EXPECT_LE(f[1], 11415.8 * 1.02);
}

TEST_F(PipelineRun, DilemmaQuadraticSeparatesLeaders) {
  // Mirrored start; the symmetric one keeps both leaders on the same branch.
  const RunTrace t = train_and_play("dilemma", "quadratic", std::vector<double>{-0.5, 0.5});
  const auto& r = t.final_row();
  EXPECT_NEAR(std::abs(r.leader_actions[0] - r.leader_actions[1]), 2 * std::sqrt(std::log(1.5)), 0.15);
  EXPECT_NEAR(r.leader_objectives[0], testing::dilemma_f, 0.02);
  EXPECT_NEAR(r.leader_objectives[1], testing::dilemma_f, 0.02);
}

TEST(Play, StopToleranceIsConsistentWithFinalGradient) {
  const GameSpec g = olsder_game();
  const ConjectureSet c = affine_pair(0.25, 0.84);
  PlayConfig cfg = play_config(100000, 1e-3, PlayMode::simultaneous);
  cfg.stop_tolerance = 1e-4;
  const RunTrace t = run_conjectural_dynamics(g, c, cfg, {{100.0, 50.0}, 0.0});
  ASSERT_TRUE(t.stopped_early);
  EXPECT_LT(t.rows.size(), 100001u);
  for (std::size_t i = 0; i < 2; ++i) {
    const double x = t.final_row().leader_actions[i];
    EXPECT_LT(std::abs(conjectured_gradient(g, c, i, x, PlayMode::simultaneous).total), 1e-4);
  }
}

TEST(Play, IteratesStayInBoxes) {
  const GameSpec g = leaders_dilemma(-1.5);
  const ConjectureSet c = affine_pair(-1.0, 2.0, std::pair{3.0, -2.0});
  PlayConfig cfg = play_config(500, 0.8, PlayMode::stackelberg);
  cfg.gradient_noise_std = 2.0;
  cfg.seed = 4;
  const RunTrace t = run_conjectural_dynamics(g, c, cfg, {{1.9, -1.9}, 0.0});
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < 2; ++i) EXPECT_TRUE(g.leader_box(i).contains(r.leader_actions[i]));
    EXPECT_TRUE(g.follower_box().contains(*r.follower_action));
  }
}

TEST(Play, DeterministicAndParallelEquivalent) {
  const GameSpec g = olsder_game();
  const ConjectureSet c = affine_pair(0.3, 0.8);
  PlayConfig cfg = play_config(2000, 1e-3, PlayMode::simultaneous);
  cfg.gradient_noise_std = 0.5;
  cfg.seed = 17;
  const StrategyProfile x0{{100.0, 50.0}, 0.0};
  const std::string a = trace_csv(run_conjectural_dynamics(g, c, cfg, x0));
  EXPECT_EQ(a, trace_csv(run_conjectural_dynamics(g, c, cfg, x0)));
  cfg.parallel = true;
  EXPECT_EQ(a, trace_csv(run_conjectural_dynamics(g, c, cfg, x0)));
  cfg.parallel = false;
  cfg.seed = 18;
  EXPECT_NE(a, trace_csv(run_conjectural_dynamics(g, c, cfg, x0)));
}

TEST(Play, ConstantStepDescendsConjecturedObjective) {
  const GameSpec g = leaders_dilemma(-1.5);
  ConjectureSet c = affine_pair(0.5, 0.5);
  c.leaders[0].about.at(1) = ConjectureModel(Affine{0.5, 0.1});
  c.leaders[0].follower = ConjectureModel(Polynomial{{0.0, 0.0, 1.0}});
  c.leaders[1].follower = ConjectureModel(Polynomial{{0.0, 0.0, 1.0}});
  // Only leader 1 moves; its conjectured objective depends on its own action alone.
  double x = 0.5;
  double previous = -conjectured_objective(g, c, 0, x, PlayMode::stackelberg);
  for (int t = 0; t < 2000; ++t) {
    x = g.leader_box(0).project(x - 0.01 * conjectured_gradient(g, c, 0, x, PlayMode::stackelberg).total);
    const double now = -conjectured_objective(g, c, 0, x, PlayMode::stackelberg);
    EXPECT_LE(now, previous + 1e-15) << "step " << t;
    previous = now;
  }
}

TEST(Play, RunawayIteratesRaiseDivergenceError) {
  const GameSpec g = leaders_dilemma(-1.5, ActionBox(-1e12, 1e12));
  try {
    (void)run_gd_baseline(g, play_config(200, 2.0, PlayMode::simultaneous), {{0.5, -0.25}, 0.0});
    FAIL() << "expected divergence_error";
  } catch (const divergence_error& e) {
    EXPECT_GT(e.iteration(), 0u);
    EXPECT_LT(e.iteration(), 200u);
  }
}

TEST(TraceCsv, RoundTrip) {
  const GameSpec s = olsder_game({400.0, OlsderMode::stackelberg});
  const RunTrace a = run_gd_baseline(s, play_config(20, 1e-3, PlayMode::stackelberg), {{100.0}, 0.0}, "S_GD");
  const std::string text = trace_csv(a);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,x_1,y,grad_1,f_1,g");
  EXPECT_EQ(trace_csv(parse_trace_csv(text, "S_GD")), text);

  const RunTrace b = run_gd_baseline(olsder_game(), play_config(20, 1e-3, PlayMode::simultaneous), {{100.0, 50.0}, 0.0});
  const std::string tb = trace_csv(b);
  EXPECT_EQ(tb.substr(0, tb.find('\n')), "t,x_1,x_2,y,grad_1,grad_2,f_1,f_2,g");
  const RunTrace back = parse_trace_csv(tb, "N_GD");
  EXPECT_FALSE(back.rows[3].follower_action.has_value());
  EXPECT_EQ(trace_csv(back), tb);
  EXPECT_THROW(parse_trace_csv("t,y,g\n", "bad"), parse_error);
}

TEST(RunTrace, EmptyTraceHasNoFinalRow) {
  RunTrace t;
  EXPECT_THROW((void)t.final_row(), input_error);
}

}  // namespace
}  // namespace conjstack
