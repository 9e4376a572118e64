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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "conjstack/builtin_games.hpp"
#include "conjstack/game.hpp"
#include "conjstack/scalar_solver.hpp"
#include "test_support.hpp"

namespace conjstack {
namespace {

using testing::rel_err;

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

GameSpec olsder_s() { return olsder_game({400.0, OlsderMode::stackelberg}); }

TEST(ActionBox, RejectsEmptyOrNonFinite) {
  EXPECT_THROW(ActionBox(1.0, 1.0), config_error);
  EXPECT_THROW(ActionBox(2.0, 1.0), config_error);
  EXPECT_THROW(ActionBox(0.0, INFINITY), config_error);
}

TEST(ActionBox, ProjectionIsIdempotent) {
  const ActionBox b(-2.0, 3.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int k = 0; k < 1000; ++k) {
    const double once = b.project(u(rng));
    EXPECT_EQ(b.project(once), once);
    EXPECT_TRUE(b.contains(once));
  }
}

TEST(Evaluate, DilemmaAtOriginIsZero) {
  const GameSpec g = leaders_dilemma(-1.5);
  EXPECT_EQ(evaluate(g, {{0.0, 0.0}, 0.0}, PlayerId::leader(0)), 0.0);
}

TEST(Evaluate, OlsderVanishesAtX1Equal84) {
  const GameSpec g = olsder_game();
  EXPECT_EQ(evaluate(g, {{84.0, 50.0}, 0.0}, PlayerId::leader(0)), 0.0);
}

TEST(Evaluate, OlsderNashValueMatchesTable) {
  const GameSpec g = olsder_game();
  EXPECT_NEAR(evaluate(g, {{123.98, 61.6}, 0.0}, PlayerId::leader(0)), 19979.8, 5.0);
}

TEST(Evaluate, OutOfBoxNamesCoordinate) {
  const GameSpec g = leaders_dilemma(-1.5);
  try {
    (void)evaluate(g, {{0.0, 2.5}, 0.0}, PlayerId::leader(0));
    FAIL() << "expected domain_error";
  } catch (const domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("x_2"), std::string::npos) << e.what();
  }
  try {
    (void)evaluate(g, {{0.0, 0.0}, -3.0}, PlayerId::follower());
    FAIL() << "expected domain_error";
  } catch (const domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("y"), std::string::npos) << e.what();
  }
  EXPECT_THROW((void)evaluate(olsder_game(), {{0.0, 0.0}, 0.0}, PlayerId::follower()), domain_error);
}

TEST(Evaluate, FollowerObjective) {
  const GameSpec g = leaders_dilemma(-1.5);
  EXPECT_DOUBLE_EQ(evaluate(g, {{1.0, 0.0}, 0.0}, PlayerId::follower()), 0.25);
}

TEST(Partials, DilemmaOriginIsStationary) {
  const Partials p = partials(leaders_dilemma(-1.5), {{0.0, 0.0}, 0.0}, PlayerId::leader(0));
  EXPECT_EQ(p.own, 0.0);
  ASSERT_EQ(p.others.size(), 1u);
  EXPECT_EQ(p.others[0], 0.0);
  EXPECT_EQ(p.follower, 0.0);
}

TEST(Partials, OlsderOwnPartialVanishesAtNash) {
  const GameSpec g = olsder_game();
  const Partials p = partials(g, {{testing::ne_x1, testing::ne_x2}, 0.0}, PlayerId::leader(0));
  EXPECT_NEAR(p.own, 0.0, 1e-6);
  // Hand-derived: d f1/d x1 = -25 x1 + 21 x2 + 1806, d f1/d x2 = 21 (x1 - 84).
  const Partials q = partials(g, {{100.0, 40.0}, 0.0}, PlayerId::leader(0));
  EXPECT_DOUBLE_EQ(q.own, -25.0 * 100.0 + 21.0 * 40.0 + 1806.0);
  EXPECT_DOUBLE_EQ(q.others[0], 21.0 * 16.0);
  const Partials r = partials(g, {{100.0, 40.0}, 0.0}, PlayerId::leader(1));
  EXPECT_DOUBLE_EQ(r.own, 25.0 * 100.0 - 100.0 * 40.0 + 3060.0);
  EXPECT_DOUBLE_EQ(r.others[0], 25.0 * (40.0 - 50.0));
}

TEST(Partials, LinearQuadraticOwnPartialIsCoefficient) {
  const GameSpec g = linear_quadratic(lq_options());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const StrategyProfile p{{u(rng), u(rng)}, 4.0 * u(rng)};
    EXPECT_EQ(partials(g, p, PlayerId::leader(0)).own, 0.4);
    EXPECT_EQ(partials(g, p, PlayerId::leader(1)).own, -0.2);
  }
}

// Central differences of every analytic partial at random interior profiles.
// The step is 1e-5 of each coordinate's box width.
void check_partials_by_differences(const GameSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&](const ActionBox& b) {
    const double m = 1e-3 * b.width();
    return std::uniform_real_distribution<double>(b.lower() + m, b.upper() - m)(rng);
  };
  const std::size_t n = g.leader_count();
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = draw(g.leader_box(i));
    const double y = g.has_follower() ? draw(g.follower_box()) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Partials p = g.leader_partials(i, x, y);
      for (std::size_t j = 0, k = 0; j < n; ++j) {
        const double h = 1e-5 * g.leader_box(j).width();
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (g.leader_value(i, xp, y) - g.leader_value(i, xm, y)) / (2 * h);
        const double an = j == i ? p.own : p.others[k++];
        worst = std::max(worst, rel_err(an, fd));
      }
      if (g.has_follower()) {
        const double h = 1e-5 * g.follower_box().width();
        const double fd = (g.leader_value(i, x, y + h) - g.leader_value(i, x, y - h)) / (2 * h);
        worst = std::max(worst, rel_err(p.follower, fd));
      }
    }
    if (g.has_follower()) {
      const double h = 1e-5 * g.follower_box().width();
      const double fd = (g.follower_value(x, y + h) - g.follower_value(x, y - h)) / (2 * h);
      worst = std::max(worst, rel_err(g.follower_derivative(x, y), fd));
    }
  }
  EXPECT_LE(worst, 1e-6) << g.name();
}

TEST(PartialsProperty, DilemmaMatchesDifferences) { check_partials_by_differences(leaders_dilemma(-1.5), 11); }
TEST(PartialsProperty, OlsderSimultaneousMatchesDifferences) { check_partials_by_differences(olsder_game(), 12); }
TEST(PartialsProperty, OlsderStackelbergMatchesDifferences) { check_partials_by_differences(olsder_s(), 13); }
TEST(PartialsProperty, LinearQuadraticMatchesDifferences) {
  check_partials_by_differences(linear_quadratic(lq_options()), 14);
}

TEST(FollowerBestResponse, DilemmaMeanAndBoundary) {
  const GameSpec g = leaders_dilemma(-1.5);
  EXPECT_EQ(follower_best_response(g, std::vector<double>{1.0, -1.0}), 0.0);
  EXPECT_EQ(follower_best_response(g, std::vector<double>{2.0, 2.0}), 2.0);
}

TEST(FollowerBestResponse, DilemmaIsProjectedMeanExactly) {
  const GameSpec g = leaders_dilemma(-1.5);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const std::vector<double> x{u(rng), u(rng)};
    EXPECT_EQ(follower_best_response(g, x), g.follower_box().project((x[0] + x[1]) / 2));
  }
}

TEST(FollowerBestResponse, OlsderStackelbergFollowerLine) {
  EXPECT_NEAR(follower_best_response(olsder_s(), std::vector<double>{123.98}), 61.6, 0.01);
}

TEST(FollowerBestResponse, NumericRouteMatchesClosedForm) {
  const GameSpec g = olsder_s();
  for (double x1 : {0.0, 7.0, 123.98, 250.0, 400.0}) {
    const std::vector<double> x{x1};
    EXPECT_NEAR(follower_best_response_numeric(g, x), follower_best_response(g, x), 1e-8);
    const double y = follower_best_response_numeric(g, x);
    auto d = [&](double v) { return g.follower_derivative(x, v); };
    EXPECT_LE(projected_residual(d, g.follower_box(), g.follower_sense(), y), 1e-10);
  }
  const GameSpec lq = linear_quadratic(lq_options());
  const std::vector<double> x{0.3, -0.8};
  EXPECT_NEAR(follower_best_response_numeric(lq, x), (0.3 + 0.4 + 0.3) / 2.0, 1e-10);
}

TEST(LeaderBestResponse, OlsderLines) {
  const GameSpec g = olsder_game();
  EXPECT_NEAR(leader_best_response(g, 0, std::vector<double>{61.6}, 0.0), 123.98, 0.01);
  EXPECT_NEAR(leader_best_response(g, 1, std::vector<double>{0.0}, 0.0), 30.6, 0.01);
  EXPECT_NEAR(leader_best_response_numeric(g, 0, std::vector<double>{0.0, 61.6}, 0.0), 0.84 * 61.6 + 72.24, 1e-8);
  EXPECT_NEAR(leader_best_response_numeric(g, 1, std::vector<double>{0.0, 0.0}, 0.0), 30.6, 1e-8);
}

TEST(LeaderBestResponse, DilemmaTracksFollower) {
  const GameSpec g = leaders_dilemma(-1.5);
  for (double x2 : {-2.0, -0.3, 1.7}) {
    EXPECT_EQ(leader_best_response(g, 0, std::vector<double>{x2}, 0.0), 0.0);
    EXPECT_NEAR(leader_best_response_numeric(g, 0, std::vector<double>{0.0, x2}, 0.0), 0.0, 1e-9);
  }
}

TEST(LeaderBestResponse, LinearGameGoesToACorner) {
  const GameSpec g = linear_quadratic(lq_options());
  EXPECT_EQ(leader_best_response(g, 0, std::vector<double>{0.2}, 1.0), -1.0);
  EXPECT_EQ(leader_best_response(g, 1, std::vector<double>{0.2}, 1.0), 1.0);
}

TEST(LeaderBestResponse, AlternatingOlsderResponsesReachNash) {
  const GameSpec g = olsder_game();
  double x1 = 0.0, x2 = 0.0;
  for (int k = 0; k < 200; ++k) {
    x1 = leader_best_response(g, 0, std::vector<double>{x2}, 0.0);
    x2 = leader_best_response(g, 1, std::vector<double>{x1}, 0.0);
  }
  EXPECT_NEAR(x1, 123.98, 0.05);
  EXPECT_NEAR(x2, 61.6, 0.05);
}

TEST(SolveScalarBox, Examples) {
  auto sq = [](double x) { return x * x; };
  auto dsq = [](double x) { return 2 * x; };
  EXPECT_NEAR(solve_scalar_box(sq, dsq, ActionBox(-2, 2), Sense::minimize), 0.0, 1e-12);
  EXPECT_EQ(solve_scalar_box(sq, dsq, ActionBox(1, 2), Sense::minimize), 1.0);
  auto f2 = [](double x) { return olsder::f2(7.0, x); };
  auto df2 = [](double x) { return olsder::df2_dx2(7.0, x); };
  EXPECT_NEAR(solve_scalar_box(f2, df2, ActionBox(0, 400), Sense::maximize), 32.35, 1e-8);
}

TEST(SolveScalarBox, EndpointTieGoesLow) {
  auto sq = [](double x) { return x * x; };
  auto dsq = [](double x) { return 2 * x; };
  EXPECT_EQ(solve_scalar_box(sq, dsq, ActionBox(-1, 1), Sense::maximize), -1.0);
}

TEST(SolveScalarBox, MonotoneObjectiveReturnsBetterEndpoint) {
  auto lin = [](double x) { return 3 * x; };
  auto dlin = [](double) { return 3.0; };
  EXPECT_EQ(solve_scalar_box(lin, dlin, ActionBox(-1, 4), Sense::minimize), -1.0);
  EXPECT_EQ(solve_scalar_box(lin, dlin, ActionBox(-1, 4), Sense::maximize), 4.0);
}

TEST(SolveScalarBox, IterationCapRaisesSolverError) {
  auto h = [](double x) { return (x - 0.1234) * (x - 0.1234) + std::cos(3 * x); };
  auto dh = [](double x) { return 2 * (x - 0.1234) - 3 * std::sin(3 * x); };
  ScalarSolverOptions o;
  o.max_iterations = 1;
  EXPECT_THROW(solve_scalar_box(h, dh, ActionBox(-2, 2), Sense::minimize, o), solver_error);
}

TEST(SolveScalarBox, AgreesWithFineGridOnRandomPolynomials) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const ActionBox box(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int degree = trial % 2 == 0 ? 3 : 4;
    std::vector<double> c(degree + 1);
    for (auto& v : c) v = u(rng);
    auto h = [&](double x) {
      double r = 0;
      for (int g = degree; g >= 0; --g) r = r * x + c[g];
      return r;
    };
    auto dh = [&](double x) {
      double r = 0;
      for (int g = degree; g >= 1; --g) r = r * x + g * c[g];
      return r;
    };
    const Sense sense = trial % 4 < 2 ? Sense::minimize : Sense::maximize;
    const double s = descent_sign(sense);
    const double x_solver = solve_scalar_box(h, dh, box, sense);

    double x_grid = box.lower(), best = s * h(box.lower());
    const long cells = 4'000'000;
    for (long k = 1; k <= cells; ++k) {
      const double x = box.lower() + 1e-6 * static_cast<double>(k);
      const double v = s * h(x);
      if (v < best) {
        best = v;
        x_grid = x;
      }
    }
    const double v_solver = s * h(x_solver);
    EXPECT_LE(v_solver, best + 1e-10) << "trial " << trial;
    // Locations agree unless two optima tie to within grid resolution.
    if (std::abs(x_solver - x_grid) > 1e-4) {
      EXPECT_NEAR(v_solver, best, 1e-8) << "trial " << trial;
    }
    auto d = [&](double x) { return dh(x); };
    EXPECT_LE(projected_residual(d, box, sense, x_solver), 1e-10) << "trial " << trial;
  }
}

TEST(Purity, RepeatedEvaluationsAreBitIdentical) {
  const GameSpec games[] = {leaders_dilemma(-1.5), olsder_game(), linear_quadratic(lq_options())};
  for (const auto& g : games) {
    const std::vector<double> x{0.37, -0.52};
    const double y = 0.11;
    for (std::size_t i = 0; i < g.leader_count(); ++i) {
      const double a = g.leader_value(i, x, y);
      const Partials p = g.leader_partials(i, x, y);
      for (int k = 0; k < 10; ++k) {
        EXPECT_EQ(g.leader_value(i, x, y), a);
        const Partials q = g.leader_partials(i, x, y);
        EXPECT_EQ(q.own, p.own);
        EXPECT_EQ(q.others, p.others);
        EXPECT_EQ(q.follower, p.follower);
      }
    }
  }
}

TEST(BuiltinGames, DilemmaRejectsDegenerateK) {
  EXPECT_THROW(leaders_dilemma(-1.0), config_error);
  EXPECT_THROW(leaders_dilemma(0.5), config_error);
  EXPECT_NO_THROW(leaders_dilemma(-1.0001));
}

TEST(BuiltinGames, OlsderStructureByMode) {
  const GameSpec n = olsder_game();
  EXPECT_EQ(n.leader_count(), 2u);
  EXPECT_FALSE(n.has_follower());
  EXPECT_EQ(n.leader_sense(1), Sense::maximize);
  const GameSpec s = olsder_s();
  EXPECT_EQ(s.leader_count(), 1u);
  ASSERT_TRUE(s.has_follower());
  EXPECT_EQ(s.follower_sense(), Sense::maximize);
  EXPECT_EQ(s.follower_box(), ActionBox(0.0, 400.0));
  EXPECT_EQ(olsder_game({250.0, OlsderMode::simultaneous}).leader_box(0).upper(), 250.0);
}

TEST(BuiltinGames, LinearQuadraticValidation) {
  auto o = lq_options();
  o.q = 0.0;
  EXPECT_THROW(linear_quadratic(o), config_error);
  o = lq_options();
  o.c = {1.0};
  EXPECT_THROW(linear_quadratic(o), config_error);
}

}  // namespace
}  // namespace conjstack
