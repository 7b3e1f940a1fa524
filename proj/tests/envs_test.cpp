// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <vector>

#include "actrnn/envs.hpp"
#include "ring_oracle_checks.hpp"

using namespace actrnn;

TEST(RingWorld, StepExamples) {
  auto [s1, o1] = ring_step({10, 1}, kClockwise);
  EXPECT_EQ(s1.position, 2u);
  EXPECT_EQ(o1.obs, std::vector<double>{0.0});
  EXPECT_EQ(o1.reward, 0.0);
  EXPECT_FALSE(o1.terminal);
  auto [s2, o2] = ring_step({10, 2}, kCounterClockwise);
  EXPECT_EQ(s2.position, 1u);
  EXPECT_EQ(o2.obs, std::vector<double>{1.0});
  EXPECT_EQ(ring_step({10, 10}, kClockwise).first.position, 1u);
  EXPECT_EQ(ring_step({10, 1}, kCounterClockwise).first.position, 10u);
  EXPECT_THROW(ring_step({10, 1}, 2), std::out_of_range);
}

TEST(RingWorld, FullCycle) {
  RingWorldState s{10, 4};
  int ones = 0;
  for (int i = 0; i < 10; ++i) {
    auto [n, out] = ring_step(s, kClockwise);
    ones += out.obs[0] == 1.0;
    s = n;
  }
  EXPECT_EQ(s.position, 4u);
  EXPECT_EQ(ones, 1);
}

TEST(RingOracle, Examples) {
  // Position 10 is one clockwise step from the active state.
  EXPECT_EQ(ring_distance(10, kClockwise, 10), 1u);
  EXPECT_EQ(ring_oracle_value(10, 0.7, kClockwise, 10), 1.0);
  EXPECT_EQ(ring_distance(10, kCounterClockwise, 2), 1u);
  EXPECT_EQ(ring_distance(10, kClockwise, 8), 3u);
  EXPECT_NEAR(ring_oracle_value(10, 0.9, kClockwise, 8), 0.81, 1e-15);
  EXPECT_EQ(ring_distance(10, kClockwise, 1), 10u);
  EXPECT_EQ(ring_distance(10, kCounterClockwise, 1), 10u);
  for (std::size_t p = 1; p <= 10; ++p) {
    const double v = ring_oracle_value(10, 0.0, kClockwise, p);
    EXPECT_EQ(v, ring_distance(10, kClockwise, p) == 1 ? 1.0 : 0.0);
  }
  EXPECT_THROW(ring_oracle_value(10, 1.0, kClockwise, 3), std::invalid_argument);
}

TEST(RingOracle, BellmanIdentityExact) {
  for (std::size_t dir : {kClockwise, kCounterClockwise})
    for (int g = 0; g < 10; ++g) {
      const double gamma = 0.1 * g;
      for (std::size_t p = 1; p <= 10; ++p) {
        auto [next, out] = ring_step({10, p}, dir);
        const double c = out.obs[0];
        const double cont = c == 1.0 ? 0.0 : gamma;
        EXPECT_EQ(ring_oracle_value(10, gamma, dir, p),
                  c + cont * ring_oracle_value(10, gamma, dir, next.position));
      }
    }
}

TEST(RingOracle, AgreesWithRollouts) {
  EXPECT_EQ(actrnn::testing::ring_bellman_max_error(), 0.0);
  EXPECT_LE(actrnn::testing::ring_rollout_max_error(3, 5000), 1e-12);
}

TEST(TMaze, Observations) {
  EXPECT_EQ(tmaze_observation({10, 0, true}), (std::vector<double>{1, 1, 0}));
  EXPECT_EQ(tmaze_observation({10, 0, false}), (std::vector<double>{0, 1, 1}));
  EXPECT_EQ(tmaze_observation({10, 10, true}), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(tmaze_observation({10, 4, false}), (std::vector<double>{1, 0, 1}));
}

TEST(TMaze, StepExamples) {
  auto [j, o] = tmaze_step({10, 10, true}, kNorth);
  EXPECT_TRUE(o.terminal);
  EXPECT_EQ(o.reward, 4.0);
  EXPECT_EQ(tmaze_step({10, 10, true}, kSouth).second.reward, -1.0);
  EXPECT_EQ(tmaze_step({10, 10, false}, kSouth).second.reward, 4.0);

  auto [m, mo] = tmaze_step({10, 5, true}, kNorth);
  EXPECT_EQ(m.position, 5u);
  EXPECT_EQ(mo.reward, -0.1);
  EXPECT_FALSE(mo.terminal);
  EXPECT_EQ(mo.obs, (std::vector<double>{1, 0, 1}));

  EXPECT_EQ(tmaze_step({10, 0, true}, kWest).first.position, 0u);
  EXPECT_EQ(tmaze_step({10, 10, true}, kEast).first.position, 10u);
  EXPECT_EQ(tmaze_step({10, 3, true}, kEast).first.position, 4u);
  TMazeState done{10, 10, true, true};
  EXPECT_THROW(tmaze_step(done, kNorth), std::logic_error);
}

TEST(DirTMaze, Observations) {
  DirTMazeState s{10, 0, kFacingNorth, true};
  EXPECT_EQ(dirtmaze_observation(s), (std::vector<double>{1, 1, 0}));
  s.heading = kFacingSouth;
  EXPECT_EQ(dirtmaze_observation(s), (std::vector<double>{0, 1, 0}));
  s.goal_north = false;
  EXPECT_EQ(dirtmaze_observation(s), (std::vector<double>{1, 1, 0}));
  s.heading = kFacingEast;
  EXPECT_EQ(dirtmaze_observation(s), (std::vector<double>{0, 0, 1}));
  s.heading = kFacingWest;
  EXPECT_EQ(dirtmaze_observation(s), (std::vector<double>{0, 1, 0}));
  DirTMazeState mid{10, 5, kFacingWest, true};
  EXPECT_EQ(dirtmaze_observation(mid), (std::vector<double>{0, 0, 1}));
  mid.heading = kFacingNorth;
  EXPECT_EQ(dirtmaze_observation(mid), (std::vector<double>{0, 1, 0}));
  DirTMazeState junction{10, 10, kFacingEast, true};
  EXPECT_EQ(dirtmaze_observation(junction), (std::vector<double>{0, 1, 0}));
  junction.heading = kFacingSouth;
  EXPECT_EQ(dirtmaze_observation(junction), (std::vector<double>{0, 0, 1}));
}

TEST(DirTMaze, TurnsAndMoves) {
  DirTMazeState s{10, 3, kFacingEast, true};
  DirTMazeState t = s;
  for (int i = 0; i < 4; ++i) t = dirtmaze_step(t, kTurnCw).first;
  EXPECT_EQ(t.heading, s.heading);
  EXPECT_EQ(t.position, s.position);
  EXPECT_EQ(dirtmaze_step(s, kTurnCw).first.heading, kFacingSouth);
  EXPECT_EQ(dirtmaze_step(s, kTurnCcw).first.heading, kFacingNorth);
  EXPECT_EQ(dirtmaze_step(s, kForward).first.position, 4u);
  s.heading = kFacingNorth;
  auto [blocked, out] = dirtmaze_step(s, kForward);
  EXPECT_EQ(blocked.position, 3u);
  EXPECT_EQ(out.reward, -0.1);
  DirTMazeState j{10, 10, kFacingNorth, true};
  EXPECT_EQ(dirtmaze_step(j, kForward).second.reward, 4.0);
  j.heading = kFacingSouth;
  auto [jt, jo] = dirtmaze_step(j, kForward);
  EXPECT_TRUE(jo.terminal);
  EXPECT_EQ(jo.reward, -1.0);
}

TEST(TMazes, ObservationsAreFromTheFourPatterns) {
  const std::set<std::vector<double>> allowed{{1, 1, 0}, {0, 1, 1}, {0, 1, 0}, {1, 0, 1}, {0, 0, 1}};
  Rng rng(5);
  for (EnvKind kind : {EnvKind::kTMaze, EnvKind::kDirTMaze}) {
    EnvConfig c;
    c.kind = kind;
    auto env = make_environment(c, rng);
    auto obs = env->reset(rng);
    for (int i = 0; i < 5000; ++i) {
      EXPECT_TRUE(allowed.count(obs)) << to_string(kind);
      auto out = env->step(uniform_index(rng, env->num_actions()));
      obs = out.obs;
      if (out.terminal) obs = env->reset(rng);
    }
  }
}

TEST(TMazes, DefaultTimeout) {
  Rng rng(1);
  EnvConfig c;
  c.kind = EnvKind::kTMaze;
  EXPECT_EQ(make_environment(c, rng)->max_episode_steps(), 88u);
  c.kind = EnvKind::kDirTMaze;
  c.max_episode_steps = 50;
  EXPECT_EQ(make_environment(c, rng)->max_episode_steps(), 50u);
}

TEST(TMaze, GoalSideIsSeeded) {
  auto sides = [](std::uint64_t seed) {
    Rng rng(seed);
    TMaze env(10, 88);
    std::vector<bool> out;
    for (int i = 0; i < 50; ++i) {
      env.reset(rng);
      out.push_back(env.state().goal_north);
    }
    return out;
  };
  EXPECT_EQ(sides(3), sides(3));
  EXPECT_NE(sides(3), sides(4));
}

TEST(DirTMaze, PinnedStartHeading) {
  Rng rng(2);
  DirTMaze env(10, 88);
  env.set_start_heading(kFacingEast);
  for (int i = 0; i < 20; ++i) {
    env.reset(rng);
    EXPECT_EQ(env.state().heading, kFacingEast);
  }
  env.set_start_heading(std::nullopt);
  std::set<std::size_t> seen;
  for (int i = 0; i < 100; ++i) {
    env.reset(rng);
    seen.insert(env.state().heading);
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(MaskedGridWorld, Wrapping) {
  MaskedGWState s;
  s.width = 5;
  s.height = 5;
  s.x = 1;
  s.y = 1;
  s.goal_x = 3;
  s.goal_y = 3;
  EXPECT_EQ(maskedgw_step(s, kWest).first.x, 5u);
  EXPECT_EQ(maskedgw_step(s, kNorth).first.y, 5u);
  EXPECT_EQ(maskedgw_step(s, kSouth).first.y, 2u);
  EXPECT_EQ(maskedgw_step(s, kEast).first.x, 2u);
  for (std::size_t a = 0; a < 4; ++a) EXPECT_EQ(maskedgw_step(s, a).second.obs, std::vector<double>{0.0});
}

TEST(MaskedGridWorld, GoalAndAliasing) {
  MaskedGWState s;
  s.width = 5;
  s.height = 5;
  s.x = 2;
  s.y = 3;
  s.goal_x = 3;
  s.goal_y = 3;
  s.aliased = {{1, 3}};
  auto [g, out] = maskedgw_step(s, kEast);
  EXPECT_TRUE(out.terminal);
  EXPECT_EQ(out.reward, 1.0);
  auto [a, aout] = maskedgw_step(s, kWest);
  EXPECT_EQ(aout.obs, std::vector<double>{1.0});
  EXPECT_EQ(aout.reward, 0.0);
}

TEST(MaskedGridWorld, LayoutFromSeed) {
  Rng r1(9), r2(9);
  MaskedGridWorld a(10, 10, 10, 500, r1), b(10, 10, 10, 500, r2);
  EXPECT_EQ(a.state().aliased, b.state().aliased);
  EXPECT_EQ(a.state().goal_x, b.state().goal_x);
  std::set<std::pair<std::size_t, std::size_t>> cells(a.state().aliased.begin(),
                                                      a.state().aliased.end());
  EXPECT_EQ(cells.size(), 10u);
  EXPECT_FALSE(cells.count({a.state().goal_x, a.state().goal_y}));
  Rng rr(1);
  for (int i = 0; i < 100; ++i) {
    a.reset(rr);
    EXPECT_FALSE(a.state().x == a.state().goal_x && a.state().y == a.state().goal_y);
  }
}

TEST(Environments, KindNames) {
  for (EnvKind k : {EnvKind::kRingWorld, EnvKind::kTMaze, EnvKind::kDirTMaze,
                    EnvKind::kMaskedGridWorld})
    EXPECT_EQ(parse_env_kind(to_string(k)), k);
  EXPECT_THROW(parse_env_kind("lunar_lander"), std::invalid_argument);
}
