// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "actrnn/optim.hpp"

using namespace actrnn;

namespace {

ParamSet scalar(double v) {
  ParamSet p;
  p.add("theta", {1});
  p[0].values[0] = v;
  return p;
}

ParamSet two_arrays(double a, double b) {
  ParamSet p;
  p.add("a", {2});
  p.add("b", {1});
  p[0].values = {a, b};
  p[1].values = {a - b};
  return p;
}

}  // namespace

TEST(Rmsprop, HandArithmetic) {
  ParamSet theta = scalar(0.0), g = scalar(1.0);
  OptimizerState s = OptimizerState::for_params(theta);
  rmsprop_step(s, theta, g, 0.1, 0.9);
  EXPECT_NEAR(s.second[0].values[0], 0.1, 1e-15);
  EXPECT_NEAR(theta[0].values[0], -0.1 / (std::sqrt(0.1) + 1e-8), 1e-15);
  EXPECT_NEAR(theta[0].values[0], -0.3162, 1e-4);
}

TEST(Rmsprop, ZeroGradientLeavesParams) {
  ParamSet theta = two_arrays(0.3, -0.7), g = theta.zeros_like();
  const ParamSet before = theta;
  OptimizerState s = OptimizerState::for_params(theta);
  rmsprop_step(s, theta, g, 0.1, 0.9);
  EXPECT_EQ(theta[0].values, before[0].values);
  EXPECT_EQ(theta[1].values, before[1].values);
}

TEST(Rmsprop, SecondIdenticalStepIsSmaller) {
  ParamSet theta = scalar(0.0), g = scalar(1.0);
  OptimizerState s = OptimizerState::for_params(theta);
  rmsprop_step(s, theta, g, 0.1, 0.9);
  const double first = -theta[0].values[0];
  rmsprop_step(s, theta, g, 0.1, 0.9);
  const double second = -theta[0].values[0] - first;
  EXPECT_GT(second, 0.0);
  EXPECT_LT(second, first);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamSet theta = scalar(0.0), g = scalar(1.0);
  OptimizerState s = OptimizerState::for_params(theta);
  adam_step(s, theta, g, 0.001, 0.9, 0.999);
  EXPECT_NEAR(theta[0].values[0], -0.001, 1e-10);
  EXPECT_EQ(s.t, 1u);
}

TEST(Adam, ZeroGradientLeavesParams) {
  ParamSet theta = two_arrays(1.0, 2.0), g = theta.zeros_like();
  OptimizerState s = OptimizerState::for_params(theta);
  adam_step(s, theta, g, 0.01, 0.9, 0.999);
  EXPECT_EQ(theta[0].values, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(theta[1].values, (std::vector<double>{-1.0}));
}

TEST(Optimizers, ElementwiseUnderRepartitioning) {
  // The same scalars split into one or two arrays follow identical paths.
  for (OptimizerKind kind : {OptimizerKind::kRmsprop, OptimizerKind::kAdam}) {
    OptimizerConfig cfg;
    cfg.kind = kind;
    cfg.lr = 0.01;
    ParamSet split = two_arrays(0.5, -0.25);
    ParamSet flat;
    flat.add("all", {3});
    flat[0].values = {0.5, -0.25, 0.75};
    OptimizerState ss = OptimizerState::for_params(split), sf = OptimizerState::for_params(flat);
    for (int step = 0; step < 5; ++step) {
      ParamSet gs = split.zeros_like(), gf = flat.zeros_like();
      gs[0].values = {0.1 * step - 0.2, 0.3};
      gs[1].values = {-0.05 * step};
      gf[0].values = {gs[0].values[0], gs[0].values[1], gs[1].values[0]};
      optimizer_step(cfg, ss, split, gs);
      optimizer_step(cfg, sf, flat, gf);
    }
    EXPECT_EQ(split[0].values[0], flat[0].values[0]);
    EXPECT_EQ(split[0].values[1], flat[0].values[1]);
    EXPECT_EQ(split[1].values[0], flat[0].values[2]);
  }
}

TEST(Optimizers, ZeroLearningRateIsFixedPoint) {
  for (OptimizerKind kind : {OptimizerKind::kRmsprop, OptimizerKind::kAdam}) {
    OptimizerConfig cfg;
    cfg.kind = kind;
    cfg.lr = 0.0;
    ParamSet theta = two_arrays(0.4, 0.9);
    const ParamSet before = theta;
    OptimizerState s = OptimizerState::for_params(theta);
    ParamSet g = theta.zeros_like();
    g[0].values = {1.0, -2.0};
    g[1].values = {3.0};
    for (int i = 0; i < 3; ++i) optimizer_step(cfg, s, theta, g);
    EXPECT_EQ(theta[0].values, before[0].values);
    EXPECT_EQ(theta[1].values, before[1].values);
  }
}

TEST(Optimizers, NonFiniteGradientDivergesWithoutUpdate) {
  for (OptimizerKind kind : {OptimizerKind::kRmsprop, OptimizerKind::kAdam}) {
    OptimizerConfig cfg;
    cfg.kind = kind;
    ParamSet theta = two_arrays(0.4, 0.9);
    const ParamSet before = theta;
    OptimizerState s = OptimizerState::for_params(theta);
    ParamSet g = theta.zeros_like();
    g[0].values = {1.0, std::numeric_limits<double>::quiet_NaN()};
    EXPECT_THROW(optimizer_step(cfg, s, theta, g), DivergedError);
    EXPECT_EQ(theta[0].values, before[0].values);
    EXPECT_EQ(theta[1].values, before[1].values);
    for (double v : s.second[0].values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Optimizers, NormClip) {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kAdam;
  cfg.lr = 0.1;
  cfg.max_grad_norm = 1.0;
  ParamSet theta = scalar(0.0), g = scalar(10.0);
  EXPECT_DOUBLE_EQ(global_norm(g), 10.0);
  OptimizerState s = OptimizerState::for_params(theta);
  optimizer_step(cfg, s, theta, g);
  // Clipped g = 1: Adam's first step is still -lr, but the moment sees 1.
  EXPECT_NEAR(s.first[0].values[0], 0.1, 1e-15);
  EXPECT_NEAR(theta[0].values[0], -0.1, 1e-8);
}

TEST(Optimizers, MismatchedLayoutRejected) {
  ParamSet theta = scalar(0.0), g = two_arrays(1, 1);
  OptimizerState s = OptimizerState::for_params(theta);
  EXPECT_ANY_THROW(rmsprop_step(s, theta, g, 0.1, 0.9));
}

TEST(Optimizers, KindNames) {
  EXPECT_EQ(parse_optimizer_kind("rmsprop"), OptimizerKind::kRmsprop);
  EXPECT_EQ(parse_optimizer_kind("adam"), OptimizerKind::kAdam);
  EXPECT_EQ(to_string(OptimizerKind::kAdam), "adam");
  EXPECT_ANY_THROW(parse_optimizer_kind("sgd"));
}
