//
// Copyright 2026 The heatchain Authors
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
//


#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "heatchain/limit_ode.hpp"
#include "heatchain/statistics.hpp"
#include "test_util.hpp"

namespace heatchain {
namespace {

using testing::MakeConfig;

std::vector<double> ToVector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

TEST(Drift, HandExamples) {
  const ChainConfig cfg = MakeConfig(1, 10, 1.0, 3.0, RateFunctionSpec::Constant(1.0));
  EXPECT_DOUBLE_EQ(Drift(EnergyState{1.0}, cfg)(0), 1.0);
  const ChainConfig flat = MakeConfig(4, 10, 2.0, 2.0);
  EXPECT_EQ(Drift(EnergyState::Uniform(4, 2.0), flat).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Drift, InteriorTermsTelescope) {
  for (const auto& spec : {RateFunctionSpec::SqrtProduct(), RateFunctionSpec::SqrtHarmonic(),
                           RateFunctionSpec::MinEnergy()}) {
    const ChainConfig cfg = MakeConfig(5, 10, 1.0, 2.5, spec);
    const EnergyState e{0.7, 1.9, 1.1, 3.0, 2.2};
    const double f0 = Rate(spec, cfg.rate_cap, cfg.t_left, e[0]);
    const double fn = Rate(spec, cfg.rate_cap, e[4], cfg.t_right);
    const double expected = 0.5 * f0 * (cfg.t_left - e[0]) + 0.5 * fn * (cfg.t_right - e[4]);
    EXPECT_NEAR(Drift(e, cfg).sum(), expected, 1e-14);
  }
}

TEST(IntegrateOde, ScalarClosedForm) {
  const ChainConfig cfg = MakeConfig(1, 10, 1.0, 1.0, RateFunctionSpec::Constant(1.0));
  // Theta' = (1 - Theta)/2 + (1 - Theta)/2 = 1 - Theta.
  const OdeSolution sol = IntegrateOde(cfg, EnergyState{2.0}, 1.0, 1e-2);
  EXPECT_NEAR(sol.states.back()(0), 1.0 + std::exp(-1.0), 1e-6);
  EXPECT_DOUBLE_EQ(sol.times.back(), 1.0);
  EXPECT_NEAR(sol.At(0.5)(0), 1.0 + std::exp(-0.5), 1e-4);
}

TEST(IntegrateOde, FourthOrderConvergence) {
  const ChainConfig cfg = MakeConfig(3, 10, 1.0, 2.0);
  const EnergyState e0{3.0, 0.5, 1.0};
  auto end = [&](double dt) { return IntegrateOde(cfg, e0, 1.0, dt).states.back(); };
  const Eigen::VectorXd a = end(0.1), b = end(0.05), c = end(0.025);
  const double ratio = (a - b).cwiseAbs().maxCoeff() / (b - c).cwiseAbs().maxCoeff();
  EXPECT_GT(ratio, 13.0);
  EXPECT_LT(ratio, 19.0);
}

TEST(IntegrateOde, EquilibriumIsFixedPoint) {
  const ChainConfig cfg = MakeConfig(4, 10, 1.0, 2.0);
  const EquilibriumProfile eq = SolveEquilibrium(cfg, 1e-13);
  const OdeSolution sol = IntegrateOde(cfg, eq.e_star, 10.0, 1e-2);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(sol.states.back()(i), eq.e_star[i], 1e-10);
}

TEST(IntegrateOde, LeavingPositiveOrthantThrows) {
  const ChainConfig cfg = MakeConfig(1, 10, 1.0, 1.0, RateFunctionSpec::Constant(1.0));
  EXPECT_THROW(IntegrateOde(cfg, EnergyState{50.0}, 10.0, 5.0), std::domain_error);
}

TEST(SolveEquilibrium, ConstantRateIsLinear) {
  const ChainConfig cfg = MakeConfig(3, 10, 1.0, 2.0, RateFunctionSpec::Constant(1.0));
  const EquilibriumProfile eq = SolveEquilibrium(cfg, 1e-12);
  EXPECT_NEAR(eq.e_star[0], 1.25, 1e-10);
  EXPECT_NEAR(eq.e_star[1], 1.5, 1e-10);
  EXPECT_NEAR(eq.e_star[2], 1.75, 1e-10);
  EXPECT_NEAR(eq.c_star, 0.25, 1e-10);
}

TEST(SolveEquilibrium, EqualTemperatures) {
  const ChainConfig cfg = MakeConfig(5, 10, 1.7, 1.7);
  const EquilibriumProfile eq = SolveEquilibrium(cfg);
  EXPECT_EQ(eq.e_star, EnergyState::Uniform(5, 1.7));
  EXPECT_EQ(eq.c_star, 0.0);
}

TEST(SolveEquilibrium, ProfileProperties) {
  const double tol = 1e-12;
  for (const auto& spec : {RateFunctionSpec::SqrtProduct(), RateFunctionSpec::SqrtHarmonic(),
                           RateFunctionSpec::MinEnergySqrt(), RateFunctionSpec::MinEnergy()}) {
    const ChainConfig cfg = MakeConfig(6, 10, 1.0, 3.0, spec);
    const EquilibriumProfile eq = SolveEquilibrium(cfg, tol);
    EXPECT_LE(eq.residual, tol);
    EXPECT_LE(Drift(eq.e_star, cfg).cwiseAbs().maxCoeff(), 1e-10) << spec.ToString();
    for (int k = 0; k <= 6; ++k) {
      const double a = eq.e_star.slot(cfg, k), b = eq.e_star.slot(cfg, k + 1);
      EXPECT_LT(a, b);
      EXPECT_NEAR(Rate(spec, cfg.rate_cap, a, b) * (b - a), eq.c_star, 1e-10);
    }
    const std::vector<double> again = ShootProfile(cfg, eq.c_star, tol);
    ASSERT_EQ(again.size(), 7u);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(again[static_cast<std::size_t>(i)], eq.e_star[i], 1e-10);
    EXPECT_NEAR(again.back(), cfg.t_right, 1e-10);
  }
}

TEST(SolveEquilibrium, MirroredChain) {
  const ChainConfig cfg = MakeConfig(4, 10, 2.0, 1.0);
  const EquilibriumProfile eq = SolveEquilibrium(cfg);
  EXPECT_LT(eq.c_star, 0.0);
  for (int k = 0; k <= 4; ++k) EXPECT_GT(eq.e_star.slot(cfg, k), eq.e_star.slot(cfg, k + 1));
  EXPECT_LE(Drift(eq.e_star, cfg).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ShootProfile, RightEndIncreasesWithFlux) {
  const ChainConfig cfg = MakeConfig(5, 10, 1.0, 2.0, RateFunctionSpec::SqrtHarmonic());
  const std::vector<double> zero = ShootProfile(cfg, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(zero.back(), cfg.t_left);
  double prev = zero.back();
  for (int i = 1; i <= 40; ++i) {
    const double t = ShootProfile(cfg, 0.01 * i, 1e-12).back();
    EXPECT_GT(t, prev);
    prev = t;
  }
  EXPECT_THROW(ShootProfile(cfg, -0.1, 1e-12), std::invalid_argument);
}

TEST(Jacobian, ConstantRate) {
  const ChainConfig cfg = MakeConfig(4, 10, 1.0, 2.0, RateFunctionSpec::Constant(1.0));
  const Eigen::MatrixXd j = AnalyticJacobian(EnergyState{1.1, 1.3, 1.2, 1.9}.values(), cfg);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double expected = r == c ? -1.0 : (std::abs(r - c) == 1 ? 0.5 : 0.0);
      EXPECT_EQ(j(r, c), expected);
    }
  }
}

TEST(Jacobian, CentralDifferencesConvergeQuadratically) {
  for (const auto& spec : {RateFunctionSpec::SqrtProduct(), RateFunctionSpec::SqrtHarmonic()}) {
    const ChainConfig cfg = MakeConfig(5, 10, 1.0, 2.0, spec);
    const EnergyState e{0.8, 1.6, 1.2, 2.4, 1.9};
    const Eigen::MatrixXd a = AnalyticJacobian(e.values(), cfg);
    const double e1 = (a - FiniteDifferenceJacobian(e.values(), cfg, 1e-2)).cwiseAbs().maxCoeff();
    const double e2 = (a - FiniteDifferenceJacobian(e.values(), cfg, 1e-3)).cwiseAbs().maxCoeff();
    EXPECT_GT(e1 / e2, 80.0);
    EXPECT_LT(e1 / e2, 120.0);
    for (double h : {1e-4, 1e-5}) {
      EXPECT_LE((a - FiniteDifferenceJacobian(e.values(), cfg, h)).cwiseAbs().maxCoeff(), 10 * h * h);
    }
  }
}

TEST(Jacobian, StableNearEquilibrium) {
  const ChainConfig cfg = MakeConfig(10, 10, 1.0, 1.2);
  const EquilibriumProfile eq = SolveEquilibrium(cfg, 1e-12);
  const JacobianReport r = AnalyzeJacobian(eq.e_star, cfg);
  EXPECT_TRUE(r.stable());
  EXPECT_LT(r.max_real_part(), 0.0);
  EXPECT_TRUE(IsTridiagonal(r.jac));
  EXPECT_EQ(r.row_sums.size(), 10);
  EXPECT_LT(r.fd_max_error, 1e-8);
}

TEST(Gamma, MatchesFiniteDifferenceDivergence) {
  const double h = 1e-6;
  for (const auto& spec : {RateFunctionSpec::SqrtProduct(), RateFunctionSpec::SqrtHarmonic()}) {
    for (auto [x, y] : {std::pair{1.0, 1.0}, std::pair{0.6, 1.7}, std::pair{2.5, 1.1}}) {
      const double f = RawRate(spec, x, y);
      const double div = (RawRate(spec, x + h, y) - RawRate(spec, x - h, y) +
                          RawRate(spec, x, y + h) - RawRate(spec, x, y - h)) / (2 * h);
      const auto g = Gamma(spec, 100.0, x, y);
      ASSERT_TRUE(g.has_value());
      EXPECT_NEAR(*g, div / f, 1e-8) << spec.ToString();
      const auto grad = GammaGradient(spec, 100.0, x, y);
      ASSERT_TRUE(grad.has_value());
      const double d1 = (*Gamma(spec, 100.0, x + h, y) - *Gamma(spec, 100.0, x - h, y)) / (2 * h);
      const double d2 = (*Gamma(spec, 100.0, x, y + h) - *Gamma(spec, 100.0, x, y - h)) / (2 * h);
      EXPECT_NEAR(grad->d1, d1, 1e-6);
      EXPECT_NEAR(grad->d2, d2, 1e-6);
    }
  }
  // Closed forms at (1, 1): div f / f of the two rate functions.
  EXPECT_DOUBLE_EQ(*Gamma(RateFunctionSpec::SqrtProduct(), 100.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(*Gamma(RateFunctionSpec::SqrtHarmonic(), 100.0, 1.0, 1.0), 0.5);
  EXPECT_FALSE(Gamma(RateFunctionSpec::SqrtProduct(), 1.0, 4.0, 4.0).has_value());
}

TEST(Gamma, SqrtHarmonicSignWindow) {
  const double edge = 1.0 + std::numbers::sqrt2;
  const auto spec = RateFunctionSpec::SqrtHarmonic();
  for (double e1 : {0.5, 1.0, 3.0}) {
    for (double ratio : {edge * (1 - 1e-3), 1.0 / edge * (1 + 1e-3), 1.0}) {
      const auto g = GammaGradient(spec, 100.0, e1, ratio * e1);
      EXPECT_LT(g->d1, 0.0);
      EXPECT_LT(g->d2, 0.0);
    }
    for (double ratio : {edge * (1 + 1e-3), 1.0 / edge * (1 - 1e-3)}) {
      const auto g = GammaGradient(spec, 100.0, e1, ratio * e1);
      EXPECT_TRUE(g->d1 > 0.0 || g->d2 > 0.0) << "ratio " << ratio;
    }
  }
}

TEST(Conductivity, ConstantRateIsHalfForEveryN) {
  for (int n : {2, 5, 10}) {
    const ChainConfig cfg = MakeConfig(n, 10, 1.0, 2.0, RateFunctionSpec::Constant(1.0));
    const Conductivity k = ComputeConductivity(cfg, 1e-13);
    EXPECT_NEAR(k.kappa, 0.5, 1e-10);
    EXPECT_EQ(k.lower, 0.5);
    EXPECT_EQ(k.upper, 0.5);
  }
  EXPECT_THROW(ComputeConductivity(MakeConfig(3, 10, 1.0, 1.0)), std::invalid_argument);
}

TEST(Conductivity, SqrtProductSandwichAndHalving) {
  double prev = 0.0;
  for (double delta : {0.1, 0.05}) {
    const ChainConfig cfg = MakeConfig(3, 10, 1.0, 1.0 + delta);
    const Conductivity k = ComputeConductivity(cfg, 1e-13);
    const double gap = std::abs(k.kappa - 0.5);
    EXPECT_LE(gap, 0.5 * delta);
    EXPECT_GE(k.kappa, k.lower);
    EXPECT_LE(k.kappa, k.upper);
    if (prev > 0.0) {
      EXPECT_GT(gap / prev, 0.4);
      EXPECT_LT(gap / prev, 0.6);
    }
    prev = gap;
  }
}

}  // namespace
}  // namespace heatchain
