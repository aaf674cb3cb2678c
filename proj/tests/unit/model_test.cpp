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


#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "heatchain/jump_process.hpp"
#include "heatchain/limit_ode.hpp"
#include "heatchain/model.hpp"
#include "heatchain/random.hpp"
#include "test_util.hpp"

namespace heatchain {
namespace {

using testing::MakeConfig;

const RateFunctionSpec kAllKinds[] = {
    RateFunctionSpec::Constant(1.5), RateFunctionSpec::SqrtProduct(),
    RateFunctionSpec::SqrtHarmonic(), RateFunctionSpec::MinEnergySqrt(),
    RateFunctionSpec::MinEnergy()};

TEST(Rate, HandValues) {
  EXPECT_DOUBLE_EQ(Rate(RateFunctionSpec::SqrtProduct(), 10.0, 1.0, 4.0), 2.0);
  for (double x : {0.1, 1.0, 7.0}) {
    for (double y : {0.3, 2.0, 50.0}) {
      EXPECT_EQ(Rate(RateFunctionSpec::Constant(1.0), 10.0, x, y), 1.0);
    }
  }
  EXPECT_EQ(Rate(RateFunctionSpec::SqrtProduct(), 5.0, 100.0, 100.0), 5.0);
  EXPECT_DOUBLE_EQ(Rate(RateFunctionSpec::SqrtHarmonic(), 10.0, 1.0, 1.0), std::sqrt(0.5));
  EXPECT_DOUBLE_EQ(Rate(RateFunctionSpec::MinEnergySqrt(), 10.0, 4.0, 9.0), 2.0);
  EXPECT_DOUBLE_EQ(Rate(RateFunctionSpec::MinEnergy(), 10.0, 4.0, 9.0), 4.0);
}

TEST(Rate, RejectsNonPositiveEnergy) {
  EXPECT_THROW(Rate(RateFunctionSpec::SqrtProduct(), 10.0, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(Rate(RateFunctionSpec::Constant(1.0), 10.0, 1.0, -2.0), std::domain_error);
}

TEST(Rate, MonotoneAndCapped) {
  UniformStream s(11);
  for (const auto& spec : kAllKinds) {
    for (int i = 0; i < 2000; ++i) {
      const double x = 0.01 + 20.0 * s.next();
      const double y = 0.01 + 20.0 * s.next();
      const double dx = 0.5 * s.next();
      const double cap = 0.5 + 5.0 * s.next();
      const double r = Rate(spec, cap, x, y);
      EXPECT_GT(r, 0.0);
      EXPECT_LE(r, cap);
      EXPECT_LE(r, Rate(spec, cap, x + dx, y));
      EXPECT_LE(r, Rate(spec, cap, x, y + dx));
    }
  }
}

TEST(Rate, PartialsMatchCentralDifferences) {
  const double h = 1e-6;
  for (const auto& spec : kAllKinds) {
    for (auto [x, y] : {std::pair{1.0, 2.0}, std::pair{3.5, 0.7}, std::pair{0.4, 0.9}}) {
      const RatePartials p = RatePartialDerivatives(spec, 100.0, x, y);
      const double d1 = (RawRate(spec, x + h, y) - RawRate(spec, x - h, y)) / (2 * h);
      const double d2 = (RawRate(spec, x, y + h) - RawRate(spec, x, y - h)) / (2 * h);
      EXPECT_NEAR(p.d1, d1, 1e-7) << spec.ToString() << " at " << x << "," << y;
      EXPECT_NEAR(p.d2, d2, 1e-7) << spec.ToString() << " at " << x << "," << y;
    }
  }
  const RatePartials capped = RatePartialDerivatives(RateFunctionSpec::SqrtProduct(), 1.0, 4.0, 4.0);
  EXPECT_EQ(capped.d1, 0.0);
  EXPECT_EQ(capped.d2, 0.0);
}

TEST(RateFunctionSpec, ParseRoundTrip) {
  for (const auto& spec : kAllKinds) {
    EXPECT_EQ(RateFunctionSpec::Parse(spec.ToString()), spec);
  }
  EXPECT_EQ(RateFunctionSpec::Parse("constant"), RateFunctionSpec::Constant(1.0));
  EXPECT_EQ(RateFunctionSpec::Parse("constant:2.5"), RateFunctionSpec::Constant(2.5));
  EXPECT_THROW(RateFunctionSpec::Parse("sqrt"), std::invalid_argument);
  EXPECT_THROW(RateFunctionSpec::Parse("constant:abc"), std::invalid_argument);
}

TEST(ChainConfig, ValidateNamesField) {
  ChainConfig cfg = MakeConfig(3, 10, 1.0, 2.0);
  EXPECT_NO_THROW(cfg.Validate());
  cfg.t_left = 0.0;
  try {
    cfg.Validate();
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("t_left"), std::string::npos);
  }
  cfg = MakeConfig(3, 1, 1.0, 2.0);
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
  cfg = MakeConfig(0, 10, 1.0, 2.0);
  EXPECT_THROW(cfg.Validate(), std::invalid_argument);
}

TEST(EnergyState, RejectsNonPositive) {
  EXPECT_THROW(EnergyState({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(EnergyState({1.0, NAN}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(EnergyState({1.0, 2.5}).total(), 3.5);
}

TEST(TotalRate, Examples) {
  const ChainConfig cfg = MakeConfig(2, 10, 1.0, 1.0, RateFunctionSpec::SqrtProduct(), 10.0);
  EXPECT_DOUBLE_EQ(TotalRate(EnergyState{1.0, 4.0}, cfg), 5.0);
  const ChainConfig c1 = MakeConfig(4, 10, 1.0, 3.0, RateFunctionSpec::Constant(1.0));
  EXPECT_DOUBLE_EQ(TotalRate(EnergyState{0.2, 5.0, 1.0, 9.0}, c1), 5.0);
}

TEST(TotalRate, BoundedByCap) {
  UniformStream s(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(6 * s.next());
    const double cap = 0.2 + 3.0 * s.next();
    const ChainConfig cfg = MakeConfig(n, 10, 0.5 + s.next(), 0.5 + 4 * s.next(),
                                       RateFunctionSpec::SqrtProduct(), cap);
    std::vector<double> e(static_cast<std::size_t>(n));
    for (auto& v : e) v = 0.01 + 30.0 * s.next();
    const double r = TotalRate(EnergyState(e), cfg);
    EXPECT_GT(r, 0.0);
    EXPECT_LE(r, (n + 1) * cap * (1 + 1e-15));
  }
}

TEST(SampleBeta, Examples) {
  EXPECT_DOUBLE_EQ(SampleBeta(0.5, 2), 0.5);
  EXPECT_GT(SampleBeta(1e-300, 10), 0.0);
  EXPECT_LT(SampleBeta(1e-12, 10), 1e-12);
  EXPECT_LT(SampleBeta(0.3, 100), SampleBeta(0.31, 100));
  EXPECT_THROW(SampleBeta(0.0, 10), std::domain_error);
  EXPECT_THROW(SampleBeta(1.0, 10), std::domain_error);
  EXPECT_THROW(SampleBeta(0.5, 1), std::domain_error);
}

TEST(SampleBeta, KolmogorovSmirnovAndMean) {
  const int m = 10;
  const int n = 20'000;
  UniformStream s(2024);
  std::vector<double> x(n);
  for (auto& v : x) v = SampleBeta(s.next(), m);
  std::sort(x.begin(), x.end());
  double d = 0.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = 1.0 - std::pow(1.0 - x[i], m - 1);
    d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
    sum += x[i];
    ASSERT_GT(x[i], 0.0);
    ASSERT_LT(x[i], 1.0);
  }
  // 0.1% critical value of the KS statistic.
  EXPECT_LT(d, 1.949 / std::sqrt(static_cast<double>(n)));
  const double sd = std::sqrt((m - 1.0) / (m * m * (m + 1.0)));
  EXPECT_NEAR(sum / n, 1.0 / m, 4 * sd / std::sqrt(static_cast<double>(n)));
}

TEST(SampleBathEnergy, Examples) {
  EXPECT_NEAR(SampleBathEnergy(1.0 - std::exp(-1.0), 2.0), 2.0, 1e-15);
  EXPECT_GT(SampleBathEnergy(1e-300, 1.0), 0.0);
  EXPECT_LT(SampleBathEnergy(1e-12, 1.0), 1.01e-12);
  EXPECT_THROW(SampleBathEnergy(1.0, 1.0), std::domain_error);
  EXPECT_THROW(SampleBathEnergy(0.5, 0.0), std::domain_error);
  UniformStream s(9);
  const int n = 100'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += SampleBathEnergy(s.next(), 1.7);
  EXPECT_NEAR(sum / n, 1.7, 4 * 1.7 / std::sqrt(static_cast<double>(n)));
}

TEST(SelectClock, Examples) {
  const ChainConfig cfg = MakeConfig(1, 10, 1.0, 2.0, RateFunctionSpec::Constant(1.0));
  const EnergyState e{1.3};
  EXPECT_EQ(SelectClock(e, cfg, 0.25), 0);
  EXPECT_EQ(SelectClock(e, cfg, 0.75), 1);
  EXPECT_EQ(SelectClock(e, cfg, 1e-300), 0);
  EXPECT_EQ(SelectClock(e, cfg, 1.0 - 1e-16), 1);
}

TEST(SelectClock, ChiSquareAgainstRates) {
  const ChainConfig cfg = MakeConfig(3, 10, 1.0, 2.0);
  const EnergyState e{0.5, 3.0, 1.2};
  std::vector<double> rates(4);
  const double total = BondRates(e, cfg, rates);
  const int n = 100'000;
  std::vector<int> counts(4, 0);
  UniformStream s(77);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(SelectClock(rates, total, s.next()))];
  double chi2 = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double p = rates[static_cast<std::size_t>(k)] / total;
    const double expected = n * p;
    chi2 += std::pow(counts[static_cast<std::size_t>(k)] - expected, 2) / expected;
    EXPECT_NEAR(counts[static_cast<std::size_t>(k)], expected, 3 * std::sqrt(n * p * (1 - p)));
  }
  // 3 degrees of freedom, 0.1% upper quantile.
  EXPECT_LT(chi2, 16.27);
}

TEST(ApplyExchange, InteriorHandExample) {
  const ChainConfig cfg = MakeConfig(2, 10, 1.0, 1.0);
  ExchangeDraw d;
  d.b1 = 0.5;
  d.b2 = 0.25;
  d.p3 = 1.0;
  const ExchangeResult r = ApplyExchange(EnergyState{2.0, 4.0}, cfg, 1, d);
  EXPECT_DOUBLE_EQ(r.state[0], 3.0);
  EXPECT_DOUBLE_EQ(r.state[1], 3.0);
  EXPECT_DOUBLE_EQ(r.flux, -1.0);
}

TEST(ApplyExchange, ReturnsContributionUnchanged) {
  const ChainConfig cfg = MakeConfig(2, 10, 1.0, 1.0);
  ExchangeDraw d;
  d.b1 = 0.3;
  d.b2 = 0.1;
  d.p3 = 0.3 * 2.0 / (0.3 * 2.0 + 0.1 * 4.0);
  const ExchangeResult r = ApplyExchange(EnergyState{2.0, 4.0}, cfg, 1, d);
  EXPECT_NEAR(r.state[0], 2.0, 1e-15);
  EXPECT_NEAR(r.state[1], 4.0, 1e-15);
}

TEST(ApplyExchange, BoundaryTouchesOneCell) {
  const ChainConfig cfg = MakeConfig(3, 10, 1.0, 2.0);
  const EnergyState e{1.1, 1.4, 1.8};
  ExchangeDraw d{0.5, 0.7, 0.2, 0.4, 0.3};
  const ExchangeResult left = ApplyExchange(e, cfg, 0, d);
  EXPECT_EQ(left.state[1], e[1]);
  EXPECT_EQ(left.state[2], e[2]);
  EXPECT_DOUBLE_EQ(left.flux, left.state[0] - e[0]);
  const ExchangeResult right = ApplyExchange(e, cfg, 3, d);
  EXPECT_EQ(right.state[0], e[0]);
  EXPECT_EQ(right.state[1], e[1]);
  EXPECT_DOUBLE_EQ(right.flux, e[2] - right.state[2]);
  EXPECT_THROW(ApplyExchange(e, cfg, 4, d), std::out_of_range);
  EXPECT_THROW(ApplyExchange(e, cfg, -1, d), std::out_of_range);
}

// Random states and draws: conservation on interior bonds and the lower
// bound E' >= E (1 - B) for every participating cell.
TEST(ApplyExchange, ConservationAndPositivityProperty) {
  UniformStream s(31337);
  for (int trial = 0; trial < 20'000; ++trial) {
    const int n = 1 + static_cast<int>(5 * s.next());
    const ChainConfig cfg = MakeConfig(n, 2 + static_cast<int>(1000 * s.next()),
                                       0.1 + 3 * s.next(), 0.1 + 3 * s.next());
    std::vector<double> e(static_cast<std::size_t>(n));
    for (auto& v : e) v = std::exp(8.0 * s.next() - 4.0);
    const EnergyState state(e);
    const int k = std::min(n, static_cast<int>((n + 1) * s.next()));
    ExchangeDraw d{s.next(), s.next(), s.next(), SampleBeta(s.next(), cfg.particles_per_cell),
                   SampleBeta(s.next(), cfg.particles_per_cell)};
    const ExchangeResult r = ApplyExchange(state, cfg, k, d);
    for (int i = 0; i < n; ++i) ASSERT_GT(r.state[i], 0.0);
    // On a boundary bond the cell contributes with b1; inside, right uses b2.
    const double slack = 1 - 1e-15;
    if (k == 0) ASSERT_GE(r.state[0], state[0] * (1 - d.b1) * slack);
    if (k == n) ASSERT_GE(r.state[n - 1], state[n - 1] * (1 - d.b1) * slack);
    if (k > 0 && k < n) {
      ASSERT_GE(r.state[k - 1], state[k - 1] * (1 - d.b1) * slack);
      ASSERT_GE(r.state[k], state[k] * (1 - d.b2) * slack);
    }
    if (k > 0 && k < n) {
      const double before = state[k - 1] + state[k];
      ASSERT_NEAR(r.state[k - 1] + r.state[k], before, 4e-16 * before);
      ASSERT_NEAR(r.flux, r.state[k] - state[k], 4e-16 * before);
    }
    for (int i = 0; i < n; ++i) {
      if (i != k - 1 && i != k) ASSERT_EQ(r.state[i], state[i]);
    }
  }
}

// Mean increment of one event at a fixed state is F(E) / (M R(E)).
TEST(ApplyExchange, OneEventDriftIdentity) {
  const ChainConfig cfg = MakeConfig(3, 50, 1.0, 2.0);
  const EnergyState e{1.2, 0.8, 1.5};
  std::vector<double> rates(4);
  const double total = BondRates(e, cfg, rates);
  const Eigen::VectorXd expected = Drift(e, cfg) / (cfg.particles_per_cell * total);
  const int n = 400'000;
  UniformStream s(4242);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    std::vector<double> x = e.vector();
    int clock = 0;
    ApplyRandomExchange(std::span<double>(x), cfg, rates, total, s, clock);
    for (int j = 0; j < 3; ++j) {
      const double d = x[static_cast<std::size_t>(j)] - e[j];
      sum(j) += d;
      sum2(j) += d * d;
    }
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = sum(j) / n;
    const double se = std::sqrt((sum2(j) / n - mean * mean) / n);
    EXPECT_NEAR(mean, expected(j), 4 * se) << "cell " << j;
  }
}

}  // namespace
}  // namespace heatchain
