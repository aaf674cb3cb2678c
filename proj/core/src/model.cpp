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

#include "heatchain/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace heatchain {

namespace {

void RequirePositive(double e1, double e2) {
  if (!(e1 > 0.0) || !(e2 > 0.0)) {
    throw std::domain_error("rate function requires positive energies, got (" +
                            std::to_string(e1) + ", " + std::to_string(e2) + ")");
  }
}

void RequireOpenUnit(double u, const char* what) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error(std::string(what) + ": uniform variate " +
                            std::to_string(u) + " outside (0, 1)");
  }
}

}  // namespace

RateFunctionSpec RateFunctionSpec::Parse(std::string_view text) {
  if (text == "sqrt_product") return SqrtProduct();
  if (text == "sqrt_harmonic") return SqrtHarmonic();
  if (text == "min_energy_sqrt") return MinEnergySqrt();
  if (text == "min_energy") return MinEnergy();
  if (text == "constant") return Constant(1.0);
  constexpr std::string_view prefix = "constant:";
  if (text.starts_with(prefix)) {
    std::string_view rest = text.substr(prefix.size());
    double c = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), c);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || !(c > 0.0)) {
      throw std::invalid_argument("invalid constant rate '" + std::string(text) + "'");
    }
    return Constant(c);
  }
  throw std::invalid_argument("unknown rate function '" + std::string(text) + "'");
}

std::string RateFunctionSpec::ToString() const {
  switch (kind) {
    case RateKind::kConstant: {
      if (constant == 1.0) return "constant";
      char buf[64];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), constant);
      return "constant:" + std::string(buf, ptr);
    }
    case RateKind::kSqrtProduct: return "sqrt_product";
    case RateKind::kSqrtHarmonic: return "sqrt_harmonic";
    case RateKind::kMinEnergySqrt: return "min_energy_sqrt";
    case RateKind::kMinEnergy: return "min_energy";
  }
  return "unknown";
}

void ChainConfig::Validate() const {
  if (n_cells < 1) throw std::invalid_argument("n_cells must be >= 1");
  if (particles_per_cell < 2) throw std::invalid_argument("particles must be >= 2");
  if (!(t_left > 0.0)) throw std::invalid_argument("t_left must be > 0");
  if (!(t_right > 0.0)) throw std::invalid_argument("t_right must be > 0");
  if (!(rate_cap > 0.0)) throw std::invalid_argument("rate_cap must be > 0");
  if (rate_fn.kind == RateKind::kConstant && !(rate_fn.constant > 0.0)) {
    throw std::invalid_argument("rate_fn constant must be > 0");
  }
}

EnergyState::EnergyState(std::vector<double> energies) : energies_(std::move(energies)) {
  for (double e : energies_) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw std::invalid_argument("energy state entries must be finite and positive");
    }
  }
}

double EnergyState::total() const {
  return std::accumulate(energies_.begin(), energies_.end(), 0.0);
}

double RawRate(const RateFunctionSpec& spec, double e1, double e2) {
  RequirePositive(e1, e2);
  switch (spec.kind) {
    case RateKind::kConstant: return spec.constant;
    case RateKind::kSqrtProduct: return std::sqrt(e1 * e2);
    case RateKind::kSqrtHarmonic: return std::sqrt(e1 * e2 / (e1 + e2));
    case RateKind::kMinEnergySqrt: return std::sqrt(std::min(e1, e2));
    case RateKind::kMinEnergy: return std::min(e1, e2);
  }
  return 0.0;
}

double Rate(const RateFunctionSpec& spec, double cap, double e1, double e2) {
  return std::min(RawRate(spec, e1, e2), cap);
}

RatePartials RatePartialDerivatives(const RateFunctionSpec& spec, double cap,
                                    double e1, double e2) {
  double raw = RawRate(spec, e1, e2);
  if (raw >= cap) return {};
  switch (spec.kind) {
    case RateKind::kConstant: return {};
    case RateKind::kSqrtProduct:
      return {0.5 * raw / e1, 0.5 * raw / e2};
    case RateKind::kSqrtHarmonic: {
      // d ln f / d e1 = (1/e1 - 1/(e1+e2)) / 2
      double s = e1 + e2;
      return {0.5 * raw * (1.0 / e1 - 1.0 / s), 0.5 * raw * (1.0 / e2 - 1.0 / s)};
    }
    case RateKind::kMinEnergySqrt: {
      double m = std::min(e1, e2);
      double d = 0.5 / std::sqrt(m);
      if (e1 < e2) return {d, 0.0};
      if (e2 < e1) return {0.0, d};
      return {0.5 * d, 0.5 * d};
    }
    case RateKind::kMinEnergy:
      if (e1 < e2) return {1.0, 0.0};
      if (e2 < e1) return {0.0, 1.0};
      return {0.5, 0.5};
  }
  return {};
}

double BondRates(const EnergyState& state, const ChainConfig& cfg,
                 std::span<double> rates) {
  const int n = state.size();
  double total = 0.0;
  for (int k = 0; k <= n; ++k) {
    double r = Rate(cfg.rate_fn, cfg.rate_cap, state.slot(cfg, k), state.slot(cfg, k + 1));
    rates[static_cast<std::size_t>(k)] = r;
    total += r;
  }
  return total;
}

double TotalRate(const EnergyState& state, const ChainConfig& cfg) {
  std::vector<double> rates(static_cast<std::size_t>(state.size() + 1));
  return BondRates(state, cfg, rates);
}

double SampleBeta(double u, int m) {
  RequireOpenUnit(u, "SampleBeta");
  if (m < 2) throw std::domain_error("SampleBeta requires M >= 2");
  // 1 - (1-u)^(1/(m-1)) without cancellation for small u.
  double b = -std::expm1(std::log1p(-u) / static_cast<double>(m - 1));
  // Keep the open interval even when rounding pushes to an endpoint.
  return std::clamp(b, 0x1p-1074, std::nextafter(1.0, 0.0));
}

double SampleBathEnergy(double u, double t_bath) {
  RequireOpenUnit(u, "SampleBathEnergy");
  if (!(t_bath > 0.0)) throw std::domain_error("bath temperature must be positive");
  return -t_bath * std::log1p(-u);
}

int SelectClock(std::span<const double> rates, double total, double p1) {
  const double target = p1 * total;
  double partial = 0.0;
  const int last = static_cast<int>(rates.size()) - 1;
  for (int k = 0; k < last; ++k) {
    partial += rates[static_cast<std::size_t>(k)];
    if (target < partial) return k;
  }
  return last;
}

int SelectClock(const EnergyState& state, const ChainConfig& cfg, double p1) {
  std::vector<double> rates(static_cast<std::size_t>(state.size() + 1));
  double total = BondRates(state, cfg, rates);
  return SelectClock(rates, total, p1);
}

double ApplyExchangeInPlace(std::span<double> energies, const ChainConfig& cfg,
                            int k, const ExchangeDraw& draw) {
  const int n = static_cast<int>(energies.size());
  if (k < 0 || k > n) {
    throw std::out_of_range("clock index " + std::to_string(k) + " outside [0, " +
                            std::to_string(n) + "]");
  }
  const double p = draw.p3;
  if (k == 0) {
    // E1' = E1 - B1 E1 + p (B1 E1 + B2 X), X ~ Exp(T_L)
    double& e = energies[0];
    double bath = SampleBathEnergy(draw.p2, cfg.t_left);
    double flux = p * draw.b2 * bath - (1.0 - p) * draw.b1 * e;
    e += flux;
    return flux;
  }
  if (k == n) {
    // EN' = EN - B1 EN + p (B1 EN + B2 X), X ~ Exp(T_R); flux leaves cell N
    double& e = energies[static_cast<std::size_t>(n - 1)];
    double bath = SampleBathEnergy(draw.p2, cfg.t_right);
    double flux = (1.0 - p) * draw.b1 * e - p * draw.b2 * bath;
    e -= flux;
    return flux;
  }
  double& left = energies[static_cast<std::size_t>(k - 1)];
  double& right = energies[static_cast<std::size_t>(k)];
  // Left keeps p of the pool B1 E_k + B2 E_{k+1}, right receives 1 - p.
  double flux = (1.0 - p) * draw.b1 * left - p * draw.b2 * right;
  left -= flux;
  right += flux;
  return flux;
}

ExchangeResult ApplyExchange(const EnergyState& state, const ChainConfig& cfg,
                             int k, const ExchangeDraw& draw) {
  std::vector<double> next = state.vector();
  double flux = ApplyExchangeInPlace(next, cfg, k, draw);
  return {EnergyState(std::move(next)), flux};
}

}  // namespace heatchain
