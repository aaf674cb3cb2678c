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

// Core types of the boundary-driven energy exchange chain and the pure,
// stateless single-event kernel shared by every other component.
//
// Cells are numbered 1..N in prose and 0..N-1 in storage. Bond (clock) k in
// [0, N] couples slot k with slot k+1, where slot 0 is the left bath at T_L
// and slot N+1 the right bath at T_R. Bonds 0 and N are the boundary bonds.

#ifndef HEATCHAIN_MODEL_HPP_
#define HEATCHAIN_MODEL_HPP_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace heatchain {

enum class RateKind {
  kConstant,       // f = c
  kSqrtProduct,    // f = sqrt(e1 * e2)
  kSqrtHarmonic,   // f = sqrt(e1 * e2 / (e1 + e2))
  kMinEnergySqrt,  // f = sqrt(min(e1, e2))
  kMinEnergy,      // f = min(e1, e2)
};

struct RateFunctionSpec {
  RateKind kind = RateKind::kSqrtProduct;
  double constant = 1.0;  // only read for kConstant

  static RateFunctionSpec Constant(double c) { return {RateKind::kConstant, c}; }
  static RateFunctionSpec SqrtProduct() { return {RateKind::kSqrtProduct, 1.0}; }
  static RateFunctionSpec SqrtHarmonic() { return {RateKind::kSqrtHarmonic, 1.0}; }
  static RateFunctionSpec MinEnergySqrt() { return {RateKind::kMinEnergySqrt, 1.0}; }
  static RateFunctionSpec MinEnergy() { return {RateKind::kMinEnergy, 1.0}; }

  // Accepts "constant", "constant:<c>", "sqrt_product", "sqrt_harmonic",
  // "min_energy_sqrt", "min_energy". Throws std::invalid_argument.
  static RateFunctionSpec Parse(std::string_view text);
  std::string ToString() const;

  friend bool operator==(const RateFunctionSpec&, const RateFunctionSpec&) = default;
};

struct ChainConfig {
  int n_cells = 1;
  int particles_per_cell = 2;
  double t_left = 1.0;
  double t_right = 1.0;
  RateFunctionSpec rate_fn;
  double rate_cap = 100.0;
  std::uint64_t master_seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void Validate() const;

  double bath(int slot) const { return slot == 0 ? t_left : t_right; }
  int n_bonds() const { return n_cells + 1; }
};

// Cell energies E_1..E_N, all strictly positive.
class EnergyState {
 public:
  EnergyState() = default;
  explicit EnergyState(std::vector<double> energies);
  EnergyState(std::initializer_list<double> energies)
      : EnergyState(std::vector<double>(energies)) {}

  static EnergyState Uniform(int n, double value) {
    return EnergyState(std::vector<double>(static_cast<std::size_t>(n), value));
  }

  int size() const { return static_cast<int>(energies_.size()); }
  double operator[](int i) const { return energies_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return energies_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const { return energies_; }
  std::span<double> values() { return energies_; }
  const std::vector<double>& vector() const { return energies_; }
  double total() const;

  // Energy of slot s in [0, N+1]; slots 0 and N+1 are the bath temperatures.
  double slot(const ChainConfig& cfg, int s) const {
    if (s == 0) return cfg.t_left;
    if (s == size() + 1) return cfg.t_right;
    return energies_[static_cast<std::size_t>(s - 1)];
  }

  friend bool operator==(const EnergyState&, const EnergyState&) = default;

 private:
  std::vector<double> energies_;
};

// The randomness of one exchange event. p2 is only read by boundary events.
struct ExchangeDraw {
  double p1 = 0.5;  // clock selection
  double p2 = 0.5;  // bath energy
  double p3 = 0.5;  // redistribution fraction
  double b1 = 0.5;  // Beta(1, M-1) fraction of the left participant
  double b2 = 0.5;  // Beta(1, M-1) fraction of the right participant
};

struct EventRecord {
  double time = 0.0;
  int clock_index = 0;
  double flux = 0.0;  // net energy moved from slot k to slot k+1
  EnergyState state_after;
};

struct ExchangeResult {
  EnergyState state;
  double flux = 0.0;
};

struct RatePartials {
  double d1 = 0.0;
  double d2 = 0.0;
};

// min(f_kind(e1, e2), cap). Throws std::domain_error for non-positive inputs.
double Rate(const RateFunctionSpec& spec, double cap, double e1, double e2);

// Uncapped rate function value.
double RawRate(const RateFunctionSpec& spec, double e1, double e2);

// Partial derivatives of the capped rate; zero where the cap binds. For the
// min-based kinds the derivative at e1 == e2 is split evenly.
RatePartials RatePartialDerivatives(const RateFunctionSpec& spec, double cap,
                                    double e1, double e2);

inline double BondRate(const EnergyState& state, const ChainConfig& cfg, int k) {
  return Rate(cfg.rate_fn, cfg.rate_cap, state.slot(cfg, k), state.slot(cfg, k + 1));
}

// Fills rates[k] = f(E_k, E_{k+1}) for k = 0..N and returns their sum R(E).
double BondRates(const EnergyState& state, const ChainConfig& cfg,
                 std::span<double> rates);

double TotalRate(const EnergyState& state, const ChainConfig& cfg);

// Inverse CDF of Beta(1, m-1): 1 - (1-u)^(1/(m-1)).
double SampleBeta(double u, int m);

// Inverse CDF of the exponential law with mean t_bath.
double SampleBathEnergy(double u, double t_bath);

// Clock k is chosen when p1 falls in [S_k / R, S_{k+1} / R) with S_k the
// partial sum of the first k bond rates.
int SelectClock(std::span<const double> rates, double total, double p1);
int SelectClock(const EnergyState& state, const ChainConfig& cfg, double p1);

// Applies the exchange on bond k. Interior bonds conserve E_k + E_{k+1};
// boundary bonds draw the bath energy from p2.
ExchangeResult ApplyExchange(const EnergyState& state, const ChainConfig& cfg,
                             int k, const ExchangeDraw& draw);

// In-place variant used by the simulator hot loop; returns the flux.
double ApplyExchangeInPlace(std::span<double> energies, const ChainConfig& cfg,
                            int k, const ExchangeDraw& draw);

}  // namespace heatchain

#endif  // HEATCHAIN_MODEL_HPP_
