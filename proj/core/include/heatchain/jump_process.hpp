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

// Exact event-driven simulation of the chain on the fast time scale, where
// clock k rings at rate M * f(E_k, E_{k+1}).
//
// Uniform consumption per event is fixed: q (waiting time), p1 (clock),
// p2 (bath energy, boundary clocks only), p3 (split), u_B1, u_B2.

#ifndef HEATCHAIN_JUMP_PROCESS_HPP_
#define HEATCHAIN_JUMP_PROCESS_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "heatchain/model.hpp"
#include "heatchain/statistics.hpp"

namespace heatchain {

struct StepResult {
  double dt = 0.0;
  EventRecord event;
};

// Fills rates with the N + 1 bond rates, draws q and returns the waiting
// time -log(1 - q) / (M R). total receives R.
template <class Stream>
double DrawWaitingTime(std::span<const double> energies, const ChainConfig& cfg,
                       std::span<double> rates, Stream& stream, double& total) {
  const int n = static_cast<int>(energies.size());
  total = 0.0;
  for (int k = 0; k <= n; ++k) {
    double left = k == 0 ? cfg.t_left : energies[static_cast<std::size_t>(k - 1)];
    double right = k == n ? cfg.t_right : energies[static_cast<std::size_t>(k)];
    double r = Rate(cfg.rate_fn, cfg.rate_cap, left, right);
    rates[static_cast<std::size_t>(k)] = r;
    total += r;
  }
  const double q = stream.next();
  return -std::log1p(-q) / (static_cast<double>(cfg.particles_per_cell) * total);
}

// Draws p1, [p2], p3, u_B1, u_B2 and applies the exchange; returns the flux.
template <class Stream>
double ApplyRandomExchange(std::span<double> energies, const ChainConfig& cfg,
                           std::span<const double> rates, double total,
                           Stream& stream, int& clock) {
  const int n = static_cast<int>(energies.size());
  ExchangeDraw draw;
  draw.p1 = stream.next();
  clock = SelectClock(rates, total, draw.p1);
  if (clock == 0 || clock == n) draw.p2 = stream.next();
  draw.p3 = stream.next();
  draw.b1 = SampleBeta(stream.next(), cfg.particles_per_cell);
  draw.b2 = SampleBeta(stream.next(), cfg.particles_per_cell);
  return ApplyExchangeInPlace(energies, cfg, clock, draw);
}

// Advances energies in place by one event. rates must hold N + 1 doubles.
// Returns the waiting time; clock and flux are written to the out-params.
template <class Stream>
double StepInPlace(std::span<double> energies, const ChainConfig& cfg,
                   std::span<double> rates, Stream& stream, int& clock, double& flux) {
  double total = 0.0;
  const double dt = DrawWaitingTime(energies, cfg, rates, stream, total);
  flux = ApplyRandomExchange(energies, cfg, rates, total, stream, clock);
  return dt;
}

// One event from `state`; event.time holds dt.
template <class Stream>
StepResult Step(const EnergyState& state, const ChainConfig& cfg, Stream& stream) {
  std::vector<double> energies = state.vector();
  std::vector<double> rates(static_cast<std::size_t>(state.size() + 1));
  StepResult out;
  out.dt = StepInPlace(energies, cfg, rates, stream, out.event.clock_index, out.event.flux);
  out.event.time = out.dt;
  out.event.state_after = EnergyState(std::move(energies));
  return out;
}

struct SimulateOptions {
  // Snapshot times in [0, t_end], non-decreasing. A snapshot holds the state
  // after the last event at or before that time.
  std::vector<double> grid;
  bool record_events = true;
  // Events beyond this count are not logged; functionals keep accumulating.
  std::size_t event_cap = 10'000'000;
};

// Piecewise-constant right-continuous path on [0, t_end).
class Trajectory {
 public:
  Trajectory(EnergyState initial, double t_end);

  const EnergyState& initial_state() const { return initial_; }
  const EnergyState& final_state() const { return final_; }
  double t_end() const { return t_end_; }
  int n_cells() const { return initial_.size(); }

  // Logged events (may be fewer than event_count() when truncated).
  std::size_t logged_events() const { return times_.size(); }
  std::size_t event_count() const { return event_count_; }
  bool truncated() const { return truncated_; }
  // True when every event is in the log.
  bool record_complete() const { return times_.size() == event_count_; }
  EventRecord event(std::size_t i) const;
  double event_time(std::size_t i) const { return times_[i]; }
  int event_clock(std::size_t i) const { return clocks_[i]; }
  double event_flux(std::size_t i) const { return fluxes_[i]; }
  std::span<const double> state_after(std::size_t i) const;
  // Cumulative net boundary influx J_0 - J_N up to and including event i.
  double boundary_influx_at(std::size_t i) const { return influx_[i]; }

  // State after the last event with time <= t. Requires an untruncated log.
  EnergyState StateAt(double t) const;

  const std::vector<double>& grid() const { return grid_; }
  std::span<const double> snapshot(std::size_t g) const;

  double boundary_influx() const { return total_influx_; }
  const std::vector<double>& bond_flux_sums() const { return bond_flux_; }
  const std::vector<std::uint64_t>& bond_event_counts() const { return bond_events_; }

 private:
  friend Trajectory Simulate(const ChainConfig&, const EnergyState&, double,
                             std::uint64_t, const SimulateOptions&);

  EnergyState initial_;
  EnergyState final_;
  double t_end_;
  std::vector<double> times_;
  std::vector<int> clocks_;
  std::vector<double> fluxes_;
  std::vector<double> states_;  // flat, logged_events() x N
  std::vector<double> influx_;
  bool truncated_ = false;
  std::size_t event_count_ = 0;
  std::vector<double> grid_;
  std::vector<double> snapshots_;  // flat, grid.size() x N
  double total_influx_ = 0.0;
  std::vector<double> bond_flux_;
  std::vector<std::uint64_t> bond_events_;
};

// Simulates all events with time < t_end. Throws std::invalid_argument when
// t_end <= 0 or the grid leaves [0, t_end].
Trajectory Simulate(const ChainConfig& cfg, const EnergyState& e0, double t_end,
                    std::uint64_t seed, const SimulateOptions& options = {});

struct PathFunctionals {
  double boundary_influx = 0.0;
  std::vector<double> bond_average_flux;  // time-averaged J_k, k = 0..N
  std::vector<double> total_energy_times;
  std::vector<double> total_energy;
  // Conductivity estimate -sum_k avg_flux_k / (T_R - T_L); absent when T_L == T_R.
  std::optional<double> kappa_hat;
  std::vector<double> bond_kappa_hat;  // -(N+1) avg_flux_k / (T_R - T_L)
};

PathFunctionals ComputePathFunctionals(const Trajectory& traj, const ChainConfig& cfg);

// Reference path for rescaled deviations, sampled on the ensemble grid.
using ReferencePath = std::vector<std::vector<double>>;

struct EnsembleOptions {
  std::vector<double> time_grid;
  int n_paths = 1;
  int threads = 0;  // 0 = hardware concurrency
  // When set, statistics are of sqrt(M) (Theta^M(t) - reference(t)).
  std::optional<ReferencePath> reference;
  // Seed for path i is DeriveSeed(seed_base, i).
  std::optional<std::uint64_t> seed_base;
};

struct EnsembleStats {
  std::vector<double> time_grid;
  std::vector<std::vector<double>> mean_path;  // per grid time, N entries
  MomentMatrix cov_final;
  Eigen::MatrixXd cov_final_se;
  int n_paths = 0;
  bool rescaled = false;
  // n_paths x N, the (possibly rescaled) values at the last grid time.
  Eigen::MatrixXd final_samples;
  // Per path sup over the grid of |Theta^M - reference|_inf (unscaled).
  std::vector<double> sup_errors;
  std::vector<std::uint64_t> event_counts;
};

// Runs independent paths in parallel; results depend only on the seeds.
EnsembleStats RunEnsemble(const ChainConfig& cfg, const EnergyState& e0, double t_end,
                          const EnsembleOptions& options);

void WriteTrajectoryCsv(std::ostream& os, const std::vector<double>& times,
                        const std::vector<std::vector<double>>& states);
void WriteGridCsv(std::ostream& os, const Trajectory& traj);
void WriteEventsCsv(std::ostream& os, const Trajectory& traj);

}  // namespace heatchain

#endif  // HEATCHAIN_JUMP_PROCESS_HPP_
