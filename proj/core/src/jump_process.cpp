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

#include "heatchain/jump_process.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "heatchain/csv.hpp"
#include "heatchain/parallel.hpp"
#include "heatchain/random.hpp"

namespace heatchain {

namespace {

void ValidateGrid(const std::vector<double>& grid, double t_end) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= t_end)) {
      throw std::invalid_argument("grid time outside [0, t_end]");
    }
    if (i > 0 && grid[i] < grid[i - 1]) {
      throw std::invalid_argument("grid times must be non-decreasing");
    }
  }
}

}  // namespace

Trajectory::Trajectory(EnergyState initial, double t_end)
    : initial_(initial), final_(std::move(initial)), t_end_(t_end) {}

EventRecord Trajectory::event(std::size_t i) const {
  auto s = state_after(i);
  return {times_[i], clocks_[i], fluxes_[i], EnergyState(std::vector<double>(s.begin(), s.end()))};
}

std::span<const double> Trajectory::state_after(std::size_t i) const {
  const std::size_t n = static_cast<std::size_t>(n_cells());
  return std::span<const double>(states_).subspan(i * n, n);
}

std::span<const double> Trajectory::snapshot(std::size_t g) const {
  const std::size_t n = static_cast<std::size_t>(n_cells());
  return std::span<const double>(snapshots_).subspan(g * n, n);
}

EnergyState Trajectory::StateAt(double t) const {
  if (truncated_) throw std::logic_error("StateAt needs an untruncated event log");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  auto s = state_after(static_cast<std::size_t>(it - times_.begin() - 1));
  return EnergyState(std::vector<double>(s.begin(), s.end()));
}

Trajectory Simulate(const ChainConfig& cfg, const EnergyState& e0, double t_end,
                    std::uint64_t seed, const SimulateOptions& options) {
  cfg.Validate();
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be > 0");
  if (e0.size() != cfg.n_cells) {
    throw std::invalid_argument("initial state size does not match n_cells");
  }
  ValidateGrid(options.grid, t_end);

  const int n = cfg.n_cells;
  const std::size_t nz = static_cast<std::size_t>(n);
  Trajectory traj(e0, t_end);
  traj.grid_ = options.grid;
  traj.snapshots_.reserve(options.grid.size() * nz);
  traj.bond_flux_.assign(nz + 1, 0.0);
  traj.bond_events_.assign(nz + 1, 0);

  UniformStream stream(seed);
  std::vector<double> energies = e0.vector();
  std::vector<double> rates(nz + 1);
  std::size_t next_grid = 0;
  double t = 0.0;

  auto flush_grid = [&](double until) {
    while (next_grid < options.grid.size() && options.grid[next_grid] < until) {
      traj.snapshots_.insert(traj.snapshots_.end(), energies.begin(), energies.end());
      ++next_grid;
    }
  };

  for (;;) {
    double total = 0.0;
    const double dt = DrawWaitingTime(energies, cfg, rates, stream, total);
    const double t_next = t + dt;
    if (!(t_next < t_end)) break;
    flush_grid(t_next);
    int clock = 0;
    const double flux = ApplyRandomExchange(energies, cfg, rates, total, stream, clock);
    t = t_next;

    ++traj.event_count_;
    traj.bond_flux_[static_cast<std::size_t>(clock)] += flux;
    ++traj.bond_events_[static_cast<std::size_t>(clock)];
    if (clock == 0) traj.total_influx_ += flux;
    if (clock == n) traj.total_influx_ -= flux;

    if (options.record_events) {
      if (traj.times_.size() < options.event_cap) {
        traj.times_.push_back(t);
        traj.clocks_.push_back(clock);
        traj.fluxes_.push_back(flux);
        traj.influx_.push_back(traj.total_influx_);
        traj.states_.insert(traj.states_.end(), energies.begin(), energies.end());
      } else {
        traj.truncated_ = true;
      }
    }
  }
  flush_grid(std::nextafter(t_end, 2.0 * t_end + 1.0));
  traj.final_ = EnergyState(std::move(energies));
  return traj;
}

PathFunctionals ComputePathFunctionals(const Trajectory& traj, const ChainConfig& cfg) {
  PathFunctionals out;
  out.boundary_influx = traj.boundary_influx();
  const auto& sums = traj.bond_flux_sums();
  out.bond_average_flux.resize(sums.size());
  for (std::size_t k = 0; k < sums.size(); ++k) out.bond_average_flux[k] = sums[k] / traj.t_end();

  out.total_energy_times.push_back(0.0);
  out.total_energy.push_back(traj.initial_state().total());
  if (traj.record_complete()) {
    for (std::size_t i = 0; i < traj.logged_events(); ++i) {
      auto s = traj.state_after(i);
      double total = 0.0;
      for (double e : s) total += e;
      out.total_energy_times.push_back(traj.event_time(i));
      out.total_energy.push_back(total);
    }
  } else {
    for (std::size_t g = 0; g < traj.grid().size(); ++g) {
      auto s = traj.snapshot(g);
      double total = 0.0;
      for (double e : s) total += e;
      out.total_energy_times.push_back(traj.grid()[g]);
      out.total_energy.push_back(total);
    }
  }

  const double gap = cfg.t_right - cfg.t_left;
  if (gap != 0.0) {
    double sum = 0.0;
    const double bonds = static_cast<double>(out.bond_average_flux.size());
    for (double phi : out.bond_average_flux) {
      sum += phi;
      out.bond_kappa_hat.push_back(-bonds * phi / gap);
    }
    out.kappa_hat = -sum / gap;
  }
  return out;
}

EnsembleStats RunEnsemble(const ChainConfig& cfg, const EnergyState& e0, double t_end,
                          const EnsembleOptions& options) {
  cfg.Validate();
  if (options.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (options.time_grid.empty()) throw std::invalid_argument("ensemble needs a time grid");
  ValidateGrid(options.time_grid, t_end);
  const std::size_t n = static_cast<std::size_t>(cfg.n_cells);
  const std::size_t g = options.time_grid.size();
  if (options.reference) {
    if (options.reference->size() != g) throw std::invalid_argument("reference grid mismatch");
    for (const auto& r : *options.reference) {
      if (r.size() != n) throw std::invalid_argument("reference state size mismatch");
    }
  }
  const std::uint64_t base = options.seed_base.value_or(cfg.master_seed);

  struct PathResult {
    std::vector<double> snapshots;
    std::uint64_t events = 0;
  };
  std::vector<PathResult> results(static_cast<std::size_t>(options.n_paths));
  SimulateOptions sim_opts;
  sim_opts.grid = options.time_grid;
  sim_opts.record_events = false;
  ParallelFor(options.n_paths, options.threads, [&](int i) {
    Trajectory traj = Simulate(cfg, e0, t_end, DeriveSeed(base, static_cast<std::uint64_t>(i)), sim_opts);
    PathResult& r = results[static_cast<std::size_t>(i)];
    r.snapshots.resize(g * n);
    for (std::size_t k = 0; k < g; ++k) {
      auto s = traj.snapshot(k);
      std::copy(s.begin(), s.end(), r.snapshots.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    r.events = traj.event_count();
  });

  EnsembleStats stats;
  stats.time_grid = options.time_grid;
  stats.n_paths = options.n_paths;
  stats.rescaled = options.reference.has_value();
  const double scale = std::sqrt(static_cast<double>(cfg.particles_per_cell));
  auto value = [&](const PathResult& r, std::size_t k, std::size_t c) {
    double x = r.snapshots[k * n + c];
    return options.reference ? scale * (x - (*options.reference)[k][c]) : x;
  };

  stats.mean_path.assign(g, std::vector<double>(n, 0.0));
  std::vector<double> column(results.size());
  for (std::size_t k = 0; k < g; ++k) {
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t p = 0; p < results.size(); ++p) column[p] = value(results[p], k, c);
      stats.mean_path[k][c] = PairwiseSum(column) / static_cast<double>(results.size());
    }
  }

  stats.final_samples.resize(options.n_paths, static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < results.size(); ++p) {
    for (std::size_t c = 0; c < n; ++c) {
      stats.final_samples(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) =
          value(results[p], g - 1, c);
    }
    stats.event_counts.push_back(results[p].events);
  }
  stats.cov_final.kind = MomentKind::kEmpiricalCov;
  if (options.n_paths >= 2) {
    SampleMoments m = ComputeSampleMoments(stats.final_samples);
    stats.cov_final.entries = m.cov;
    stats.cov_final_se = m.cov_se;
  } else {
    stats.cov_final.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    stats.cov_final_se = stats.cov_final.entries;
  }

  if (options.reference) {
    for (const PathResult& r : results) {
      double sup = 0.0;
      for (std::size_t k = 0; k < g; ++k) {
        for (std::size_t c = 0; c < n; ++c) {
          sup = std::max(sup, std::abs(r.snapshots[k * n + c] - (*options.reference)[k][c]));
        }
      }
      stats.sup_errors.push_back(sup);
    }
  }
  return stats;
}

void WriteTrajectoryCsv(std::ostream& os, const std::vector<double>& times,
                        const std::vector<std::vector<double>>& states) {
  const std::size_t n = states.empty() ? 0 : states.front().size();
  os << 't';
  for (std::size_t i = 1; i <= n; ++i) os << ",E" << i;
  os << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << FormatNumber(times[k]);
    for (double e : states[k]) os << ',' << FormatNumber(e);
    os << '\n';
  }
}

void WriteGridCsv(std::ostream& os, const Trajectory& traj) {
  std::vector<std::vector<double>> states;
  for (std::size_t g = 0; g < traj.grid().size(); ++g) {
    auto s = traj.snapshot(g);
    states.emplace_back(s.begin(), s.end());
  }
  WriteTrajectoryCsv(os, traj.grid(), states);
}

void WriteEventsCsv(std::ostream& os, const Trajectory& traj) {
  os << "t,clock,flux\n";
  for (std::size_t i = 0; i < traj.logged_events(); ++i) {
    os << FormatNumber(traj.event_time(i)) << ',' << traj.event_clock(i) << ','
       << FormatNumber(traj.event_flux(i)) << '\n';
  }
}

}  // namespace heatchain
