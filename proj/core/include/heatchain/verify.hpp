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

// Statistical experiments that put the simulator next to its limits. Each
// returns an ExperimentReport whose checks carry their own thresholds; a
// report is a pure function of its parameters apart from the wall time.

#ifndef HEATCHAIN_VERIFY_HPP_
#define HEATCHAIN_VERIFY_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "heatchain/model.hpp"

namespace heatchain {

// One reported statistic. se is the Monte Carlo standard error; it is 0 for
// quantities computed in closed form or by a deterministic solver.
struct ReportRow {
  std::string condition;
  std::string statistic;
  double value = 0.0;
  double se = 0.0;
  std::optional<double> reference;
};

struct FittedExponent {
  std::string name;
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

struct ReportCheck {
  std::string name;
  std::string rule;  // human readable threshold, e.g. "|x| <= 3 se"
  double observed = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<ReportRow> rows;
  std::vector<FittedExponent> fits;
  std::vector<ReportCheck> checks;
  double wall_seconds = 0.0;

  bool passed() const;
  // One-line, machine-parsable reason for the first failing check.
  std::optional<std::string> failure_reason() const;

  void AddParameter(std::string key, std::string value);
  void AddParameter(std::string key, double value);
  void AddRow(std::string condition, std::string statistic, double value, double se = 0.0,
              std::optional<double> reference = std::nullopt);
  // Records a check; passed = observed <= threshold (NaN fails).
  void AddCheck(std::string name, std::string rule, double observed, double threshold);
  void AddCheck(std::string name, std::string rule, double observed, double threshold,
                bool passed);

  // Summary block including wall time.
  void WriteText(std::ostream& os) const;
  // Tables only; no wall time, so identical inputs give identical bytes.
  void WriteCsv(std::ostream& os) const;
};

// Time-averaged statistics of one long run split into equal batches after a
// burn-in. Per batch: time averages of E and E E^T and the net energy moved
// across each bond per unit time.
struct StationaryOptions {
  double burn_in = 0.0;
  double t_measure = 0.0;
  int n_batches = 50;
};

struct StationaryBatches {
  double batch_length = 0.0;
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> second;
  std::vector<Eigen::VectorXd> bond_flux;
  std::uint64_t events = 0;
};

StationaryBatches RunStationary(const ChainConfig& cfg, const EnergyState& e0,
                                std::uint64_t seed, const StationaryOptions& options);

struct LlnParams {
  ChainConfig base;                  // particles_per_cell is replaced by each M
  std::vector<int> m_list;
  double t_end = 5.0;
  int grid_points = 51;              // uniform grid on [0, t_end]
  int n_paths = 200;
  std::optional<EnergyState> e0;     // default: every cell at T_L
  double ode_dt = 1e-3;
  int threads = 0;
  double slope_low = -0.65;
  double slope_high = -0.35;
};

ExperimentReport LlnExperiment(const LlnParams& p);

struct CltParams {
  ChainConfig cfg;
  double t_end = 2.0;
  int n_paths = 10'000;
  std::optional<EnergyState> e0;     // default: every cell at T_L
  double ode_dt = 1e-3;
  int threads = 0;
  double rel_tol = 0.10;
  double n_se = 3.0;
};

// Marginal skewness and excess kurtosis are reported with their Gaussian
// sampling SEs as diagnostics; at finite M they carry an O(M^-1/2) bias, so
// they are not gated.
ExperimentReport CltExperiment(const CltParams& p);

struct FourierParams {
  ChainConfig base;                  // t_right is replaced by T_L + delta
  std::vector<double> delta_list;
  int n_paths = 20;                  // independent stationary runs per delta
  double t_measure = 200.0;
  double burn_in = 10.0;
  double tol = 1e-12;
  int threads = 0;
  double n_se = 3.0;
  // Successive |kappa - f(T_L,T_L)/2| ratios must lie in
  // [ratio_low, ratio_high] times the ratio of the deltas.
  double ratio_low = 0.6;
  double ratio_high = 1.4;
};

ExperimentReport FourierExperiment(const FourierParams& p);

struct BetaTailParams {
  std::vector<double> m_list;
  double epsilon = 0.3;
  double m_threshold = 0.0;          // bound asserted only for M >= this
};

// Closed-form tail P[B >= M^(eps-1)] = (1 - M^(eps-1))^(M-1), in log space.
double BetaTailLog(double m, double epsilon);

ExperimentReport BetaTailCheck(const BetaTailParams& p);

struct NessParams {
  ChainConfig cfg;
  double burn_in = -1.0;             // negative: 5 / |lambda_max|
  double t_measure = 1e4;
  int n_batches = 50;
  int n_replicas = 1;
  double tol = 1e-12;
  int threads = 0;
  double mean_n_se = 3.0;
  double cov_rel_tol = 0.15;
  double residual_tol = 1e-8;
  // Also compare the mean with E* plus its second-order O(1/M) shift.
  bool check_mean_shift = true;
  // Also run at 2M and check the variance ratio against 2 +- doubling_tol.
  bool check_doubling = false;
  double doubling_tol = 0.3;
};

ExperimentReport NessExperiment(const NessParams& p);

struct MesoParams {
  ChainConfig base;                  // particles_per_cell is replaced by each M
  std::vector<int> m_list;
  double t_end = 2.0;
  int n_paths = 10'000;
  double sde_dt = 2.5e-4;
  std::optional<EnergyState> e0;     // default: every cell at T_L
  double ode_dt = 1e-3;
  int threads = 0;
  // Mean gap must be <= gap_fraction times the smaller process SD.
  double gap_fraction = 0.1;
  double cov_rel_tol = 0.10;
  double n_se = 3.0;
  // Optional large-M proxy: both ensemble means within n_se of theta_bar(T).
  int proxy_m = 0;
  int proxy_paths = 1000;
};

ExperimentReport MesoscopicComparison(const MesoParams& p);

}  // namespace heatchain

#endif  // HEATCHAIN_VERIFY_HPP_
