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

// The deterministic large-M limit of the chain: the nonlinear discrete heat
// equation dE/dt = F(E) with
//
//   F_i = f(E_{i-1}, E_i)(E_{i-1} - E_i)/2 + f(E_i, E_{i+1})(E_{i+1} - E_i)/2,
//
// E_0 = T_L and E_{N+1} = T_R; its equilibrium, linearization and the
// resulting conductivity.

#ifndef HEATCHAIN_LIMIT_ODE_HPP_
#define HEATCHAIN_LIMIT_ODE_HPP_

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "heatchain/model.hpp"

namespace heatchain {

// F at an arbitrary positive point (no EnergyState validation, so finite
// difference probes can call it directly).
Eigen::VectorXd Drift(std::span<const double> energies, const ChainConfig& cfg);
inline Eigen::VectorXd Drift(const EnergyState& state, const ChainConfig& cfg) {
  return Drift(state.values(), cfg);
}

// Fixed-step RK4 solution on the uniform grid t_k = k * t_end / steps.
struct OdeSolution {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;

  double step() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  // Linear interpolation between grid nodes, clamped to the grid range.
  Eigen::VectorXd At(double t) const;
};

// Throws std::domain_error if any entry becomes non-positive.
OdeSolution IntegrateOde(const ChainConfig& cfg, const EnergyState& e0, double t_end, double dt);

struct EquilibriumProfile {
  EnergyState e_star;
  double c_star = 0.0;    // f(E_k, E_{k+1})(E_{k+1} - E_k), same on every bond
  double residual = 0.0;  // |T_R*(c_star) - T_R|
  int iterations = 0;     // outer bisection steps
};

// Shooting map: E_1(c), ..., E_N(c), T_R*(c) obtained by solving
// f(E_{k-1}, E_k)(E_k - E_{k-1}) = c bond by bond from E_0 = T_L.
// Requires c >= 0. Throws std::runtime_error when a bracket cannot be found.
std::vector<double> ShootProfile(const ChainConfig& cfg, double c, double tol);

// Equilibrium of F by bisection on c. For T_L > T_R the chain is mirrored
// (every supported rate function is symmetric) and c_star comes out negative.
EquilibriumProfile SolveEquilibrium(const ChainConfig& cfg, double tol = 1e-10);

// Exact Jacobian of F (it carries the factor 1/2 of the drift).
Eigen::MatrixXd AnalyticJacobian(std::span<const double> energies, const ChainConfig& cfg);
Eigen::MatrixXd FiniteDifferenceJacobian(std::span<const double> energies,
                                         const ChainConfig& cfg, double h);

struct JacobianReport {
  Eigen::MatrixXd jac;
  Eigen::VectorXcd eigenvalues;
  Eigen::VectorXd eigen_real_parts;
  Eigen::VectorXd row_sums;
  bool gershgorin_ok = false;      // every Gershgorin disc in Re < 0
  bool gamma_condition_ok = false;  // both partials of gamma < 0 on every bond
  double fd_max_error = 0.0;       // max |analytic - central difference|
  double fd_step = 0.0;

  double max_real_part() const { return eigen_real_parts.maxCoeff(); }
  bool stable() const { return max_real_part() < 0.0; }
};

JacobianReport AnalyzeJacobian(const EnergyState& e_star, const ChainConfig& cfg,
                               double h = 1e-5);

// gamma = (d1 f + d2 f) / f. Empty where the cap binds (f is flat there).
std::optional<double> Gamma(const RateFunctionSpec& spec, double cap, double e1, double e2);

struct GammaPartials {
  double d1 = 0.0;
  double d2 = 0.0;
};
std::optional<GammaPartials> GammaGradient(const RateFunctionSpec& spec, double cap,
                                           double e1, double e2);

struct Conductivity {
  double kappa = 0.0;  // c*(N+1) / (2 (T_R - T_L))
  double lower = 0.0;  // min(f(T_L,T_L), f(T_R,T_R)) / 2
  double upper = 0.0;  // max(f(T_L,T_L), f(T_R,T_R)) / 2
  EquilibriumProfile profile;
};

// Throws std::invalid_argument when T_L == T_R.
Conductivity ComputeConductivity(const ChainConfig& cfg, double tol = 1e-10);

}  // namespace heatchain

#endif  // HEATCHAIN_LIMIT_ODE_HPP_
