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

// Second-order structure of the chain.
//
// One event at state E moves energy J_k across bond k with probability
// f_k / R. Its rescaled second moment M^2 E[zeta zeta^T] tends to
// H H^T / R, where column k of the N x (N+1) matrix H is
// V_k (e_{k+1} - e_k) and
//
//   V(x1, x2)^2   = f(x1, x2) (2/3 x1^2 - 1/3 x1 x2 + 2/3 x2^2)
//
// with the bath-side coefficient raised to 4/3 on the two boundary bonds.
// On the fast time scale H H^T is the diffusion matrix of the Gaussian
// fluctuations and of the mesoscopic equation dZ = F dt + M^{-1/2} H dW.

#ifndef HEATCHAIN_FLUCTUATION_HPP_
#define HEATCHAIN_FLUCTUATION_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "heatchain/limit_ode.hpp"
#include "heatchain/model.hpp"
#include "heatchain/statistics.hpp"

namespace heatchain {

enum class BondRole { kInterior, kLeft, kRight };

// kExchange is the form produced by the exchange rule. kRestated is the
// alternative 1/4, 1/6, 1/4 (3/4 on the bath side) form; it is kept only so
// the moment oracle can demonstrate that it does not fit.
enum class DiffusionForm { kExchange, kRestated };

// Quadratic form q(x1, x2) with V^2 = f q.
double DiffusionQuadratic(double x1, double x2, BondRole role,
                          DiffusionForm form = DiffusionForm::kExchange);

double VCoefficient(const RateFunctionSpec& spec, double cap, double x1, double x2,
                    BondRole role, DiffusionForm form = DiffusionForm::kExchange);

// N x (N+1); row i holds V_{i-1} in column i-1 and -V_i in column i.
Eigen::MatrixXd HMatrix(std::span<const double> energies, const ChainConfig& cfg,
                        DiffusionForm form = DiffusionForm::kExchange);
inline Eigen::MatrixXd HMatrix(const EnergyState& state, const ChainConfig& cfg,
                               DiffusionForm form = DiffusionForm::kExchange) {
  return HMatrix(state.values(), cfg, form);
}

// Sigma = H H^T / R(E).
MomentMatrix SigmaMatrix(const EnergyState& state, const ChainConfig& cfg,
                         DiffusionForm form = DiffusionForm::kExchange);

// Exact one-event second moment E[zeta zeta^T] (not rescaled) for finite m.
MomentMatrix ExactSecondMoments(const EnergyState& state, const ChainConfig& cfg, int m);

struct MomentEstimate {
  MomentMatrix estimate;  // average of m^2 zeta zeta^T
  Eigen::MatrixXd se;
  int n_samples = 0;
};

// Monte Carlo estimate of m^2 E[zeta zeta^T] from n_samples independent
// events at the fixed state, drawn through the simulator's own kernel.
MomentEstimate MomentOracle(const EnergyState& state, const ChainConfig& cfg, int m,
                            int n_samples, std::uint64_t seed);

struct CovariancePath {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> sigma;

  const Eigen::MatrixXd& final() const { return sigma.back(); }
};

// RK4 for S' = A(t) S + S A(t)^T + Q(t), S(0) = s0.
CovariancePath IntegrateCovariance(const std::function<Eigen::MatrixXd(double)>& jac,
                                   const std::function<Eigen::MatrixXd(double)>& source,
                                   const Eigen::MatrixXd& s0, double t_end, double dt);

// Covariance of the Gaussian fluctuation limit along theta_bar, with
// A = DF(theta_bar), Q = H H^T(theta_bar), S(0) = 0. The grid of theta_bar
// must contain every half step t + dt/2; otherwise std::invalid_argument.
CovariancePath CovarianceOde(const ChainConfig& cfg, const OdeSolution& theta_bar,
                             double t_end, double dt);

// Integrates theta_bar from e0 on the half-step grid, then the covariance.
CovariancePath CovarianceOde(const ChainConfig& cfg, const EnergyState& e0,
                             double t_end, double dt);

struct SdePath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  int resamples = 0;
  int clamps = 0;
};

// Euler-Maruyama for dG = DF(theta_bar) G dt + H(theta_bar) dW, G(0) = 0,
// with N + 1 independent noise channels. Coefficients are tabulated once
// per step (theta_bar interpolated linearly) and shared by all paths.
class CltSde {
 public:
  CltSde(const ChainConfig& cfg, const OdeSolution& theta_bar, double t_end, double dt);

  SdePath Run(std::uint64_t seed, bool zero_noise = false) const;
  Eigen::VectorXd RunFinal(std::uint64_t seed) const;
  int steps() const { return static_cast<int>(jac_.size()); }

 private:
  int n_;
  double h_;
  double t_end_;
  std::vector<Eigen::MatrixXd> jac_;
  std::vector<Eigen::MatrixXd> diffusion_;
};

struct SdeEndpoint {
  Eigen::VectorXd state;
  int resamples = 0;
  int clamps = 0;
};

struct MesoscopicOptions {
  // Multiplies H dW; negative means 1 / sqrt(M).
  double noise_scale = -1.0;
  // Paths with more clamped steps than this throw std::runtime_error.
  int max_clamps = 100;
};

// Euler-Maruyama for dZ = F(Z) dt + noise_scale H(Z) dW. A step that would
// put an entry at or below eps0 = 1e-9 max(T_L, T_R) is redrawn once, then
// clamped to eps0 (counted in SdePath::clamps).
class MesoscopicSde {
 public:
  MesoscopicSde(const ChainConfig& cfg, double t_end, double dt,
                MesoscopicOptions options = {});

  SdePath Run(const EnergyState& z0, std::uint64_t seed) const;
  // Same draws as Run, keeping only the endpoint.
  SdeEndpoint RunFinal(const EnergyState& z0, std::uint64_t seed) const;
  double noise_scale() const { return noise_; }
  int steps() const { return steps_; }

 private:
  Eigen::VectorXd Integrate(const EnergyState& z0, std::uint64_t seed, SdePath* path,
                            int& resamples, int& clamps) const;

  ChainConfig cfg_;
  double t_end_;
  double h_;
  int steps_;
  double noise_;
  int max_clamps_;
};

struct LyapunovResult {
  MomentMatrix s;
  double residual = 0.0;  // max |S J^T + J S + Q|
};

// Solves S J^T + J S + Q = 0 on the N(N+1)/2 symmetric unknowns. Throws
// std::invalid_argument when J is not Hurwitz or Q is not symmetric.
LyapunovResult LyapunovSolve(const Eigen::MatrixXd& jac, const Eigen::MatrixXd& q);

// Gaussian approximation N(E*, S / M) of the stationary law, with S the
// Lyapunov solution at the equilibrium.
struct NessGaussian {
  EquilibriumProfile equilibrium;
  JacobianReport jacobian;
  MomentMatrix s;
  double lyapunov_residual = 0.0;
  int m = 0;
  Eigen::MatrixXd covariance;  // S / M
  Eigen::MatrixXd precision;
  double log_normalizer = 0.0;  // log of the Gaussian normalizing constant
  // Second-order O(1/M) shift of the stationary mean away from E*, from
  // E[F] = 0 with F expanded to second order (Hessian by central differences).
  Eigen::VectorXd mean_shift;

  double LogDensity(std::span<const double> e) const;
  double Density(std::span<const double> e) const;
};

NessGaussian ComputeNessGaussian(const ChainConfig& cfg, double tol = 1e-10);

}  // namespace heatchain

#endif  // HEATCHAIN_FLUCTUATION_HPP_
