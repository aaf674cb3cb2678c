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

#include "heatchain/limit_ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "heatchain/rk4.hpp"

namespace heatchain {

namespace {

double SlotValue(std::span<const double> e, const ChainConfig& cfg, int s) {
  if (s == 0) return cfg.t_left;
  if (s == static_cast<int>(e.size()) + 1) return cfg.t_right;
  return e[static_cast<std::size_t>(s - 1)];
}

constexpr int kMaxBisections = 400;
constexpr int kMaxExpansions = 200;

// Smallest b > a with f(a, b)(b - a) = c, to within tol in b.
double SolveBond(const ChainConfig& cfg, double a, double c, double tol) {
  if (c == 0.0) return a;
  auto flux = [&](double b) { return Rate(cfg.rate_fn, cfg.rate_cap, a, b) * (b - a); };
  double lo = a;
  double hi = a + c / Rate(cfg.rate_fn, cfg.rate_cap, a, a) + 1.0;
  int expansions = 0;
  while (flux(hi) < c) {
    if (++expansions > kMaxExpansions || !std::isfinite(hi)) {
      throw std::runtime_error("equilibrium bond solve failed to bracket: left energy " +
                               std::to_string(a) + ", target flux " + std::to_string(c) +
                               ", last upper bound " + std::to_string(hi));
    }
    lo = hi;
    hi = a + 2.0 * (hi - a);
  }
  for (int it = 0; it < kMaxBisections && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (flux(mid) < c ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ChainConfig Mirrored(const ChainConfig& cfg) {
  ChainConfig m = cfg;
  std::swap(m.t_left, m.t_right);
  return m;
}

}  // namespace

Eigen::VectorXd Drift(std::span<const double> e, const ChainConfig& cfg) {
  const int n = static_cast<int>(e.size());
  Eigen::VectorXd out(n);
  double left_flux = 0.0;  // f(E_{s-1}, E_s)(E_{s-1} - E_s)
  {
    double a = cfg.t_left, x = SlotValue(e, cfg, 1);
    left_flux = Rate(cfg.rate_fn, cfg.rate_cap, a, x) * (a - x);
  }
  for (int s = 1; s <= n; ++s) {
    double x = SlotValue(e, cfg, s), b = SlotValue(e, cfg, s + 1);
    double right_flux = Rate(cfg.rate_fn, cfg.rate_cap, x, b) * (b - x);
    out(s - 1) = 0.5 * left_flux + 0.5 * right_flux;
    left_flux = -right_flux;
  }
  return out;
}

Eigen::VectorXd OdeSolution::At(double t) const {
  if (times.empty()) throw std::logic_error("empty ODE solution");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  double w = (t - times[k]) / (times[k + 1] - times[k]);
  return (1.0 - w) * states[k] + w * states[k + 1];
}

OdeSolution IntegrateOde(const ChainConfig& cfg, const EnergyState& e0, double t_end, double dt) {
  cfg.Validate();
  if (e0.size() != cfg.n_cells) throw std::invalid_argument("initial state size mismatch");
  const int steps = StepCount(t_end, dt);
  const double h = steps > 0 ? t_end / steps : 0.0;
  auto rhs = [&](double, const Eigen::VectorXd& y) {
    if ((y.array() <= 0.0).any()) {
      throw std::domain_error("ODE state left the positive orthant; reduce dt");
    }
    return Drift(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), cfg);
  };
  OdeSolution sol;
  sol.times.reserve(static_cast<std::size_t>(steps) + 1);
  sol.states.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(e0.values().data(), e0.size());
  sol.times.push_back(0.0);
  sol.states.push_back(y);
  for (int k = 0; k < steps; ++k) {
    y = Rk4Step(rhs, k * h, y, h);
    if ((y.array() <= 0.0).any()) {
      throw std::domain_error("ODE state left the positive orthant; reduce dt");
    }
    sol.times.push_back(k + 1 == steps ? t_end : (k + 1) * h);
    sol.states.push_back(y);
  }
  return sol;
}

std::vector<double> ShootProfile(const ChainConfig& cfg, double c, double tol) {
  if (c < 0.0) throw std::invalid_argument("ShootProfile needs c >= 0");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cfg.n_cells) + 1);
  double left = cfg.t_left;
  for (int k = 0; k <= cfg.n_cells; ++k) {
    left = SolveBond(cfg, left, c, tol);
    out.push_back(left);
  }
  return out;
}

EquilibriumProfile SolveEquilibrium(const ChainConfig& cfg, double tol) {
  cfg.Validate();
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (cfg.t_left == cfg.t_right) {
    return {EnergyState::Uniform(cfg.n_cells, cfg.t_left), 0.0, 0.0, 0};
  }
  if (cfg.t_left > cfg.t_right) {
    EquilibriumProfile p = SolveEquilibrium(Mirrored(cfg), tol);
    std::vector<double> e = p.e_star.vector();
    std::reverse(e.begin(), e.end());
    p.e_star = EnergyState(std::move(e));
    p.c_star = -p.c_star;
    return p;
  }

  const double inner_tol = tol / 10.0;
  double lo = 0.0;
  double hi = cfg.rate_cap * (cfg.t_right - cfg.t_left);
  std::vector<double> profile;
  double c = hi;
  double residual = 0.0;
  int it = 0;
  for (; it < kMaxBisections; ++it) {
    c = 0.5 * (lo + hi);
    profile = ShootProfile(cfg, c, inner_tol);
    double t_right = profile.back();
    residual = std::abs(t_right - cfg.t_right);
    if (residual <= tol) break;
    if (t_right < cfg.t_right) {
      lo = c;
    } else {
      hi = c;
    }
    if (!(lo < 0.5 * (lo + hi) && 0.5 * (lo + hi) < hi)) break;
  }
  profile.pop_back();
  return {EnergyState(std::move(profile)), c, residual, it + 1};
}

Eigen::MatrixXd AnalyticJacobian(std::span<const double> e, const ChainConfig& cfg) {
  const int n = static_cast<int>(e.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int s = 1; s <= n; ++s) {
    const double a = SlotValue(e, cfg, s - 1);
    const double x = SlotValue(e, cfg, s);
    const double b = SlotValue(e, cfg, s + 1);
    const double f_left = Rate(cfg.rate_fn, cfg.rate_cap, a, x);
    const double f_right = Rate(cfg.rate_fn, cfg.rate_cap, x, b);
    const RatePartials p_left = RatePartialDerivatives(cfg.rate_fn, cfg.rate_cap, a, x);
    const RatePartials p_right = RatePartialDerivatives(cfg.rate_fn, cfg.rate_cap, x, b);
    const int i = s - 1;
    jac(i, i) = 0.5 * (p_left.d2 * (a - x) - f_left + p_right.d1 * (b - x) - f_right);
    if (s > 1) jac(i, i - 1) = 0.5 * (p_left.d1 * (a - x) + f_left);
    if (s < n) jac(i, i + 1) = 0.5 * (p_right.d2 * (b - x) + f_right);
  }
  return jac;
}

Eigen::MatrixXd FiniteDifferenceJacobian(std::span<const double> e, const ChainConfig& cfg,
                                         double h) {
  const int n = static_cast<int>(e.size());
  Eigen::MatrixXd jac(n, n);
  std::vector<double> probe(e.begin(), e.end());
  for (int j = 0; j < n; ++j) {
    const double x = probe[static_cast<std::size_t>(j)];
    probe[static_cast<std::size_t>(j)] = x + h;
    Eigen::VectorXd up = Drift(probe, cfg);
    probe[static_cast<std::size_t>(j)] = x - h;
    Eigen::VectorXd down = Drift(probe, cfg);
    probe[static_cast<std::size_t>(j)] = x;
    jac.col(j) = (up - down) / (2.0 * h);
  }
  return jac;
}

JacobianReport AnalyzeJacobian(const EnergyState& e_star, const ChainConfig& cfg, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be > 0");
  JacobianReport report;
  report.jac = AnalyticJacobian(e_star.values(), cfg);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(report.jac, /*computeEigenvectors=*/false);
  report.eigenvalues = solver.eigenvalues();
  report.eigen_real_parts = report.eigenvalues.real();
  report.row_sums = report.jac.rowwise().sum();

  report.gershgorin_ok = true;
  for (Eigen::Index i = 0; i < report.jac.rows(); ++i) {
    double radius = report.jac.row(i).cwiseAbs().sum() - std::abs(report.jac(i, i));
    if (!(report.jac(i, i) + radius < 0.0)) report.gershgorin_ok = false;
  }

  report.gamma_condition_ok = true;
  for (int k = 0; k <= cfg.n_cells; ++k) {
    auto g = GammaGradient(cfg.rate_fn, cfg.rate_cap, e_star.slot(cfg, k), e_star.slot(cfg, k + 1));
    if (!g || !(g->d1 < 0.0 && g->d2 < 0.0)) report.gamma_condition_ok = false;
  }

  report.fd_step = h;
  report.fd_max_error =
      (report.jac - FiniteDifferenceJacobian(e_star.values(), cfg, h)).cwiseAbs().maxCoeff();
  return report;
}

std::optional<double> Gamma(const RateFunctionSpec& spec, double cap, double e1, double e2) {
  if (RawRate(spec, e1, e2) >= cap) return std::nullopt;
  switch (spec.kind) {
    case RateKind::kConstant: return 0.0;
    case RateKind::kSqrtProduct: return 0.5 * (1.0 / e1 + 1.0 / e2);
    case RateKind::kSqrtHarmonic:
      return 0.5 * (e1 * e1 + e2 * e2) / ((e1 + e2) * e1 * e2);
    case RateKind::kMinEnergySqrt: return 0.5 / std::min(e1, e2);
    case RateKind::kMinEnergy: return 1.0 / std::min(e1, e2);
  }
  return std::nullopt;
}

std::optional<GammaPartials> GammaGradient(const RateFunctionSpec& spec, double cap,
                                           double e1, double e2) {
  if (RawRate(spec, e1, e2) >= cap) return std::nullopt;
  auto min_split = [&](double d) -> GammaPartials {
    if (e1 < e2) return {d, 0.0};
    if (e2 < e1) return {0.0, d};
    return {0.5 * d, 0.5 * d};
  };
  switch (spec.kind) {
    case RateKind::kConstant: return GammaPartials{};
    case RateKind::kSqrtProduct:
      return GammaPartials{-0.5 / (e1 * e1), -0.5 / (e2 * e2)};
    case RateKind::kSqrtHarmonic: {
      const double den = e1 * e2 * (e1 + e2);
      const double den2 = den * den;
      return GammaPartials{0.5 * e2 * e2 * (e1 * e1 - 2.0 * e1 * e2 - e2 * e2) / den2,
                           0.5 * e1 * e1 * (e2 * e2 - 2.0 * e1 * e2 - e1 * e1) / den2};
    }
    case RateKind::kMinEnergySqrt: {
      double m = std::min(e1, e2);
      return min_split(-0.5 / (m * m));
    }
    case RateKind::kMinEnergy: {
      double m = std::min(e1, e2);
      return min_split(-1.0 / (m * m));
    }
  }
  return std::nullopt;
}

Conductivity ComputeConductivity(const ChainConfig& cfg, double tol) {
  if (cfg.t_left == cfg.t_right) {
    throw std::invalid_argument("conductivity is undefined for T_L == T_R");
  }
  Conductivity out;
  out.profile = SolveEquilibrium(cfg, tol);
  const double gap = cfg.t_right - cfg.t_left;
  out.kappa = out.profile.c_star * (cfg.n_cells + 1) / (2.0 * gap);
  const double fl = Rate(cfg.rate_fn, cfg.rate_cap, cfg.t_left, cfg.t_left);
  const double fr = Rate(cfg.rate_fn, cfg.rate_cap, cfg.t_right, cfg.t_right);
  out.lower = 0.5 * std::min(fl, fr);
  out.upper = 0.5 * std::max(fl, fr);
  return out;
}

}  // namespace heatchain
