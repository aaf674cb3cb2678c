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

#include "heatchain/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "heatchain/jump_process.hpp"
#include "heatchain/random.hpp"
#include "heatchain/rk4.hpp"

namespace heatchain {

namespace {

std::span<const double> AsSpan(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

BondRole RoleOf(int k, int n) {
  if (k == 0) return BondRole::kLeft;
  if (k == n) return BondRole::kRight;
  return BondRole::kInterior;
}

double Slot(std::span<const double> e, const ChainConfig& cfg, int s) {
  if (s == 0) return cfg.t_left;
  if (s == static_cast<int>(e.size()) + 1) return cfg.t_right;
  return e[static_cast<std::size_t>(s - 1)];
}

}  // namespace

double DiffusionQuadratic(double x1, double x2, BondRole role, DiffusionForm form) {
  if (form == DiffusionForm::kExchange) {
    double a = role == BondRole::kLeft ? 4.0 / 3.0 : 2.0 / 3.0;
    double b = role == BondRole::kRight ? 4.0 / 3.0 : 2.0 / 3.0;
    return a * x1 * x1 - x1 * x2 / 3.0 + b * x2 * x2;
  }
  double a = role == BondRole::kLeft ? 0.75 : 0.25;
  double b = role == BondRole::kRight ? 0.75 : 0.25;
  return a * x1 * x1 + x1 * x2 / 6.0 + b * x2 * x2;
}

double VCoefficient(const RateFunctionSpec& spec, double cap, double x1, double x2,
                    BondRole role, DiffusionForm form) {
  return std::sqrt(Rate(spec, cap, x1, x2) * DiffusionQuadratic(x1, x2, role, form));
}

Eigen::MatrixXd HMatrix(std::span<const double> e, const ChainConfig& cfg, DiffusionForm form) {
  const int n = static_cast<int>(e.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n + 1);
  for (int k = 0; k <= n; ++k) {
    double v = VCoefficient(cfg.rate_fn, cfg.rate_cap, Slot(e, cfg, k), Slot(e, cfg, k + 1),
                            RoleOf(k, n), form);
    if (k >= 1) h(k - 1, k) = -v;  // cell k loses J_k
    if (k < n) h(k, k) = v;        // cell k+1 gains J_k
  }
  return h;
}

MomentMatrix SigmaMatrix(const EnergyState& state, const ChainConfig& cfg, DiffusionForm form) {
  Eigen::MatrixXd h = HMatrix(state, cfg, form);
  return {h * h.transpose() / TotalRate(state, cfg), MomentKind::kSigma};
}

MomentMatrix ExactSecondMoments(const EnergyState& state, const ChainConfig& cfg, int m) {
  if (m < 2) throw std::invalid_argument("ExactSecondMoments needs M >= 2");
  const int n = state.size();
  const double md = static_cast<double>(m);
  const double shrink = md / (md + 1.0);
  std::vector<double> rates(static_cast<std::size_t>(n + 1));
  const double total = BondRates(state, cfg, rates);
  // E[B] = 1/M, E[B^2] = 2/(M(M+1)), E[p^2] = 1/3, E[p(1-p)] = 1/6, and the
  // bath energy T Z has E[Z] = 1, E[Z^2] = 2.
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  for (int k = 0; k <= n; ++k) {
    const double x1 = state.slot(cfg, k), x2 = state.slot(cfg, k + 1);
    const double a = k == 0 ? 4.0 / 3.0 : 2.0 / 3.0;
    const double b = k == n ? 4.0 / 3.0 : 2.0 / 3.0;
    const double second = (a * x1 * x1 * shrink - x1 * x2 / 3.0 + b * x2 * x2 * shrink) / (md * md);
    c[static_cast<std::size_t>(k)] = rates[static_cast<std::size_t>(k)] / total * second;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    out(i, i) = c[static_cast<std::size_t>(i)] + c[static_cast<std::size_t>(i + 1)];
    if (i + 1 < n) out(i, i + 1) = out(i + 1, i) = -c[static_cast<std::size_t>(i + 1)];
  }
  return {out, MomentKind::kSecondMoment};
}

MomentEstimate MomentOracle(const EnergyState& state, const ChainConfig& cfg, int m,
                            int n_samples, std::uint64_t seed) {
  if (n_samples < 1000) throw std::invalid_argument("moment oracle needs >= 1000 samples");
  ChainConfig run = cfg;
  run.particles_per_cell = m;
  run.Validate();
  const int n = state.size();
  std::vector<double> rates(static_cast<std::size_t>(n + 1));
  const double total = BondRates(state, run, rates);
  UniformStream stream(seed);
  std::vector<double> scratch(static_cast<std::size_t>(n));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd zeta(n);
  const double md = static_cast<double>(m);
  for (int s = 0; s < n_samples; ++s) {
    std::copy(state.values().begin(), state.values().end(), scratch.begin());
    int clock = 0;
    double flux = ApplyRandomExchange(std::span<double>(scratch), run, rates, total, stream, clock);
    zeta.setZero();
    if (clock >= 1) zeta(clock - 1) -= md * flux;
    if (clock < n) zeta(clock) += md * flux;
    Eigen::MatrixXd outer = zeta * zeta.transpose();
    sum += outer;
    sum_sq += outer.cwiseProduct(outer);
  }
  const double ns = static_cast<double>(n_samples);
  MomentEstimate est;
  est.n_samples = n_samples;
  est.estimate = {sum / ns, MomentKind::kSecondMoment};
  Eigen::MatrixXd var = (sum_sq / ns - est.estimate.entries.cwiseProduct(est.estimate.entries)) * (ns / (ns - 1.0));
  est.se = (var.cwiseMax(0.0) / ns).cwiseSqrt();
  return est;
}

CovariancePath IntegrateCovariance(const std::function<Eigen::MatrixXd(double)>& jac,
                                   const std::function<Eigen::MatrixXd(double)>& source,
                                   const Eigen::MatrixXd& s0, double t_end, double dt) {
  const int steps = StepCount(t_end, dt);
  const double h = steps > 0 ? t_end / steps : 0.0;
  auto rhs = [&](double t, const Eigen::MatrixXd& s) -> Eigen::MatrixXd {
    Eigen::MatrixXd a = jac(t);
    Eigen::MatrixXd as = a * s;
    return as + as.transpose() + source(t);
  };
  CovariancePath path;
  path.times.push_back(0.0);
  path.sigma.push_back(s0);
  Eigen::MatrixXd s = s0;
  for (int k = 0; k < steps; ++k) {
    s = Rk4Step(rhs, k * h, s, h);
    s = 0.5 * (s + s.transpose());
    path.times.push_back(k + 1 == steps ? t_end : (k + 1) * h);
    path.sigma.push_back(s);
  }
  return path;
}

CovariancePath CovarianceOde(const ChainConfig& cfg, const OdeSolution& theta_bar,
                             double t_end, double dt) {
  const int steps = StepCount(t_end, dt);
  const double h = steps > 0 ? t_end / steps : 0.0;
  const double grid = theta_bar.step();
  if (theta_bar.times.empty() || theta_bar.times.back() < t_end * (1.0 - 1e-12)) {
    throw std::invalid_argument("theta_bar grid does not cover [0, t_end]");
  }
  if (steps > 0) {
    const double ratio = 0.5 * h / grid;
    if (!(grid > 0.0) || std::abs(ratio - std::round(ratio)) > 1e-6 || std::round(ratio) < 1.0) {
      throw std::invalid_argument("theta_bar grid step must divide the covariance half step");
    }
  }
  const int n = cfg.n_cells;
  auto theta = [&](double t) { return theta_bar.At(t); };
  CovariancePath path = IntegrateCovariance(
      [&](double t) { return AnalyticJacobian(AsSpan(theta(t)), cfg); },
      [&](double t) {
        Eigen::MatrixXd hm = HMatrix(AsSpan(theta(t)), cfg);
        return Eigen::MatrixXd(hm * hm.transpose());
      },
      Eigen::MatrixXd::Zero(n, n), t_end, h > 0.0 ? h : dt);
  return path;
}

CovariancePath CovarianceOde(const ChainConfig& cfg, const EnergyState& e0,
                             double t_end, double dt) {
  const int steps = StepCount(t_end, dt);
  const double h = steps > 0 ? t_end / steps : dt;
  return CovarianceOde(cfg, IntegrateOde(cfg, e0, t_end, 0.5 * h), t_end, h);
}

CltSde::CltSde(const ChainConfig& cfg, const OdeSolution& theta_bar, double t_end, double dt)
    : n_(cfg.n_cells), t_end_(t_end) {
  const int steps = StepCount(t_end, dt);
  h_ = steps > 0 ? t_end / steps : 0.0;
  const double root_h = std::sqrt(h_);
  jac_.reserve(static_cast<std::size_t>(steps));
  diffusion_.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    Eigen::VectorXd theta = theta_bar.At(k * h_);
    jac_.push_back(AnalyticJacobian(AsSpan(theta), cfg));
    diffusion_.push_back(root_h * HMatrix(AsSpan(theta), cfg));
  }
}

SdePath CltSde::Run(std::uint64_t seed, bool zero_noise) const {
  UniformStream stream(seed);
  SdePath path;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
  Eigen::VectorXd xi(n_ + 1);
  path.times.push_back(0.0);
  path.states.push_back(g);
  const int steps = static_cast<int>(jac_.size());
  for (int k = 0; k < steps; ++k) {
    for (int j = 0; j <= n_; ++j) xi(j) = stream.normal();
    Eigen::VectorXd next = g + h_ * (jac_[static_cast<std::size_t>(k)] * g);
    if (!zero_noise) next += diffusion_[static_cast<std::size_t>(k)] * xi;
    g = std::move(next);
    path.times.push_back(k + 1 == steps ? t_end_ : (k + 1) * h_);
    path.states.push_back(g);
  }
  return path;
}

Eigen::VectorXd CltSde::RunFinal(std::uint64_t seed) const {
  UniformStream stream(seed);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
  Eigen::VectorXd xi(n_ + 1);
  for (std::size_t k = 0; k < jac_.size(); ++k) {
    for (int j = 0; j <= n_; ++j) xi(j) = stream.normal();
    // Same operation order as Run, so both give identical bits.
    Eigen::VectorXd next = g + h_ * (jac_[k] * g);
    next += diffusion_[k] * xi;
    g = std::move(next);
  }
  return g;
}

MesoscopicSde::MesoscopicSde(const ChainConfig& cfg, double t_end, double dt,
                             MesoscopicOptions options)
    : cfg_(cfg), t_end_(t_end), max_clamps_(options.max_clamps) {
  cfg_.Validate();
  steps_ = StepCount(t_end, dt);
  h_ = steps_ > 0 ? t_end / steps_ : 0.0;
  noise_ = options.noise_scale >= 0.0
               ? options.noise_scale
               : 1.0 / std::sqrt(static_cast<double>(cfg.particles_per_cell));
}

Eigen::VectorXd MesoscopicSde::Integrate(const EnergyState& z0, std::uint64_t seed,
                                         SdePath* path, int& resamples, int& clamps) const {
  if (z0.size() != cfg_.n_cells) throw std::invalid_argument("z0 size mismatch");
  const int n = cfg_.n_cells;
  const double eps0 = 1e-9 * std::max(cfg_.t_left, cfg_.t_right);
  const double scale = noise_ * std::sqrt(h_);
  UniformStream stream(seed);
  Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(z0.values().data(), n);
  Eigen::VectorXd xi(n + 1);
  resamples = 0;
  clamps = 0;
  if (path) {
    path->times.push_back(0.0);
    path->states.push_back(z);
  }
  for (int k = 0; k < steps_; ++k) {
    Eigen::VectorXd drift = Drift(AsSpan(z), cfg_);
    Eigen::VectorXd base = z + h_ * drift;
    Eigen::MatrixXd hm;
    if (scale > 0.0) hm = HMatrix(AsSpan(z), cfg_);
    auto propose = [&] {
      if (scale == 0.0) return base;
      for (int j = 0; j <= n; ++j) xi(j) = stream.normal();
      return Eigen::VectorXd(base + scale * (hm * xi));
    };
    Eigen::VectorXd next = propose();
    if ((next.array() <= eps0).any()) {
      ++resamples;
      next = propose();
      if ((next.array() <= eps0).any()) {
        next = next.cwiseMax(eps0);
        if (++clamps > max_clamps_) {
          throw std::runtime_error(
              "mesoscopic integration keeps leaving the positive orthant; reduce dt or raise M");
        }
      }
    }
    z = std::move(next);
    if (path) {
      path->times.push_back(k + 1 == steps_ ? t_end_ : (k + 1) * h_);
      path->states.push_back(z);
    }
  }
  return z;
}

SdePath MesoscopicSde::Run(const EnergyState& z0, std::uint64_t seed) const {
  SdePath path;
  Integrate(z0, seed, &path, path.resamples, path.clamps);
  return path;
}

SdeEndpoint MesoscopicSde::RunFinal(const EnergyState& z0, std::uint64_t seed) const {
  SdeEndpoint out;
  out.state = Integrate(z0, seed, nullptr, out.resamples, out.clamps);
  return out;
}

LyapunovResult LyapunovSolve(const Eigen::MatrixXd& jac, const Eigen::MatrixXd& q) {
  const Eigen::Index n = jac.rows();
  if (jac.cols() != n || q.rows() != n || q.cols() != n) {
    throw std::invalid_argument("LyapunovSolve: dimension mismatch");
  }
  if (!IsSymmetric(q, 1e-12)) throw std::invalid_argument("LyapunovSolve: Q must be symmetric");
  Eigen::EigenSolver<Eigen::MatrixXd> eig(jac, false);
  if (eig.eigenvalues().real().maxCoeff() >= 0.0) {
    throw std::invalid_argument("LyapunovSolve: Jacobian is not Hurwitz");
  }

  // Unknown (i, j), i <= j, stored at the packed upper-triangular index.
  auto index = [n](Eigen::Index i, Eigen::Index j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
  };
  const Eigen::Index p = n * (n + 1) / 2;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const Eigen::Index row = index(i, j);
      // (J S)_ij + (S J^T)_ij = sum_k J_ik S_kj + sum_k S_ik J_jk
      for (Eigen::Index k = 0; k < n; ++k) {
        a(row, index(k, j)) += jac(i, k);
        a(row, index(i, k)) += jac(j, k);
      }
      rhs(row) = -q(i, j);
    }
  }
  Eigen::VectorXd x = a.fullPivLu().solve(rhs);
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) s(i, j) = s(j, i) = x(index(i, j));
  }
  LyapunovResult out;
  out.s = {s, MomentKind::kLyapunovS};
  out.residual = (s * jac.transpose() + jac * s + q).cwiseAbs().maxCoeff();
  return out;
}

double NessGaussian::LogDensity(std::span<const double> e) const {
  const Eigen::Index n = covariance.rows();
  if (static_cast<Eigen::Index>(e.size()) != n) throw std::invalid_argument("dimension mismatch");
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = e[static_cast<std::size_t>(i)] - equilibrium.e_star[static_cast<int>(i)];
  return -0.5 * d.dot(precision * d) - log_normalizer;
}

double NessGaussian::Density(std::span<const double> e) const { return std::exp(LogDensity(e)); }

NessGaussian ComputeNessGaussian(const ChainConfig& cfg, double tol) {
  NessGaussian out;
  out.equilibrium = SolveEquilibrium(cfg, tol);
  out.jacobian = AnalyzeJacobian(out.equilibrium.e_star, cfg);
  if (!out.jacobian.stable()) {
    throw std::runtime_error("equilibrium is not linearly stable; no Gaussian approximation");
  }
  Eigen::MatrixXd h = HMatrix(out.equilibrium.e_star, cfg);
  LyapunovResult lyap = LyapunovSolve(out.jacobian.jac, h * h.transpose());
  out.s = lyap.s;
  out.lyapunov_residual = lyap.residual;
  out.m = cfg.particles_per_cell;
  out.covariance = out.s.entries / static_cast<double>(out.m);
  Eigen::LLT<Eigen::MatrixXd> llt(out.covariance);
  if (llt.info() != Eigen::Success) throw std::runtime_error("stationary covariance is not positive definite");
  out.precision = llt.solve(Eigen::MatrixXd::Identity(out.covariance.rows(), out.covariance.cols()));
  double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  out.log_normalizer =
      0.5 * (static_cast<double>(out.covariance.rows()) * std::log(2.0 * std::numbers::pi) + log_det);

  // E[F] = 0 in stationarity; expanding F to second order around E* gives
  // J (mean - E*) + 1/2 sum_jk d_j d_k F cov_jk = 0.
  const std::vector<double> e = out.equilibrium.e_star.vector();
  const int n = cfg.n_cells;
  const double step = 1e-4 * *std::max_element(e.begin(), e.end());
  Eigen::VectorXd curvature = Eigen::VectorXd::Zero(n);
  std::vector<double> probe = e;
  auto drift_at = [&](int j, double a, int k, double b) {
    probe = e;
    probe[static_cast<std::size_t>(j)] += a;
    probe[static_cast<std::size_t>(k)] += b;
    return Drift(probe, cfg);
  };
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (out.covariance(j, k) == 0.0) continue;
      Eigen::VectorXd d2 = (drift_at(j, step, k, step) - drift_at(j, step, k, -step) -
                            drift_at(j, -step, k, step) + drift_at(j, -step, k, -step)) /
                           (4.0 * step * step);
      curvature += 0.5 * out.covariance(j, k) * d2;
    }
  }
  out.mean_shift = -out.jacobian.jac.lu().solve(curvature);
  return out;
}

}  // namespace heatchain
