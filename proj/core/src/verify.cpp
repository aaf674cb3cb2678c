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

#include "heatchain/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "heatchain/csv.hpp"
#include "heatchain/fluctuation.hpp"
#include "heatchain/jump_process.hpp"
#include "heatchain/limit_ode.hpp"
#include "heatchain/parallel.hpp"
#include "heatchain/random.hpp"
#include "heatchain/statistics.hpp"

namespace heatchain {

namespace {

using Clock = std::chrono::steady_clock;

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string Join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += FormatNumber(v[i]);
  }
  return out;
}

std::string Join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string Label(const char* prefix, int i) { return prefix + std::to_string(i + 1); }
std::string Label(const char* prefix, int i, int j) {
  return prefix + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

void AddConfig(ExperimentReport& r, const ChainConfig& cfg, bool with_m = true) {
  r.AddParameter("n_cells", std::to_string(cfg.n_cells));
  if (with_m) r.AddParameter("particles", std::to_string(cfg.particles_per_cell));
  r.AddParameter("t_left", cfg.t_left);
  r.AddParameter("t_right", cfg.t_right);
  r.AddParameter("rate_fn", cfg.rate_fn.ToString());
  r.AddParameter("rate_cap", cfg.rate_cap);
  r.AddParameter("seed", std::to_string(cfg.master_seed));
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double StdError(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = PairwiseSum(v) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

EnergyState DefaultStart(const std::optional<EnergyState>& e0, const ChainConfig& cfg) {
  if (e0) {
    if (e0->size() != cfg.n_cells) throw std::invalid_argument("initial state size mismatch");
    return *e0;
  }
  return EnergyState::Uniform(cfg.n_cells, cfg.t_left);
}

// Pooled time-averaged moments of a set of batches.
struct BatchSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_se;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd cov_se;
  int batches = 0;
};

BatchSummary Summarize(const std::vector<Eigen::VectorXd>& means,
                       const std::vector<Eigen::MatrixXd>& seconds) {
  const int b = static_cast<int>(means.size());
  const Eigen::Index n = means.front().size();
  BatchSummary s;
  s.batches = b;
  s.mean.resize(n);
  s.mean_se.resize(n);
  std::vector<double> col(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < b; ++k) col[static_cast<std::size_t>(k)] = means[static_cast<std::size_t>(k)](i);
    BatchEstimate e = BatchMeans(col);
    s.mean(i) = e.mean;
    s.mean_se(i) = e.se;
  }
  // Centering at the pooled mean keeps each batch value linear in the batch
  // averages, so the batch average equals the pooled covariance.
  s.cov.resize(n, n);
  s.cov_se.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      for (int k = 0; k < b; ++k) {
        const auto& m = means[static_cast<std::size_t>(k)];
        col[static_cast<std::size_t>(k)] = seconds[static_cast<std::size_t>(k)](i, j) -
                                           m(i) * s.mean(j) - s.mean(i) * m(j) +
                                           s.mean(i) * s.mean(j);
      }
      BatchEstimate e = BatchMeans(col);
      s.cov(i, j) = s.cov(j, i) = e.mean;
      s.cov_se(i, j) = s.cov_se(j, i) = e.se;
    }
  }
  return s;
}

struct EnsembleSummary {
  SampleMoments moments;
  int clamps = 0;
  int resamples = 0;
};

EnsembleSummary JumpEnsembleAt(const ChainConfig& cfg, const EnergyState& e0, double t_end,
                               int n_paths, std::uint64_t seed_base, int threads) {
  EnsembleOptions opts;
  opts.time_grid = {t_end};
  opts.n_paths = n_paths;
  opts.threads = threads;
  opts.seed_base = seed_base;
  EnsembleStats stats = RunEnsemble(cfg, e0, t_end, opts);
  return {ComputeSampleMoments(stats.final_samples), 0, 0};
}

EnsembleSummary SdeEnsembleAt(const ChainConfig& cfg, const EnergyState& e0, double t_end,
                              double dt, int n_paths, std::uint64_t seed_base, int threads) {
  MesoscopicSde sde(cfg, t_end, dt);
  std::vector<SdeEndpoint> ends(static_cast<std::size_t>(n_paths));
  ParallelFor(n_paths, threads, [&](int i) {
    ends[static_cast<std::size_t>(i)] = sde.RunFinal(e0, DeriveSeed(seed_base, static_cast<std::uint64_t>(i)));
  });
  Eigen::MatrixXd samples(n_paths, cfg.n_cells);
  EnsembleSummary out;
  for (int i = 0; i < n_paths; ++i) {
    samples.row(i) = ends[static_cast<std::size_t>(i)].state.transpose();
    out.clamps += ends[static_cast<std::size_t>(i)].clamps;
    out.resamples += ends[static_cast<std::size_t>(i)].resamples;
  }
  out.moments = ComputeSampleMoments(samples);
  return out;
}

}  // namespace

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ReportCheck& c) { return c.passed; });
}

std::optional<std::string> ExperimentReport::failure_reason() const {
  for (const ReportCheck& c : checks) {
    if (!c.passed) {
      return "FAIL " + name + " check=" + c.name + " observed=" + FormatNumber(c.observed) +
             " threshold=" + FormatNumber(c.threshold) + " rule=\"" + c.rule + "\"";
    }
  }
  return std::nullopt;
}

void ExperimentReport::AddParameter(std::string key, std::string value) {
  parameters.emplace_back(std::move(key), std::move(value));
}

void ExperimentReport::AddParameter(std::string key, double value) {
  parameters.emplace_back(std::move(key), FormatNumber(value));
}

void ExperimentReport::AddRow(std::string condition, std::string statistic, double value,
                              double se, std::optional<double> reference) {
  rows.push_back({std::move(condition), std::move(statistic), value, se, reference});
}

void ExperimentReport::AddCheck(std::string check, std::string rule, double observed,
                                double threshold) {
  AddCheck(std::move(check), std::move(rule), observed, threshold, observed <= threshold);
}

void ExperimentReport::AddCheck(std::string check, std::string rule, double observed,
                                double threshold, bool ok) {
  checks.push_back({std::move(check), std::move(rule), observed, threshold, ok});
}

void ExperimentReport::WriteText(std::ostream& os) const {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "experiment: " << name << "\n";
  out << "parameters:\n";
  for (const auto& [k, v] : parameters) out << "  " << k << " = " << v << "\n";
  out << "statistics:\n";
  for (const ReportRow& r : rows) {
    out << "  [" << r.condition << "] " << r.statistic << " = " << r.value;
    if (r.se > 0.0) out << " +- " << r.se;
    if (r.reference) out << "  (reference " << *r.reference << ")";
    out << "\n";
  }
  if (!fits.empty()) {
    out << "fits:\n";
    for (const FittedExponent& f : fits) {
      out << "  " << f.name << ": slope " << f.slope << " +- " << f.slope_se << ", intercept "
          << f.intercept << "\n";
    }
  }
  out << "checks:\n";
  for (const ReportCheck& c : checks) {
    out << "  " << (c.passed ? "PASS " : "FAIL ") << c.name << ": observed " << c.observed
        << ", threshold " << c.threshold << " (" << c.rule << ")\n";
  }
  out << "result: " << (passed() ? "PASS" : "FAIL") << "\n";
  out << "wall_seconds: " << std::setprecision(3) << wall_seconds << "\n";
  os << out.str();
}

void ExperimentReport::WriteCsv(std::ostream& os) const {
  os << "kind,condition,name,value,se,reference,threshold,passed,rule\n";
  for (const auto& [k, v] : parameters) {
    os << "parameter,," << CsvField(k) << ',' << CsvField(v) << ",,,,,\n";
  }
  for (const ReportRow& r : rows) {
    os << "statistic," << CsvField(r.condition) << ',' << CsvField(r.statistic) << ','
       << FormatNumber(r.value) << ',' << FormatNumber(r.se) << ','
       << (r.reference ? FormatNumber(*r.reference) : std::string()) << ",,,\n";
  }
  for (const FittedExponent& f : fits) {
    os << "fit,," << CsvField(f.name) << ',' << FormatNumber(f.slope) << ','
       << FormatNumber(f.slope_se) << ",,,,intercept=" << FormatNumber(f.intercept) << "\n";
  }
  for (const ReportCheck& c : checks) {
    os << "check,," << CsvField(c.name) << ',' << FormatNumber(c.observed) << ",,,"
       << FormatNumber(c.threshold) << ',' << (c.passed ? 1 : 0) << ',' << CsvField(c.rule)
       << "\n";
  }
}

StationaryBatches RunStationary(const ChainConfig& cfg, const EnergyState& e0,
                                std::uint64_t seed, const StationaryOptions& options) {
  cfg.Validate();
  if (e0.size() != cfg.n_cells) throw std::invalid_argument("initial state size mismatch");
  if (!(options.burn_in >= 0.0)) throw std::invalid_argument("burn_in must be >= 0");
  if (!(options.t_measure > 0.0)) throw std::invalid_argument("t_measure must be > 0");
  if (options.n_batches < 1) throw std::invalid_argument("n_batches must be >= 1");

  const int n = cfg.n_cells;
  const int nb = options.n_batches;
  const double len = options.t_measure / nb;
  const double t_stop = options.burn_in + options.t_measure;

  StationaryBatches out;
  out.batch_length = len;
  out.mean.assign(static_cast<std::size_t>(nb), Eigen::VectorXd::Zero(n));
  out.second.assign(static_cast<std::size_t>(nb), Eigen::MatrixXd::Zero(n, n));
  out.bond_flux.assign(static_cast<std::size_t>(nb), Eigen::VectorXd::Zero(n + 1));

  std::vector<double> e = e0.vector();
  std::vector<double> rates(static_cast<std::size_t>(n + 1));
  Eigen::Map<const Eigen::VectorXd> ev(e.data(), n);
  Eigen::MatrixXd outer(n, n);
  UniformStream stream(seed);

  auto batch_of = [&](double t) {
    return std::min(nb - 1, static_cast<int>((t - options.burn_in) / len));
  };

  double t = 0.0;
  for (;;) {
    double total = 0.0;
    const double dt = DrawWaitingTime(e, cfg, rates, stream, total);
    const double t_next = t + dt;
    // Hold the current state over [t, t_next) clipped to the window.
    double a = std::max(t, options.burn_in);
    const double b_end = std::min(t_next, t_stop);
    if (a < b_end) {
      outer.noalias() = ev * ev.transpose();
      for (int k = batch_of(a); a < b_end; ++k) {
        const double edge = k + 1 == nb ? t_stop : options.burn_in + (k + 1) * len;
        const double w = std::min(b_end, edge) - a;
        out.mean[static_cast<std::size_t>(k)] += w * ev;
        out.second[static_cast<std::size_t>(k)] += w * outer;
        a = std::min(b_end, edge);
      }
    }
    if (t_next >= t_stop) break;
    int clock = 0;
    const double flux = ApplyRandomExchange(std::span<double>(e), cfg, rates, total, stream, clock);
    ++out.events;
    if (t_next >= options.burn_in) {
      out.bond_flux[static_cast<std::size_t>(batch_of(t_next))](clock) += flux;
    }
    t = t_next;
  }
  for (int k = 0; k < nb; ++k) {
    out.mean[static_cast<std::size_t>(k)] /= len;
    out.second[static_cast<std::size_t>(k)] /= len;
    out.bond_flux[static_cast<std::size_t>(k)] /= len;
  }
  return out;
}

ExperimentReport LlnExperiment(const LlnParams& p) {
  const auto start = Clock::now();
  if (p.m_list.size() < 2) throw std::invalid_argument("lln needs at least two values of M");
  if (!std::is_sorted(p.m_list.begin(), p.m_list.end()) ||
      std::adjacent_find(p.m_list.begin(), p.m_list.end()) != p.m_list.end()) {
    throw std::invalid_argument("m_list must be strictly increasing");
  }
  if (p.grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
  p.base.Validate();
  const EnergyState e0 = DefaultStart(p.e0, p.base);

  ExperimentReport r;
  r.name = "lln";
  AddConfig(r, p.base, false);
  r.AddParameter("m_list", Join(p.m_list));
  r.AddParameter("t_end", p.t_end);
  r.AddParameter("grid_points", std::to_string(p.grid_points));
  r.AddParameter("n_paths", std::to_string(p.n_paths));
  r.AddParameter("e0", Join(e0.vector()));
  r.AddParameter("ode_dt", p.ode_dt);

  OdeSolution ode = IntegrateOde(p.base, e0, p.t_end, p.ode_dt);
  std::vector<double> grid;
  ReferencePath ref;
  for (int k = 0; k < p.grid_points; ++k) {
    double t = k + 1 == p.grid_points ? p.t_end : p.t_end * k / (p.grid_points - 1);
    grid.push_back(t);
    Eigen::VectorXd v = ode.At(t);
    ref.emplace_back(v.data(), v.data() + v.size());
  }

  std::vector<double> log_m, log_err, errs;
  for (std::size_t ci = 0; ci < p.m_list.size(); ++ci) {
    ChainConfig cfg = p.base;
    cfg.particles_per_cell = p.m_list[ci];
    EnsembleOptions opts;
    opts.time_grid = grid;
    opts.n_paths = p.n_paths;
    opts.threads = p.threads;
    opts.reference = ref;
    opts.seed_base = DeriveSeed(p.base.master_seed, ci);
    EnsembleStats stats = RunEnsemble(cfg, e0, p.t_end, opts);
    const double mean = PairwiseSum(stats.sup_errors) / stats.sup_errors.size();
    const double se = StdError(stats.sup_errors);
    const std::string cond = "M=" + std::to_string(cfg.particles_per_cell);
    r.AddRow(cond, "mean_sup_error", mean, se);
    r.AddRow(cond, "scaled_sup_error_sqrtM", mean * std::sqrt(cfg.particles_per_cell),
             se * std::sqrt(cfg.particles_per_cell));
    errs.push_back(mean);
    log_m.push_back(std::log(static_cast<double>(cfg.particles_per_cell)));
    log_err.push_back(std::log(mean));
  }

  LinearFit fit = FitLine(log_m, log_err);
  r.fits.push_back({"log_mean_sup_error_vs_log_M", fit.slope, fit.slope_se, fit.intercept});
  const double mid = 0.5 * (p.slope_low + p.slope_high);
  r.AddCheck("slope_in_band",
             "|slope - " + FormatNumber(mid) + "| <= half width of [" +
                 FormatNumber(p.slope_low) + ", " + FormatNumber(p.slope_high) + "]",
             std::abs(fit.slope - mid), 0.5 * (p.slope_high - p.slope_low),
             fit.slope >= p.slope_low && fit.slope <= p.slope_high);
  for (std::size_t i = 1; i < errs.size(); ++i) {
    r.AddCheck("error_decreases_M" + std::to_string(p.m_list[i - 1]) + "_to_M" +
                   std::to_string(p.m_list[i]),
               "error(next M) - error(previous M) < 0", errs[i] - errs[i - 1], 0.0,
               errs[i] < errs[i - 1]);
  }
  r.wall_seconds = Seconds(start);
  return r;
}

ExperimentReport CltExperiment(const CltParams& p) {
  const auto start = Clock::now();
  if (p.n_paths < 1000) throw std::invalid_argument("clt needs n_paths >= 1000");
  p.cfg.Validate();
  const EnergyState e0 = DefaultStart(p.e0, p.cfg);
  const int n = p.cfg.n_cells;

  ExperimentReport r;
  r.name = "clt";
  AddConfig(r, p.cfg);
  r.AddParameter("t_end", p.t_end);
  r.AddParameter("n_paths", std::to_string(p.n_paths));
  r.AddParameter("e0", Join(e0.vector()));
  r.AddParameter("ode_dt", p.ode_dt);

  OdeSolution ode = IntegrateOde(p.cfg, e0, p.t_end, p.ode_dt);
  const Eigen::VectorXd theta = ode.states.back();
  const Eigen::MatrixXd sigma = CovarianceOde(p.cfg, e0, p.t_end, p.ode_dt).final();

  EnsembleOptions opts;
  opts.time_grid = {p.t_end};
  opts.n_paths = p.n_paths;
  opts.threads = p.threads;
  opts.reference = ReferencePath{std::vector<double>(theta.data(), theta.data() + n)};
  opts.seed_base = p.cfg.master_seed;
  EnsembleStats stats = RunEnsemble(p.cfg, e0, p.t_end, opts);
  SampleMoments m = ComputeSampleMoments(stats.final_samples);

  for (int i = 0; i < n; ++i) {
    r.AddRow("T", Label("theta_bar_", i), theta(i));
    r.AddRow("T", Label("mean_G_", i), m.mean(i), m.mean_se(i), 0.0);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      r.AddRow("T", Label("cov_", i, j), m.cov(i, j), m.cov_se(i, j), sigma(i, j));
    }
  }
  const double skew_se = std::sqrt(6.0 / p.n_paths);
  const double kurt_se = std::sqrt(24.0 / p.n_paths);
  for (int i = 0; i < n; ++i) {
    r.AddRow("T", Label("skewness_", i), m.skewness(i), skew_se, 0.0);
    r.AddRow("T", Label("excess_kurtosis_", i), m.excess_kurtosis(i), kurt_se, 0.0);
  }

  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double tol = std::max(p.rel_tol * std::abs(sigma(i, j)), p.n_se * m.cov_se(i, j));
      r.AddCheck(Label("cov_", i, j), "|cov - sigma| <= max(" + FormatNumber(p.rel_tol) +
                                          " |sigma|, " + FormatNumber(p.n_se) + " se)",
                 std::abs(m.cov(i, j) - sigma(i, j)), tol);
    }
  }
  for (int i = 0; i < n; ++i) {
    r.AddCheck(Label("mean_", i), "|mean| <= " + FormatNumber(p.n_se) + " se",
               std::abs(m.mean(i)), p.n_se * m.mean_se(i));
  }
  r.wall_seconds = Seconds(start);
  return r;
}

ExperimentReport FourierExperiment(const FourierParams& p) {
  const auto start = Clock::now();
  if (p.delta_list.empty()) throw std::invalid_argument("delta_list is empty");
  for (double d : p.delta_list) {
    if (d == 0.0) throw std::invalid_argument("delta = 0 is excluded");
  }
  if (p.n_paths < 2) throw std::invalid_argument("fourier needs n_paths >= 2");
  p.base.Validate();
  const int n = p.base.n_cells;

  ExperimentReport r;
  r.name = "fourier";
  AddConfig(r, p.base);
  r.AddParameter("delta_list", Join(p.delta_list));
  r.AddParameter("n_paths", std::to_string(p.n_paths));
  r.AddParameter("burn_in", p.burn_in);
  r.AddParameter("t_measure", p.t_measure);

  const double half_f =
      0.5 * Rate(p.base.rate_fn, p.base.rate_cap, p.base.t_left, p.base.t_left);
  const bool constant = p.base.rate_fn.kind == RateKind::kConstant;
  std::vector<double> gaps;
  for (std::size_t ci = 0; ci < p.delta_list.size(); ++ci) {
    const double delta = p.delta_list[ci];
    ChainConfig cfg = p.base;
    cfg.t_right = cfg.t_left + delta;
    cfg.Validate();
    const std::string cond = "delta=" + FormatNumber(delta);
    Conductivity kappa = ComputeConductivity(cfg, p.tol);
    const double gap = std::abs(kappa.kappa - half_f);
    gaps.push_back(gap);
    r.AddRow(cond, "kappa", kappa.kappa);
    r.AddRow(cond, "c_star", kappa.profile.c_star);
    r.AddRow(cond, "abs_kappa_minus_half_f_left", gap);

    r.AddCheck("sandwich_" + cond, "distance of kappa outside [lower, upper] <= 1e-9",
               std::max({0.0, kappa.lower - kappa.kappa, kappa.kappa - kappa.upper}), 1e-9);
    if (constant) {
      r.AddCheck("kappa_exact_" + cond, "|kappa - f/2| <= 1e-8", gap, 1e-8);
    }

    // Each path is one batch: an independent stationary run from E*.
    std::vector<StationaryBatches> runs(static_cast<std::size_t>(p.n_paths));
    const std::uint64_t base = DeriveSeed(p.base.master_seed, ci);
    ParallelFor(p.n_paths, p.threads, [&](int i) {
      runs[static_cast<std::size_t>(i)] =
          RunStationary(cfg, kappa.profile.e_star, DeriveSeed(base, static_cast<std::uint64_t>(i)),
                        {p.burn_in, p.t_measure, 1});
    });
    std::vector<double> khat(static_cast<std::size_t>(p.n_paths));
    for (int i = 0; i < p.n_paths; ++i) {
      khat[static_cast<std::size_t>(i)] = -runs[static_cast<std::size_t>(i)].bond_flux[0].sum() / delta;
    }
    const double k_mean = PairwiseSum(khat) / p.n_paths;
    const double k_se = StdError(khat);
    r.AddRow(cond, "kappa_hat", k_mean, k_se, kappa.kappa);
    r.AddCheck("kappa_hat_" + cond, "|kappa_hat - kappa| <= " + FormatNumber(p.n_se) + " se",
               std::abs(k_mean - kappa.kappa), p.n_se * k_se);
    for (int b = 0; b <= n; ++b) {
      std::vector<double> bond(static_cast<std::size_t>(p.n_paths));
      std::vector<double> diff(static_cast<std::size_t>(p.n_paths));
      for (int i = 0; i < p.n_paths; ++i) {
        bond[static_cast<std::size_t>(i)] =
            -(n + 1) * runs[static_cast<std::size_t>(i)].bond_flux[0](b) / delta;
        diff[static_cast<std::size_t>(i)] = bond[static_cast<std::size_t>(i)] - khat[static_cast<std::size_t>(i)];
      }
      r.AddRow(cond, "kappa_hat_bond_" + std::to_string(b), PairwiseSum(bond) / p.n_paths,
               StdError(bond));
      r.AddCheck("bond_" + std::to_string(b) + "_agrees_" + cond,
                 "|kappa_hat_bond - kappa_hat| <= " + FormatNumber(p.n_se) + " se",
                 std::abs(PairwiseSum(diff) / p.n_paths), p.n_se * StdError(diff));
    }
  }

  if (!constant && p.delta_list.size() >= 2) {
    std::vector<double> log_d, log_g;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      log_d.push_back(std::log(std::abs(p.delta_list[i])));
      log_g.push_back(std::log(gaps[i]));
    }
    LinearFit fit = FitLine(log_d, log_g);
    r.fits.push_back({"log_abs_kappa_minus_half_f_vs_log_delta", fit.slope, 0.0, fit.intercept});
    for (std::size_t i = 1; i < gaps.size(); ++i) {
      const double expected = p.delta_list[i] / p.delta_list[i - 1];
      const double ratio = gaps[i] / gaps[i - 1];
      const double lo = p.ratio_low * expected, hi = p.ratio_high * expected;
      r.AddCheck("gap_ratio_" + FormatNumber(p.delta_list[i - 1]) + "_to_" +
                     FormatNumber(p.delta_list[i]),
                 "ratio of successive |kappa - f/2| in [" + FormatNumber(lo) + ", " +
                     FormatNumber(hi) + "]",
                 ratio, hi, ratio >= lo && ratio <= hi);
    }
  }
  r.wall_seconds = Seconds(start);
  return r;
}

double BetaTailLog(double m, double epsilon) {
  if (!(m >= 1.0)) throw std::invalid_argument("M must be >= 1");
  const double x = std::pow(m, epsilon - 1.0);
  if (x >= 1.0) return -std::numeric_limits<double>::infinity();
  return (m - 1.0) * std::log1p(-x);
}

ExperimentReport BetaTailCheck(const BetaTailParams& p) {
  const auto start = Clock::now();
  if (!(p.epsilon > 0.0 && p.epsilon < 0.5)) throw std::invalid_argument("epsilon must be in (0, 1/2)");
  ExperimentReport r;
  r.name = "beta_tail";
  r.AddParameter("m_list", Join(p.m_list));
  r.AddParameter("epsilon", p.epsilon);
  r.AddParameter("m_threshold", p.m_threshold);

  std::vector<double> dev;
  std::vector<double> dev_m;
  for (double m : p.m_list) {
    const std::string cond = "M=" + FormatNumber(m);
    const double log_tail = BetaTailLog(m, p.epsilon);
    const double m_eps = std::pow(m, p.epsilon);
    if (std::isinf(log_tail)) {
      r.AddRow(cond, "tail", 0.0);
      continue;
    }
    const double log_ratio = m_eps + log_tail;
    r.AddRow(cond, "log_tail", log_tail);
    r.AddRow(cond, "log_bound", std::log(2.0) - m_eps);
    r.AddRow(cond, "ratio_tail_to_exp_minus_M_eps", std::exp(log_ratio));
    if (m >= p.m_threshold) {
      r.AddCheck("bound_" + cond, "log tail - log(2 exp(-M^eps)) <= 0",
                 log_tail - (std::log(2.0) - m_eps), 0.0);
    }
    dev.push_back(std::abs(std::expm1(log_ratio)));
    dev_m.push_back(m);
  }
  for (std::size_t i = 1; i < dev.size(); ++i) {
    r.AddCheck("ratio_approaches_1_M" + FormatNumber(dev_m[i - 1]) + "_to_M" +
                   FormatNumber(dev_m[i]),
               "|ratio - 1| strictly decreases", dev[i], dev[i - 1], dev[i] < dev[i - 1]);
  }
  r.wall_seconds = Seconds(start);
  return r;
}

ExperimentReport NessExperiment(const NessParams& p) {
  const auto start = Clock::now();
  p.cfg.Validate();
  if (p.n_batches < 2) throw std::invalid_argument("ness needs n_batches >= 2");
  if (p.n_replicas < 1) throw std::invalid_argument("ness needs n_replicas >= 1");
  const int n = p.cfg.n_cells;
  NessGaussian g = ComputeNessGaussian(p.cfg, p.tol);
  const double lambda = g.jacobian.max_real_part();
  const double min_burn = 5.0 / std::abs(lambda);
  const double burn = p.burn_in < 0.0 ? min_burn : p.burn_in;

  ExperimentReport r;
  r.name = "ness";
  AddConfig(r, p.cfg);
  r.AddParameter("burn_in", burn);
  r.AddParameter("t_measure", p.t_measure);
  r.AddParameter("n_batches", std::to_string(p.n_batches));
  r.AddParameter("n_replicas", std::to_string(p.n_replicas));

  r.AddRow("theory", "lambda_max_real", lambda);
  r.AddRow("theory", "lyapunov_residual", g.lyapunov_residual);
  r.AddCheck("stable_equilibrium", "max Re(lambda) < 0", lambda, 0.0, lambda < 0.0);
  r.AddCheck("burn_in_long_enough", "5/|lambda_max| - burn_in <= 0", min_burn - burn, 0.0);
  r.AddCheck("lyapunov_residual", "residual <= " + FormatNumber(p.residual_tol),
             g.lyapunov_residual, p.residual_tol);

  auto measure = [&](const ChainConfig& cfg, std::uint64_t base) {
    std::vector<StationaryBatches> runs(static_cast<std::size_t>(p.n_replicas));
    ParallelFor(p.n_replicas, p.threads, [&](int i) {
      runs[static_cast<std::size_t>(i)] =
          RunStationary(cfg, g.equilibrium.e_star, DeriveSeed(base, static_cast<std::uint64_t>(i)),
                        {burn, p.t_measure, p.n_batches});
    });
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> seconds;
    for (auto& run : runs) {
      means.insert(means.end(), run.mean.begin(), run.mean.end());
      seconds.insert(seconds.end(), run.second.begin(), run.second.end());
    }
    return Summarize(means, seconds);
  };

  BatchSummary s = measure(p.cfg, DeriveSeed(p.cfg.master_seed, 0));
  for (int i = 0; i < n; ++i) {
    r.AddRow("M=" + std::to_string(p.cfg.particles_per_cell), Label("mean_", i), s.mean(i),
             s.mean_se(i), g.equilibrium.e_star[i]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      r.AddRow("M=" + std::to_string(p.cfg.particles_per_cell), Label("cov_", i, j), s.cov(i, j),
               s.cov_se(i, j), g.covariance(i, j));
    }
  }
  for (int i = 0; i < n; ++i) {
    r.AddRow("theory", Label("mean_shift_", i), g.mean_shift(i));
  }
  for (int i = 0; i < n; ++i) {
    r.AddCheck(Label("mean_", i), "|mean - E*| <= " + FormatNumber(p.mean_n_se) + " batch se",
               std::abs(s.mean(i) - g.equilibrium.e_star[i]), p.mean_n_se * s.mean_se(i));
  }
  if (p.check_mean_shift) {
    for (int i = 0; i < n; ++i) {
      r.AddCheck(Label("shifted_mean_", i),
                 "|mean - (E* + shift)| <= " + FormatNumber(p.mean_n_se) + " batch se",
                 std::abs(s.mean(i) - g.equilibrium.e_star[i] - g.mean_shift(i)),
                 p.mean_n_se * s.mean_se(i));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      r.AddCheck(Label("cov_", i, j),
                 "|cov - S/M| <= " + FormatNumber(p.cov_rel_tol) + " |S/M|",
                 std::abs(s.cov(i, j) - g.covariance(i, j)),
                 p.cov_rel_tol * std::abs(g.covariance(i, j)));
    }
  }

  if (p.check_doubling) {
    ChainConfig cfg2 = p.cfg;
    cfg2.particles_per_cell = 2 * p.cfg.particles_per_cell;
    BatchSummary s2 = measure(cfg2, DeriveSeed(p.cfg.master_seed, 1));
    for (int i = 0; i < n; ++i) {
      const double ratio = s.cov(i, i) / s2.cov(i, i);
      const double rel = std::hypot(s.cov_se(i, i) / s.cov(i, i), s2.cov_se(i, i) / s2.cov(i, i));
      r.AddRow("M=" + std::to_string(cfg2.particles_per_cell), Label("var_", i), s2.cov(i, i),
               s2.cov_se(i, i), g.covariance(i, i) / 2.0);
      r.AddRow("doubling", Label("variance_ratio_", i), ratio, ratio * rel, 2.0);
      r.AddCheck(Label("variance_ratio_", i), "|ratio - 2| <= " + FormatNumber(p.doubling_tol),
                 std::abs(ratio - 2.0), p.doubling_tol);
    }
  }
  r.wall_seconds = Seconds(start);
  return r;
}

ExperimentReport MesoscopicComparison(const MesoParams& p) {
  const auto start = Clock::now();
  if (p.m_list.empty()) throw std::invalid_argument("m_list is empty");
  if (p.n_paths < 2) throw std::invalid_argument("meso needs n_paths >= 2");
  p.base.Validate();
  const EnergyState e0 = DefaultStart(p.e0, p.base);
  const int n = p.base.n_cells;

  ExperimentReport r;
  r.name = "meso";
  AddConfig(r, p.base, false);
  r.AddParameter("m_list", Join(p.m_list));
  r.AddParameter("t_end", p.t_end);
  r.AddParameter("n_paths", std::to_string(p.n_paths));
  r.AddParameter("sde_dt", p.sde_dt);
  r.AddParameter("e0", Join(e0.vector()));
  if (p.proxy_m > 0) {
    r.AddParameter("proxy_m", std::to_string(p.proxy_m));
    r.AddParameter("proxy_paths", std::to_string(p.proxy_paths));
  }

  const Eigen::VectorXd theta = IntegrateOde(p.base, e0, p.t_end, p.ode_dt).states.back();
  const Eigen::MatrixXd sigma = CovarianceOde(p.base, e0, p.t_end, p.ode_dt).final();
  for (int i = 0; i < n; ++i) r.AddRow("limit", Label("theta_bar_", i), theta(i));

  std::vector<double> gaps;
  for (std::size_t ci = 0; ci < p.m_list.size(); ++ci) {
    ChainConfig cfg = p.base;
    cfg.particles_per_cell = p.m_list[ci];
    const std::string cond = "M=" + std::to_string(cfg.particles_per_cell);
    EnsembleSummary jump = JumpEnsembleAt(cfg, e0, p.t_end, p.n_paths,
                                          DeriveSeed(p.base.master_seed, 2 * ci), p.threads);
    EnsembleSummary sde = SdeEnsembleAt(cfg, e0, p.t_end, p.sde_dt, p.n_paths,
                                        DeriveSeed(p.base.master_seed, 2 * ci + 1), p.threads);
    const SampleMoments& a = jump.moments;
    const SampleMoments& b = sde.moments;
    double gap = 0.0, worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = a.mean(i) - b.mean(i);
      const double sd = std::sqrt(std::min(a.cov(i, i), b.cov(i, i)));
      r.AddRow(cond, Label("jump_mean_", i), a.mean(i), a.mean_se(i));
      r.AddRow(cond, Label("sde_mean_", i), b.mean(i), b.mean_se(i));
      r.AddRow(cond, Label("mean_gap_", i), d, std::hypot(a.mean_se(i), b.mean_se(i)));
      r.AddRow(cond, Label("jump_sd_", i), std::sqrt(a.cov(i, i)));
      r.AddRow(cond, Label("sde_sd_", i), std::sqrt(b.cov(i, i)));
      gap = std::max(gap, std::abs(d));
      worst = std::max(worst, std::abs(d) / sd);
    }
    gaps.push_back(gap);
    r.AddRow(cond, "max_abs_mean_gap", gap);
    r.AddRow(cond, "sde_resamples", sde.resamples);
    r.AddRow(cond, "sde_clamps", sde.clamps);
    r.AddCheck("mean_gap_small_" + cond,
               "max_i |mean gap_i| / min(sd_i) <= " + FormatNumber(p.gap_fraction), worst,
               p.gap_fraction);
    const double m = cfg.particles_per_cell;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double se = std::hypot(a.cov_se(i, j), b.cov_se(i, j));
        r.AddRow(cond, Label("jump_cov_", i, j), a.cov(i, j), a.cov_se(i, j), sigma(i, j) / m);
        r.AddRow(cond, Label("sde_cov_", i, j), b.cov(i, j), b.cov_se(i, j), sigma(i, j) / m);
        r.AddCheck(Label("cov_", i, j) + "_" + cond,
                   "|jump cov - sde cov| <= max(" + FormatNumber(p.cov_rel_tol) +
                       " |jump cov|, " + FormatNumber(p.n_se) + " se)",
                   std::abs(a.cov(i, j) - b.cov(i, j)),
                   std::max(p.cov_rel_tol * std::abs(a.cov(i, j)), p.n_se * se));
      }
    }
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    r.AddCheck("gap_shrinks_M" + std::to_string(p.m_list[i - 1]) + "_to_M" +
                   std::to_string(p.m_list[i]),
               "gap(next M) < gap(previous M)", gaps[i], gaps[i - 1], gaps[i] < gaps[i - 1]);
  }

  if (p.proxy_m > 0) {
    ChainConfig cfg = p.base;
    cfg.particles_per_cell = p.proxy_m;
    const std::string cond = "M=" + std::to_string(p.proxy_m);
    const std::uint64_t base = DeriveSeed(p.base.master_seed, 2 * p.m_list.size());
    EnsembleSummary jump = JumpEnsembleAt(cfg, e0, p.t_end, p.proxy_paths, base, p.threads);
    EnsembleSummary sde = SdeEnsembleAt(cfg, e0, p.t_end, p.sde_dt, p.proxy_paths,
                                        DeriveSeed(p.base.master_seed, 2 * p.m_list.size() + 1),
                                        p.threads);
    for (int i = 0; i < n; ++i) {
      r.AddRow(cond, Label("jump_mean_", i), jump.moments.mean(i), jump.moments.mean_se(i), theta(i));
      r.AddRow(cond, Label("sde_mean_", i), sde.moments.mean(i), sde.moments.mean_se(i), theta(i));
      r.AddCheck(Label("proxy_jump_mean_", i), "|mean - theta_bar| <= " + FormatNumber(p.n_se) + " se",
                 std::abs(jump.moments.mean(i) - theta(i)), p.n_se * jump.moments.mean_se(i));
      r.AddCheck(Label("proxy_sde_mean_", i), "|mean - theta_bar| <= " + FormatNumber(p.n_se) + " se",
                 std::abs(sde.moments.mean(i) - theta(i)), p.n_se * sde.moments.mean_se(i));
    }
  }
  r.wall_seconds = Seconds(start);
  return r;
}

}  // namespace heatchain
