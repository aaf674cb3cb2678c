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

#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "heatchain/csv.hpp"
#include "heatchain/fluctuation.hpp"
#include "heatchain/jump_process.hpp"
#include "heatchain/limit_ode.hpp"
#include "heatchain/parallel.hpp"
#include "heatchain/random.hpp"
#include "heatchain/verify.hpp"

#ifndef HEATCHAIN_VERSION
#define HEATCHAIN_VERSION "unknown"
#endif

namespace heatchain::cli {

namespace {

namespace fs = std::filesystem;

struct RunContext {
  std::string subcommand;
  fs::path out_dir;
  std::ostream& out;
  std::vector<std::string> outputs;
  std::vector<std::string> notes;  // extra manifest metadata
  std::string failure;

  std::ofstream Open(const std::string& name) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    outputs.push_back(name);
    return f;
  }
};

using Handler = std::function<int(const Config&, RunContext&)>;

struct Subcommand {
  std::string name;
  std::string description;
  std::vector<std::string> keys;
  std::map<std::string, std::string> defaults;
  Handler run;
};

const std::vector<std::string> kChainKeys = {"n_cells", "t_left", "t_right", "rate_fn",
                                             "rate_cap"};

std::vector<std::string> With(std::vector<std::string> base, std::vector<std::string> extra) {
  base.insert(base.end(), extra.begin(), extra.end());
  return base;
}

std::string Header(int n, const char* first, const char* prefix) {
  std::string h = first;
  for (int i = 1; i <= n; ++i) h += std::string(",") + prefix + std::to_string(i);
  return h;
}

void WriteRows(std::ostream& os, const std::string& header,
               const std::vector<double>& times, const std::vector<Eigen::VectorXd>& states) {
  os << header << "\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << FormatNumber(times[k]);
    for (Eigen::Index i = 0; i < states[k].size(); ++i) os << ',' << FormatNumber(states[k](i));
    os << "\n";
  }
}

// Indices of grid_points evenly spaced samples out of n_steps + 1 nodes.
std::vector<std::size_t> Thin(std::size_t nodes, int grid_points) {
  std::vector<std::size_t> idx;
  if (nodes == 0) return idx;
  const std::size_t g = std::max<std::size_t>(2, static_cast<std::size_t>(grid_points));
  if (nodes <= g) {
    for (std::size_t i = 0; i < nodes; ++i) idx.push_back(i);
    return idx;
  }
  for (std::size_t k = 0; k < g; ++k) {
    std::size_t i = (k * (nodes - 1) + (g - 1) / 2) / (g - 1);
    if (idx.empty() || i != idx.back()) idx.push_back(i);
  }
  return idx;
}

std::vector<double> UniformGrid(double t_end, int points) {
  if (points < 2) throw ConfigError("config error: key 'grid_points' must be >= 2");
  std::vector<double> g;
  for (int k = 0; k < points; ++k) {
    g.push_back(k + 1 == points ? t_end : t_end * k / (points - 1));
  }
  return g;
}

void WritePlot(RunContext& ctx, const std::string& csv, int n, const std::string& xlabel,
               const std::string& ylabel) {
  std::ofstream f = ctx.Open("plot.gp");
  f << "# gnuplot -p plot.gp\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel '" << xlabel << "'\n"
    << "set ylabel '" << ylabel << "'\n"
    << "plot for [i=2:" << n + 1 << "] '" << csv << "' using 1:i with lines\n";
}

void NoteSeeds(RunContext& ctx, std::uint64_t base, int n_paths) {
  ctx.notes.push_back("seed_rule: " + std::string(kSeedRule));
  for (int i = 0; i < std::min(n_paths, 3); ++i) {
    ctx.notes.push_back("path_seed[" + std::to_string(i) + "]: " +
                        std::to_string(DeriveSeed(base, static_cast<std::uint64_t>(i))));
  }
}

int FinishReport(const ExperimentReport& report, RunContext& ctx) {
  {
    std::ofstream f = ctx.Open("report.txt");
    report.WriteText(f);
  }
  {
    std::ofstream f = ctx.Open("report.csv");
    report.WriteCsv(f);
  }
  report.WriteText(ctx.out);
  if (report.passed()) return kExitOk;
  ctx.failure = report.failure_reason().value_or("FAIL " + report.name);
  return kExitVerificationFailed;
}

int RunSimulate(const Config& c, RunContext& ctx) {
  ChainConfig cfg = c.Chain();
  const double t_end = c.GetDouble("t_end");
  EnergyState e0 = c.State("e0", cfg.n_cells).value_or(EnergyState::Uniform(cfg.n_cells, cfg.t_left));
  SimulateOptions opts;
  opts.grid = UniformGrid(t_end, c.GetInt("grid_points"));
  opts.event_cap = static_cast<std::size_t>(c.GetInt("event_cap"));
  Trajectory traj = Simulate(cfg, e0, t_end, cfg.master_seed, opts);
  ctx.notes.push_back("seed_rule: single path, engine = std::mt19937_64(seed)");
  {
    std::ofstream f = ctx.Open("trajectory.csv");
    WriteGridCsv(f, traj);
  }
  {
    std::ofstream f = ctx.Open("events.csv");
    WriteEventsCsv(f, traj);
  }
  if (c.GetBool("plot")) WritePlot(ctx, "trajectory.csv", cfg.n_cells, "t", "E");
  ctx.out << "events: " << traj.event_count() << (traj.truncated() ? " (log truncated)" : "")
          << "\nboundary influx: " << traj.boundary_influx() << "\n";
  return kExitOk;
}

int RunOde(const Config& c, RunContext& ctx) {
  ChainConfig cfg = c.Chain();
  EnergyState e0 = c.State("e0", cfg.n_cells).value_or(EnergyState::Uniform(cfg.n_cells, cfg.t_left));
  OdeSolution sol = IntegrateOde(cfg, e0, c.GetDouble("t_end"), c.GetDouble("dt"));
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  for (std::size_t i : Thin(sol.times.size(), c.GetInt("grid_points"))) {
    times.push_back(sol.times[i]);
    states.push_back(sol.states[i]);
  }
  std::ofstream f = ctx.Open("trajectory.csv");
  WriteRows(f, Header(cfg.n_cells, "t", "E"), times, states);
  if (c.GetBool("plot")) WritePlot(ctx, "trajectory.csv", cfg.n_cells, "t", "E");
  return kExitOk;
}

void WriteEquilibrium(RunContext& ctx, const EnergyState& e) {
  std::ofstream f = ctx.Open("equilibrium.csv");
  f << "i,E_star\n";
  for (int i = 0; i < e.size(); ++i) f << i + 1 << ',' << FormatNumber(e[i]) << "\n";
}

int RunEquilibrium(const Config& c, RunContext& ctx) {
  ChainConfig cfg = c.Chain();
  const double tol = c.GetDouble("tol");
  EquilibriumProfile p = SolveEquilibrium(cfg, tol);
  WriteEquilibrium(ctx, p.e_star);
  if (cfg.t_left != cfg.t_right) {
    Conductivity k = ComputeConductivity(cfg, tol);
    std::ofstream f = ctx.Open("kappa.csv");
    f << "kappa,c_star,lower,upper\n"
      << FormatNumber(k.kappa) << ',' << FormatNumber(k.profile.c_star) << ','
      << FormatNumber(k.lower) << ',' << FormatNumber(k.upper) << "\n";
  }
  JacobianReport j = AnalyzeJacobian(p.e_star, cfg);
  std::ostringstream s;
  s << "c_star: " << FormatNumber(p.c_star) << "\nresidual: " << FormatNumber(p.residual)
    << "\niterations: " << p.iterations << "\nmax_real_eigenvalue: "
    << FormatNumber(j.max_real_part()) << "\ngershgorin_ok: " << j.gershgorin_ok
    << "\ngamma_condition_ok: " << j.gamma_condition_ok
    << "\nfd_max_error: " << FormatNumber(j.fd_max_error) << "\n";
  {
    std::ofstream f = ctx.Open("report.txt");
    f << s.str();
  }
  if (c.GetBool("plot")) {
    std::ofstream f = ctx.Open("plot.gp");
    f << "# gnuplot -p plot.gp\nset datafile separator ','\nset key autotitle columnhead\n"
      << "plot 'equilibrium.csv' using 1:2 with linespoints\n";
  }
  ctx.out << s.str();
  return kExitOk;
}

int RunKappa(const Config& c, RunContext& ctx) {
  ChainConfig cfg = c.Chain();
  const double tol = c.GetDouble("tol");
  std::ofstream f = ctx.Open("kappa.csv");
  f << "delta,t_right,kappa,c_star,lower,upper,abs_kappa_minus_half_f_left\n";
  const double half_f = 0.5 * Rate(cfg.rate_fn, cfg.rate_cap, cfg.t_left, cfg.t_left);
  for (double d : c.GetDoubleList("delta_list")) {
    if (d == 0.0) c.Fail("delta_list", "delta = 0 is excluded");
    ChainConfig run = cfg;
    run.t_right = cfg.t_left + d;
    if (!(run.t_right > 0.0)) c.Fail("delta_list", "t_left + delta must be > 0");
    Conductivity k = ComputeConductivity(run, tol);
    f << FormatNumber(d) << ',' << FormatNumber(run.t_right) << ',' << FormatNumber(k.kappa)
      << ',' << FormatNumber(k.profile.c_star) << ',' << FormatNumber(k.lower) << ','
      << FormatNumber(k.upper) << ',' << FormatNumber(std::abs(k.kappa - half_f)) << "\n";
    ctx.out << "delta " << d << ": kappa " << k.kappa << "\n";
  }
  return kExitOk;
}

int RunSdeClt(const Config& c, RunContext& ctx) {
  ChainConfig cfg = c.Chain();
  const double t_end = c.GetDouble("t_end");
  const double dt = c.GetDouble("dt");
  const int n_paths = c.GetInt("n_paths");
  if (n_paths < 1) c.Fail("n_paths", "must be >= 1");
  EnergyState e0 = c.State("e0", cfg.n_cells).value_or(EnergyState::Uniform(cfg.n_cells, cfg.t_left));
  OdeSolution theta = IntegrateOde(cfg, e0, t_end, 0.5 * dt);
  CltSde sde(cfg, theta, t_end, dt);
  NoteSeeds(ctx, cfg.master_seed, n_paths);

  SdePath first = sde.Run(DeriveSeed(cfg.master_seed, 0));
  {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    for (std::size_t i : Thin(first.times.size(), c.GetInt("grid_points"))) {
      times.push_back(first.times[i]);
      states.push_back(first.states[i]);
    }
    std::ofstream f = ctx.Open("trajectory.csv");
    WriteRows(f, Header(cfg.n_cells, "t", "G"), times, states);
  }
  {
    std::ofstream f = ctx.Open("sigma_ode.csv");
    WriteMatrixCsv(f, CovarianceOde(cfg, e0, t_end, dt).final());
  }
  if (n_paths >= 2) {
    std::vector<Eigen::VectorXd> ends(static_cast<std::size_t>(n_paths));
    ParallelFor(n_paths, c.GetInt("threads"), [&](int i) {
      ends[static_cast<std::size_t>(i)] = sde.RunFinal(DeriveSeed(cfg.master_seed, static_cast<std::uint64_t>(i)));
    });
    Eigen::MatrixXd samples(n_paths, cfg.n_cells);
    for (int i = 0; i < n_paths; ++i) samples.row(i) = ends[static_cast<std::size_t>(i)].transpose();
    std::ofstream f = ctx.Open("sigma.csv");
    WriteMatrixCsv(f, ComputeSampleMoments(samples).cov);
  }
  if (c.GetBool("plot")) WritePlot(ctx, "trajectory.csv", cfg.n_cells, "t", "G");
  return kExitOk;
}

int RunSdeMeso(const Config& c, RunContext& ctx) {
  ChainConfig cfg = c.Chain();
  const double t_end = c.GetDouble("t_end");
  const int n_paths = c.GetInt("n_paths");
  if (n_paths < 1) c.Fail("n_paths", "must be >= 1");
  EnergyState e0 = c.State("e0", cfg.n_cells).value_or(EnergyState::Uniform(cfg.n_cells, cfg.t_left));
  MesoscopicSde sde(cfg, t_end, c.GetDouble("dt"));
  NoteSeeds(ctx, cfg.master_seed, n_paths);
  SdePath first = sde.Run(e0, DeriveSeed(cfg.master_seed, 0));
  {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    for (std::size_t i : Thin(first.times.size(), c.GetInt("grid_points"))) {
      times.push_back(first.times[i]);
      states.push_back(first.states[i]);
    }
    std::ofstream f = ctx.Open("trajectory.csv");
    WriteRows(f, Header(cfg.n_cells, "t", "Z"), times, states);
  }
  int clamps = first.clamps, resamples = first.resamples;
  if (n_paths >= 2) {
    std::vector<SdeEndpoint> ends(static_cast<std::size_t>(n_paths));
    ParallelFor(n_paths, c.GetInt("threads"), [&](int i) {
      ends[static_cast<std::size_t>(i)] = sde.RunFinal(e0, DeriveSeed(cfg.master_seed, static_cast<std::uint64_t>(i)));
    });
    Eigen::MatrixXd samples(n_paths, cfg.n_cells);
    clamps = resamples = 0;
    for (int i = 0; i < n_paths; ++i) {
      samples.row(i) = ends[static_cast<std::size_t>(i)].state.transpose();
      clamps += ends[static_cast<std::size_t>(i)].clamps;
      resamples += ends[static_cast<std::size_t>(i)].resamples;
    }
    SampleMoments m = ComputeSampleMoments(samples);
    {
      std::ofstream f = ctx.Open("mean.csv");
      f << "i,mean,se\n";
      for (int i = 0; i < cfg.n_cells; ++i) {
        f << i + 1 << ',' << FormatNumber(m.mean(i)) << ',' << FormatNumber(m.mean_se(i)) << "\n";
      }
    }
    std::ofstream f = ctx.Open("sigma.csv");
    WriteMatrixCsv(f, m.cov);
  }
  if (c.GetBool("plot")) WritePlot(ctx, "trajectory.csv", cfg.n_cells, "t", "Z");
  ctx.out << "resamples: " << resamples << "\nclamps: " << clamps << "\n";
  return kExitOk;
}

int RunMoments(const Config& c, RunContext& ctx) {
  ChainConfig cfg = c.Chain();
  std::optional<EnergyState> state = c.State("state", cfg.n_cells);
  if (!state) throw ConfigError("config error: missing required key 'state'");
  {
    std::ofstream f = ctx.Open("sigma.csv");
    WriteMatrixCsv(f, SigmaMatrix(*state, cfg).entries);
  }
  {
    Eigen::MatrixXd h = HMatrix(*state, cfg);
    std::ofstream f = ctx.Open("hht.csv");
    WriteMatrixCsv(f, h * h.transpose());
  }
  const int m = cfg.particles_per_cell;
  {
    std::ofstream f = ctx.Open("second_moments.csv");
    WriteMatrixCsv(f, static_cast<double>(m) * m * ExactSecondMoments(*state, cfg, m).entries);
  }
  const int n_samples = c.GetInt("n_samples");
  if (n_samples > 0) {
    MomentEstimate est = MomentOracle(*state, cfg, m, n_samples, cfg.master_seed);
    ctx.notes.push_back("seed_rule: oracle stream = std::mt19937_64(seed)");
    std::ofstream f = ctx.Open("oracle.csv");
    f << "i,j,value,se\n";
    for (int i = 0; i < cfg.n_cells; ++i) {
      for (int j = 0; j < cfg.n_cells; ++j) {
        f << i + 1 << ',' << j + 1 << ',' << FormatNumber(est.estimate(i, j)) << ','
          << FormatNumber(est.se(i, j)) << "\n";
      }
    }
  }
  return kExitOk;
}

int RunLyapunov(const Config& c, RunContext& ctx) {
  ChainConfig cfg = c.Chain();
  NessGaussian g = ComputeNessGaussian(cfg, c.GetDouble("tol"));
  WriteEquilibrium(ctx, g.equilibrium.e_star);
  {
    std::ofstream f = ctx.Open("sigma.csv");
    WriteMatrixCsv(f, g.s.entries);
  }
  {
    std::ofstream f = ctx.Open("covariance.csv");
    WriteMatrixCsv(f, g.covariance);
  }
  std::ostringstream s;
  s << "lyapunov_residual: " << FormatNumber(g.lyapunov_residual)
    << "\nmax_real_eigenvalue: " << FormatNumber(g.jacobian.max_real_part()) << "\nmean_shift:";
  for (Eigen::Index i = 0; i < g.mean_shift.size(); ++i) s << ' ' << FormatNumber(g.mean_shift(i));
  s << "\n";
  {
    std::ofstream f = ctx.Open("report.txt");
    f << s.str();
  }
  ctx.out << s.str();
  return kExitOk;
}

int RunVerifyLln(const Config& c, RunContext& ctx) {
  LlnParams p;
  p.base = c.Chain();
  p.m_list = c.GetIntList("m_list");
  p.t_end = c.GetDouble("t_end");
  p.grid_points = c.GetInt("grid_points");
  p.n_paths = c.GetInt("n_paths");
  p.e0 = c.State("e0", p.base.n_cells);
  p.ode_dt = c.GetDouble("dt");
  p.threads = c.GetInt("threads");
  ctx.notes.push_back("seed_rule: " + std::string(kSeedRule) +
                      "; master_seed for condition c = DeriveSeed(seed, c)");
  return FinishReport(LlnExperiment(p), ctx);
}

int RunVerifyClt(const Config& c, RunContext& ctx) {
  CltParams p;
  p.cfg = c.Chain();
  p.t_end = c.GetDouble("t_end");
  p.n_paths = c.GetInt("n_paths");
  p.e0 = c.State("e0", p.cfg.n_cells);
  p.ode_dt = c.GetDouble("dt");
  p.threads = c.GetInt("threads");
  NoteSeeds(ctx, p.cfg.master_seed, p.n_paths);
  return FinishReport(CltExperiment(p), ctx);
}

int RunVerifyFourier(const Config& c, RunContext& ctx) {
  FourierParams p;
  p.base = c.Chain();
  p.delta_list = c.GetDoubleList("delta_list");
  p.n_paths = c.GetInt("n_paths");
  p.t_measure = c.GetDouble("t_measure");
  p.burn_in = c.GetDouble("burn_in");
  p.tol = c.GetDouble("tol");
  p.threads = c.GetInt("threads");
  ctx.notes.push_back("seed_rule: " + std::string(kSeedRule) +
                      "; master_seed for delta index c = DeriveSeed(seed, c)");
  return FinishReport(FourierExperiment(p), ctx);
}

int RunVerifyBeta(const Config& c, RunContext& ctx) {
  BetaTailParams p;
  p.m_list = c.GetDoubleList("m_list");
  p.epsilon = c.GetDouble("epsilon");
  p.m_threshold = c.GetDouble("m_threshold");
  return FinishReport(BetaTailCheck(p), ctx);
}

int RunVerifyNess(const Config& c, RunContext& ctx) {
  NessParams p;
  p.cfg = c.Chain();
  p.burn_in = c.GetString("burn_in") == "auto" ? -1.0 : c.GetDouble("burn_in");
  p.t_measure = c.GetDouble("t_measure");
  p.n_batches = c.GetInt("n_batches");
  p.tol = c.GetDouble("tol");
  p.threads = c.GetInt("threads");
  p.check_doubling = c.GetBool("doubling");
  ctx.notes.push_back("seed_rule: " + std::string(kSeedRule) +
                      "; replica i at M uses DeriveSeed(DeriveSeed(seed, 0), i), at 2M "
                      "DeriveSeed(DeriveSeed(seed, 1), i)");
  return FinishReport(NessExperiment(p), ctx);
}

int RunVerifyMeso(const Config& c, RunContext& ctx) {
  MesoParams p;
  p.base = c.Chain();
  p.m_list = c.GetIntList("m_list");
  p.t_end = c.GetDouble("t_end");
  p.n_paths = c.GetInt("n_paths");
  p.sde_dt = c.GetDouble("sde_dt");
  p.e0 = c.State("e0", p.base.n_cells);
  p.ode_dt = c.GetDouble("dt");
  p.threads = c.GetInt("threads");
  p.proxy_m = c.GetInt("proxy_m");
  p.proxy_paths = c.GetInt("proxy_paths");
  ctx.notes.push_back("seed_rule: " + std::string(kSeedRule) +
                      "; jump ensemble for M index c uses DeriveSeed(seed, 2c), the SDE "
                      "ensemble DeriveSeed(seed, 2c + 1)");
  return FinishReport(MesoscopicComparison(p), ctx);
}

const std::vector<Subcommand>& Subcommands() {
  static const std::vector<Subcommand> subs = {
      {"simulate", "one jump-process trajectory: trajectory.csv, events.csv",
       With(kChainKeys, {"particles", "seed", "t_end", "e0", "grid_points", "event_cap", "plot"}),
       {},
       RunSimulate},
      {"ode", "integrate the limit ODE with RK4: trajectory.csv",
       With(kChainKeys, {"t_end", "dt", "e0", "grid_points", "plot"}),
       {},
       RunOde},
      {"equilibrium", "equilibrium profile and conductivity: equilibrium.csv, kappa.csv",
       With(kChainKeys, {"tol", "plot"}),
       {},
       RunEquilibrium},
      {"kappa", "conductivity for each gap in delta_list: kappa.csv",
       With(kChainKeys, {"delta_list", "tol"}),
       {},
       RunKappa},
      {"sde-clt", "Gaussian fluctuation SDE: trajectory.csv, sigma.csv, sigma_ode.csv",
       With(kChainKeys, {"seed", "t_end", "dt", "e0", "n_paths", "grid_points", "threads", "plot"}),
       {{"t_end", "2"}},
       RunSdeClt},
      {"sde-meso", "mesoscopic SDE: trajectory.csv (+ mean.csv, sigma.csv for n_paths >= 2)",
       With(kChainKeys, {"particles", "seed", "t_end", "dt", "e0", "n_paths", "grid_points",
                         "threads", "plot"}),
       {{"t_end", "2"}, {"dt", "0.00025"}, {"n_paths", "1"}},
       RunSdeMeso},
      {"moments", "diffusion and one-event second moments at a state: sigma.csv, hht.csv",
       With(kChainKeys, {"particles", "seed", "state", "n_samples"}),
       {{"n_samples", "0"}},
       RunMoments},
      {"lyapunov", "stationary Gaussian approximation: equilibrium.csv, sigma.csv",
       With(kChainKeys, {"particles", "tol"}),
       {},
       RunLyapunov},
      {"verify-lln", "law of large numbers scaling experiment",
       With(kChainKeys, {"seed", "m_list", "t_end", "grid_points", "n_paths", "e0", "dt",
                         "threads"}),
       {{"n_cells", "5"}, {"n_paths", "200"}, {"grid_points", "51"}},
       RunVerifyLln},
      {"verify-clt", "CLT covariance experiment",
       With(kChainKeys, {"particles", "seed", "t_end", "n_paths", "e0", "dt", "threads"}),
       {{"particles", "1000"}, {"t_end", "2"}, {"n_paths", "10000"}},
       RunVerifyClt},
      {"verify-fourier", "conductivity experiment",
       With(kChainKeys, {"particles", "seed", "delta_list", "n_paths", "t_measure", "burn_in",
                         "tol", "threads"}),
       {{"n_paths", "20"}, {"t_measure", "200"}, {"burn_in", "10"}, {"tol", "1e-12"}},
       RunVerifyFourier},
      {"verify-beta", "closed-form Beta(1, M-1) tail bound",
       {"m_list", "epsilon", "m_threshold"},
       {{"m_list", "1000,1000000,1000000000"}},
       RunVerifyBeta},
      {"verify-ness", "stationary moments against the Gaussian approximation",
       With(kChainKeys, {"particles", "seed", "burn_in", "t_measure", "n_batches", "tol",
                         "threads", "doubling"}),
       {{"particles", "200"}, {"t_right", "1.5"}, {"tol", "1e-12"}},
       RunVerifyNess},
      {"verify-meso", "jump process against the mesoscopic SDE",
       With(kChainKeys, {"seed", "m_list", "t_end", "n_paths", "sde_dt", "e0", "dt", "threads",
                         "proxy_m", "proxy_paths"}),
       {{"m_list", "100,1000"}, {"t_end", "2"}, {"n_paths", "10000"}},
       RunVerifyMeso},
  };
  return subs;
}

std::string Timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void WriteManifest(const Subcommand& sub, const Config& cfg, RunContext& ctx, int status) {
  std::ofstream f(ctx.out_dir / kManifestName, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write manifest");
  f << "# heatchain run manifest\n"
    << "# subcommand: " << sub.name << "\n"
    << "# tool_version: " << HEATCHAIN_VERSION << "\n"
    << "# timestamp: " << Timestamp() << "\n"
    << "# exit_status: " << status << "\n";
  for (const std::string& n : ctx.notes) f << "# " << n << "\n";
  f << "# outputs:";
  for (const std::string& o : ctx.outputs) f << ' ' << o;
  f << "\n# replay: heatchain " << sub.name << " --config " << kManifestName << " --out <dir>\n";
  // Resolved values of every key the subcommand reads, in canonical order.
  for (const KeySpec& k : AllKeys()) {
    if (std::find(sub.keys.begin(), sub.keys.end(), k.name) == sub.keys.end()) continue;
    if (!cfg.Has(k.name)) continue;
    f << k.name << '=' << cfg.Raw(k.name).text << "\n";
  }
}

std::string DefaultFor(const Subcommand& sub, const KeySpec& k) {
  auto it = sub.defaults.find(k.name);
  return it != sub.defaults.end() ? it->second : k.default_value;
}

}  // namespace

std::vector<std::string> SubcommandNames() {
  std::vector<std::string> out;
  for (const Subcommand& s : Subcommands()) out.push_back(s.name);
  return out;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"heatchain: stochastic energy exchange chains and their limits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(HEATCHAIN_VERSION));
  app.footer("Config files hold flat key=value lines; flags override file values.\n"
             "Default output directory: $" + std::string(kOutEnv) + " or the current directory.");

  struct Parsed {
    std::string config_path;
    std::string out_dir;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<Parsed> parsed(Subcommands().size());
  std::vector<CLI::App*> apps;
  for (std::size_t s = 0; s < Subcommands().size(); ++s) {
    const Subcommand& sub = Subcommands()[s];
    CLI::App* a = app.add_subcommand(sub.name, sub.description);
    a->add_option("--config", parsed[s].config_path, "key=value config file");
    a->add_option("--out", parsed[s].out_dir,
                  "output directory (default: $" + std::string(kOutEnv) + " or .)");
    for (const std::string& key : sub.keys) {
      const KeySpec* k = FindKey(key);
      const std::string def = DefaultFor(sub, *k);
      parsed[s].options[key] = a->add_option(
          "--" + key, parsed[s].values[key],
          k->help + " [default: " + (def.empty() ? "required" : def) + "]");
    }
    apps.push_back(a);
  }

  if (!args.empty() && !args.front().empty() && args.front().front() != '-') {
    const auto names = SubcommandNames();
    if (std::find(names.begin(), names.end(), args.front()) == names.end()) {
      err << "error: unknown subcommand '" << args.front() << "'\n" << app.help();
      return kExitUsage;
    }
  }

  std::vector<const char*> argv = {"heatchain"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << HEATCHAIN_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  std::size_t which = 0;
  for (; which < apps.size(); ++which) {
    if (apps[which]->parsed()) break;
  }
  const Subcommand& sub = Subcommands()[which];
  Parsed& p = parsed[which];

  Config cfg;
  try {
    if (!p.config_path.empty()) cfg.LoadFile(p.config_path);
    for (const auto& [key, opt] : p.options) {
      if (opt->count() > 0) cfg.Set(key, p.values[key], "command line");
    }
    cfg.ApplyDefaults(sub.defaults);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  std::string dir = p.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutEnv);
    dir = env && *env ? env : ".";
  }
  RunContext ctx{sub.name, fs::path(dir), out, {}, {}, {}};
  int status = kExitOk;
  try {
    fs::create_directories(ctx.out_dir);
    status = sub.run(cfg, ctx);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  try {
    WriteManifest(sub, cfg, ctx, status);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  out << "outputs in " << ctx.out_dir.string() << ":";
  for (const std::string& o : ctx.outputs) out << ' ' << o;
  out << ' ' << kManifestName << "\n";
  if (status == kExitVerificationFailed) err << ctx.failure << "\n";
  return status;
}

}  // namespace heatchain::cli
