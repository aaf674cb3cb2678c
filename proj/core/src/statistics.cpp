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

#include "heatchain/statistics.hpp"

#include <cmath>
#include <stdexcept>

namespace heatchain {

std::string ToString(MomentKind kind) {
  switch (kind) {
    case MomentKind::kSigma: return "sigma";
    case MomentKind::kHHt: return "hht";
    case MomentKind::kLyapunovS: return "lyapunov_S";
    case MomentKind::kEmpiricalCov: return "empirical_cov";
    case MomentKind::kCovarianceOde: return "covariance_ode";
    case MomentKind::kSecondMoment: return "second_moment";
  }
  return "unknown";
}

bool IsSymmetric(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool IsPositiveSemidefinite(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return solver.eigenvalues().minCoeff() >= -tol * scale;
}

bool IsTridiagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (std::abs(i - j) > 1 && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

SampleMoments ComputeSampleMoments(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw std::invalid_argument("need at least two samples");
  SampleMoments out;
  out.n = static_cast<int>(n);
  out.mean = samples.colwise().mean().transpose();
  Eigen::MatrixXd centered = samples.rowwise() - out.mean.transpose();
  out.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  out.mean_se = (out.cov.diagonal() / static_cast<double>(n)).cwiseSqrt();

  out.cov_se.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      Eigen::VectorXd prod = centered.col(i).cwiseProduct(centered.col(j));
      double m = prod.mean();
      double var = (prod.array() - m).square().sum() / static_cast<double>(n - 1);
      out.cov_se(i, j) = out.cov_se(j, i) = std::sqrt(var / static_cast<double>(n));
    }
  }

  out.skewness.resize(d);
  out.excess_kurtosis.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::ArrayXd c = centered.col(i).array();
    double m2 = c.square().mean();
    double m3 = c.cube().mean();
    double m4 = c.square().square().mean();
    out.skewness(i) = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    out.excess_kurtosis(i) = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  }
  return out;
}

BatchEstimate BatchMeans(std::span<const double> batch_values) {
  const std::size_t b = batch_values.size();
  if (b < 2) throw std::invalid_argument("batch means needs at least two batches");
  double mean = PairwiseSum(batch_values) / static_cast<double>(b);
  double ss = 0.0;
  for (double v : batch_values) ss += (v - mean) * (v - mean);
  double var = ss / static_cast<double>(b - 1);
  return {mean, std::sqrt(var / static_cast<double>(b))};
}

LinearFit FitLine(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("FitLine needs >= 2 matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("FitLine: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

double PairwiseSum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  std::size_t half = values.size() / 2;
  return PairwiseSum(values.first(half)) + PairwiseSum(values.subspan(half));
}

}  // namespace heatchain
