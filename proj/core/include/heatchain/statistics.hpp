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

#ifndef HEATCHAIN_STATISTICS_HPP_
#define HEATCHAIN_STATISTICS_HPP_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace heatchain {

enum class MomentKind { kSigma, kHHt, kLyapunovS, kEmpiricalCov, kCovarianceOde, kSecondMoment };

std::string ToString(MomentKind kind);

// N x N symmetric matrix tagged with what it represents.
struct MomentMatrix {
  Eigen::MatrixXd entries;
  MomentKind kind = MomentKind::kEmpiricalCov;

  int size() const { return static_cast<int>(entries.rows()); }
  double operator()(int i, int j) const { return entries(i, j); }
};

bool IsSymmetric(const Eigen::MatrixXd& m, double tol = 1e-12);
// Smallest eigenvalue of the symmetric part is >= -tol * max(1, |m|_max).
bool IsPositiveSemidefinite(const Eigen::MatrixXd& m, double tol = 1e-10);
bool IsTridiagonal(const Eigen::MatrixXd& m);

// Moments of n samples stored as the rows of a matrix.
struct SampleMoments {
  int n = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_se;
  Eigen::MatrixXd cov;     // unbiased
  Eigen::MatrixXd cov_se;  // sd of centered products / sqrt(n)
  Eigen::VectorXd skewness;
  Eigen::VectorXd excess_kurtosis;
};

SampleMoments ComputeSampleMoments(const Eigen::MatrixXd& samples);

// Batch-means estimate for a sequence of per-batch averages.
struct BatchEstimate {
  double mean = 0.0;
  double se = 0.0;
};

BatchEstimate BatchMeans(std::span<const double> batch_values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
LinearFit FitLine(std::span<const double> x, std::span<const double> y);

// Pairwise (cascade) summation.
double PairwiseSum(std::span<const double> values);

}  // namespace heatchain

#endif  // HEATCHAIN_STATISTICS_HPP_
