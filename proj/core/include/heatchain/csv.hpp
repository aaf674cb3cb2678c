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

// Locale-independent CSV helpers. Numbers use the shortest representation
// that round-trips, so equal doubles always print identically.

#ifndef HEATCHAIN_CSV_HPP_
#define HEATCHAIN_CSV_HPP_

#include <charconv>
#include <ostream>
#include <string>

#include <Eigen/Dense>

namespace heatchain {

inline std::string FormatNumber(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Header `i,j,value`, 1-based indices, full matrix.
inline void WriteMatrixCsv(std::ostream& os, const Eigen::MatrixXd& m) {
  os << "i,j,value\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << (i + 1) << ',' << (j + 1) << ',' << FormatNumber(m(i, j)) << '\n';
    }
  }
}

}  // namespace heatchain

#endif  // HEATCHAIN_CSV_HPP_
