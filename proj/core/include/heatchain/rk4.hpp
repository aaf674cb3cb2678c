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

#ifndef HEATCHAIN_RK4_HPP_
#define HEATCHAIN_RK4_HPP_

#include <cmath>
#include <stdexcept>

namespace heatchain {

// Classical fourth-order Runge-Kutta step for y' = rhs(t, y). State is any
// value type closed under addition and scalar multiplication (Eigen vectors
// and matrices included).
template <class State, class Rhs>
State Rk4Step(Rhs&& rhs, double t, const State& y, double h) {
  const State k1 = rhs(t, y);
  const State k2 = rhs(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = rhs(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = rhs(t + h, State(y + h * k3));
  return State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

// Number of equal steps of size <= dt covering [0, t_end].
inline int StepCount(double t_end, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
  return static_cast<int>(std::ceil(t_end / dt - 1e-9));
}

}  // namespace heatchain

#endif  // HEATCHAIN_RK4_HPP_
