// Copyright 2026 The Revsteer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REVSTEER_TIME_GRID_HPP_
#define REVSTEER_TIME_GRID_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace revsteer {

// Uniform grid {0, dt, ..., T}. steps * dt must reproduce T to within
// 1e-12 * T; use from_nominal() to snap an incommensurate step size.
class TimeGrid {
 public:
  TimeGrid(double horizon, double dt) : horizon_(horizon), dt_(dt) {
    if (!(horizon > 0.0) || !(dt > 0.0)) {
      throw std::invalid_argument("TimeGrid: horizon and dt must be > 0");
    }
    steps_ = static_cast<int>(std::llround(horizon / dt));
    if (steps_ < 1 ||
        std::abs(steps_ * dt - horizon) > 1e-12 * std::max(horizon, 1.0)) {
      throw std::invalid_argument(
          "TimeGrid: dt=" + std::to_string(dt) +
          " does not divide horizon T=" + std::to_string(horizon));
    }
  }

  // Keeps the horizon and adjusts dt to the nearest commensurate value.
  static TimeGrid from_nominal(double horizon, double nominal_dt) {
    if (!(horizon > 0.0) || !(nominal_dt > 0.0)) {
      throw std::invalid_argument("TimeGrid: horizon and dt must be > 0");
    }
    const int steps =
        std::max(1, static_cast<int>(std::llround(horizon / nominal_dt)));
    return TimeGrid(horizon, horizon / steps);
  }

  double horizon() const { return horizon_; }
  double dt() const { return dt_; }
  int steps() const { return steps_; }

  // j in [0, steps]; the last node is pinned to T exactly.
  double time(int j) const { return j == steps_ ? horizon_ : j * dt_; }

  std::vector<double> times() const {
    std::vector<double> out(steps_ + 1);
    for (int j = 0; j <= steps_; ++j) out[j] = time(j);
    return out;
  }

  // Largest grid index j with time(j) <= t (zero-order hold), tolerant of
  // roundoff just below a node.
  int index_floor(double t) const {
    const int j = static_cast<int>(std::floor(t / dt_ + 1e-9));
    return std::clamp(j, 0, steps_);
  }

  // Nearest grid index, for values expected to sit on a node.
  int index_nearest(double t) const {
    const int j = static_cast<int>(std::llround(t / dt_));
    return std::clamp(j, 0, steps_);
  }

  bool operator==(const TimeGrid& other) const {
    return horizon_ == other.horizon_ && dt_ == other.dt_ &&
           steps_ == other.steps_;
  }

 private:
  double horizon_;
  double dt_;
  int steps_;
};

}  // namespace revsteer

#endif  // REVSTEER_TIME_GRID_HPP_
