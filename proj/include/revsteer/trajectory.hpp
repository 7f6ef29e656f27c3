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

#ifndef REVSTEER_TRAJECTORY_HPP_
#define REVSTEER_TRAJECTORY_HPP_

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "revsteer/errors.hpp"
#include "revsteer/time_grid.hpp"

namespace revsteer {

// Floats are written with 17 significant digits so a reload is bit-faithful.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// N sample paths on a shared grid. states[i] is (steps+1) x n with one row
// per grid node; controls[i], when recorded, is steps x m with one row per
// step (value held over [t_j, t_{j+1})).
struct TrajectoryBatch {
  TimeGrid grid;
  int state_dim = 0;
  int control_dim = 0;
  std::vector<Eigen::MatrixXd> states;
  std::vector<Eigen::MatrixXd> controls;

  TrajectoryBatch(TimeGrid g, int n, int m)
      : grid(g), state_dim(n), control_dim(m) {}

  int count() const { return static_cast<int>(states.size()); }
  bool has_controls() const { return !controls.empty(); }

  Eigen::VectorXd initial_state(int i) const {
    return states[i].row(0).transpose();
  }
  Eigen::VectorXd terminal_state(int i) const {
    return states[i].row(grid.steps()).transpose();
  }

  // States of every path at grid node j, as an n x N matrix.
  Eigen::MatrixXd states_at(int j) const {
    Eigen::MatrixXd out(state_dim, count());
    for (int i = 0; i < count(); ++i) {
      out.col(i) = states[i].row(j).transpose();
    }
    return out;
  }
};

// CSV columns: traj_id, t, x_1..x_n[, u_1..u_m]. One row per (path, node);
// the terminal row has no control and leaves those cells empty.
inline void write_trajectory_csv(const TrajectoryBatch& batch,
                                 std::ostream& os) {
  os << "traj_id,t";
  for (int k = 1; k <= batch.state_dim; ++k) os << ",x_" << k;
  if (batch.has_controls()) {
    for (int k = 1; k <= batch.control_dim; ++k) os << ",u_" << k;
  }
  os << "\n";
  for (int i = 0; i < batch.count(); ++i) {
    for (int j = 0; j <= batch.grid.steps(); ++j) {
      os << i << "," << format_double(batch.grid.time(j));
      for (int k = 0; k < batch.state_dim; ++k) {
        os << "," << format_double(batch.states[i](j, k));
      }
      if (batch.has_controls()) {
        for (int k = 0; k < batch.control_dim; ++k) {
          os << ",";
          if (j < batch.grid.steps()) {
            os << format_double(batch.controls[i](j, k));
          }
        }
      }
      os << "\n";
    }
  }
}

inline void write_trajectory_csv(const TrajectoryBatch& batch,
                                 const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  write_trajectory_csv(batch, os);
}

inline TrajectoryBatch read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("trajectory CSV: empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "traj_id" || header[1] != "t") {
    throw ConfigError("trajectory CSV: unexpected header");
  }
  int n = 0;
  int m = 0;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c].rfind("x_", 0) == 0) {
      ++n;
    } else if (header[c].rfind("u_", 0) == 0) {
      ++m;
    } else {
      throw ConfigError("trajectory CSV: unexpected column " + header[c]);
    }
  }

  struct Row {
    int id;
    double t;
    std::vector<double> x;
    std::vector<double> u;
    bool has_u;
  };
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Row row;
    std::getline(ss, cell, ',');
    row.id = std::stoi(cell);
    std::getline(ss, cell, ',');
    row.t = std::stod(cell);
    for (int k = 0; k < n; ++k) {
      std::getline(ss, cell, ',');
      row.x.push_back(std::stod(cell));
    }
    row.has_u = false;
    for (int k = 0; k < m; ++k) {
      if (std::getline(ss, cell, ',') && !cell.empty()) {
        row.u.push_back(std::stod(cell));
        row.has_u = true;
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("trajectory CSV: no data rows");

  int count = 0;
  for (const auto& row : rows) count = std::max(count, row.id + 1);
  const int rows_per_path = static_cast<int>(rows.size()) / count;
  if (rows_per_path < 2 ||
      static_cast<int>(rows.size()) != count * rows_per_path) {
    throw ConfigError("trajectory CSV: ragged paths");
  }
  const int steps = rows_per_path - 1;
  const double horizon = rows[steps].t;
  TrajectoryBatch batch(TimeGrid(horizon, horizon / steps), n, m);
  const bool has_controls = m > 0 && rows.front().has_u;
  batch.states.assign(count, Eigen::MatrixXd::Zero(steps + 1, n));
  if (has_controls) {
    batch.controls.assign(count, Eigen::MatrixXd::Zero(steps, m));
  }
  std::vector<int> cursor(count, 0);
  for (const auto& row : rows) {
    const int j = cursor[row.id]++;
    for (int k = 0; k < n; ++k) batch.states[row.id](j, k) = row.x[k];
    if (has_controls && j < steps) {
      for (int k = 0; k < m; ++k) batch.controls[row.id](j, k) = row.u[k];
    }
  }
  return batch;
}

inline TrajectoryBatch read_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return read_trajectory_csv(is);
}

}  // namespace revsteer

#endif  // REVSTEER_TRAJECTORY_HPP_
