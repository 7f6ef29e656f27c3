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

#ifndef REVSTEER_DET_INPUT_HPP_
#define REVSTEER_DET_INPUT_HPP_

#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "revsteer/time_grid.hpp"

namespace revsteer {

// Deterministic input schedule u_t for the auxiliary simulation, applied with
// zero-order hold. The deployed controller adds the reversal -u_{T-t}.
class DeterministicInput {
 public:
  enum class Kind { kZero, kConstant, kTable };

  DeterministicInput() = default;

  static DeterministicInput zero(int control_dim) {
    DeterministicInput u;
    u.kind_ = Kind::kZero;
    u.control_dim_ = control_dim;
    return u;
  }

  static DeterministicInput constant(Eigen::VectorXd value) {
    DeterministicInput u;
    u.kind_ = Kind::kConstant;
    u.control_dim_ = static_cast<int>(value.size());
    u.value_ = std::move(value);
    return u;
  }

  // One value per grid node (steps + 1 entries).
  static DeterministicInput table(std::vector<Eigen::VectorXd> values) {
    if (values.empty()) {
      throw std::invalid_argument("DeterministicInput: empty table");
    }
    DeterministicInput u;
    u.kind_ = Kind::kTable;
    u.control_dim_ = static_cast<int>(values.front().size());
    for (const auto& v : values) {
      if (v.size() != u.control_dim_) {
        throw std::invalid_argument(
            "DeterministicInput: inconsistent table row dimensions");
      }
    }
    u.table_ = std::move(values);
    return u;
  }

  Kind kind() const { return kind_; }
  int control_dim() const { return control_dim_; }
  const Eigen::VectorXd& constant_value() const { return value_; }
  const std::vector<Eigen::VectorXd>& table_values() const { return table_; }

  bool defined_on(const TimeGrid& grid) const {
    return kind_ != Kind::kTable ||
           static_cast<int>(table_.size()) == grid.steps() + 1;
  }

  Eigen::VectorXd at_index(const TimeGrid& grid, int j) const {
    switch (kind_) {
      case Kind::kZero:
        return Eigen::VectorXd::Zero(control_dim_);
      case Kind::kConstant:
        return value_;
      case Kind::kTable:
        if (static_cast<int>(table_.size()) != grid.steps() + 1) {
          throw std::invalid_argument(
              "DeterministicInput: table does not cover the grid");
        }
        if (j < 0 || j > grid.steps()) {
          throw std::out_of_range("DeterministicInput: index outside grid");
        }
        return table_[j];
    }
    return Eigen::VectorXd::Zero(control_dim_);
  }

 private:
  Kind kind_ = Kind::kZero;
  int control_dim_ = 0;
  Eigen::VectorXd value_;
  std::vector<Eigen::VectorXd> table_;
};

}  // namespace revsteer

#endif  // REVSTEER_DET_INPUT_HPP_
