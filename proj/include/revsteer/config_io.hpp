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

#ifndef REVSTEER_CONFIG_IO_HPP_
#define REVSTEER_CONFIG_IO_HPP_

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "revsteer/bench.hpp"
#include "revsteer/errors.hpp"
#include "revsteer/synthesis.hpp"

namespace revsteer {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Strict-schema experiment configuration. Unknown keys are rejected so that
// a typo cannot silently change an experiment.

struct RunConfig {
  ExperimentConfig experiment;
  std::vector<ControllerSource> sweep_controllers;
  double delta = -1.0;  // Problem-2 tolerance; < 0 means unset
  std::string out_dir;
};

namespace detail {

inline void check_keys(const Json& obj, const std::string& where,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw ConfigError("config: '" + where + "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("config: unknown key '" + key + "' in '" + where +
                        "'");
    }
  }
}

inline const Json& require(const Json& obj, const std::string& where,
                           const std::string& key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError("config: missing required key '" + key + "' in '" +
                      where + "'");
  }
  return *it;
}

inline Vector parse_vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError("config: '" + where + "' must be a non-empty array");
  }
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ConfigError("config: '" + where + "' must contain numbers");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

// Scalars, flat arrays (column vectors), and nested arrays (matrices).
inline Matrix parse_matrix(const Json& j, const std::string& where) {
  if (j.is_number()) {
    Matrix m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (j.is_array() && !j.empty() && j[0].is_number()) {
    const Vector v = parse_vector(j, where);
    return v;
  }
  if (j.is_array() && !j.empty() && j[0].is_array()) {
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!j[r].is_array() || j[r].size() != cols) {
        throw ConfigError("config: ragged matrix in '" + where + "'");
      }
      for (std::size_t c = 0; c < cols; ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            j[r][c].get<double>();
      }
    }
    return m;
  }
  throw ConfigError("config: '" + where +
                    "' must be a number, array, or array of arrays");
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline DeterministicInput parse_det_input(const Json& j, int control_dim) {
  check_keys(j, "steering.det_input", {"kind", "value", "values"});
  const std::string kind =
      require(j, "steering.det_input", "kind").get<std::string>();
  if (kind == "zero") return DeterministicInput::zero(control_dim);
  if (kind == "constant") {
    return DeterministicInput::constant(
        parse_vector(require(j, "steering.det_input", "value"),
                     "steering.det_input.value"));
  }
  if (kind == "table") {
    const Json& rows = require(j, "steering.det_input", "values");
    if (!rows.is_array() || rows.empty()) {
      throw ConfigError("config: det_input.values must be a non-empty array");
    }
    std::vector<Vector> values;
    for (const auto& row : rows) {
      values.push_back(parse_vector(row, "steering.det_input.values"));
    }
    return DeterministicInput::table(std::move(values));
  }
  throw ConfigError("config: det_input.kind must be zero|constant|table");
}

inline Json det_input_to_json(const DeterministicInput& u) {
  Json j;
  switch (u.kind()) {
    case DeterministicInput::Kind::kZero:
      j["kind"] = "zero";
      break;
    case DeterministicInput::Kind::kConstant:
      j["kind"] = "constant";
      j["value"] = vector_to_json(u.constant_value());
      break;
    case DeterministicInput::Kind::kTable: {
      j["kind"] = "table";
      Json rows = Json::array();
      for (const auto& v : u.table_values()) rows.push_back(vector_to_json(v));
      j["values"] = rows;
      break;
    }
  }
  return j;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& root) {
  detail::check_keys(root, "<root>",
                     {"system", "horizon", "steering", "training",
                      "evaluation", "io"});
  RunConfig out;
  ExperimentConfig& cfg = out.experiment;

  const Json& system = detail::require(root, "<root>", "system");
  detail::check_keys(system, "system", {"name", "params", "epsilon"});
  cfg.system_name = detail::require(system, "system", "name").get<std::string>();
  cfg.epsilon = detail::require(system, "system", "epsilon").get<double>();
  if (system.contains("params")) {
    for (const auto& [key, value] : system["params"].items()) {
      cfg.system_params[key] =
          detail::parse_matrix(value, "system.params." + key);
    }
  }

  const Json& horizon = detail::require(root, "<root>", "horizon");
  detail::check_keys(horizon, "horizon", {"T", "dt"});
  cfg.horizon = detail::require(horizon, "horizon", "T").get<double>();
  cfg.dt = detail::require(horizon, "horizon", "dt").get<double>();

  const Json& steering = detail::require(root, "<root>", "steering");
  detail::check_keys(steering, "steering", {"x0", "xf", "sigma", "det_input"});
  cfg.x0 = detail::parse_vector(detail::require(steering, "steering", "x0"),
                                "steering.x0");
  cfg.x_f = detail::parse_vector(detail::require(steering, "steering", "xf"),
                                 "steering.xf");
  cfg.sigma = steering.value("sigma", 0.0);

  // The control dimension is known only after the system is built.
  const ControlAffineSystem probe = cfg.make_system();
  if (cfg.x0.size() != probe.state_dim || cfg.x_f.size() != probe.state_dim) {
    throw ConfigError("config: x0/xf dimension does not match the system");
  }
  if (steering.contains("det_input")) {
    cfg.det_input =
        detail::parse_det_input(steering["det_input"], probe.control_dim);
    if (cfg.det_input.control_dim() != probe.control_dim) {
      throw ConfigError("config: det_input dimension does not match system");
    }
  } else {
    cfg.det_input = DeterministicInput::zero(probe.control_dim);
  }

  if (root.contains("training")) {
    const Json& training = root["training"];
    detail::check_keys(training, "training",
                       {"N", "iterations", "learning_rate", "k1", "k2",
                        "model", "seed"});
    cfg.train_trajectories = training.value("N", 1000);
    cfg.train.iterations = training.value("iterations", 10000);
    cfg.train.learning_rate = training.value("learning_rate", 1e-3);
    cfg.train.k1_override = training.value("k1", 0);
    cfg.train.k2 = training.value("k2", 32);
    cfg.train.seed = training.value("seed", std::uint64_t{0});
    cfg.train.model_kind =
        model_kind_from_string(training.value("model", std::string("mlp")));
  }

  if (root.contains("evaluation")) {
    const Json& evaluation = root["evaluation"];
    detail::check_keys(evaluation, "evaluation",
                       {"rollouts", "seeds", "controller", "controllers",
                        "wrap_angle", "delta", "synthesis_seed"});
    cfg.rollouts = evaluation.value("rollouts", 1000);
    if (evaluation.contains("seeds")) {
      cfg.seeds.clear();
      for (const auto& s : evaluation["seeds"]) {
        cfg.seeds.push_back(s.get<std::uint64_t>());
      }
    }
    cfg.source = controller_source_from_string(
        evaluation.value("controller", std::string("learned")));
    if (evaluation.contains("controllers")) {
      for (const auto& s : evaluation["controllers"]) {
        out.sweep_controllers.push_back(
            controller_source_from_string(s.get<std::string>()));
      }
    }
    cfg.wrap_angle = evaluation.value("wrap_angle", false);
    out.delta = evaluation.value("delta", -1.0);
    cfg.synthesis_seed = evaluation.value("synthesis_seed", std::uint64_t{1});
  }
  if (out.sweep_controllers.empty()) {
    out.sweep_controllers.push_back(cfg.source);
  }

  if (root.contains("io")) {
    detail::check_keys(root["io"], "io", {"out_dir"});
    out.out_dir = root["io"].value("out_dir", std::string());
  }

  cfg.validate();
  return out;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  Json root;
  try {
    root = Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_run_config(root);
}

inline Json run_config_to_json(const RunConfig& rc) {
  const ExperimentConfig& cfg = rc.experiment;
  Json root;
  root["system"]["name"] = cfg.system_name;
  root["system"]["epsilon"] = cfg.epsilon;
  for (const auto& [key, value] : cfg.system_params) {
    root["system"]["params"][key] = detail::matrix_to_json(value);
  }
  root["horizon"]["T"] = cfg.horizon;
  root["horizon"]["dt"] = cfg.dt;
  root["steering"]["x0"] = detail::vector_to_json(cfg.x0);
  root["steering"]["xf"] = detail::vector_to_json(cfg.x_f);
  root["steering"]["sigma"] = cfg.sigma;
  root["steering"]["det_input"] = detail::det_input_to_json(cfg.det_input);
  root["training"]["N"] = cfg.train_trajectories;
  root["training"]["iterations"] = cfg.train.iterations;
  root["training"]["learning_rate"] = cfg.train.learning_rate;
  root["training"]["k1"] = cfg.train.k1_override;
  root["training"]["k2"] = cfg.train.k2;
  root["training"]["model"] = to_string(cfg.train.model_kind);
  root["training"]["seed"] = cfg.train.seed;
  root["evaluation"]["rollouts"] = cfg.rollouts;
  root["evaluation"]["seeds"] = cfg.seeds;
  root["evaluation"]["controller"] = to_string(cfg.source);
  if (rc.sweep_controllers.size() > 1 ||
      rc.sweep_controllers.front() != cfg.source) {
    Json kinds = Json::array();
    for (const auto k : rc.sweep_controllers) kinds.push_back(to_string(k));
    root["evaluation"]["controllers"] = kinds;
  }
  root["evaluation"]["wrap_angle"] = cfg.wrap_angle;
  if (rc.delta >= 0.0) root["evaluation"]["delta"] = rc.delta;
  root["evaluation"]["synthesis_seed"] = cfg.synthesis_seed;
  if (!rc.out_dir.empty()) root["io"]["out_dir"] = rc.out_dir;
  return root;
}

inline Json metrics_to_json(const MetricsReport& report) {
  Json j;
  j["hash"] = report.hash;
  j["controller"] = report.controller;
  j["dt"] = report.dt;
  j["sigma"] = report.sigma;
  j["with_det_input"] = report.with_det_input;
  j["per_seed_mse"] = report.per_seed_mse;
  j["per_seed_unorm"] = report.per_seed_unorm;
  j["mse_mean"] = report.mse_mean;
  j["mse_min"] = report.mse_min;
  j["mse_max"] = report.mse_max;
  j["unorm_mean"] = report.unorm_mean;
  j["unorm_min"] = report.unorm_min;
  j["unorm_max"] = report.unorm_max;
  j["runtime_seconds"] = report.runtime_seconds;
  j["cell_key"] = report.cell_key;
  return j;
}

// ---------------------------------------------------------------------------
// Controller bundles: manifest.json plus, for learned controllers, a binary
// checkpoint and the loss history. Closed-form controllers are rebuilt from
// the manifest alone.

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kCheckpointName = "model.ckpt";
inline constexpr const char* kLossHistoryName = "loss_history.csv";
inline constexpr const char* kZBatchName = "z_batch.csv";

inline void write_loss_history_csv(const std::vector<double>& losses,
                                   const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "iteration,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    os << i << "," << format_double(losses[i]) << "\n";
  }
}

inline void save_bundle(const std::string& dir, const RunConfig& rc,
                        const SynthesizedController& ctrl,
                        const SynthesisResult* artifacts = nullptr,
                        bool save_z = false) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string kind = ctrl.model->kind();

  Json manifest;
  manifest["format"] = "revsteer-bundle";
  manifest["version"] = 1;
  manifest["controller"] = kind == "zero" ? "open-loop"
                           : kind == "bridge" ? "analytic-bridge"
                                              : kind;
  manifest["config"] = run_config_to_json(rc);
  if (kind == "mlp" || kind == "feature") {
    save_checkpoint(*ctrl.model, ctrl.grid.horizon(),
                    (fs::path(dir) / kCheckpointName).string());
    manifest["files"]["checkpoint"] = kCheckpointName;
  }
  if (artifacts != nullptr) {
    write_loss_history_csv(artifacts->loss_history,
                           (fs::path(dir) / kLossHistoryName).string());
    manifest["files"]["loss_history"] = kLossHistoryName;
    if (save_z) {
      write_trajectory_csv(artifacts->z_batch,
                           (fs::path(dir) / kZBatchName).string());
      manifest["files"]["z_batch"] = kZBatchName;
    }
  }
  std::ofstream os(fs::path(dir) / kManifestName);
  if (!os) throw ConfigError("cannot write manifest in '" + dir + "'");
  os << manifest.dump(2) << "\n";
}

struct LoadedBundle {
  RunConfig config;
  SynthesizedController controller;
  std::string controller_kind;
};

inline LoadedBundle load_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = fs::path(dir) / kManifestName;
  std::ifstream is(manifest_path);
  if (!is) throw ConfigError("cannot open bundle manifest '" +
                             manifest_path.string() + "'");
  Json manifest;
  try {
    manifest = Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError("bundle manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", std::string()) != "revsteer-bundle") {
    throw ConfigError("bundle manifest: unrecognized format");
  }

  RunConfig config = parse_run_config(manifest.at("config"));
  const std::string kind = manifest.at("controller");
  const ExperimentConfig& cfg = config.experiment;
  const ControlAffineSystem sys = cfg.make_system();
  const TimeGrid grid = cfg.make_grid();
  DeterministicInput u = cfg.det_input;
  if (u.control_dim() == 0) u = DeterministicInput::zero(sys.control_dim);

  auto make_controller = [&]() -> SynthesizedController {
    if (kind == "mlp" || kind == "feature") {
      const std::string ckpt =
          manifest.at("files").at("checkpoint").get<std::string>();
      std::shared_ptr<ScoreModel> model =
          load_checkpoint((fs::path(dir) / ckpt).string());
      if (model->state_dim() != sys.state_dim ||
          model->output_dim() != sys.control_dim) {
        throw ConfigError("bundle: checkpoint does not match the system");
      }
      return SynthesizedController{std::move(model), sys, grid, u,
                                   sys.epsilon};
    }
    if (kind == "exact-linear") {
      return make_exact_linear_controller(cfg.make_linear_system(), grid,
                                          cfg.x_f, cfg.sigma, u);
    }
    if (kind == "open-loop") return make_open_loop_controller(sys, grid, u);
    if (kind == "analytic-bridge") {
      return make_analytic_bridge_controller(sys, grid, cfg.x0, cfg.x_f,
                                             cfg.sigma);
    }
    throw ConfigError("bundle: unknown controller kind '" + kind + "'");
  };
  SynthesizedController controller = make_controller();
  return LoadedBundle{std::move(config), std::move(controller), kind};
}

}  // namespace revsteer

#endif  // REVSTEER_CONFIG_IO_HPP_
