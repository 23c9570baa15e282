#pragma once

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcc/channel.hpp"
#include "rcc/cost.hpp"
#include "rcc/solver.hpp"

namespace rcc {

using nlohmann::json;

// Thrown on malformed scenario/model files; message carries the location
// (line for syntax errors, field path for invariant violations).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line number for the diagnostic
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

inline MatrixXd matrix_from_json(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty())
    throw ConfigError(where + ": expected a non-empty array of rows");
  const std::size_t n_cols = rows[0].size();
  MatrixXd m(rows.size(), n_cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != n_cols)
      throw ConfigError(where + "[" + std::to_string(r) + "]: ragged or non-array row");
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (!rows[r][c].is_number())
        throw ConfigError(where + "[" + std::to_string(r) + "][" + std::to_string(c) +
                          "]: not a number");
      m(r, c) = rows[r][c].get<double>();
    }
  }
  return m;
}

inline VectorXd vector_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError(where + ": expected a non-empty numeric array");
  VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw ConfigError(where + "[" + std::to_string(i) + "]: not a number");
    v(i) = arr[i].get<double>();
  }
  return v;
}

inline json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace detail

inline SetKind set_kind_from_name(const std::string& name) {
  if (name == "inf_ball") return SetKind::InfNormBall;
  if (name == "two_ball") return SetKind::TwoNormBall;
  if (name == "simplex") return SetKind::Simplex;
  if (name == "box_cap_two_ball") return SetKind::BoxCapTwoBall;
  throw ConfigError("set.kind: unknown kind '" + name +
                    "' (expected inf_ball | two_ball | simplex | box_cap_two_ball)");
}

// Model document: {"nominal": [[...]], "directions": [[[...]], ...],
//                  "set": {"kind": "...", "gamma": g}}
inline UncertaintyModel model_from_json(const json& j) {
  if (!j.contains("nominal")) throw ConfigError("model: missing field 'nominal'");
  if (!j.contains("directions")) throw ConfigError("model: missing field 'directions'");
  if (!j.contains("set")) throw ConfigError("model: missing field 'set'");
  MatrixXd nominal = detail::matrix_from_json(j["nominal"], "model.nominal");
  std::vector<MatrixXd> dirs;
  if (!j["directions"].is_array())
    throw ConfigError("model.directions: expected an array of matrices");
  for (std::size_t s = 0; s < j["directions"].size(); ++s)
    dirs.push_back(detail::matrix_from_json(j["directions"][s],
                                            "model.directions[" + std::to_string(s) + "]"));
  const json& set_j = j["set"];
  if (!set_j.contains("kind")) throw ConfigError("model.set: missing field 'kind'");
  PerturbationSet set;
  set.kind = set_kind_from_name(set_j["kind"].get<std::string>());
  set.dim = static_cast<int>(dirs.size());
  set.gamma = set_j.value("gamma", 1.0);
  try {
    return UncertaintyModel(ChannelMatrix(std::move(nominal)), std::move(dirs), set);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

inline json model_to_json(const UncertaintyModel& u) {
  json j;
  j["nominal"] = detail::matrix_to_json(u.nominal().entries());
  json dirs = json::array();
  for (const auto& d : u.directions()) dirs.push_back(detail::matrix_to_json(d));
  j["directions"] = dirs;
  j["set"] = {{"kind", set_kind_name(u.set().kind)}, {"gamma", u.set().gamma}};
  return j;
}

// Channel document: either {"matrix": [[...]]} or a model document, whose
// nominal matrix is taken.
inline ChannelMatrix channel_from_json(const json& j) {
  try {
    if (j.contains("matrix"))
      return ChannelMatrix(detail::matrix_from_json(j["matrix"], "matrix"), 1e-9);
    if (j.contains("nominal"))
      return ChannelMatrix(detail::matrix_from_json(j["nominal"], "nominal"), 1e-9);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("channel: ") + e.what());
  }
  throw ConfigError("channel: expected a 'matrix' or 'nominal' field");
}

inline SolverConfig solver_config_from_json(const json& j) {
  SolverConfig cfg;
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  cfg.gamma0 = j.value("gamma0", cfg.gamma0);
  cfg.gamma_growth = j.value("gamma_growth", cfg.gamma_growth);
  cfg.delta = j.value("delta", cfg.delta);
  if (j.contains("fixed_gamma")) cfg.fixed_gamma = j["fixed_gamma"].get<double>();
  cfg.gap_check_every = j.value("gap_check_every", cfg.gap_check_every);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.tau_floor = j.value("tau_floor", cfg.tau_floor);
  cfg.record_iterates = j.value("record_iterates", cfg.record_iterates);
  cfg.debug_checks = j.value("debug_checks", cfg.debug_checks);
  if (j.contains("start_xi")) cfg.start_xi = detail::vector_from_json(j["start_xi"], "solver.start_xi");
  if (j.contains("start_p")) cfg.start_p = detail::vector_from_json(j["start_p"], "solver.start_p");
  cfg.start_lambda = j.value("start_lambda", cfg.start_lambda);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  return cfg;
}

inline json report_to_json(const SolverReport& r) {
  json j;
  j["robust_capacity_nats"] = r.robust_capacity;
  j["upper_bound"] = r.upper_bound;
  j["final_gap"] = r.final_gap;
  j["best_gap"] = r.best_gap;
  j["gap_is_heuristic"] = r.gap_is_heuristic;
  j["lower_leg_stationarity"] = r.lower_leg_stationarity;
  j["termination"] = termination_name(r.termination);
  j["iterations"] = r.iterations;
  j["seed"] = r.seed;
  j["ergodic"] = {{"xi", detail::vector_to_json(r.ergodic.xi)},
                  {"p", detail::vector_to_json(r.ergodic.p)}};
  if (r.ergodic.lambda) j["ergodic"]["lambda"] = *r.ergodic.lambda;
  if (r.lambda_star) j["lambda_star"] = *r.lambda_star;
  j["worst_xi"] = detail::vector_to_json(r.worst_xi);
  json gaps = json::array();
  for (const auto& [it, g] : r.gap_trace) gaps.push_back({it, g});
  j["gap_trace"] = gaps;
  j["gamma_trace"] = r.gamma_trace;
  j["inner_iter_counts"] = r.inner_iter_counts;
  if (!r.iterate_trace.empty()) {
    json trace = json::array();
    for (const auto& s : r.iterate_trace) {
      json e;
      e["iteration"] = s.iteration;
      e["xi"] = detail::vector_to_json(s.xi);
      e["p"] = detail::vector_to_json(s.p);
      if (r.ergodic.lambda) e["lambda"] = s.lambda;
      trace.push_back(e);
    }
    j["iterate_trace"] = trace;
  }
  return j;
}

}  // namespace rcc
