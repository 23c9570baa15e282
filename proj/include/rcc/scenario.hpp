#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "rcc/generators.hpp"
#include "rcc/json_io.hpp"

namespace rcc {

// Scenario files drive the CLI: a model source (inline or seeded generator),
// solver settings, an optional average-cost constraint, and an optional
// one-parameter sweep. Output is one CSV (a row per grid point) plus one
// solver-report JSON per run. Everything except the wall_ms column is a pure
// function of the file and the seed.

namespace logging {

inline int level() {
  static const int lvl = [] {
    const char* env = std::getenv("RCC_LOG");
    if (!env) return 0;
    const std::string v(env);
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
  }();
  return lvl;
}

template <class... Args>
inline void info(const char* fmt, Args... args) {
  if (level() >= 1) {
    std::fprintf(stderr, "rcc: ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

template <class... Args>
inline void debug(const char* fmt, Args... args) {
  if (level() >= 2) {
    std::fprintf(stderr, "rcc[debug]: ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

}  // namespace logging

enum class GeneratorKind { BscInterval, RandomPower4, NeighborRing };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::BscInterval;
  int n = 2, m = 2, s = 1;
  double gamma = 1.0;
  int w = 0;
  double beta_lo = 0.15, beta_hi = 0.45;
  std::uint64_t seed = 0;
};

// Cost section: explicit vector, or the threshold rule applied to the
// unconstrained solution (penalty on every symbol whose optimal probability
// reaches the threshold).
struct AutoCostSpec {
  double threshold = 0.05;
  double penalty = 50.0;
  double b = 1.0;
};

struct ExplicitCostSpec {
  VectorXd a;
  double b = 1.0;
};

struct SweepSpec {
  std::string param;  // "gamma" | "W" | "beta_hi" | "beta_lo"
  std::vector<double> values;
};

struct Scenario {
  std::string name = "scenario";
  std::optional<GeneratorSpec> generator;
  std::optional<json> inline_model;  // parsed lazily so diagnostics stay attached
  std::optional<std::variant<AutoCostSpec, ExplicitCostSpec>> cost;
  SolverConfig solver;
  std::optional<SweepSpec> sweep;
  int parallelism = 0;  // 0 = hardware concurrency
  std::string out_dir = "out";
};

inline Scenario scenario_from_json(const json& j, const std::string& default_name) {
  Scenario sc;
  sc.name = j.value("name", default_name);
  if (!j.contains("model")) throw ConfigError("scenario: missing field 'model'");
  const json& model = j["model"];
  if (model.contains("generator")) {
    const json& g = model["generator"];
    GeneratorSpec spec;
    const std::string kind = g.value("kind", "");
    if (kind == "bsc_interval")
      spec.kind = GeneratorKind::BscInterval;
    else if (kind == "random_power4")
      spec.kind = GeneratorKind::RandomPower4;
    else if (kind == "neighbor_ring")
      spec.kind = GeneratorKind::NeighborRing;
    else
      throw ConfigError("scenario.model.generator.kind: unknown kind '" + kind + "'");
    spec.n = g.value("N", spec.n);
    spec.m = g.value("M", spec.m);
    spec.s = g.value("S", spec.s);
    spec.gamma = g.value("gamma", spec.gamma);
    spec.w = g.value("W", spec.w);
    spec.beta_lo = g.value("beta_lo", spec.beta_lo);
    spec.beta_hi = g.value("beta_hi", spec.beta_hi);
    spec.seed = g.value("seed", spec.seed);
    sc.generator = spec;
  } else {
    sc.inline_model = model;
  }
  if (j.contains("cost")) {
    const json& c = j["cost"];
    if (c.contains("a")) {
      ExplicitCostSpec e;
      e.a = detail::vector_from_json(c["a"], "cost.a");
      e.b = c.value("b", 1.0);
      sc.cost = e;
    } else {
      AutoCostSpec a;
      a.threshold = c.value("threshold", a.threshold);
      a.penalty = c.value("penalty", a.penalty);
      a.b = c.value("b", a.b);
      sc.cost = a;
    }
  }
  sc.solver = j.contains("solver") ? solver_config_from_json(j["solver"]) : SolverConfig{};
  if (j.contains("sweep")) {
    SweepSpec sw;
    sw.param = j["sweep"].value("param", "");
    if (!j["sweep"].contains("values"))
      throw ConfigError("scenario.sweep: missing field 'values'");
    for (const auto& v : j["sweep"]["values"]) sw.values.push_back(v.get<double>());
    if (sw.values.empty()) throw ConfigError("scenario.sweep.values: empty grid");
    sc.sweep = sw;
  }
  sc.parallelism = j.value("parallelism", 0);
  if (j.contains("output")) sc.out_dir = j["output"].value("dir", sc.out_dir);
  return sc;
}

struct RunRow {
  double sweep_param = 0.0;
  double robust_capacity = 0.0;
  double nominal_capacity = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> constrained_capacity;
  std::optional<double> constrained_gap;
};

struct ScenarioResult {
  std::vector<RunRow> rows;
  std::vector<SolverReport> reports;
  std::vector<std::optional<SolverReport>> cost_reports;
  std::string csv;
  std::string csv_path;
};

namespace detail {

inline GeneratorSpec apply_sweep_value(GeneratorSpec spec, const std::string& param, double v) {
  if (param == "gamma")
    spec.gamma = v;
  else if (param == "W")
    spec.w = static_cast<int>(v);
  else if (param == "beta_hi")
    spec.beta_hi = v;
  else if (param == "beta_lo")
    spec.beta_lo = v;
  else
    throw ConfigError("scenario.sweep.param: unknown parameter '" + param + "'");
  return spec;
}

inline UncertaintyModel build_model(const Scenario& sc, const GeneratorSpec* spec) {
  if (spec) {
    switch (spec->kind) {
      case GeneratorKind::BscInterval:
        return gen_bsc(spec->beta_lo, spec->beta_hi);
      case GeneratorKind::RandomPower4:
        // Model only; the auto-cost rule reuses the unconstrained solve the
        // scenario driver runs anyway.
        return gen_power4_model(spec->n, spec->m, spec->s, spec->gamma, spec->seed);
      case GeneratorKind::NeighborRing:
        return gen_neighbor_ring(spec->n, spec->w);
    }
    throw std::logic_error("build_model: unknown generator kind");
  }
  return model_from_json(*sc.inline_model);
}

struct PointOutcome {
  RunRow row;
  SolverReport report;
  std::optional<SolverReport> cost_report;
};

inline PointOutcome run_point(const Scenario& sc, std::size_t index, double sweep_value,
                              bool has_sweep) {
  const auto t0 = std::chrono::steady_clock::now();
  GeneratorSpec spec;
  const GeneratorSpec* spec_ptr = nullptr;
  if (sc.generator) {
    spec = has_sweep ? apply_sweep_value(*sc.generator, sc.sweep->param, sweep_value)
                     : *sc.generator;
    spec_ptr = &spec;
  } else if (has_sweep) {
    throw ConfigError("scenario.sweep: sweeping requires a generator model");
  }
  SolverConfig cfg = sc.solver;
  cfg.seed = SplitMix64::derive_stream(sc.solver.seed, index);

  std::optional<UncertaintyModel> model;
  model.emplace(build_model(sc, spec_ptr));

  logging::debug("point %zu: model %dx%d S=%d tau=%g", index, model->n_inputs(),
                 model->n_outputs(), model->n_directions(), model->tau());
  SolverReport rep = solve(*model, cfg);
  logging::info("point %zu: robust=%.6f gap=%.2e iters=%d (%s)", index, rep.robust_capacity,
                rep.final_gap, rep.iterations, termination_name(rep.termination));

  PointOutcome out{RunRow{}, std::move(rep), std::nullopt};
  out.row.sweep_param = sweep_value;
  out.row.seed = cfg.seed;
  out.row.robust_capacity = out.report.robust_capacity;
  out.row.upper_bound = out.report.upper_bound;
  out.row.gap = out.report.final_gap;
  out.row.iterations = out.report.iterations;
  out.row.nominal_capacity = blahut_arimoto(model->nominal(), 1e-8).capacity;

  if (sc.cost) {
    std::optional<CostConstraint> constraint;
    if (std::holds_alternative<ExplicitCostSpec>(*sc.cost)) {
      const auto& e = std::get<ExplicitCostSpec>(*sc.cost);
      constraint.emplace(e.a, e.b);
    } else {
      const auto& a = std::get<AutoCostSpec>(*sc.cost);
      VectorXd cost_vec = VectorXd::Zero(model->n_inputs());
      for (int n = 0; n < model->n_inputs(); ++n)
        if (out.report.ergodic.p(n) >= a.threshold) cost_vec(n) = a.penalty;
      constraint.emplace(cost_vec, a.b);
    }
    SolverReport crep = solve_with_cost(*model, *constraint, cfg);
    logging::info("point %zu: constrained=%.6f gap=%.2e iters=%d", index,
                  crep.robust_capacity, crep.final_gap, crep.iterations);
    out.row.constrained_capacity = crep.robust_capacity;
    out.row.constrained_gap = crep.final_gap;
    out.cost_report = std::move(crep);
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

inline ScenarioResult run_scenario(const Scenario& sc) {
  const bool has_sweep = sc.sweep.has_value();
  std::vector<double> grid = has_sweep ? sc.sweep->values : std::vector<double>{0.0};
  const std::size_t n_points = grid.size();

  std::vector<std::optional<detail::PointOutcome>> outcomes(n_points);
  std::vector<std::exception_ptr> errors(n_points);
  unsigned n_workers = sc.parallelism > 0 ? static_cast<unsigned>(sc.parallelism)
                                          : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(n_points));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n_points; i = next.fetch_add(1)) {
      try {
        outcomes[i] = detail::run_point(sc, i, grid[i], has_sweep);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  ScenarioResult result;
  const bool with_cost = sc.cost.has_value();
  std::string csv =
      "sweep_param,robust_capacity_nats,nominal_capacity_nats,upper_bound,gap,iterations,"
      "wall_ms,seed";
  if (with_cost) csv += ",constrained_capacity_nats,constrained_gap";
  csv += "\n";
  for (std::size_t i = 0; i < n_points; ++i) {
    detail::PointOutcome& o = *outcomes[i];
    using detail::format_double;
    csv += format_double(o.row.sweep_param) + "," + format_double(o.row.robust_capacity) +
           "," + format_double(o.row.nominal_capacity) + "," +
           format_double(o.row.upper_bound) + "," + format_double(o.row.gap) + "," +
           std::to_string(o.row.iterations) + "," + format_double(o.row.wall_ms) + "," +
           std::to_string(o.row.seed);
    if (with_cost) {
      csv += ",";
      csv += o.row.constrained_capacity ? format_double(*o.row.constrained_capacity) : "";
      csv += ",";
      csv += o.row.constrained_gap ? format_double(*o.row.constrained_gap) : "";
    }
    csv += "\n";
    result.rows.push_back(o.row);
    result.reports.push_back(std::move(o.report));
    result.cost_reports.push_back(std::move(o.cost_report));
  }
  result.csv = std::move(csv);
  return result;
}

// File-level driver with the CLI's exit-code contract: 0 success, 2 config
// error, 3 solver failure. Writes <out>/<name>.csv and per-point report JSON.
inline int run_scenario_file(const std::string& path, const std::optional<double>& epsilon,
                             const std::optional<int>& max_iters,
                             const std::optional<std::uint64_t>& seed,
                             const std::optional<std::string>& out_dir_override,
                             bool require_sweep, bool forbid_sweep, bool bits) {
  Scenario sc;
  try {
    const json j = detail::load_json_file(path);
    sc = scenario_from_json(j, std::filesystem::path(path).stem().string());
    if (epsilon) sc.solver.epsilon = *epsilon;
    if (max_iters) sc.solver.max_iters = *max_iters;
    if (seed) sc.solver.seed = *seed;
    if (out_dir_override) sc.out_dir = *out_dir_override;
    sc.solver.validate();
    if (require_sweep && !sc.sweep) throw ConfigError(path + ": scenario has no sweep section");
    if (forbid_sweep && sc.sweep)
      throw ConfigError(path + ": scenario has a sweep section; use the sweep command");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rcc: config error: %s\n", e.what());
    return 2;
  }
  try {
    ScenarioResult result = run_scenario(sc);
    std::filesystem::create_directories(sc.out_dir);
    const std::string csv_path = sc.out_dir + "/" + sc.name + ".csv";
    std::ofstream csv(csv_path);
    csv << result.csv;
    csv.close();
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
      std::ofstream rep(sc.out_dir + "/" + sc.name + "_p" + std::to_string(i) +
                        ".report.json");
      rep << report_to_json(result.reports[i]).dump(2) << "\n";
      if (result.cost_reports[i]) {
        std::ofstream crep(sc.out_dir + "/" + sc.name + "_p" + std::to_string(i) +
                           "_cost.report.json");
        crep << report_to_json(*result.cost_reports[i]).dump(2) << "\n";
      }
    }
    const double unit = bits ? 1.0 / std::log(2.0) : 1.0;
    const char* unit_name = bits ? "bits" : "nats";
    for (const auto& row : result.rows) {
      std::printf("param=%g robust=%.6f %s (nominal %.6f, bound %.6f, gap %.2e)",
                  row.sweep_param, row.robust_capacity * unit, unit_name,
                  row.nominal_capacity * unit, row.upper_bound * unit, row.gap);
      if (row.constrained_capacity)
        std::printf(" constrained=%.6f %s", *row.constrained_capacity * unit, unit_name);
      std::printf("\n");
    }
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "rcc: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rcc: solver failure: %s\n", e.what());
    return 3;
  }
}

}  // namespace rcc
