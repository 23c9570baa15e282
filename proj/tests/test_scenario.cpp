#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rcc/scenario.hpp"

using namespace rcc;

namespace {

json bsc_scenario_json() {
  return json::parse(R"({
    "name": "bsc_test",
    "model": {"generator": {"kind": "bsc_interval", "beta_lo": 0.15, "beta_hi": 0.45}},
    "solver": {"epsilon": 1e-05, "seed": 3, "start_p": [0.9, 0.1], "start_xi": [0.0],
               "record_iterates": true},
    "output": {"dir": "out"}
  })");
}

// CSV without the wall_ms column (the only non-reproducible field)
std::string strip_wall(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream cells(line);
    std::string cell;
    int idx = 0;
    while (std::getline(cells, cell, ',')) {
      if (idx != 6) out << cell << ',';
      ++idx;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("scenario parsing") {
  Scenario sc = scenario_from_json(bsc_scenario_json(), "fallback");
  CHECK(sc.name == "bsc_test");
  REQUIRE(sc.generator.has_value());
  CHECK(sc.generator->kind == GeneratorKind::BscInterval);
  CHECK(sc.solver.epsilon == Approx(1e-5));
  CHECK_FALSE(sc.sweep.has_value());

  json missing_model = json::parse(R"({"solver": {}})");
  CHECK_THROWS_AS(scenario_from_json(missing_model, "x"), ConfigError);

  json bad_sweep = bsc_scenario_json();
  bad_sweep["sweep"] = {{"param", "gamma"}, {"values", json::array()}};
  CHECK_THROWS_AS(scenario_from_json(bad_sweep, "x"), ConfigError);

  json bad_solver = bsc_scenario_json();
  bad_solver["solver"]["epsilon"] = -1.0;
  CHECK_THROWS_AS(scenario_from_json(bad_solver, "x"), ConfigError);
}

TEST_CASE("single point scenario run") {
  Scenario sc = scenario_from_json(bsc_scenario_json(), "fallback");
  ScenarioResult res = run_scenario(sc);
  REQUIRE(res.rows.size() == 1);
  const RunRow& row = res.rows[0];
  CHECK(row.robust_capacity == Approx(0.0050083668).margin(1e-4));
  CHECK(row.robust_capacity >= 0.0);
  CHECK(row.robust_capacity <= std::log(2.0));
  CHECK(row.robust_capacity <= row.upper_bound + 1e-9);
  CHECK(row.nominal_capacity == Approx(0.0822828785).margin(1e-6));
  CHECK_FALSE(row.constrained_capacity.has_value());
  CHECK(res.csv.rfind("sweep_param,robust_capacity_nats,nominal_capacity_nats,upper_bound,"
                      "gap,iterations,wall_ms,seed\n", 0) == 0);

  // the evolution trace drifts to the saddle
  const auto& trace = res.reports[0].iterate_trace;
  REQUIRE_FALSE(trace.empty());
  CHECK(std::abs(trace.back().p(0) - 0.5) < std::abs(0.9 - 0.5));
  CHECK(trace.back().xi(0) > 0.9);
}

TEST_CASE("sweep rows are ordered and reproducible") {
  json j = bsc_scenario_json();
  j["sweep"] = {{"param", "beta_hi"}, {"values", {0.25, 0.35, 0.45}}};
  j["solver"]["record_iterates"] = false;
  j["parallelism"] = 2;
  Scenario sc = scenario_from_json(j, "fallback");
  ScenarioResult a = run_scenario(sc);
  ScenarioResult b = run_scenario(sc);
  REQUIRE(a.rows.size() == 3);

  // rows come back in grid order regardless of completion order
  CHECK(a.rows[0].sweep_param == Approx(0.25));
  CHECK(a.rows[2].sweep_param == Approx(0.45));
  // wider interval, smaller worst-case capacity
  CHECK(a.rows[0].robust_capacity > a.rows[1].robust_capacity);
  CHECK(a.rows[1].robust_capacity > a.rows[2].robust_capacity);
  // per-point seeds derive from (seed, index)
  CHECK(a.rows[0].seed != a.rows[1].seed);
  CHECK(a.rows[0].seed == SplitMix64::derive_stream(3, 0));

  // bit-reproducible CSV once the timing column is stripped
  CHECK(strip_wall(a.csv) == strip_wall(b.csv));
}

TEST_CASE("scenario file driver and exit codes") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rcc_scenario_test";
  fs::create_directories(dir);

  const fs::path good = dir / "good.json";
  std::ofstream(good) << bsc_scenario_json().dump(2);
  const std::string out_dir = (dir / "out").string();
  CHECK(run_scenario_file(good.string(), std::nullopt, std::nullopt, std::nullopt, out_dir,
                          false, true, false) == 0);
  CHECK(fs::exists(fs::path(out_dir) / "bsc_test.csv"));
  CHECK(fs::exists(fs::path(out_dir) / "bsc_test_p0.report.json"));

  // malformed file: config error
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run_scenario_file(bad.string(), std::nullopt, std::nullopt, std::nullopt, out_dir,
                          false, false, false) == 2);

  // sweep command on a sweep-less scenario: config error
  CHECK(run_scenario_file(good.string(), std::nullopt, std::nullopt, std::nullopt, out_dir,
                          true, false, false) == 2);

  fs::remove_all(dir);
}
