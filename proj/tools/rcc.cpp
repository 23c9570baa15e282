// Command-line front end: scenario runners, closed-form oracles and bounds.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rcc/rcc.hpp"

namespace {

double unit_factor(bool bits) { return bits ? 1.0 / std::log(2.0) : 1.0; }
const char* unit_name(bool bits) { return bits ? "bits" : "nats"; }

std::vector<double> parse_comma_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust channel capacity toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  bool bits = false;
  app.add_flag("--bits", bits, "print capacities in bits instead of nats");

  // solve / sweep ------------------------------------------------------------
  std::string scenario_path;
  std::optional<double> epsilon;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  auto add_scenario_flags = [&](CLI::App* cmd) {
    cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
    cmd->add_option("--epsilon", [&epsilon](const CLI::results_t& r) {
      epsilon = std::stod(r[0]);
      return true;
    }, "target duality gap (nats)");
    cmd->add_option("--max-iters", [&max_iters](const CLI::results_t& r) {
      max_iters = std::stoi(r[0]);
      return true;
    }, "outer iteration cap");
    cmd->add_option("--seed", [&seed](const CLI::results_t& r) {
      seed = static_cast<std::uint64_t>(std::stoull(r[0]));
      return true;
    }, "solver seed");
    cmd->add_option("--out", [&out_dir](const CLI::results_t& r) {
      out_dir = r[0];
      return true;
    }, "output directory");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "run a single scenario");
  add_scenario_flags(solve_cmd);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a scenario's parameter sweep");
  add_scenario_flags(sweep_cmd);

  // bsc ----------------------------------------------------------------------
  double bsc_lo = 0.0, bsc_hi = 0.0;
  CLI::App* bsc_cmd = app.add_subcommand("bsc", "closed-form robust BSC capacity");
  bsc_cmd->add_option("--lo", bsc_lo, "lower crossover probability")->required();
  bsc_cmd->add_option("--hi", bsc_hi, "upper crossover probability")->required();

  // kl -----------------------------------------------------------------------
  std::string kl_q;
  double kl_rho = 0.0, kl_tol = 1e-9;
  CLI::App* kl_cmd =
      app.add_subcommand("kl", "weakly symmetric channel under KL row uncertainty");
  kl_cmd->add_option("--q", kl_q, "reference row, comma separated")->required();
  kl_cmd->add_option("--rho", kl_rho, "KL radius")->required();
  kl_cmd->add_option("--tol", kl_tol, "tolerance on the dual variable");

  // bounds ---------------------------------------------------------------------
  std::string bounds_path;
  int bounds_samples = 64;
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "duality-based upper bounds for a model");
  bounds_cmd->add_option("model", bounds_path, "model JSON file")->required();
  bounds_cmd->add_option("--samples", bounds_samples, "feasible channels to sample");

  // ba -----------------------------------------------------------------------
  std::string ba_path;
  double ba_tol = 1e-8;
  CLI::App* ba_cmd = app.add_subcommand("ba", "deterministic capacity via Blahut-Arimoto");
  ba_cmd->add_option("channel", ba_path, "channel JSON file")->required();
  ba_cmd->add_option("--tol", ba_tol, "capacity tolerance (nats)");

  CLI11_PARSE(app, argc, argv);

  const double unit = unit_factor(bits);

  try {
    if (*solve_cmd)
      return rcc::run_scenario_file(scenario_path, epsilon, max_iters, seed, out_dir,
                                    /*require_sweep=*/false, /*forbid_sweep=*/true, bits);
    if (*sweep_cmd)
      return rcc::run_scenario_file(scenario_path, epsilon, max_iters, seed, out_dir,
                                    /*require_sweep=*/true, /*forbid_sweep=*/false, bits);
    if (*bsc_cmd) {
      const rcc::BscInterval interval(bsc_lo, bsc_hi);
      const double cap = rcc::bsc_robust_capacity(interval);
      std::printf("robust_capacity %.9f %s (beta* = %g)\n", cap * unit, unit_name(bits),
                  std::min(0.5, interval.beta_hi()));
      return 0;
    }
    if (*kl_cmd) {
      const std::vector<double> q_list = parse_comma_list(kl_q);
      Eigen::VectorXd q(q_list.size());
      for (std::size_t i = 0; i < q_list.size(); ++i) q(i) = q_list[i];
      const rcc::KlDualResult res = rcc::kl_symmetric_dual(rcc::KlRow(q, kl_rho), kl_tol);
      std::printf("robust_capacity %.9f %s (lambda* = %g)\n", res.value * unit,
                  unit_name(bits), res.lambda_star);
      return 0;
    }
    if (*bounds_cmd) {
      const rcc::json j = rcc::detail::load_json_file(bounds_path);
      const rcc::UncertaintyModel model = rcc::model_from_json(j);
      const double nominal = rcc::blahut_arimoto(model.nominal(), 1e-8).capacity;
      double best = rcc::upper_bound_weakly_symmetric(model.nominal());
      rcc::SplitMix64 rng(12345);
      for (int k = 0; k < bounds_samples; ++k) {
        Eigen::VectorXd xi(model.n_directions());
        for (int s = 0; s < model.n_directions(); ++s) xi(s) = rng.uniform(-1.0, 1.0);
        xi = rcc::project_to_set(model.set(), xi);
        best = std::min(best, rcc::upper_bound_weakly_symmetric(model.assemble(xi)));
      }
      const Eigen::VectorXd v =
          model.nominal().entries().colwise().sum().array().log().matrix().transpose();
      std::printf("nominal_capacity %.9f %s\n", nominal * unit, unit_name(bits));
      std::printf("upper_bound_nominal %.9f %s\n",
                  rcc::upper_bound_weakly_symmetric(model.nominal()) * unit, unit_name(bits));
      std::printf("upper_bound_sampled_min %.9f %s (%d samples)\n", best * unit,
                  unit_name(bits), bounds_samples);
      std::printf("dual_certificate_colsum %.9f %s\n",
                  rcc::dual_certificate(model.nominal(), v) * unit, unit_name(bits));
      return 0;
    }
    if (*ba_cmd) {
      const rcc::json j = rcc::detail::load_json_file(ba_path);
      const rcc::ChannelMatrix q = rcc::channel_from_json(j);
      const rcc::BaResult res = rcc::blahut_arimoto(q, ba_tol);
      std::printf("capacity %.9f %s (%d iterations)\n", res.capacity * unit, unit_name(bits),
                  res.iterations);
      std::printf("p =");
      for (int n = 0; n < res.p.size(); ++n) std::printf(" %.6f", res.p.probs()(n));
      std::printf("\n");
      return 0;
    }
  } catch (const rcc::ConfigError& e) {
    std::fprintf(stderr, "rcc: config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "rcc: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rcc: error: %s\n", e.what());
    return 3;
  }
  return 1;
}
