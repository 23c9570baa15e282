#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>

#include "rcc/generators.hpp"
#include "rcc/solver.hpp"
#include "test_util.hpp"

using namespace rcc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("step constants") {
  UncertaintyModel bsc = gen_bsc(0.15, 0.45);
  StepConstants sc = step_constants(bsc, 1e-3);
  CHECK(sc.gamma1 > 0.0);
  CHECK(sc.gamma2 > 0.0);
  CHECK(std::isfinite(sc.gamma_max));
  CHECK(sc.gamma_max > 0.0);
  // normalization identity of the weight formulas
  CHECK(sc.gamma1 * sc.theta1 + sc.gamma2 * sc.theta2 == Approx(1.0).margin(1e-12));

  // zero directions collapse the coupled Lipschitz constants and grow the step
  UncertaintyModel zero(bsc.nominal(), {MatrixXd::Zero(2, 2)},
                        PerturbationSet{SetKind::InfNormBall, 1, 1.0});
  StepConstants sz = step_constants(zero, 1e-3);
  CHECK(sz.L11 == 0.0);
  CHECK(sz.L12 == 0.0);
  CHECK(sz.L21 == 0.0);
  CHECK(sz.gamma_max > sc.gamma_max);
}

TEST_CASE("solver reaches the BSC saddle point") {
  UncertaintyModel u = gen_bsc(0.15, 0.45);
  SolverConfig cfg;
  cfg.epsilon = 1e-6;
  VectorXd p0(2), x0(1);
  p0 << 0.9, 0.1;
  x0 << 0.0;
  cfg.start_p = p0;
  cfg.start_xi = x0;
  SolverReport rep = solve(u, cfg);
  CHECK(rep.termination == Termination::GapReached);
  CHECK(rep.robust_capacity == Approx(0.0050083668).margin(1e-5));
  CHECK(rep.ergodic.p(0) == Approx(0.5).margin(1e-2));
  CHECK(rep.ergodic.xi(0) == Approx(1.0).margin(1e-2));
  CHECK(rep.worst_xi(0) == Approx(1.0).margin(1e-6));
  // Sion bracket: lower leg <= reported <= upper leg
  CHECK(rep.robust_capacity <= rep.upper_bound + 1e-12);
}

TEST_CASE("zero uncertainty reduces to Blahut-Arimoto") {
  SplitMix64 rng(31);
  for (int rep = 0; rep < 3; ++rep) {
    const int n = 3 + rng.uniform_int(8), m = 3 + rng.uniform_int(8);
    MatrixXd q0 = test_util::random_channel(rng, n, m);
    UncertaintyModel u(ChannelMatrix(q0, 1e-9), {MatrixXd::Zero(n, m)},
                       PerturbationSet{SetKind::InfNormBall, 1, 1.0});
    SolverConfig cfg;
    cfg.epsilon = 5e-5;
    SolverReport r = solve(u, cfg);
    const double ba = blahut_arimoto(u.nominal(), 1e-8).capacity;
    CHECK(r.robust_capacity == Approx(ba).margin(1e-4));
  }
}

TEST_CASE("fixed step from the constants keeps the inner loop at two") {
  UncertaintyModel u = gen_bsc(0.15, 0.45);
  StepConstants sc = step_constants(u, 1e-3);
  SolverConfig cfg;
  cfg.fixed_gamma = sc.gamma_max;
  cfg.max_iters = 1500;
  cfg.epsilon = 1e-12;
  cfg.gap_check_every = 1000000;
  SolverReport rep = solve(u, cfg);
  CHECK(*std::max_element(rep.inner_iter_counts.begin(), rep.inner_iter_counts.end()) <= 2);
}

TEST_CASE("deterministic traces") {
  UncertaintyModel u = gen_power4_model(12, 10, 2, 0.5, 5);
  SolverConfig cfg;
  cfg.epsilon = 1e-5;
  cfg.max_iters = 400;
  SolverReport a = solve(u, cfg), b = solve(u, cfg);
  REQUIRE(a.gap_trace.size() == b.gap_trace.size());
  for (std::size_t i = 0; i < a.gap_trace.size(); ++i) {
    CHECK(a.gap_trace[i].first == b.gap_trace[i].first);
    CHECK(a.gap_trace[i].second == b.gap_trace[i].second);  // bitwise
  }
  REQUIRE(a.gamma_trace.size() == b.gamma_trace.size());
  for (std::size_t i = 0; i < a.gamma_trace.size(); ++i)
    CHECK(a.gamma_trace[i] == b.gamma_trace[i]);
}

TEST_CASE("gap estimate properties") {
  UncertaintyModel u = gen_bsc(0.15, 0.45);

  SECTION("analytic saddle point has (near) zero gap") {
    SaddlePoint z{VectorXd::Constant(1, 1.0), VectorXd::Constant(2, 0.5), std::nullopt};
    GapEstimate ge = gap_estimate(z, u);
    CHECK(ge.gap <= 1e-6);
    CHECK(ge.best_p_value == Approx(0.0050083668).margin(1e-7));
  }

  SECTION("zero uncertainty: gap is the BA slack of p") {
    SplitMix64 rng(41);
    MatrixXd q0 = test_util::random_channel(rng, 4, 4);
    UncertaintyModel z0(ChannelMatrix(q0, 1e-9), {MatrixXd::Zero(4, 4)},
                        PerturbationSet{SetKind::InfNormBall, 1, 1.0});
    VectorXd p = VectorXd::Constant(4, 0.25);
    SaddlePoint z{VectorXd::Zero(1), p, std::nullopt};
    GapEstimate ge = gap_estimate(z, z0);
    const double ba = blahut_arimoto(z0.nominal(), 1e-8).capacity;
    const double phi0 = detail::mutual_information_raw(p, q0);
    CHECK(ge.gap >= -1e-9);
    CHECK(ge.gap == Approx(ba - phi0).margin(1e-6));
  }

  SECTION("solver progress shrinks the gap from a random start") {
    SplitMix64 rng(43);
    UncertaintyModel m = gen_power4_model(15, 12, 3, 0.5, 9);
    for (int trial = 0; trial < 3; ++trial) {
      VectorXd xi(3);
      for (int s = 0; s < 3; ++s) xi(s) = rng.uniform(0.0, 0.5);
      xi = project_to_set(m.set(), xi);
      VectorXd p = test_util::random_interior_simplex(rng, 15);
      GapEstimate before = gap_estimate(SaddlePoint{xi, p, std::nullopt}, m);
      SolverConfig cfg;
      cfg.epsilon = 1e-12;
      cfg.max_iters = 100;
      cfg.gap_check_every = 1000000;
      cfg.start_xi = xi;
      cfg.start_p = p;
      SolverReport rep = solve(m, cfg);
      CHECK(before.gap >= -1e-9);
      CHECK(rep.final_gap < before.gap);
    }
  }
}

TEST_CASE("iterates stay in the domain") {
  UncertaintyModel u = gen_power4_model(10, 8, 2, 0.7, 3);
  SolverConfig cfg;
  cfg.epsilon = 1e-6;
  cfg.max_iters = 300;
  cfg.debug_checks = true;  // throws if any iterate leaves B x simplex
  SolverReport rep = solve(u, cfg);
  CHECK(set_contains(u.set(), rep.ergodic.xi, 1e-9));
  CHECK(rep.ergodic.p.minCoeff() >= -1e-12);
  CHECK(rep.ergodic.p.sum() == Approx(1.0).margin(1e-9));
}

TEST_CASE("ergodic gap envelope O(1/T) on the BSC") {
  UncertaintyModel u = gen_bsc(0.15, 0.45);
  SolverConfig cfg;
  cfg.epsilon = 1e-14;
  cfg.max_iters = 400;
  cfg.gap_check_every = 100;
  VectorXd p0(2), x0(1);
  p0 << 0.9, 0.1;
  x0 << 0.0;
  cfg.start_p = p0;
  cfg.start_xi = x0;
  SolverReport rep = solve(u, cfg);
  double g100 = -1, g200 = -1, g400 = -1;
  for (auto& [t, g] : rep.gap_trace) {
    if (t == 100) g100 = g;
    if (t == 200) g200 = g;
    if (t == 400) g400 = g;
  }
  REQUIRE(g100 >= 0);
  REQUIRE(g200 >= 0);
  REQUIRE(g400 >= 0);
  const double c = 100.0 * g100;
  CHECK(g200 <= 1.25 * c / 200.0);
  CHECK(g400 <= 1.25 * c / 400.0);
}

TEST_CASE("fixed point termination on the symmetric ring") {
  UncertaintyModel u = gen_neighbor_ring(12, 6);
  SolverConfig cfg;
  cfg.epsilon = 0.001;
  SolverReport rep = solve(u, cfg);
  // saddle sits at xi = 0 with the uniform input; the solver should stop
  // immediately via the prox fixed-point rule
  CHECK(rep.termination == Termination::FixedPoint);
  CHECK(rep.ergodic.xi(0) == Approx(0.0).margin(1e-9));
  const double nominal = blahut_arimoto(u.nominal(), 1e-9).capacity;
  CHECK(rep.robust_capacity == Approx(nominal).margin(1e-6));
}

TEST_CASE("solver rejects models below the tau floor") {
  UncertaintyModel u = gen_neighbor_ring(10, 5);  // tau = 1e-5
  SolverConfig cfg;
  cfg.tau_floor = 1e-3;
  CHECK_THROWS_AS(solve(u, cfg), std::invalid_argument);
}
