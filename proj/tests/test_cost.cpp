#include <catch2/catch.hpp>

#include <cmath>

#include "rcc/cost.hpp"
#include "rcc/generators.hpp"
#include "test_util.hpp"

using namespace rcc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("lambda cap") {
  VectorXd a2(2);
  a2 << 0.0, 2.0;
  CHECK(lambda_cap(CostConstraint(a2, 1.0), 2) == Approx(std::log(2.0)).epsilon(1e-8));

  VectorXd a50 = VectorXd::Zero(50);
  a50.tail(10).setConstant(50.0);
  CHECK(lambda_cap(CostConstraint(a50, 1.0), 50) == Approx(3.912023).margin(1e-5));

  // scaling costs and budget by c scales the cap by 1/c
  VectorXd a_scaled = 3.0 * a2;
  CHECK(lambda_cap(CostConstraint(a_scaled, 3.0), 2) ==
        Approx(lambda_cap(CostConstraint(a2, 1.0), 2) / 3.0).epsilon(1e-12));

  // strict feasibility is mandatory
  VectorXd a_bad(2);
  a_bad << 1.5, 2.0;
  CHECK_THROWS_AS(CostConstraint(a_bad, 1.0), std::invalid_argument);
}

TEST_CASE("g of lambda") {
  MatrixXd q0(3, 3);
  q0 << 0.8, 0.1, 0.1, 0.15, 0.7, 0.15, 0.05, 0.25, 0.7;
  ChannelMatrix q(q0);
  VectorXd a(3);
  a << 0.0, 1.0, 3.0;
  CostConstraint c(a, 1.2);

  // lambda = 0: the tilt vanishes
  CHECK(g_of_lambda(0.0, q, c, 1e-9) ==
        Approx(blahut_arimoto(q, 1e-9).capacity).margin(1e-8));

  // increasing beyond the cap
  const double cap = lambda_cap(c, 3);
  CHECK(g_of_lambda(cap + 2.0, q, c, 1e-9) >= g_of_lambda(cap + 1.0, q, c, 1e-9) - 1e-7);
  double prev = g_of_lambda(cap, q, c, 1e-9);
  for (int i = 1; i <= 6; ++i) {
    const double g = g_of_lambda(cap + i * cap / 6.0, q, c, 1e-9);
    CHECK(g >= prev - 1e-7);
    prev = g;
  }

  // degenerate channel: I = 0 and the max picks the cheapest symbol
  MatrixXd flat(2, 2);
  flat << 0.5, 0.5, 0.5, 0.5;
  VectorXd af(2);
  af << 0.0, 2.0;
  CostConstraint cf(af, 1.0);
  for (double lam : {0.25, 0.5, 1.0}) {
    CHECK(g_of_lambda(lam, ChannelMatrix(flat), cf, 1e-10) == Approx(lam).margin(1e-7));
  }

  // convexity on random triples
  SplitMix64 rng(51);
  for (int rep = 0; rep < 10; ++rep) {
    const double l1 = 2.0 * cap * rng.uniform(), l2 = 2.0 * cap * rng.uniform();
    const double g1 = g_of_lambda(l1, q, c, 1e-10), g2 = g_of_lambda(l2, q, c, 1e-10);
    const double gm = g_of_lambda(0.5 * (l1 + l2), q, c, 1e-10);
    CHECK(gm <= 0.5 * (g1 + g2) + 1e-8);
  }
}

TEST_CASE("non-binding constraint reduces to the unconstrained problem") {
  UncertaintyModel u = gen_bsc(0.2, 0.4);
  VectorXd a(2);
  a << 0.1, 0.2;
  CostConstraint c(a, 0.9);  // a'p <= 0.2 < 0.9 for every p
  SolverConfig cfg;
  cfg.epsilon = 1e-5;
  SolverReport with = solve_with_cost(u, c, cfg);
  SolverReport without = solve(u, cfg);
  CHECK(with.robust_capacity == Approx(without.robust_capacity).margin(1e-4));
  CHECK(*with.lambda_star == Approx(0.0).margin(1e-3));
}

TEST_CASE("cost-constrained BSC against a grid oracle") {
  UncertaintyModel u = gen_bsc(0.15, 0.45);
  VectorXd a(2);
  a << 0.0, 2.0;
  CostConstraint c(a, 0.5);  // forces p_2 <= 0.25
  SolverConfig cfg;
  cfg.epsilon = 1e-5;
  SolverReport rep = solve_with_cost(u, c, cfg);

  double best = -1e9;
  for (int i = 0; i <= 1000; ++i) {
    const double p1 = 0.75 + 0.25 * i / 1000.0;
    VectorXd p(2);
    p << p1, 1.0 - p1;
    double worst = 1e9;
    MatrixXd q;
    for (int k = 0; k <= 400; ++k) {
      VectorXd xi = VectorXd::Constant(1, -1.0 + 2.0 * k / 400.0);
      u.assemble_into(xi, q);
      worst = std::min(worst, detail::mutual_information_raw(p, q));
    }
    best = std::max(best, worst);
  }
  CHECK(rep.robust_capacity == Approx(best).margin(1e-3));
  CHECK(*rep.lambda_star <= lambda_cap(c, 2) + 1e-6);
  // a binding constraint costs capacity
  SolverReport unconstrained = solve(u, cfg);
  CHECK(rep.robust_capacity < unconstrained.robust_capacity);
}

TEST_CASE("cost-constrained random instances") {
  SplitMix64 rng(53);
  for (int rep = 0; rep < 4; ++rep) {
    const int n = 3 + rng.uniform_int(4), m = 3 + rng.uniform_int(4);
    UncertaintyModel u = test_util::random_model(rng, n, m, 1 + rng.uniform_int(2));
    VectorXd a(n);
    for (int i = 0; i < n; ++i) a(i) = rng.uniform(0.0, 3.0);
    a(rng.uniform_int(n)) = 0.0;  // keep min a < b
    const double b = 0.5 + rng.uniform();
    if (a.maxCoeff() <= b) a(0) = b + 1.0;
    CostConstraint c(a, b);
    SolverConfig cfg;
    cfg.epsilon = 1e-4;
    SolverReport with = solve_with_cost(u, c, cfg);
    SolverReport without = solve(u, cfg);

    // the multiplier honors its cap and the constraint can only lose capacity
    CHECK(*with.lambda_star <= lambda_cap(c, n) + 1e-6);
    CHECK(with.robust_capacity <= without.robust_capacity + 2e-4);

    // weak duality of the dualized constraint at a fixed feasible channel
    VectorXd xi = VectorXd::Zero(u.n_directions());
    ChannelMatrix q0 = u.assemble(xi);
    for (double lam : {0.0, 0.3, 1.0}) {
      CHECK(g_of_lambda(lam, q0, c, 1e-8) >= with.robust_capacity - 2e-4);
    }
  }
}
