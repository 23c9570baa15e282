#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rcc/cost.hpp"
#include "rcc/rng.hpp"
#include "rcc/solver.hpp"

namespace rcc {

// Seeded builders for the three benchmark families. Everything is a pure
// function of its arguments, so a scenario file plus a seed pins the instance
// bit for bit.

// Binary symmetric channel with crossover probability in [beta_lo, beta_hi]:
//   Q(xi) = Q0 + xi * Q1, xi in [-1, 1],
// nominal at the interval midpoint, direction carrying the half-width.
inline UncertaintyModel gen_bsc(double beta_lo, double beta_hi) {
  if (!(0.0 < beta_lo && beta_lo <= beta_hi && beta_hi < 1.0))
    throw std::invalid_argument("gen_bsc: need 0 < beta_lo <= beta_hi < 1");
  const double mid = 0.5 * (beta_lo + beta_hi);
  const double half = 0.5 * (beta_hi - beta_lo);
  MatrixXd q0(2, 2), q1(2, 2);
  q0 << 1.0 - mid, mid, mid, 1.0 - mid;
  q1 << -half, half, half, -half;
  PerturbationSet set{SetKind::InfNormBall, 1, 1.0};
  return UncertaintyModel(ChannelMatrix(q0), {q1}, set);
}

struct Power4Instance {
  UncertaintyModel model;
  CostConstraint cost;
  SolverReport base_report;  // unconstrained solve used to build the cost vector
};

// Random dense channel: W_nm ~ U([1, 6.7]) entrywise, rows of W^4 normalized
// (keeps every entry of Q0 at 1e-5 or above and sharpens the per-row
// dominant entries). Each row n draws an owner s_n uniformly from {1..S}; the
// owner's direction matrix gets row n equal to Gamma*(1/M - Q0_n.), every
// other direction has that row zero, so any xi in the box-cap-ball set keeps
// Q(xi) row-stochastic and pulls owned rows toward uniform.
inline UncertaintyModel gen_power4_model(int N, int M, int S, double Gamma,
                                         std::uint64_t seed) {
  if (N < 2 || M < 2 || S < 1) throw std::invalid_argument("gen_power4_model: bad dimensions");
  if (!(Gamma >= 0.0 && Gamma <= 1.0))
    throw std::invalid_argument("gen_power4_model: Gamma must lie in [0,1]");
  SplitMix64 rng(seed);
  MatrixXd q0(N, M);
  for (int n = 0; n < N; ++n) {
    double row_sum = 0.0;
    for (int m = 0; m < M; ++m) {
      const double w = rng.uniform(1.0, 6.7);
      q0(n, m) = w * w * w * w;
      row_sum += q0(n, m);
    }
    q0.row(n) /= row_sum;
  }
  if (q0.minCoeff() < 1e-5)
    throw std::logic_error("gen_power4_model: entry below 1e-5 cannot happen by construction");
  std::vector<int> owner(N);
  for (int n = 0; n < N; ++n) owner[n] = rng.uniform_int(S);
  std::vector<MatrixXd> dirs(S, MatrixXd::Zero(N, M));
  for (int n = 0; n < N; ++n)
    dirs[owner[n]].row(n) = Gamma * (VectorXd::Constant(M, 1.0 / M).transpose() - q0.row(n));
  PerturbationSet set{SetKind::BoxCapTwoBall, S, 1.0};
  return UncertaintyModel(ChannelMatrix(q0, 1e-9), std::move(dirs), set);
}

// Full benchmark instance: the model plus the cost vector that penalizes (at
// 50, budget 1) the symbols whose unconstrained optimal probability reaches
// 0.05. Runs one unconstrained solve to find that solution.
inline Power4Instance gen_random_power4(int N, int M, int S, double Gamma, std::uint64_t seed,
                                        const SolverConfig& solver_cfg) {
  UncertaintyModel model = gen_power4_model(N, M, S, Gamma, seed);
  SolverReport base = solve(model, solver_cfg);
  VectorXd a = VectorXd::Zero(N);
  for (int n = 0; n < N; ++n)
    if (base.ergodic.p(n) >= 0.05) a(n) = 50.0;
  CostConstraint cost(a, 1.0);
  return Power4Instance{std::move(model), std::move(cost), std::move(base)};
}

// Ring channel hit by one shared uncertainty source: the nominal law sends
// input n to output n with probability 0.92 - (N-5)*tau, to each of the four
// nearest ring neighbors with 0.02 and anywhere else with tau = 1e-5. The
// perturbation moves 0.07*w_n of mass between the diagonal and the four
// neighbors (0.0175 each), with w_n = -1 on the first W rows and +1 on the
// rest, xi scalar in [-1, 1].
inline UncertaintyModel gen_neighbor_ring(int N, int W) {
  if (N <= 4) throw std::invalid_argument("gen_neighbor_ring: need N > 4");
  if (W < 0 || W > N) throw std::invalid_argument("gen_neighbor_ring: need 0 <= W <= N");
  const double tau = 1e-5;
  const double diag = 0.92 - (N - 5) * tau;
  MatrixXd q0 = MatrixXd::Constant(N, N, tau);
  MatrixXd qp = MatrixXd::Zero(N, N);
  for (int n = 0; n < N; ++n) {
    const double w = n < W ? -1.0 : 1.0;
    q0(n, n) = diag;
    qp(n, n) = 0.07 * w;
    for (int off : {-2, -1, 1, 2}) {
      const int m = ((n + off) % N + N) % N;
      q0(n, m) = 0.02;
      qp(n, m) = -0.0175 * w;
    }
  }
  PerturbationSet set{SetKind::InfNormBall, 1, 1.0};
  return UncertaintyModel(ChannelMatrix(q0, 1e-9), {qp}, set);
}

}  // namespace rcc
