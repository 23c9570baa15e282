#include <catch2/catch.hpp>

#include <cmath>

#include "rcc/oracles.hpp"
#include "rcc/sets.hpp"
#include "test_util.hpp"

using namespace rcc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd bsc_matrix(double beta) {
  MatrixXd q(2, 2);
  q << 1.0 - beta, beta, beta, 1.0 - beta;
  return q;
}

}  // namespace

TEST_CASE("blahut arimoto fixed channels") {
  BaResult bsc = blahut_arimoto(ChannelMatrix(bsc_matrix(0.3)), 1e-10);
  CHECK(bsc.capacity == Approx(0.0822828785).margin(1e-8));
  CHECK(bsc.p.probs()(0) == Approx(0.5).margin(1e-6));

  MatrixXd eye = MatrixXd::Identity(4, 4);
  BaResult id = blahut_arimoto(ChannelMatrix(eye), 1e-12);
  CHECK(id.capacity == Approx(std::log(4.0)).margin(1e-10));
  for (int n = 0; n < 4; ++n) CHECK(id.p.probs()(n) == Approx(0.25).margin(1e-9));

  MatrixXd flat(3, 3);
  for (int n = 0; n < 3; ++n) flat.row(n) << 0.2, 0.5, 0.3;
  BaResult zero = blahut_arimoto(ChannelMatrix(flat), 1e-12);
  CHECK(zero.capacity == Approx(0.0).margin(1e-12));
  CHECK(zero.p.probs()(0) == Approx(1.0 / 3).margin(1e-9));

  // certificate: the bound pair brackets the returned value
  CHECK(bsc.upper - bsc.lower <= 1e-10);
  CHECK(bsc.capacity <= bsc.upper + 1e-15);
}

TEST_CASE("bsc robust capacity closed form") {
  CHECK(bsc_robust_capacity(BscInterval(0.0, 0.0)) == Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(bsc_robust_capacity(BscInterval(0.15, 0.45)) == Approx(0.0050083668).margin(1e-9));
  CHECK(bsc_robust_capacity(BscInterval(0.15, 0.6)) == Approx(0.0).margin(1e-15));

  // construction normalizes beta_lo > 1/2 through the beta <-> 1-beta symmetry
  BscInterval mirrored(0.7, 0.9);
  CHECK(mirrored.beta_lo() == Approx(0.1));
  CHECK(mirrored.beta_hi() == Approx(0.3));
  CHECK(bsc_robust_capacity(mirrored) == Approx(bsc_robust_capacity(BscInterval(0.1, 0.3))));

  // robust <= capacity of every fixed channel in the interval, equal at beta*
  const BscInterval interval(0.15, 0.45);
  const double robust = bsc_robust_capacity(interval);
  for (int k = 0; k <= 50; ++k) {
    const double beta = 0.15 + 0.3 * k / 50.0;
    const double cap = blahut_arimoto(ChannelMatrix(bsc_matrix(beta)), 1e-10).capacity;
    CHECK(robust <= cap + 1e-8);
  }
  const double cap_at_star = blahut_arimoto(ChannelMatrix(bsc_matrix(0.45)), 1e-10).capacity;
  CHECK(robust == Approx(cap_at_star).margin(1e-8));
}

TEST_CASE("kl symmetric dual") {
  VectorXd q(3);
  q << 0.5, 0.3, 0.2;

  // zero radius pins r to q
  const double h_q = 0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2);
  KlDualResult r0 = kl_symmetric_dual(KlRow(q, 0.0), 1e-10);
  CHECK(r0.value == Approx(std::log(3.0) + h_q).epsilon(1e-12));

  // huge radius lets the row reach uniform: capacity 0
  KlDualResult rinf = kl_symmetric_dual(KlRow(q, 1e6), 1e-10);
  CHECK(rinf.value == Approx(0.0).margin(1e-9));

  // mid radius against the primal brute-force oracle
  KlDualResult rmid = kl_symmetric_dual(KlRow(q, 0.05), 1e-10);
  CHECK(rmid.value == Approx(test_util::kl_primal_oracle(q, 0.05)).margin(1e-5));

  SplitMix64 rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const int m = 2 + rng.uniform_int(4);
    VectorXd qq = test_util::random_interior_simplex(rng, m, 0.05);
    const double rho = 0.002 + 0.2 * rng.uniform();
    KlDualResult res = kl_symmetric_dual(KlRow(qq, rho), 1e-10);
    CHECK(res.value == Approx(test_util::kl_primal_oracle(qq, rho)).margin(1e-5));

    // concavity of the scalar dual objective on the bracket
    const double l1 = 0.1 + rng.uniform(), l2 = l1 + 0.5 + rng.uniform();
    const double fm = detail::kl_dual_objective(0.5 * (l1 + l2), qq, rho);
    const double f1 = detail::kl_dual_objective(l1, qq, rho);
    const double f2 = detail::kl_dual_objective(l2, qq, rho);
    CHECK(fm >= 0.5 * (f1 + f2) - 1e-10);
  }
}

TEST_CASE("weakly symmetric upper bound") {
  // uniform channel: bound collapses to zero
  MatrixXd uni = MatrixXd::Constant(4, 4, 0.25);
  CHECK(upper_bound_weakly_symmetric(ChannelMatrix(uni)) == Approx(0.0).margin(1e-12));

  // identity: log N
  CHECK(upper_bound_weakly_symmetric(ChannelMatrix(MatrixXd::Identity(5, 5))) ==
        Approx(std::log(5.0)).epsilon(1e-12));

  // 2x3 weakly symmetric channel: three independent routes to one number
  MatrixXd ws(2, 3);
  ws << 1.0 / 3, 1.0 / 6, 1.0 / 2, 1.0 / 3, 1.0 / 2, 1.0 / 6;
  const double bound = upper_bound_weakly_symmetric(ChannelMatrix(ws, 1e-9));
  CHECK(bound == Approx(0.0872080240).margin(1e-9));
  const double h_row = -(std::log(1.0 / 3) / 3 + std::log(1.0 / 6) / 6 + std::log(0.5) / 2);
  CHECK(bound == Approx(std::log(3.0) - h_row).margin(1e-12));  // log M - H(row)
  CHECK(bound == Approx(blahut_arimoto(ChannelMatrix(ws, 1e-9), 1e-10).capacity).margin(1e-8));
}

TEST_CASE("dual certificate") {
  MatrixXd ws(2, 3);
  ws << 1.0 / 3, 1.0 / 6, 1.0 / 2, 1.0 / 3, 1.0 / 2, 1.0 / 6;
  ChannelMatrix q(ws, 1e-9);

  // v = log column sums reproduces the weakly symmetric bound
  const VectorXd v = q.entries().colwise().sum().array().log().matrix().transpose();
  CHECK(dual_certificate(q, v) == Approx(upper_bound_weakly_symmetric(q)).margin(1e-12));

  // BSC dual variables from the closed form: u = 1/2 per output
  const double beta_star = 0.45;
  ChannelMatrix bsc(bsc_matrix(beta_star));
  const VectorXd v_bsc = VectorXd::Constant(2, std::log(0.5));
  CHECK(dual_certificate(bsc, v_bsc) ==
        Approx(bsc_robust_capacity(BscInterval(0.15, 0.45))).margin(1e-12));

  // identity with v = 0
  CHECK(dual_certificate(ChannelMatrix(MatrixXd::Identity(2, 2)), VectorXd::Zero(2)) ==
        Approx(std::log(2.0)).epsilon(1e-14));

  CHECK_THROWS_AS(dual_certificate(bsc, VectorXd::Constant(3, 0.0)), std::invalid_argument);
}
