#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "rcc/channel.hpp"

namespace rcc {

// ---------------------------------------------------------------------------
// Blahut-Arimoto
// ---------------------------------------------------------------------------

struct BaResult {
  double capacity = 0.0;  // certified lower bound, within tol of the true value
  InputDistribution p;
  int iterations = 0;
  double upper = 0.0;  // max_n D_n(p)
  double lower = 0.0;  // log sum_n p_n exp(D_n(p))
};

// Deterministic capacity of Q by the classical alternating updates
//   D_n = sum_m Q_nm log(Q_nm / q_m),   p'_n = p_n exp(D_n) / Z,
// stopping when the Arimoto upper/lower capacity bounds close to tol.
inline BaResult blahut_arimoto(const ChannelMatrix& Q, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("blahut_arimoto: tol must be > 0");
  const int N = Q.n_inputs(), M = Q.n_outputs();
  const MatrixXd& q_mat = Q.entries();
  // sum_m Q_nm log Q_nm with the 0 log 0 = 0 convention, precomputed once;
  // per iteration only the output marginal's logs are needed.
  VectorXd qlogq_row = VectorXd::Zero(N);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m)
      if (q_mat(n, m) > 0.0) qlogq_row(n) += q_mat(n, m) * std::log(q_mat(n, m));
  VectorXd p = VectorXd::Constant(N, 1.0 / N);
  VectorXd d(N), q(M), logq(M);
  const int max_iters = 100000;
  for (int it = 1; it <= max_iters; ++it) {
    q.noalias() = q_mat.transpose() * p;
    // columns with zero marginal carry no mass anywhere; log(q) there is
    // multiplied by Q_nm = 0 and must not poison the product
    for (int m = 0; m < M; ++m) logq(m) = q(m) > 0.0 ? std::log(q(m)) : 0.0;
    d = qlogq_row - q_mat * logq;
    const double upper = d.maxCoeff();
    // log sum p_n exp(d_n), shifted by the max exponent
    double z = 0.0;
    for (int n = 0; n < N; ++n) z += p(n) * std::exp(d(n) - upper);
    const double lower = upper + std::log(z);
    if (upper - lower <= tol) {
      return BaResult{std::max(0.0, lower), InputDistribution(p, 1e-9), it, upper, lower};
    }
    for (int n = 0; n < N; ++n) p(n) *= std::exp(d(n) - upper);
    p /= p.sum();
  }
  throw std::runtime_error("blahut_arimoto: no convergence within 1e5 iterations (gap " +
                           std::to_string(tol) + " not reached)");
}

// ---------------------------------------------------------------------------
// Binary symmetric channel
// ---------------------------------------------------------------------------

// Crossover-probability interval [beta_lo, beta_hi], normalized at
// construction so beta_lo <= 1/2 via the symmetry beta <-> 1 - beta.
class BscInterval {
 public:
  BscInterval(double beta_lo, double beta_hi) : lo_(beta_lo), hi_(beta_hi) {
    if (!(0.0 <= lo_ && lo_ <= hi_ && hi_ <= 1.0))
      throw std::invalid_argument("BscInterval: need 0 <= lo <= hi <= 1");
    if (lo_ > 0.5) {
      const double new_lo = 1.0 - hi_;
      hi_ = 1.0 - lo_;
      lo_ = new_lo;
    }
  }
  double beta_lo() const { return lo_; }
  double beta_hi() const { return hi_; }

 private:
  double lo_, hi_;
};

// Worst-case BSC capacity: log 2 - H(beta*) with beta* = min{1/2, beta_hi}.
inline double bsc_robust_capacity(const BscInterval& i) {
  const double b = std::min(0.5, i.beta_hi());
  double h = 0.0;
  if (b > 0.0) h -= b * std::log(b);
  if (b < 1.0) h -= (1.0 - b) * std::log(1.0 - b);
  return std::log(2.0) - h;
}

// ---------------------------------------------------------------------------
// Weakly symmetric channel with a KL-ball row uncertainty
// ---------------------------------------------------------------------------

// One representative row q of a weakly symmetric channel, KL radius rho, and
// the column-sum convention sum_l Q_lm = n/M.
struct KlRow {
  VectorXd q;
  double rho = 0.0;
  int n = 2;

  KlRow(VectorXd q_in, double rho_in, int n_in = 2) : q(std::move(q_in)), rho(rho_in), n(n_in) {
    if (q.size() < 2) throw std::invalid_argument("KlRow: need at least two outputs");
    if (q.minCoeff() <= 0.0) throw std::invalid_argument("KlRow: q must be strictly positive");
    if (std::abs(q.sum() - 1.0) > 1e-9) throw std::invalid_argument("KlRow: q must sum to 1");
    if (rho < 0.0) throw std::invalid_argument("KlRow: rho must be >= 0");
    if (n < 1) throw std::invalid_argument("KlRow: n must be >= 1");
  }
};

struct KlDualResult {
  double value = 0.0;        // robust capacity of the weakly symmetric channel, nats
  double lambda_star = 0.0;  // maximizer of the scalar dual
};

namespace detail {

// Scalar dual objective of min { sum r log r : KL(r||q) <= rho, r in simplex },
// with the log M constant omitted:
//   F(lambda) = -lambda*rho - (1+lambda) * log sum_m q_m^{lambda/(1+lambda)}.
// (Eliminating the simplex multiplier from the Lagrangian collapses the inner
// minimum to this expression; the minimizing row is r ~ q^{lambda/(1+lambda)}.)
inline double kl_dual_objective(double lambda, const VectorXd& q, double rho) {
  const double t = lambda / (1.0 + lambda);
  double max_e = -std::numeric_limits<double>::infinity();
  VectorXd e(q.size());
  for (int m = 0; m < q.size(); ++m) {
    e(m) = t * std::log(q(m));
    max_e = std::max(max_e, e(m));
  }
  double z = 0.0;
  for (int m = 0; m < q.size(); ++m) z += std::exp(e(m) - max_e);
  const double lse = max_e + std::log(z);
  return -lambda * rho - (1.0 + lambda) * lse;
}

}  // namespace detail

// Robust capacity of a weakly symmetric channel whose row lies in a KL ball
// around q: log M plus the maximum of the concave scalar dual over lambda>=0.
// Bracket by doubling until the objective decreases at the right endpoint
// twice in a row, then golden-section to tolerance tol on lambda.
inline KlDualResult kl_symmetric_dual(const KlRow& row, double tol) {
  const int M = static_cast<int>(row.q.size());
  const double logM = std::log(static_cast<double>(M));
  if (row.rho == 0.0) {
    // zero-radius ball pins r to q; the dual maximum is approached as
    // lambda -> infinity
    double v = logM;
    for (int m = 0; m < M; ++m) v += row.q(m) * std::log(row.q(m));
    return KlDualResult{v, std::numeric_limits<double>::infinity()};
  }
  auto f = [&](double l) { return detail::kl_dual_objective(l, row.q, row.rho); };
  double hi = 1.0;
  double f_hi = f(hi), f_prev = f(0.5);
  int decreases = f_hi < f_prev ? 1 : 0;
  while (decreases < 2) {
    const double next = hi * 2.0;
    if (next > 1e8)
      throw std::runtime_error("kl_symmetric_dual: bracket expansion beyond 1e8; objective "
                               "did not turn over");
    const double f_next = f(next);
    decreases = f_next < f_hi ? decreases + 1 : 0;
    f_prev = f_hi;
    hi = next;
    f_hi = f_next;
  }
  double a = 0.0, b = hi;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  double lam = 0.5 * (a + b);
  // the maximizer can sit at the boundary of the bracket
  if (f(0.0) >= f(lam)) lam = 0.0;
  return KlDualResult{logM + f(lam), lam};
}

// ---------------------------------------------------------------------------
// Dual-objective certificates
// ---------------------------------------------------------------------------

// log N + max_n sum_m Q_nm log(Q_nm / colsum_m): the dual objective at the
// feasible choice v_m = log colsum_m. Evaluated at any channel from the
// uncertainty set it upper-bounds the robust capacity; for weakly symmetric
// channels the bound is tight.
inline double upper_bound_weakly_symmetric(const ChannelMatrix& Q) {
  const int N = Q.n_inputs(), M = Q.n_outputs();
  const VectorXd colsum = Q.entries().colwise().sum();
  double best = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < N; ++n) {
    double acc = 0.0;
    for (int m = 0; m < M; ++m) {
      const double qnm = Q.entries()(n, m);
      if (qnm > 0.0) acc += qnm * std::log(qnm / colsum(m));
    }
    best = std::max(best, acc);
  }
  return std::log(static_cast<double>(N)) + best;
}

// Dual objective log sum_m exp(v_m) + max_n sum_m Q_nm (log Q_nm - v_m).
// Any (v, Q in the uncertainty set) gives an upper bound on the robust
// capacity. Log-sum-exp is max-shifted; the evaluation is deterministic for a
// fixed input order.
inline double dual_certificate(const ChannelMatrix& Q, const VectorXd& v) {
  const int N = Q.n_inputs(), M = Q.n_outputs();
  if (v.size() != M) throw std::invalid_argument("dual_certificate: v has wrong size");
  if (!v.allFinite()) throw std::invalid_argument("dual_certificate: v must be finite");
  const double vmax = v.maxCoeff();
  double z = 0.0;
  for (int m = 0; m < M; ++m) z += std::exp(v(m) - vmax);
  const double lse = vmax + std::log(z);
  double best = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < N; ++n) {
    double acc = 0.0;
    for (int m = 0; m < M; ++m) {
      const double qnm = Q.entries()(n, m);
      if (qnm > 0.0) acc += qnm * (std::log(qnm) - v(m));
    }
    best = std::max(best, acc);
  }
  return lse + best;
}

}  // namespace rcc
