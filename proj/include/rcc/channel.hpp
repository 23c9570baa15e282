#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rcc/sets.hpp"

namespace rcc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Row-stochastic channel law matrix Q, N inputs by M outputs. Immutable after
// construction; construction validates nonnegativity and row sums.
class ChannelMatrix {
 public:
  explicit ChannelMatrix(MatrixXd entries, double row_sum_tol = 1e-12)
      : m_(std::move(entries)) {
    if (m_.rows() < 1 || m_.cols() < 1)
      throw std::invalid_argument("ChannelMatrix: empty matrix");
    for (int n = 0; n < m_.rows(); ++n) {
      for (int m = 0; m < m_.cols(); ++m) {
        if (!(m_(n, m) >= 0.0))
          throw std::invalid_argument("ChannelMatrix: negative entry at (" +
                                      std::to_string(n) + "," + std::to_string(m) + ")");
      }
      const double s = m_.row(n).sum();
      if (std::abs(s - 1.0) > row_sum_tol)
        throw std::invalid_argument("ChannelMatrix: row " + std::to_string(n) +
                                    " sums to " + std::to_string(s));
    }
  }

  int n_inputs() const { return static_cast<int>(m_.rows()); }
  int n_outputs() const { return static_cast<int>(m_.cols()); }
  const MatrixXd& entries() const { return m_; }
  double min_entry() const { return m_.minCoeff(); }

  // strictly_positive(tau) contract: every entry at least tau > 0.
  void require_min_entry(double tau) const {
    if (!(tau > 0.0)) throw std::invalid_argument("require_min_entry: tau must be > 0");
    if (min_entry() < tau)
      throw std::invalid_argument("ChannelMatrix: entry " + std::to_string(min_entry()) +
                                  " below required floor " + std::to_string(tau));
  }

 private:
  MatrixXd m_;
};

// Point of the input simplex.
class InputDistribution {
 public:
  explicit InputDistribution(VectorXd probs, double tol = 1e-12) : p_(std::move(probs)) {
    if (p_.size() < 1) throw std::invalid_argument("InputDistribution: empty vector");
    if (p_.minCoeff() < -tol)
      throw std::invalid_argument("InputDistribution: negative probability");
    if (std::abs(p_.sum() - 1.0) > tol)
      throw std::invalid_argument("InputDistribution: probabilities sum to " +
                                  std::to_string(p_.sum()));
  }

  static InputDistribution uniform(int n) {
    return InputDistribution(VectorXd::Constant(n, 1.0 / n));
  }

  int size() const { return static_cast<int>(p_.size()); }
  const VectorXd& probs() const { return p_; }

 private:
  VectorXd p_;
};

namespace detail {

// I(p,Q) with the 0*log(0/x) = 0 convention. No validation; callers own it.
inline double mutual_information_raw(const VectorXd& p, const MatrixXd& Q) {
  const int n_in = static_cast<int>(Q.rows());
  const int n_out = static_cast<int>(Q.cols());
  VectorXd q = Q.transpose() * p;
  double acc = 0.0;
  for (int m = 0; m < n_out; ++m) {
    if (q(m) <= 0.0) continue;  // whole column carries no mass
    const double logq = std::log(q(m));
    for (int n = 0; n < n_in; ++n) {
      const double x = p(n) * Q(n, m);
      if (x > 0.0) acc += x * (std::log(Q(n, m)) - logq);
    }
  }
  return acc;
}

// Workspace for the solver's hot path: one assemble + one pass produces
// phi, the p-gradient and the xi-gradient. Requires Q strictly positive.
struct GradientWork {
  MatrixXd Q;        // assembled Q(xi)
  MatrixXd log_ratio;  // log(Q_nm / q_m)
  VectorXd q;        // output marginal
  VectorXd grad_p;   // d phi / d p
  VectorXd grad_xi;  // d phi / d xi
  double phi = 0.0;
};

}  // namespace detail

// Affinely parameterized uncertainty set Q(xi) = Q0 + gamma * sum_s xi_s Q^s,
// xi ranging over a PerturbationSet. Construction certifies, exactly and per
// entry, that Q(xi) stays positive over the whole set, and that direction
// matrices keep row sums at zero for the ball kinds (otherwise Q(xi) would
// leave the stochastic matrices).
class UncertaintyModel {
 public:
  UncertaintyModel(ChannelMatrix nominal, std::vector<MatrixXd> directions, PerturbationSet set)
      : nominal_(std::move(nominal)), dirs_(std::move(directions)), set_(set) {
    set_.validate();
    if (static_cast<int>(dirs_.size()) != set_.dim)
      throw std::invalid_argument("UncertaintyModel: set dim " + std::to_string(set_.dim) +
                                  " != number of directions " + std::to_string(dirs_.size()));
    const int N = nominal_.n_inputs(), M = nominal_.n_outputs();
    for (int s = 0; s < set_.dim; ++s) {
      if (dirs_[s].rows() != N || dirs_[s].cols() != M)
        throw std::invalid_argument("UncertaintyModel: direction " + std::to_string(s) +
                                    " has wrong shape");
      if (set_.kind == SetKind::InfNormBall || set_.kind == SetKind::TwoNormBall) {
        for (int n = 0; n < N; ++n) {
          const double rs = dirs_[s].row(n).sum();
          if (std::abs(rs) > 1e-12)
            throw std::invalid_argument("UncertaintyModel: direction " + std::to_string(s) +
                                        " row " + std::to_string(n) + " sums to " +
                                        std::to_string(rs) + " (must be 0)");
        }
      }
    }
    // Exact per-entry minimum of Q(xi) over the set; the minimum over entries
    // is the tau floor the solver's Lipschitz estimates rest on.
    tau_ = std::numeric_limits<double>::infinity();
    VectorXd coeffs(set_.dim);
    for (int n = 0; n < N; ++n) {
      for (int m = 0; m < M; ++m) {
        for (int s = 0; s < set_.dim; ++s) coeffs(s) = set_.gamma * dirs_[s](n, m);
        const double lo = nominal_.entries()(n, m) + min_linear_over_set(set_, coeffs);
        if (lo <= 0.0)
          throw std::invalid_argument(
              "UncertaintyModel: Q(xi) can reach " + std::to_string(lo) + " at entry (" +
              std::to_string(n) + "," + std::to_string(m) + ") over the perturbation set");
        tau_ = std::min(tau_, lo);
      }
    }
  }

  const ChannelMatrix& nominal() const { return nominal_; }
  const std::vector<MatrixXd>& directions() const { return dirs_; }
  const PerturbationSet& set() const { return set_; }
  int n_inputs() const { return nominal_.n_inputs(); }
  int n_outputs() const { return nominal_.n_outputs(); }
  int n_directions() const { return set_.dim; }

  // Exact minimum entry of Q(xi) over the perturbation set.
  double tau() const { return tau_; }

  // Unvalidated assembly into a preallocated matrix (hot path).
  void assemble_into(const VectorXd& xi, MatrixXd& out) const {
    out = nominal_.entries();
    for (int s = 0; s < set_.dim; ++s)
      if (xi(s) != 0.0) out.noalias() += (set_.gamma * xi(s)) * dirs_[s];
  }

  ChannelMatrix assemble(const VectorXd& xi) const {
    if (!set_contains(set_, xi))
      throw std::invalid_argument("assemble: xi is outside the declared perturbation set");
    MatrixXd out;
    assemble_into(xi, out);
    for (int n = 0; n < out.rows(); ++n)
      for (int m = 0; m < out.cols(); ++m)
        if (out(n, m) < 0.0)
          throw std::invalid_argument("assemble: negative entry at (" + std::to_string(n) +
                                      "," + std::to_string(m) + ")");
    return ChannelMatrix(std::move(out), 1e-10);
  }

  // phi, grad_p and grad_xi of phi(xi, p) = I(p, Q(xi)) in one pass.
  // p may touch the simplex boundary; Q(xi) must be strictly positive
  // (guaranteed for xi in the certified set).
  void eval(const VectorXd& xi, const VectorXd& p, detail::GradientWork& w) const {
    assemble_into(xi, w.Q);
    w.q.noalias() = w.Q.transpose() * p;
    if (w.Q.minCoeff() <= 0.0 || w.q.minCoeff() <= 0.0)
      throw std::invalid_argument("eval: nonpositive entry in Q(xi)");
    w.log_ratio = w.Q.array().log().matrix();
    const VectorXd logq = w.q.array().log().matrix();
    w.log_ratio.rowwise() -= logq.transpose();
    w.grad_p.noalias() = (w.Q.array() * w.log_ratio.array()).matrix().rowwise().sum();
    w.phi = p.dot(w.grad_p);
    w.grad_p.array() -= 1.0;
    w.grad_xi.resize(set_.dim);
    const MatrixXd weighted = p.asDiagonal() * w.log_ratio;
    for (int s = 0; s < set_.dim; ++s)
      w.grad_xi(s) = set_.gamma * dirs_[s].cwiseProduct(weighted).sum();
  }

 private:
  ChannelMatrix nominal_;
  std::vector<MatrixXd> dirs_;
  PerturbationSet set_;
  double tau_ = 0.0;
};

// Average mutual information I(p,Q) in nats.
inline double mutual_information(const InputDistribution& p, const ChannelMatrix& Q) {
  if (p.size() != Q.n_inputs())
    throw std::invalid_argument("mutual_information: dimension mismatch");
  return detail::mutual_information_raw(p.probs(), Q.entries());
}

// Exact gradient of I with respect to p: entry j is
// sum_m Q_jm log(Q_jm / q_m) - 1. Requires strictly positive Q.
inline VectorXd grad_p(const InputDistribution& p, const ChannelMatrix& Q) {
  if (p.size() != Q.n_inputs())
    throw std::invalid_argument("grad_p: dimension mismatch");
  if (Q.min_entry() <= 0.0)
    throw std::invalid_argument("grad_p: Q must be strictly positive");
  const VectorXd q = Q.entries().transpose() * p.probs();
  VectorXd g(Q.n_inputs());
  for (int j = 0; j < Q.n_inputs(); ++j) {
    double acc = 0.0;
    for (int m = 0; m < Q.n_outputs(); ++m)
      acc += Q.entries()(j, m) * (std::log(Q.entries()(j, m)) - std::log(q(m)));
    g(j) = acc - 1.0;
  }
  return g;
}

// Exact gradient of phi(xi, p) = I(p, Q(xi)) with respect to xi; the chain
// rule through dI/dQ_nm = p_n log(Q_nm / q_m).
inline VectorXd grad_xi(const VectorXd& xi, const InputDistribution& p,
                        const UncertaintyModel& U) {
  if (p.size() != U.n_inputs()) throw std::invalid_argument("grad_xi: dimension mismatch");
  if (!set_contains(U.set(), xi))
    throw std::invalid_argument("grad_xi: xi is outside the declared perturbation set");
  detail::GradientWork w;
  U.eval(xi, p.probs(), w);
  return w.grad_xi;
}

}  // namespace rcc
