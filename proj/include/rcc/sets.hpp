#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rcc {

using Eigen::VectorXd;

// Feasible sets for the perturbation vector xi. All four admit closed-form or
// single-bisection Euclidean projections, which is what makes the prox steps
// and the exact entrywise positivity certificates cheap.
enum class SetKind { InfNormBall, TwoNormBall, Simplex, BoxCapTwoBall };

inline const char* set_kind_name(SetKind k) {
  switch (k) {
    case SetKind::InfNormBall: return "inf_ball";
    case SetKind::TwoNormBall: return "two_ball";
    case SetKind::Simplex: return "simplex";
    case SetKind::BoxCapTwoBall: return "box_cap_two_ball";
  }
  return "?";
}

// Perturbation-set descriptor. `gamma` scales the direction matrices
// multiplicatively (it does not scale the set itself).
struct PerturbationSet {
  SetKind kind = SetKind::InfNormBall;
  int dim = 0;
  double gamma = 1.0;

  void validate() const {
    if (dim < 1) throw std::invalid_argument("PerturbationSet: dim must be >= 1");
    if (gamma < 0.0 || gamma > 1.0)
      throw std::invalid_argument("PerturbationSet: gamma must lie in [0,1]");
  }
};

inline bool set_contains(const PerturbationSet& set, const VectorXd& xi, double tol = 1e-9) {
  if (xi.size() != set.dim) return false;
  switch (set.kind) {
    case SetKind::InfNormBall:
      return xi.lpNorm<Eigen::Infinity>() <= 1.0 + tol;
    case SetKind::TwoNormBall:
      return xi.norm() <= 1.0 + tol;
    case SetKind::Simplex:
      return xi.minCoeff() >= -tol && std::abs(xi.sum() - 1.0) <= tol;
    case SetKind::BoxCapTwoBall:
      return xi.minCoeff() >= -tol && xi.maxCoeff() <= 1.0 + tol && xi.norm() <= 1.0 + tol;
  }
  return false;
}

// Canonical starting point: 0 for the ball-like sets, barycenter for the simplex.
inline VectorXd set_center(const PerturbationSet& set) {
  if (set.kind == SetKind::Simplex)
    return VectorXd::Constant(set.dim, 1.0 / set.dim);
  return VectorXd::Zero(set.dim);
}

// Euclidean projection onto the probability simplex (Held, Wolfe, Crowder).
inline VectorXd project_simplex(const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / (i + 1);
    if (u[i] - t > 0.0) {
      rho = i + 1;
      theta = t;
    }
  }
  (void)rho;
  return (v.array() - theta).max(0.0).matrix();
}

// Euclidean projection onto {xi : 0 <= xi_s <= 1, ||xi||_2 <= 1}. The KKT
// system reduces to one scalar dual variable for the ball constraint:
// xi(mu) = clip(v / (1 + mu), 0, 1) with ||xi(mu)|| decreasing in mu.
inline VectorXd project_box_cap_two_ball(const VectorXd& v) {
  VectorXd u = v.cwiseMax(0.0).cwiseMin(1.0);
  if (u.norm() <= 1.0) return u;
  auto clipped = [&](double mu) -> VectorXd {
    return (v / (1.0 + mu)).cwiseMax(0.0).cwiseMin(1.0);
  };
  double lo = 0.0, hi = 1.0;
  while (clipped(hi).norm() > 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e16) throw std::runtime_error("project_box_cap_two_ball: dual bracket overflow");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (clipped(mid).norm() > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return clipped(hi);
}

inline VectorXd project_to_set(const PerturbationSet& set, const VectorXd& v) {
  switch (set.kind) {
    case SetKind::InfNormBall:
      return v.cwiseMax(-1.0).cwiseMin(1.0);
    case SetKind::TwoNormBall: {
      const double nrm = v.norm();
      return nrm <= 1.0 ? v : VectorXd(v / nrm);
    }
    case SetKind::Simplex:
      return project_simplex(v);
    case SetKind::BoxCapTwoBall:
      return project_box_cap_two_ball(v);
  }
  throw std::logic_error("project_to_set: unknown kind");
}

// Support function max_{xi in box-cap-ball} <c, xi>. Coordinates with c_s <= 0
// sit at 0; the rest solve xi_s = min(1, c_s / mu) with ||xi|| = 1 unless the
// unit box alone is binding.
inline double support_box_cap_two_ball(const VectorXd& c) {
  VectorXd cp = c.cwiseMax(0.0);
  VectorXd at_box = (cp.array() > 0.0).cast<double>();
  if (at_box.norm() <= 1.0) return cp.sum();
  auto xi_of = [&](double mu) -> VectorXd { return (cp / mu).cwiseMin(1.0); };
  double lo = cp.maxCoeff();  // xi = all ones where positive -> norm > 1
  double hi = cp.norm();      // ||cp/hi|| <= 1
  lo = std::min(lo, hi);
  while (xi_of(lo).norm() < 1.0) lo *= 0.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (xi_of(mid).norm() > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return cp.dot(xi_of(hi));
}

// Exact minimum of <coeffs, xi> over the set. Used to certify entrywise
// positivity of Q(xi) without sampling.
inline double min_linear_over_set(const PerturbationSet& set, const VectorXd& coeffs) {
  switch (set.kind) {
    case SetKind::InfNormBall:
      return -coeffs.lpNorm<1>();
    case SetKind::TwoNormBall:
      return -coeffs.norm();
    case SetKind::Simplex:
      return coeffs.minCoeff();
    case SetKind::BoxCapTwoBall:
      return -support_box_cap_two_ball(-coeffs);
  }
  throw std::logic_error("min_linear_over_set: unknown kind");
}

}  // namespace rcc
