#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

#include "rcc/sets.hpp"

namespace rcc {

// Block distance-generating function over B x [0,Lambda]? x Delta_N:
//
//   omega(z) = gamma1 * omega1(xi [, lambda]) + gamma2 * omega2(p)
//
// omega1 is xi'xi/2 for the ball/box sets (plus lambda^2/2 when the cost
// multiplier coordinate is present) and shifted entropy
// sum (xi_s + delta/S) log(xi_s + delta/S) when B is a simplex. omega2 is
// always the shifted entropy sum (p_n + delta/N) log(p_n + delta/N).
//
// Strong convexity moduli in the Euclidean norm: 1 for the quadratic blocks,
// 1/(1+delta) for shifted entropy on the simplex (the Hessian is
// diag(1/(x + delta/N)) and x + delta/N <= 1 + delta).
enum class Omega1Kind { Euclidean, ShiftedEntropy };

struct Geometry {
  SetKind set_kind = SetKind::InfNormBall;
  Omega1Kind omega1 = Omega1Kind::Euclidean;
  int dim_xi = 0;
  int dim_p = 0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double delta = 1e-3;
  double lambda_cap = 0.0;  // > 0 appends the multiplier coordinate to the min block

  bool has_lambda() const { return lambda_cap > 0.0; }
  int dim_x() const { return dim_xi + (has_lambda() ? 1 : 0); }
  int dim_z() const { return dim_x() + dim_p; }

  static Geometry make(SetKind kind, int dim_xi, int dim_p, double gamma1, double gamma2,
                       double delta, double lambda_cap = 0.0) {
    Geometry g;
    g.set_kind = kind;
    g.omega1 = (kind == SetKind::Simplex) ? Omega1Kind::ShiftedEntropy : Omega1Kind::Euclidean;
    g.dim_xi = dim_xi;
    g.dim_p = dim_p;
    g.gamma1 = gamma1;
    g.gamma2 = gamma2;
    g.delta = delta;
    g.lambda_cap = lambda_cap;
    g.validate();
    return g;
  }

  void validate() const {
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
      throw std::invalid_argument("Geometry: gamma1, gamma2 must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("Geometry: delta must be positive");
    if (dim_xi < 1 || dim_p < 1) throw std::invalid_argument("Geometry: empty block");
    if (set_kind == SetKind::Simplex && omega1 != Omega1Kind::ShiftedEntropy)
      throw std::invalid_argument("Geometry: simplex set requires entropy omega1");
    if (set_kind != SetKind::Simplex && omega1 != Omega1Kind::Euclidean)
      throw std::invalid_argument("Geometry: ball/box sets require Euclidean omega1");
    if (has_lambda() && set_kind == SetKind::Simplex)
      throw std::invalid_argument(
          "Geometry: the cost multiplier coordinate is only supported with the "
          "Euclidean xi blocks (ball/box sets)");
  }
};

namespace detail {

inline double shifted_entropy(const Eigen::Ref<const VectorXd>& x, double shift) {
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double v = x(i) + shift;
    acc += v * std::log(v);
  }
  return acc;
}

}  // namespace detail

// omega(z) and its gradient; z is stacked [xi; (lambda); p].
inline std::pair<double, VectorXd> omega_value_and_grad(const VectorXd& z, const Geometry& G) {
  if (z.size() != G.dim_z()) throw std::invalid_argument("omega: z has wrong size");
  VectorXd grad(z.size());
  double val = 0.0;
  const auto x = z.head(G.dim_x());
  const auto p = z.tail(G.dim_p);
  if (G.omega1 == Omega1Kind::Euclidean) {
    val += G.gamma1 * 0.5 * x.squaredNorm();
    grad.head(G.dim_x()) = G.gamma1 * x;
  } else {
    const double shift = G.delta / G.dim_xi;
    val += G.gamma1 * detail::shifted_entropy(x, shift);
    grad.head(G.dim_x()) = (G.gamma1 * (1.0 + (x.array() + shift).log())).matrix();
  }
  const double shift_p = G.delta / G.dim_p;
  val += G.gamma2 * detail::shifted_entropy(p, shift_p);
  grad.tail(G.dim_p) = (G.gamma2 * (1.0 + (p.array() + shift_p).log())).matrix();
  return {val, std::move(grad)};
}

// Bregman divergence V_z(w) = omega(w) - omega(z) - <omega'(z), w - z>.
inline double bregman(const VectorXd& w, const VectorXd& z, const Geometry& G) {
  auto [ow, gw] = omega_value_and_grad(w, G);
  auto [oz, gz] = omega_value_and_grad(z, G);
  (void)gw;
  return ow - oz - gz.dot(w - z);
}

// Entropic prox over the simplex:
//   argmin_{p in Delta} gamma * sum (p_n + d0) log(p_n + d0) + <p, target - gamma*omega'(anchor)>
// with d0 = delta / dim. The stationarity system gives
//   p_n(mu) = max{0, exp(-1 - mu - c_n / gamma) - d0},
// and mu solves the monotone scalar equation sum_n p_n(mu) = 1, handled by
// bisection on a shifted variable so the exponents stay bounded.
inline VectorXd prox_simplex_entropy(const VectorXd& target, const VectorXd& anchor,
                                     double gamma, double delta) {
  if (!(gamma > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("prox_simplex_entropy: gamma and delta must be positive");
  if (target.size() != anchor.size())
    throw std::invalid_argument("prox_simplex_entropy: size mismatch");
  const int n = static_cast<int>(anchor.size());
  const double d0 = delta / n;
  // exponent a_n - mu with a_n = -1 - (target_n - gamma*(1 + log(anchor_n + d0))) / gamma
  VectorXd a(n);
  for (int i = 0; i < n; ++i)
    a(i) = -1.0 - (target(i) / gamma - (1.0 + std::log(anchor(i) + d0)));
  const double a_max = a.maxCoeff();
  auto residual = [&](double nu) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::max(0.0, std::exp(a(i) - a_max - nu) - d0);
    return s - 1.0;
  };
  // Bracket: residual is nonincreasing in nu, -> -1 for large nu and -> +inf
  // for nu -> -inf.
  double lo = 0.0, hi = 0.0;
  if (residual(0.0) > 0.0) {
    hi = 1.0;
    while (residual(hi) > 0.0) {
      hi *= 2.0;
      if (hi > 1e6) throw std::logic_error("prox_simplex_entropy: upper bracket failed");
    }
    lo = hi * 0.5;
    if (hi == 1.0) lo = 0.0;
  } else {
    lo = -1.0;
    while (residual(lo) <= 0.0) {
      lo *= 2.0;
      if (lo < -1e6) throw std::logic_error("prox_simplex_entropy: lower bracket failed");
    }
    hi = lo * 0.5;
    if (lo == -1.0) hi = 0.0;
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::abs(r) <= 1e-12) break;
    if (r > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = std::max(0.0, std::exp(a(i) - a_max - mid) - d0);
  return p;
}

// Euclidean prox onto the inf-norm ball: componentwise clip of
// (gamma*anchor - target)/gamma to [-1, 1].
inline VectorXd prox_inf_ball(const VectorXd& target, const VectorXd& anchor, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox_inf_ball: gamma must be positive");
  return ((gamma * anchor - target) / gamma).cwiseMax(-1.0).cwiseMin(1.0);
}

// Euclidean prox onto the 2-norm ball: the unconstrained minimizer if it fits,
// otherwise its radial normalization.
inline VectorXd prox_two_ball(const VectorXd& target, const VectorXd& anchor, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox_two_ball: gamma must be positive");
  VectorXd u = (gamma * anchor - target) / gamma;
  const double nrm = u.norm();
  if (nrm <= 1.0) return u;
  return u / nrm;
}

namespace detail {

// Dykstra alternating projections between the unit box and the unit ball.
// Fallback path for the box-cap prox; the dual bisection handles everything
// in practice.
inline VectorXd dykstra_box_cap(const VectorXd& v, double tol, int max_sweeps) {
  VectorXd x = v;
  VectorXd p_corr = VectorXd::Zero(v.size()), q_corr = VectorXd::Zero(v.size());
  for (int it = 0; it < max_sweeps; ++it) {
    const VectorXd y = (x + p_corr).cwiseMax(0.0).cwiseMin(1.0);
    p_corr = x + p_corr - y;
    const double nrm = (y + q_corr).norm();
    const VectorXd xn = nrm <= 1.0 ? VectorXd(y + q_corr) : VectorXd((y + q_corr) / nrm);
    q_corr = y + q_corr - xn;
    if ((xn - x).norm() <= tol && xn.minCoeff() >= -tol && xn.maxCoeff() <= 1.0 + tol &&
        xn.norm() <= 1.0 + tol)
      return xn;
    x = xn;
  }
  throw std::runtime_error("prox_box_cap_two_ball: Dykstra fallback did not converge");
}

}  // namespace detail

// Euclidean prox onto {0 <= xi_s <= 1, ||xi||_2 <= 1}: project the
// unconstrained minimizer, clipping to the box and bisecting the scalar dual
// of the ball constraint when the clipped point is too long.
inline VectorXd prox_box_cap_two_ball(const VectorXd& target, const VectorXd& anchor,
                                      double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox_box_cap_two_ball: gamma must be positive");
  const VectorXd u = (gamma * anchor - target) / gamma;
  VectorXd out = project_box_cap_two_ball(u);
  const bool feasible = out.minCoeff() >= -1e-10 && out.maxCoeff() <= 1.0 + 1e-10 &&
                        out.norm() <= 1.0 + 1e-10;
  if (!feasible) out = detail::dykstra_box_cap(u, 1e-10, 10000);
  return out;
}

// Prox of the quadratic block onto [0, hi] (the cost-multiplier coordinate).
inline double prox_interval(double target, double anchor, double gamma, double hi) {
  if (!(gamma > 0.0) || !(hi > 0.0))
    throw std::invalid_argument("prox_interval: gamma and the cap must be positive");
  const double u = (gamma * anchor - target) / gamma;
  return std::min(hi, std::max(0.0, u));
}

// Joint prox over B x [0,Lambda]? x Delta_N; the blocks separate, so this is
// exactly the concatenation of the block proxes.
inline VectorXd prox_joint(const VectorXd& z_anchor, const VectorXd& step_vector,
                           const Geometry& G) {
  if (z_anchor.size() != G.dim_z() || step_vector.size() != G.dim_z())
    throw std::invalid_argument("prox_joint: size mismatch");
  VectorXd out(G.dim_z());
  const VectorXd xi_anchor = z_anchor.head(G.dim_xi);
  const VectorXd xi_target = step_vector.head(G.dim_xi);
  switch (G.set_kind) {
    case SetKind::InfNormBall:
      out.head(G.dim_xi) = prox_inf_ball(xi_target, xi_anchor, G.gamma1);
      break;
    case SetKind::TwoNormBall:
      out.head(G.dim_xi) = prox_two_ball(xi_target, xi_anchor, G.gamma1);
      break;
    case SetKind::BoxCapTwoBall:
      out.head(G.dim_xi) = prox_box_cap_two_ball(xi_target, xi_anchor, G.gamma1);
      break;
    case SetKind::Simplex:
      out.head(G.dim_xi) = prox_simplex_entropy(xi_target, xi_anchor, G.gamma1, G.delta);
      break;
  }
  if (G.has_lambda())
    out(G.dim_xi) =
        prox_interval(step_vector(G.dim_xi), z_anchor(G.dim_xi), G.gamma1, G.lambda_cap);
  out.tail(G.dim_p) = prox_simplex_entropy(step_vector.tail(G.dim_p), z_anchor.tail(G.dim_p),
                                           G.gamma2, G.delta);
  return out;
}

}  // namespace rcc
