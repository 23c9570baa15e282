#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

#include "rcc/solver.hpp"

namespace rcc {

// Average-cost extension: the input distribution must satisfy a'p <= b. The
// constraint is dualized with a multiplier lambda, giving the saddle problem
//
//   min_{xi in B, lambda in [0, Lambda]} max_{p in Delta_N}
//       I(p, Q(xi)) + lambda (b - a'p),
//
// with the multiplier domain truncated at Lambda = log N / (b - min_n a_n),
// beyond which the dualized objective is increasing in lambda.

struct CostConstraint {
  VectorXd a;
  double b = 0.0;

  CostConstraint(VectorXd a_in, double b_in) : a(std::move(a_in)), b(b_in) {
    if (a.size() < 1) throw std::invalid_argument("CostConstraint: empty cost vector");
    if (a.minCoeff() < 0.0)
      throw std::invalid_argument("CostConstraint: costs must be nonnegative");
    if (!(b > 0.0)) throw std::invalid_argument("CostConstraint: budget must be positive");
    if (!(a.minCoeff() < b))
      throw std::invalid_argument("CostConstraint: need min_n a_n < b (strict feasibility)");
    if (!(a.maxCoeff() > b)) {
      // The stated assumption also asks max_n a_n > b, but nothing downstream
      // uses it; warn instead of rejecting.
      std::fprintf(stderr,
                   "rcc: warning: cost constraint is never binding (max a = %g <= b = %g)\n",
                   a.maxCoeff(), b);
    }
  }
};

// Multiplier cap Lambda = log N / (b - min_n a_n), bumped by 1e-9 relative so
// the closed domain [0, Lambda] provably contains the optimal multiplier.
inline double lambda_cap(const CostConstraint& c, int n_inputs) {
  if (n_inputs < static_cast<int>(c.a.size()))
    throw std::invalid_argument("lambda_cap: fewer inputs than cost entries");
  const double denom = c.b - c.a.minCoeff();
  if (!(denom > 0.0)) throw std::invalid_argument("lambda_cap: b <= min_n a_n");
  return std::log(static_cast<double>(n_inputs)) / denom * (1.0 + 1e-9);
}

namespace detail {

struct TiltedBaResult {
  double value = 0.0;  // g(lambda) up to tol
  VectorXd p;
  int iterations = 0;
};

// Blahut-Arimoto with the linear tilt -lambda a folded into the update:
//   p'_n ~ p_n exp(D_n - lambda a_n).
// Upper bound max_n (D_n - lambda a_n) + lambda b holds for every p by the
// minimax form over output distributions; the certified lower bound is the
// objective at the current iterate.
inline TiltedBaResult tilted_blahut_arimoto(const MatrixXd& Q, double lambda,
                                            const VectorXd& a, double b, double tol) {
  const int N = static_cast<int>(Q.rows()), M = static_cast<int>(Q.cols());
  VectorXd qlogq_row = VectorXd::Zero(N);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m)
      if (Q(n, m) > 0.0) qlogq_row(n) += Q(n, m) * std::log(Q(n, m));
  VectorXd p = VectorXd::Constant(N, 1.0 / N);
  VectorXd d(N), q(M), logq(M);
  const int max_iters = 100000;
  for (int it = 1; it <= max_iters; ++it) {
    q.noalias() = Q.transpose() * p;
    for (int m = 0; m < M; ++m) logq(m) = q(m) > 0.0 ? std::log(q(m)) : 0.0;
    d = qlogq_row - Q * logq - lambda * a;
    const double upper = d.maxCoeff() + lambda * b;
    const double objective = p.dot(d) + lambda * b;  // I(p,Q) + lambda(b - a'p)
    if (upper - objective <= tol)
      return TiltedBaResult{objective, p, it};
    const double shift = d.maxCoeff();
    for (int n = 0; n < N; ++n) p(n) *= std::exp(d(n) - shift);
    p /= p.sum();
  }
  throw std::runtime_error("tilted_blahut_arimoto: no convergence within 1e5 iterations");
}

}  // namespace detail

// g(lambda) = sup_p I(p,Q) + lambda (b - a'p), evaluated to tolerance tol.
inline double g_of_lambda(double lambda, const ChannelMatrix& Q, const CostConstraint& c,
                          double tol) {
  if (lambda < 0.0) throw std::invalid_argument("g_of_lambda: lambda must be >= 0");
  if (c.a.size() != Q.n_inputs()) throw std::invalid_argument("g_of_lambda: size mismatch");
  if (!(tol > 0.0)) throw std::invalid_argument("g_of_lambda: tol must be > 0");
  return detail::tilted_blahut_arimoto(Q.entries(), lambda, c.a, c.b, tol).value;
}

// Cost-constrained robust capacity. Same prox machinery as solve(); the
// multiplier rides along as the last coordinate of the min block under the
// quadratic DGF, so its prox is a clip to [0, Lambda].
inline SolverReport solve_with_cost(const UncertaintyModel& U, const CostConstraint& c,
                                    const SolverConfig& cfg) {
  cfg.validate();
  if (c.a.size() != U.n_inputs())
    throw std::invalid_argument("solve_with_cost: cost vector length != N");
  if (U.tau() < cfg.tau_floor)
    throw std::invalid_argument("solve_with_cost: model floor tau below tau_floor");
  if (U.set().kind == SetKind::Simplex)
    throw std::invalid_argument(
        "solve_with_cost: simplex perturbation sets are not supported with a cost "
        "constraint (the multiplier coordinate requires the Euclidean min-block DGF)");
  const int S = U.n_directions(), N = U.n_inputs();
  const double cap = lambda_cap(c, N);
  const StepConstants sc = step_constants(U, cfg.delta);
  detail::SaddleProblem prob;
  prob.geom = Geometry::make(U.set().kind, S, N, sc.gamma1, sc.gamma2, cfg.delta, cap);
  auto work = std::make_shared<detail::GradientWork>();
  prob.fill_grad = [&U, &c, work](const VectorXd& x, const VectorXd& p, VectorXd& gx,
                                  VectorXd& gp) {
    const int s_dim = U.n_directions();
    const double lambda = x(s_dim);
    U.eval(x.head(s_dim), p, *work);
    gx.resize(s_dim + 1);
    gx.head(s_dim) = work->grad_xi;
    gx(s_dim) = c.b - c.a.dot(p);          // d/d lambda
    gp = work->grad_p - lambda * c.a;      // d/d p gains the tilt
  };
  prob.estimate_gap = [&U, &c, cap](const VectorXd& x, const VectorXd& p) {
    const int s_dim = U.n_directions();
    const VectorXd xi = x.head(s_dim);
    const double lambda = x(s_dim);
    GapEstimate ge;
    // upper leg: max_p phi_c((xi,lambda), p) is a tilted Blahut-Arimoto run
    MatrixXd q_mat;
    U.assemble_into(xi, q_mat);
    ge.best_p_value = detail::tilted_blahut_arimoto(q_mat, lambda, c.a, c.b, 1e-8).value;
    // lower leg separates: min over xi by projected gradient, min over the
    // multiplier in closed form
    detail::GradientWork w;
    auto fval = [&](const VectorXd& x_xi) {
      MatrixXd q;
      U.assemble_into(x_xi, q);
      return detail::mutual_information_raw(p, q);
    };
    auto fgrad = [&](const VectorXd& x_xi) {
      U.eval(x_xi, p, w);
      return w.grad_xi;
    };
    double lower = 0.0, stat = 0.0;
    ge.worst_xi = detail::projected_gradient_min(U.set(), xi, fval, fgrad, 200, 1e-9, lower, stat);
    const double slackness = c.b - c.a.dot(p);
    ge.lower_value = lower + std::min(0.0, cap * slackness);
    ge.stationarity = stat;
    const double raw = ge.best_p_value - ge.lower_value;
    if (raw < -1e-8)
      throw std::runtime_error("solve_with_cost: negative gap " + std::to_string(raw));
    ge.gap = raw;
    return ge;
  };
  prob.in_domain = [&U, cap](const VectorXd& x, const VectorXd& p) {
    const int s_dim = U.n_directions();
    return set_contains(U.set(), x.head(s_dim), 1e-9) && x(s_dim) >= -1e-12 &&
           x(s_dim) <= cap + 1e-12 && p.minCoeff() >= -1e-12 &&
           std::abs(p.sum() - 1.0) <= 1e-9;
  };
  VectorXd x0(S + 1);
  x0.head(S) = cfg.start_xi.value_or(set_center(U.set()));
  x0(S) = std::min(cap, std::max(0.0, cfg.start_lambda));
  VectorXd p0 = cfg.start_p.value_or(VectorXd::Constant(N, 1.0 / N));
  SolverReport rep = detail::run_prox_method(prob, cfg, x0, p0);
  const double cap_hi = std::log(static_cast<double>(std::min(U.n_inputs(), U.n_outputs())));
  rep.robust_capacity = std::min(cap_hi, std::max(0.0, rep.robust_capacity));
  if (rep.lambda_star && *rep.lambda_star > cap - 1e-9 && rep.final_gap > cfg.epsilon)
    throw std::runtime_error(
        "solve_with_cost: multiplier pinned at its cap without gap closure "
        "(lambda=" + std::to_string(*rep.lambda_star) + ", cap=" + std::to_string(cap) +
        ", gap=" + std::to_string(rep.final_gap) + "); the model looks inconsistent");
  return rep;
}

}  // namespace rcc
