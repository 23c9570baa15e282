#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rcc/channel.hpp"
#include "rcc/oracles.hpp"
#include "rcc/prox.hpp"

namespace rcc {

// Prox-method for the convex-concave saddle problem
//
//   max_{p in Delta_N} min_{xi in B} phi(xi, p),   phi(xi, p) = I(p, Q(xi)).
//
// Each outer iteration runs the extragradient-style inner loop
//   w^{t,k} = Prox_{z^{t-1}}(gamma^t * Phi(w^{t,k-1})),  w^{t,0} = z^{t-1},
// accepting at the first k with
//   <gamma^t Phi(w^{t,k-1}), w^{t,k-1} - w^{t,k}>  <=  V_{z^{t-1}}(w^{t,k}),
// then updates w^t = w^{t,k-1}, z^t = w^{t,k}, and the step-size-weighted
// ergodic average y^t = sum gamma^l w^l / sum gamma^l, which is the point the
// O(1/T) duality-gap guarantee holds at. With a fixed step below
// 1/(sqrt(2) L) the inner loop accepts at k <= 2.
//
// Termination is by an explicit duality-gap estimate at the ergodic point:
// the upper leg max_p phi(xi_bar, p) is a Blahut-Arimoto run on Q(xi_bar),
// the lower leg min_xi phi(xi, p_bar) a projected-gradient descent over B.
// The lower leg is driven to stationarity <= 1e-9 but is a local certificate
// only, hence the gap is flagged heuristic in the report.

struct SolverConfig {
  double epsilon = 1e-4;              // target duality gap, nats
  int max_iters = 200000;
  double gamma0 = 1.0;                // initial step
  double gamma_growth = 1.5;          // adaptive multiply/divide factor
  double delta = 1e-3;                // entropy shift of the DGFs
  std::optional<double> fixed_gamma;  // disables adaptation when set
  int gap_check_every = 25;
  std::uint64_t seed = 0;             // carried into reports/CSV; solve itself is deterministic
  double tau_floor = 1e-7;            // reject models whose min entry over the set is below
  bool record_iterates = false;       // keep per-iteration ergodic (xi, p) snapshots
  bool debug_checks = false;          // verify domain membership every iteration
  std::optional<VectorXd> start_xi;
  std::optional<VectorXd> start_p;
  double start_lambda = 0.0;          // cost-constrained runs only

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("SolverConfig: epsilon must be > 0");
    if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
    if (!(gamma_growth > 1.0))
      throw std::invalid_argument("SolverConfig: gamma_growth must be > 1");
    if (!(delta > 0.0)) throw std::invalid_argument("SolverConfig: delta must be > 0");
    if (gap_check_every < 1)
      throw std::invalid_argument("SolverConfig: gap_check_every must be >= 1");
    if (fixed_gamma && !(*fixed_gamma > 0.0))
      throw std::invalid_argument("SolverConfig: fixed_gamma must be > 0");
    if (!(gamma0 > 0.0)) throw std::invalid_argument("SolverConfig: gamma0 must be > 0");
  }
};

enum class Termination { GapReached, MaxIters, FixedPoint };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::GapReached: return "GapReached";
    case Termination::MaxIters: return "MaxIters";
    case Termination::FixedPoint: return "FixedPoint";
  }
  return "?";
}

// The pair z = (xi, p), optionally extended with the cost multiplier.
struct SaddlePoint {
  VectorXd xi;
  VectorXd p;
  std::optional<double> lambda;
};

struct GapEstimate {
  double gap = 0.0;           // upper - lower, clamped at 0 for reporting
  VectorXd worst_xi;          // minimizer found by the lower leg
  double best_p_value = 0.0;  // upper leg: max_p phi(xi_bar, p)
  double lower_value = 0.0;   // lower leg: min_xi phi(xi, p_bar) (+ multiplier term)
  double stationarity = 0.0;  // final prox-gradient residual of the lower leg
};

struct IterateSnapshot {
  int iteration = 0;
  VectorXd xi;
  VectorXd p;
  double lambda = 0.0;
};

struct SolverReport {
  SaddlePoint ergodic;
  double robust_capacity = 0.0;  // phi at the ergodic p with the worst-case xi (lower leg)
  double upper_bound = 0.0;      // upper leg of the final gap estimate
  double best_gap = 0.0;
  double final_gap = 0.0;
  Termination termination = Termination::MaxIters;
  int iterations = 0;
  VectorXd worst_xi;
  double lower_leg_stationarity = 0.0;
  bool gap_is_heuristic = true;  // lower leg certified only to stationarity
  std::optional<double> lambda_star;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, double>> gap_trace;
  std::vector<double> gamma_trace;
  std::vector<int> inner_iter_counts;
  std::vector<IterateSnapshot> iterate_trace;
};

// Constants of the convergence statement: Bregman diameters Theta_k, strong
// convexity moduli alpha_k, blockwise Lipschitz bounds L_kl, the DGF weights
// gamma1/gamma2 and the largest step with the two-inner-iteration guarantee.
struct StepConstants {
  double gamma1 = 0.0, gamma2 = 0.0, gamma_max = 0.0;
  double L11 = 0.0, L12 = 0.0, L21 = 0.0, L22 = 0.0;
  double theta1 = 0.0, theta2 = 0.0, alpha1 = 0.0, alpha2 = 0.0;
  double lipschitz_total = 0.0;  // sum_kl L_kl sqrt(Theta_k Theta_l / alpha_k alpha_l)
};

// L_kl derived from the entrywise Hessian bounds at tau = min entry of Q(xi)
// over the set, contracted through the direction matrices; all norms are
// Euclidean, so the bounds are conservative but mutually consistent with the
// alpha_k above. gamma1, gamma2 satisfy gamma1*Theta1 + gamma2*Theta2 = 1.
inline StepConstants step_constants(const UncertaintyModel& U, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("step_constants: delta must be > 0");
  const double tau = U.tau();
  if (!(tau > 0.0)) throw std::invalid_argument("step_constants: tau must be > 0");
  const int N = U.n_inputs(), M = U.n_outputs(), S = U.n_directions();
  const double g = U.set().gamma;
  double fro2 = 0.0, sum2 = 0.0;
  for (const MatrixXd& d : U.directions()) {
    const double f = g * d.norm();
    const double a = g * d.cwiseAbs().sum();
    fro2 += f * f;
    sum2 += a * a;
  }
  StepConstants sc;
  const double logtau = std::log(tau);
  // d2f/dQ2 entries: 2/tau (same entry), 1/tau (same row or column), 0 else.
  sc.L11 = (2.0 + N + M) / tau * fro2;
  // d2f/dQ dp entries bounded by 1 - log tau.
  sc.L12 = sc.L21 = (1.0 - logtau) * std::sqrt(static_cast<double>(N) * sum2);
  // d2f/dp2: diagonal 1 + 1/tau - log tau, off-diagonal 1/tau.
  sc.L22 = (1.0 + 1.0 / tau - logtau) + (N - 1.0) / tau;
  switch (U.set().kind) {
    case SetKind::InfNormBall: sc.theta1 = 2.0 * S; break;
    case SetKind::TwoNormBall: sc.theta1 = 2.0; break;
    case SetKind::BoxCapTwoBall: sc.theta1 = 1.0; break;  // diameter^2/2 <= 1 on the cap
    case SetKind::Simplex: sc.theta1 = (1.0 + delta) * std::log((S + delta) / delta); break;
  }
  sc.alpha1 = U.set().kind == SetKind::Simplex ? 1.0 / (1.0 + delta) : 1.0;
  sc.theta2 = (1.0 + delta) * std::log((N + delta) / delta);
  sc.alpha2 = 1.0 / (1.0 + delta);
  const double c1 = std::sqrt(sc.theta1 / sc.alpha1);
  const double c2 = std::sqrt(sc.theta2 / sc.alpha2);
  sc.lipschitz_total =
      sc.L11 * c1 * c1 + sc.L12 * c1 * c2 + sc.L21 * c2 * c1 + sc.L22 * c2 * c2;
  sc.gamma1 = (sc.L11 * c1 * c1 + sc.L12 * c1 * c2) / (sc.theta1 * sc.lipschitz_total);
  sc.gamma2 = (sc.L21 * c2 * c1 + sc.L22 * c2 * c2) / (sc.theta2 * sc.lipschitz_total);
  sc.gamma_max = 1.0 / (std::sqrt(2.0) * sc.lipschitz_total);
  // Zero directions collapse the xi-block constants; keep the prox well posed
  // with a balanced fallback weight (the xi block is inert in that case).
  if (!(sc.gamma1 > 0.0)) sc.gamma1 = sc.gamma2 * sc.theta2 / sc.theta1;
  return sc;
}

namespace detail {

// Abstract saddle problem the engine runs on. x is the min block (xi, plus
// the multiplier coordinate when present), p the max block.
struct SaddleProblem {
  Geometry geom;
  // gx <- grad_x phi, gp <- grad_p phi, both at (x, p)
  std::function<void(const VectorXd& x, const VectorXd& p, VectorXd& gx, VectorXd& gp)> fill_grad;
  std::function<GapEstimate(const VectorXd& x, const VectorXd& p)> estimate_gap;
  std::function<bool(const VectorXd& x, const VectorXd& p)> in_domain;
};

inline SolverReport run_prox_method(const SaddleProblem& prob, const SolverConfig& cfg,
                                    const VectorXd& x0, const VectorXd& p0) {
  cfg.validate();
  const Geometry& G = prob.geom;
  const int dx = G.dim_x(), dp = G.dim_p, dz = G.dim_z();
  // Past this many inner steps the step size is clearly above the stability
  // threshold; cheaper to shrink gamma and redo the outer step.
  const int inner_cap = 8;

  VectorXd z(dz);
  z.head(dx) = x0;
  z.tail(dp) = p0;
  VectorXd erg_num = VectorXd::Zero(dz);
  double erg_den = 0.0;

  SolverReport rep;
  rep.seed = cfg.seed;
  rep.termination = Termination::MaxIters;

  VectorXd gx(dx), gp(dp);
  auto eval_operator = [&](const VectorXd& w, VectorXd& out) {
    prob.fill_grad(w.head(dx), w.tail(dp), gx, gp);
    out.head(dx) = gx;
    out.tail(dp) = -gp;
    if (!out.allFinite())
      throw std::runtime_error("solver: non-finite gradient at iteration " +
                               std::to_string(rep.iterations + 1));
  };

  double gamma_t = cfg.fixed_gamma.value_or(cfg.gamma0);
  VectorXd F(dz), w_prev(dz), w_cur(dz), w_next(dz);
  auto ergodic_point = [&]() -> VectorXd {
    return erg_den > 0.0 ? VectorXd(erg_num / erg_den) : z;
  };

  std::optional<GapEstimate> last_gap;
  int last_gap_iter = -1;
  bool stopped = false;

  for (int t = 1; t <= cfg.max_iters && !stopped; ++t) {
    rep.iterations = t;
    eval_operator(z, F);
    w_prev = z;
    w_cur = prox_joint(z, gamma_t * F, G);
    if ((w_cur - z).norm() <= 1e-12) {
      rep.termination = Termination::FixedPoint;
      rep.gamma_trace.push_back(gamma_t);
      rep.inner_iter_counts.push_back(1);
      // A prox fixed point is the saddle point itself; report at z, not at
      // the (staler) ergodic average.
      erg_num = z;
      erg_den = 1.0;
      stopped = true;
      break;
    }
    int k = 1;
    bool accepted = false;
    while (true) {
      const double lhs = gamma_t * F.dot(w_prev - w_cur);
      const double vz = bregman(w_cur, z, G);
      const double slack = 1e-13 * (1.0 + std::abs(lhs) + std::abs(vz));
      if (lhs - vz <= slack) {
        accepted = true;
        break;
      }
      if (k >= inner_cap) break;
      ++k;
      eval_operator(w_cur, F);
      w_next = prox_joint(z, gamma_t * F, G);
      w_prev = w_cur;
      w_cur = w_next;
    }
    rep.gamma_trace.push_back(gamma_t);
    rep.inner_iter_counts.push_back(k);
    if (accepted) {
      erg_num += gamma_t * w_prev;  // w^t = w^{t,k-1}
      erg_den += gamma_t;
      z = w_cur;                    // z^t = w^{t,k}
      if (!cfg.fixed_gamma) {
        gamma_t = k <= 2 ? gamma_t * cfg.gamma_growth : gamma_t / cfg.gamma_growth;
        gamma_t = std::min(1e4, std::max(1e-8, gamma_t));
      }
    } else {
      // Inner loop refused to settle: the step is far too long. Shrink and
      // retry the outer step from the same z. The gap check below still runs
      // on schedule.
      if (!cfg.fixed_gamma) gamma_t = std::max(1e-8, gamma_t / cfg.gamma_growth);
    }
    if (cfg.debug_checks && accepted) {
      if (!prob.in_domain(z.head(dx), z.tail(dp)))
        throw std::runtime_error("solver: iterate left the domain at iteration " +
                                 std::to_string(t));
    }
    if (cfg.record_iterates && erg_den > 0.0) {
      const VectorXd y = ergodic_point();
      IterateSnapshot snap;
      snap.iteration = t;
      snap.xi = y.head(G.dim_xi);
      snap.p = y.tail(dp);
      snap.lambda = G.has_lambda() ? y(G.dim_xi) : 0.0;
      rep.iterate_trace.push_back(std::move(snap));
    }
    if (t % cfg.gap_check_every == 0 || t == cfg.max_iters) {
      const VectorXd y = ergodic_point();
      GapEstimate ge = prob.estimate_gap(y.head(dx), y.tail(dp));
      last_gap = ge;
      last_gap_iter = t;
      rep.gap_trace.emplace_back(t, std::max(0.0, ge.gap));
      if (ge.gap <= cfg.epsilon) {
        rep.termination = Termination::GapReached;
        stopped = true;
      }
    }
  }

  const VectorXd y = ergodic_point();
  if (!last_gap || last_gap_iter != rep.iterations) {
    last_gap = prob.estimate_gap(y.head(dx), y.tail(dp));
    rep.gap_trace.emplace_back(rep.iterations, std::max(0.0, last_gap->gap));
  }
  rep.ergodic.xi = y.head(G.dim_xi);
  rep.ergodic.p = y.tail(dp);
  if (G.has_lambda()) {
    rep.ergodic.lambda = y(G.dim_xi);
    rep.lambda_star = y(G.dim_xi);
  }
  rep.final_gap = std::max(0.0, last_gap->gap);
  rep.best_gap = rep.final_gap;
  for (const auto& [it, gp_] : rep.gap_trace) rep.best_gap = std::min(rep.best_gap, gp_);
  rep.upper_bound = last_gap->best_p_value;
  rep.robust_capacity = last_gap->lower_value;
  rep.worst_xi = last_gap->worst_xi;
  rep.lower_leg_stationarity = last_gap->stationarity;
  return rep;
}

// Projected-gradient minimization of a smooth convex function over the
// perturbation set, with Armijo backtracking. Returns the final point; fills
// the final objective and prox-gradient residual.
template <class F, class Grad>
inline VectorXd projected_gradient_min(const PerturbationSet& set, VectorXd xi, F&& fval,
                                       Grad&& fgrad, int max_iters, double stationarity_tol,
                                       double& out_value, double& out_stationarity) {
  double cur = fval(xi);
  double resid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    const VectorXd g = fgrad(xi);
    const VectorXd probe = project_to_set(set, xi - g);
    resid = (xi - probe).norm();
    if (resid <= stationarity_tol) break;
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const VectorXd cand = project_to_set(set, xi - step * g);
      const double fc = fval(cand);
      // sufficient decrease along the projected direction
      if (fc <= cur + 1e-4 * g.dot(cand - xi)) {
        xi = cand;
        cur = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  out_value = cur;
  out_stationarity = resid;
  return xi;
}

}  // namespace detail

// Duality-gap estimate at z: upper leg by Blahut-Arimoto on Q(xi_bar), lower
// leg by projected gradient on the convex map xi -> phi(xi, p_bar).
inline GapEstimate gap_estimate(const SaddlePoint& z, const UncertaintyModel& U) {
  GapEstimate ge;
  const ChannelMatrix q_bar = U.assemble(z.xi);
  ge.best_p_value = blahut_arimoto(q_bar, 1e-8).capacity;
  detail::GradientWork work;
  const VectorXd p_bar = z.p;
  auto fval = [&](const VectorXd& xi) {
    MatrixXd q;
    U.assemble_into(xi, q);
    return detail::mutual_information_raw(p_bar, q);
  };
  auto fgrad = [&](const VectorXd& xi) {
    U.eval(xi, p_bar, work);
    return work.grad_xi;
  };
  double lower = 0.0, stat = 0.0;
  ge.worst_xi = detail::projected_gradient_min(U.set(), z.xi, fval, fgrad, 200, 1e-9, lower, stat);
  ge.lower_value = lower;
  ge.stationarity = stat;
  const double raw = ge.best_p_value - ge.lower_value;
  if (raw < -1e-8)
    throw std::runtime_error("gap_estimate: negative gap " + std::to_string(raw));
  ge.gap = raw;
  return ge;
}

// Worst-case capacity of the uncertain channel: runs the prox-method on
// max_p min_xi I(p, Q(xi)).
inline SolverReport solve(const UncertaintyModel& U, const SolverConfig& cfg) {
  cfg.validate();
  if (U.tau() < cfg.tau_floor)
    throw std::invalid_argument("solve: model floor tau=" + std::to_string(U.tau()) +
                                " is below tau_floor=" + std::to_string(cfg.tau_floor));
  const int S = U.n_directions(), N = U.n_inputs();
  const StepConstants sc = step_constants(U, cfg.delta);
  detail::SaddleProblem prob;
  prob.geom = Geometry::make(U.set().kind, S, N, sc.gamma1, sc.gamma2, cfg.delta);
  auto work = std::make_shared<detail::GradientWork>();
  prob.fill_grad = [&U, work](const VectorXd& x, const VectorXd& p, VectorXd& gx, VectorXd& gp) {
    U.eval(x, p, *work);
    gx = work->grad_xi;
    gp = work->grad_p;
  };
  prob.estimate_gap = [&U](const VectorXd& x, const VectorXd& p) {
    return gap_estimate(SaddlePoint{x, p, std::nullopt}, U);
  };
  prob.in_domain = [&U](const VectorXd& x, const VectorXd& p) {
    return set_contains(U.set(), x, 1e-9) && p.minCoeff() >= -1e-12 &&
           std::abs(p.sum() - 1.0) <= 1e-9;
  };
  VectorXd x0 = cfg.start_xi.value_or(set_center(U.set()));
  VectorXd p0 = cfg.start_p.value_or(VectorXd::Constant(N, 1.0 / N));
  if (x0.size() != S || p0.size() != N)
    throw std::invalid_argument("solve: start point has wrong dimensions");
  if (!set_contains(U.set(), x0, 1e-9))
    throw std::invalid_argument("solve: start xi is outside the perturbation set");
  if (p0.minCoeff() < -1e-12 || std::abs(p0.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("solve: start p is not a distribution");
  SolverReport rep = detail::run_prox_method(prob, cfg, x0, p0);
  // Capacity estimates live in [0, min(log N, log M)].
  const double cap_hi = std::log(static_cast<double>(std::min(U.n_inputs(), U.n_outputs())));
  rep.robust_capacity = std::min(cap_hi, std::max(0.0, rep.robust_capacity));
  return rep;
}

}  // namespace rcc
