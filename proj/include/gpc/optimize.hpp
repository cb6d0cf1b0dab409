#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpc/dynamics.hpp"
#include "gpc/functionals.hpp"
#include "gpc/minres.hpp"
#include "gpc/sensitivity.hpp"

namespace gpc {

/// Reduced gradient in weak form:
///   <g, mu> = sum_m w_m a_m mu_m  +  sum_j dt b_j mu'_j
/// with trapezoid weights w_m on nodes and forward-difference slopes mu'_j.
template <typename Scalar = double>
struct WeakGradient {
  TimeGrid<Scalar> time;
  RealVector<Scalar> node_part;      // a, length M+1
  RealVector<Scalar> midpoint_part;  // b, length M

  explicit WeakGradient(const TimeGrid<Scalar>& t)
      : time(t),
        node_part(RealVector<Scalar>::Zero(t.nodes())),
        midpoint_part(RealVector<Scalar>::Zero(t.steps())) {}
  WeakGradient(const TimeGrid<Scalar>& t, RealVector<Scalar> a, RealVector<Scalar> b)
      : time(t), node_part(std::move(a)), midpoint_part(std::move(b)) {
    if (node_part.size() != t.nodes() || midpoint_part.size() != t.steps())
      throw std::invalid_argument("WeakGradient: part lengths do not match the time grid");
  }

  WeakGradient& operator*=(Scalar s) {
    node_part *= s;
    midpoint_part *= s;
    return *this;
  }
  friend WeakGradient operator*(Scalar s, WeakGradient g) { return g *= s; }
  friend WeakGradient operator+(WeakGradient a, const WeakGradient& b) {
    a.node_part += b.node_part;
    a.midpoint_part += b.midpoint_part;
    return a;
  }
};

template <typename Scalar>
Scalar pairing(const WeakGradient<Scalar>& g, const Control<Scalar>& mu) {
  if (!(g.time == mu.time)) throw std::invalid_argument("pairing: time grids differ");
  Scalar acc = 0;
  for (Eigen::Index m = 0; m < g.time.nodes(); ++m) acc += g.time.weight(m) * g.node_part[m] * mu.values[m];
  return acc + g.time.dt() * g.midpoint_part.dot(mu.slopes());
}

/// Values of g on the hat functions e_1..e_M (admissible directions vanish at t = 0).
template <typename Scalar>
RealVector<Scalar> to_dual(const WeakGradient<Scalar>& g) {
  const Eigen::Index M = g.time.steps();
  RealVector<Scalar> r(M);
  for (Eigen::Index m = 1; m <= M; ++m) {
    Scalar v = g.time.weight(m) * g.node_part[m] + g.midpoint_part[m - 1];
    if (m < M) v -= g.midpoint_part[m];
    r[m - 1] = v;
  }
  return r;
}

/// Solves <M u, mu> = sum_m r_m mu_m for all admissible mu, where
/// <M u, mu> = 2 sum_j dt p_j u'_j mu'_j and u(0) = 0.
template <typename Scalar>
Control<Scalar> riesz_map(const TimeGrid<Scalar>& time, const RealVector<Scalar>& p_mid,
                          const RealVector<Scalar>& dual) {
  const Eigen::Index M = time.steps();
  if (p_mid.size() != M || dual.size() != M)
    throw std::invalid_argument("riesz_map: expected " + std::to_string(M) + " entries");
  if (!(p_mid.minCoeff() > Scalar(0)))
    throw std::invalid_argument("riesz_map: metric weight must be positive");
  Control<Scalar> u(time, Scalar(0));
  Scalar tail = 0;
  RealVector<Scalar> slope(M);
  for (Eigen::Index j = M - 1; j >= 0; --j) {
    tail += dual[j];  // sum of dual entries for nodes j+1..M
    slope[j] = tail / (Scalar(2) * p_mid[j]);
  }
  for (Eigen::Index j = 0; j < M; ++j) u.values[j + 1] = u.values[j] + time.dt() * slope[j];
  return u;
}

/// Gradient-related direction d with M d = -g.
template <typename Scalar>
Control<Scalar> riesz_solve(const RealVector<Scalar>& p_mid, const WeakGradient<Scalar>& g) {
  Control<Scalar> d = riesz_map(g.time, p_mid, to_dual(g));
  d.values = -d.values;
  return d;
}

/// sqrt(<g, M^{-1} g>).
template <typename Scalar>
Scalar dual_norm(const WeakGradient<Scalar>& g, const RealVector<Scalar>& p_mid) {
  const Scalar q = -pairing(g, riesz_solve(p_mid, g));
  return std::sqrt(std::max(q, Scalar(0)));
}

/// M applied to u, returned in dual (hat) coordinates.
template <typename Scalar>
RealVector<Scalar> metric_apply(const TimeGrid<Scalar>& time, const RealVector<Scalar>& p_mid,
                                const Control<Scalar>& u) {
  WeakGradient<Scalar> g(time);
  g.midpoint_part = Scalar(2) * (p_mid.array() * u.slopes().array()).matrix();
  return to_dual(g);
}

template <typename Scalar>
RealVector<Scalar> metric_weight(const ProblemSpec<Scalar>& spec, const RealVector<Scalar>& omega_mid) {
  return (spec.gamma2 + spec.gamma1 * omega_mid.array().square()).matrix();
}

/// Everything produced by one gradient evaluation, kept for Hessian products.
template <typename Scalar = double>
struct GradientEvaluation {
  Control<Scalar> control;
  WeakGradient<Scalar> gradient;
  Trajectory<Scalar> state;
  BackwardSolution<Scalar> adjoint;
  ObjectiveBreakdown<Scalar> objective;
  RealVector<Scalar> omega;      // nodes
  RealVector<Scalar> omega_mid;  // midpoints
  RealVector<Scalar> metric;     // gamma2 + gamma1 omega_mid^2
  std::shared_ptr<const Linearization<Scalar>> linearization;
  // Built on the first Hessian product and reused for later ones.
  mutable std::shared_ptr<const SplitStepSensitivity<Scalar>> sensitivity;
  mutable std::shared_ptr<const typename SplitStepSensitivity<Scalar>::Sweep> discrete_adjoint;
};

/// Interval values A_j spread to nodes so that sum_m w_m a_m mu_m = sum_j dt A_j mu_{j+1/2}.
template <typename Scalar>
RealVector<Scalar> intervals_to_nodes(const RealVector<Scalar>& interval) {
  const Eigen::Index M = interval.size();
  RealVector<Scalar> a(M + 1);
  a[0] = interval[0];
  a[M] = interval[M - 1];
  for (Eigen::Index m = 1; m < M; ++m) a[m] = Scalar(0.5) * (interval[m - 1] + interval[m]);
  return a;
}

template <typename Scalar>
GradientEvaluation<Scalar> reduced_gradient(const ProblemSpec<Scalar>& spec, const Control<Scalar>& alpha) {
  Trajectory<Scalar> psi = solve_forward(spec, alpha);
  auto lin = std::make_shared<const Linearization<Scalar>>(spec, psi, alpha);
  BackwardSolution<Scalar> phi = solve_adjoint(*lin);
  const ObjectiveBreakdown<Scalar> J = objective(spec, psi, alpha);
  RealVector<Scalar> omega = weight_series(spec, psi);
  RealVector<Scalar> omega_mid = to_midpoints(omega);
  RealVector<Scalar> p = metric_weight(spec, omega_mid);
  WeakGradient<Scalar> g(spec.time, intervals_to_nodes(phi.coupling),
                         (Scalar(2) * alpha.slopes().array() * p.array()).matrix());
  return GradientEvaluation<Scalar>{alpha,  std::move(g),         std::move(psi),
                                    std::move(phi), J,            std::move(omega),
                                    std::move(omega_mid), std::move(p), std::move(lin), {}, {}};
}

/// Exact gradient of the discrete objective (differentiated split-step scheme),
/// in the same weak form as reduced_gradient. Used as an oracle and by the Hessian.
template <typename Scalar>
WeakGradient<Scalar> discrete_gradient(const ProblemSpec<Scalar>& spec, const GradientEvaluation<Scalar>& at) {
  if (!at.sensitivity) {
    auto sens = std::make_shared<const SplitStepSensitivity<Scalar>>(spec, at.state, at.control);
    at.discrete_adjoint = std::make_shared<const typename SplitStepSensitivity<Scalar>::Sweep>(
        sens->adjoint(terminal_variation(spec, at.state.terminal()),
                      work_cost_state_gradient(spec, at.state, at.control)));
    at.sensitivity = std::move(sens);
  }
  return WeakGradient<Scalar>(spec.time, intervals_to_nodes(at.discrete_adjoint->interval),
                              (Scalar(2) * at.control.slopes().array() * at.metric.array()).matrix());
}

namespace detail {

template <typename Scalar>
RealVector<Scalar> regularization_hessian_part(const ProblemSpec<Scalar>& spec,
                                               const GradientEvaluation<Scalar>& at, const Control<Scalar>& v,
                                               const Trajectory<Scalar>& dpsi) {
  const Eigen::Index M = spec.time.steps();
  const auto V = spec.control.template cast<std::complex<Scalar>>().array();
  RealVector<Scalar> b = Scalar(2) * (v.slopes().array() * at.metric.array()).matrix();
  if (spec.gamma1 != Scalar(0)) {
    RealVector<Scalar> domega(M + 1);
    for (Eigen::Index m = 0; m <= M; ++m)
      domega[m] =
          Scalar(2) * inner(*spec.grid, (V * at.state.nodes.col(m).array()).matrix(), dpsi.nodes.col(m));
    const RealVector<Scalar> domega_mid = to_midpoints(domega);
    b.array() += Scalar(4) * spec.gamma1 * at.control.slopes().array() * at.omega_mid.array() *
                 domega_mid.array();
  }
  return b;
}

}  // namespace detail

/// Second derivative of the discrete objective applied to v, in weak form.
///
/// Second-order adjoint of the split-step scheme: a forward tangent, then the
/// tangent of the transposed sweep. Symmetric to round-off.
template <typename Scalar>
WeakGradient<Scalar> hessian_vec(const ProblemSpec<Scalar>& spec, const GradientEvaluation<Scalar>& at,
                                 const Control<Scalar>& v) {
  discrete_gradient(spec, at);
  const auto& sens = *at.sensitivity;
  const Trajectory<Scalar> dpsi = sens.tangent(v);
  const auto second = sens.second_adjoint(
      v, dpsi, *at.discrete_adjoint, terminal_variation_tangent(spec, at.state.terminal(), dpsi.terminal()),
      work_cost_state_gradient_tangent(spec, at.state, at.control, v, dpsi));
  return WeakGradient<Scalar>(spec.time, intervals_to_nodes(second.interval),
                              detail::regularization_hessian_part(spec, at, v, dpsi));
}

/// Hessian product from the continuous second-order adjoint system, discretised
/// with the same frozen-coefficient sweeps as the gradient.
template <typename Scalar>
WeakGradient<Scalar> linearized_hessian_vec(const ProblemSpec<Scalar>& spec, const GradientEvaluation<Scalar>& at,
                                            const Control<Scalar>& v) {
  const auto& lin = *at.linearization;
  const Trajectory<Scalar> dpsi = lin.propagate(v);
  const BackwardSolution<Scalar> dphi = solve_second_adjoint(lin, at.adjoint, v, dpsi);
  const auto V = spec.control.template cast<std::complex<Scalar>>().array();
  RealVector<Scalar> interval = dphi.coupling;
  for (Eigen::Index j = 0; j < spec.time.steps(); ++j)
    interval[j] += inner(*spec.grid, at.adjoint.field.mid.col(j), (V * dpsi.mid.col(j).array()).matrix());
  return WeakGradient<Scalar>(spec.time, intervals_to_nodes(interval),
                              detail::regularization_hessian_part(spec, at, v, dpsi));
}

enum class OptimizeStatus { converged, max_iterations, line_search_failure, solver_failure };

inline const char* to_string(OptimizeStatus s) {
  switch (s) {
    case OptimizeStatus::converged: return "converged";
    case OptimizeStatus::max_iterations: return "max_iterations";
    case OptimizeStatus::line_search_failure: return "line_search_failure";
    case OptimizeStatus::solver_failure: return "solver_failure";
  }
  return "unknown";
}

template <typename Scalar = double>
struct LineSearchResult {
  bool success = false;
  Scalar step = 0;
  Control<Scalar> control;
  Scalar value = std::numeric_limits<Scalar>::infinity();
  int evaluations = 0;
};

/// Backtracking over nu = 1, 1/2, 1/4, ... until
/// J(alpha + nu d) <= J0 + mu nu slope. A trial must also decrease J strictly,
/// so a sufficient-decrease term below the ulp of J0 cannot pass on a tie.
template <typename Scalar, typename Evaluate>
LineSearchResult<Scalar> armijo_search(Evaluate&& evaluate, const Control<Scalar>& alpha,
                                       const Control<Scalar>& direction, Scalar value0, Scalar slope,
                                       Scalar mu = Scalar(1e-3), Scalar min_step = Scalar(1e-12)) {
  if (!(slope < Scalar(0))) throw std::invalid_argument("armijo_search: direction is not a descent direction");
  LineSearchResult<Scalar> out{false, Scalar(0), alpha, value0, 0};
  for (Scalar nu = 1; nu >= min_step; nu *= Scalar(0.5)) {
    Control<Scalar> trial = alpha + nu * direction;
    Scalar value;
    try {
      value = evaluate(trial);
    } catch (const SolverError&) {
      value = std::numeric_limits<Scalar>::infinity();
    }
    ++out.evaluations;
    if (std::isfinite(value) && value < value0 && value <= value0 + mu * nu * slope) {
      out.success = true;
      out.step = nu;
      out.control = std::move(trial);
      out.value = value;
      return out;
    }
  }
  return out;
}

/// Which gradient drives the iteration: the discretised continuous adjoint
/// (reduced_gradient) or the exact gradient of the discrete objective.
enum class GradientModel { continuous, discrete };

template <typename Scalar = double>
struct OptimizerSettings {
  Scalar tolerance = Scalar(1e-8);
  int max_iterations = 45;
  Scalar armijo_mu = Scalar(1e-3);
  Scalar min_step = Scalar(1e-12);
  Scalar minres_tolerance = Scalar(1e-2);
  int minres_max_iterations = 50;
  GradientModel gradient_model = GradientModel::discrete;
};

enum class DirectionKind { gradient, newton };

/// One row of the optimisation log. For accepted steps the Armijo condition
/// value_next <= value + mu * step * slope holds exactly.
template <typename Scalar = double>
struct IterationRecord {
  int iteration = 0;
  Scalar value = 0;
  Scalar dual_norm = 0;
  DirectionKind direction = DirectionKind::gradient;
  Scalar slope = 0;
  Scalar step = 0;
  Scalar value_next = 0;
  int inner_iterations = 0;
  bool accepted = false;
};

template <typename Scalar = double>
struct OptimizeReport {
  OptimizeStatus status = OptimizeStatus::max_iterations;
  Control<Scalar> control;
  ObjectiveBreakdown<Scalar> objective;
  Scalar initial_dual_norm = 0;
  Scalar final_dual_norm = 0;
  int iterations = 0;
  int forward_solves = 0;
  std::vector<IterationRecord<Scalar>> history;
  std::string message;
};

namespace detail {

template <typename Scalar>
Scalar objective_value(const ProblemSpec<Scalar>& spec, const Control<Scalar>& alpha) {
  return objective(spec, solve_forward(spec, alpha), alpha).total;
}

template <typename Scalar>
GradientEvaluation<Scalar> evaluate_gradient(const ProblemSpec<Scalar>& spec, const Control<Scalar>& alpha,
                                             GradientModel model) {
  GradientEvaluation<Scalar> eval = reduced_gradient(spec, alpha);
  if (model == GradientModel::discrete) eval.gradient = discrete_gradient(spec, eval);
  return eval;
}

template <typename Scalar, typename ChooseDirection>
OptimizeReport<Scalar> descent_loop(const ProblemSpec<Scalar>& spec, const Control<Scalar>& start,
                                    const OptimizerSettings<Scalar>& settings, ChooseDirection&& choose) {
  if (std::abs(start.values[0] - spec.alpha0) > Scalar(0))
    throw std::invalid_argument("optimizer: initial control must start at alpha0");
  OptimizeReport<Scalar> report{OptimizeStatus::max_iterations, start, {}, 0, 0, 0, 0, {}, {}};
  std::optional<GradientEvaluation<Scalar>> eval;
  try {
    eval.emplace(evaluate_gradient(spec, start, settings.gradient_model));
  } catch (const SolverError& e) {
    report.status = OptimizeStatus::solver_failure;
    report.message = e.what();
    return report;
  }
  ++report.forward_solves;
  report.objective = eval->objective;
  report.initial_dual_norm = dual_norm(eval->gradient, eval->metric);
  auto evaluate = [&](const Control<Scalar>& a) {
    ++report.forward_solves;
    return objective_value(spec, a);
  };

  for (int k = 0;; ++k) {
    const Scalar norm = dual_norm(eval->gradient, eval->metric);
    report.final_dual_norm = norm;
    report.iterations = k;
    IterationRecord<Scalar> rec;
    rec.iteration = k;
    rec.value = eval->objective.total;
    rec.dual_norm = norm;
    if (norm <= settings.tolerance * report.initial_dual_norm) {
      report.status = OptimizeStatus::converged;
      report.history.push_back(rec);
      break;
    }
    if (k >= settings.max_iterations) {
      report.status = OptimizeStatus::max_iterations;
      report.history.push_back(rec);
      break;
    }
    Control<Scalar> gradient_direction = riesz_solve(eval->metric, eval->gradient);
    auto [direction, kind, inner_its] = choose(*eval, gradient_direction);
    Scalar slope = pairing(eval->gradient, direction);
    if (!(slope < Scalar(0))) {
      direction = gradient_direction;
      kind = DirectionKind::gradient;
      slope = pairing(eval->gradient, direction);
    }
    LineSearchResult<Scalar> ls{false, Scalar(0), eval->control, rec.value, 0};
    if (slope < Scalar(0))
      ls = armijo_search(evaluate, eval->control, direction, rec.value, slope, settings.armijo_mu,
                         settings.min_step);
    if (!ls.success && kind == DirectionKind::newton) {
      direction = gradient_direction;
      kind = DirectionKind::gradient;
      slope = pairing(eval->gradient, direction);
      if (slope < Scalar(0))
        ls = armijo_search(evaluate, eval->control, direction, rec.value, slope, settings.armijo_mu,
                           settings.min_step);
    }
    rec.direction = kind;
    rec.slope = slope;
    rec.inner_iterations = inner_its;
    if (!ls.success) {
      report.status = OptimizeStatus::line_search_failure;
      report.message = "line search failed at iteration " + std::to_string(k);
      report.history.push_back(rec);
      break;
    }
    rec.accepted = true;
    rec.step = ls.step;
    rec.value_next = ls.value;
    report.history.push_back(rec);
    try {
      eval.emplace(evaluate_gradient(spec, ls.control, settings.gradient_model));
    } catch (const SolverError& e) {
      report.status = OptimizeStatus::solver_failure;
      report.message = e.what();
      break;
    }
    ++report.forward_solves;
    report.control = eval->control;
    report.objective = eval->objective;
  }
  report.control = eval->control;
  report.objective = eval->objective;
  return report;
}

}  // namespace detail

template <typename Scalar = double>
struct DirectionChoice {
  Control<Scalar> direction;
  DirectionKind kind;
  int inner_iterations;
};

/// Armijo gradient descent along the H1-type Riesz direction.
template <typename Scalar>
OptimizeReport<Scalar> gradient_descent(const ProblemSpec<Scalar>& spec, const Control<Scalar>& start,
                                        OptimizerSettings<Scalar> settings = {.max_iterations = 20000}) {
  return detail::descent_loop(spec, start, settings,
                              [](const GradientEvaluation<Scalar>&, const Control<Scalar>& d) {
                                return DirectionChoice<Scalar>{d, DirectionKind::gradient, 0};
                              });
}

/// Solves D^2 J d = -g by MINRES preconditioned with the metric M.
template <typename Scalar>
MinresResult<Scalar> newton_direction(const ProblemSpec<Scalar>& spec, const GradientEvaluation<Scalar>& at,
                                      Scalar rtol, int max_iterations) {
  const TimeGrid<Scalar>& time = spec.time;
  auto lift = [&](const RealVector<Scalar>& x) {
    Control<Scalar> v(time, Scalar(0));
    v.values.tail(time.steps()) = x;
    return v;
  };
  auto apply = [&](const RealVector<Scalar>& x) { return to_dual(hessian_vec(spec, at, lift(x))); };
  auto precondition = [&](const RealVector<Scalar>& r) -> RealVector<Scalar> {
    return riesz_map(time, at.metric, r).values.tail(time.steps());
  };
  const RealVector<Scalar> rhs = -to_dual(at.gradient);
  return minres<Scalar>(apply, precondition, rhs, rtol, max_iterations);
}

/// Inexact Newton with MINRES inner solves and Armijo damping; falls back to
/// the gradient-related direction when the Newton direction does not descend.
template <typename Scalar>
OptimizeReport<Scalar> newton(const ProblemSpec<Scalar>& spec, const Control<Scalar>& start,
                              OptimizerSettings<Scalar> settings = {}) {
  return detail::descent_loop(
      spec, start, settings, [&](const GradientEvaluation<Scalar>& at, const Control<Scalar>& fallback) {
        const MinresResult<Scalar> res =
            newton_direction(spec, at, settings.minres_tolerance, settings.minres_max_iterations);
        if (res.status == MinresStatus::breakdown && res.iterations == 0)
          return DirectionChoice<Scalar>{fallback, DirectionKind::gradient, res.iterations};
        Control<Scalar> d(spec.time, Scalar(0));
        d.values.tail(spec.time.steps()) = res.solution;
        return DirectionChoice<Scalar>{d, DirectionKind::newton, res.iterations};
      });
}

template <typename Scalar = double>
struct StationarityReport {
  Scalar weak = 0;            // dual norm of the weak residual of (alpha' p)' = a / 2
  Scalar boundary_slope = 0;  // |alpha'(T)| from the flux balance over the last half cell
  Scalar last_slope = 0;      // |alpha'| on the last interval, O(dt) away from T
  Scalar max_slope = 0;
};

/// Residual of (alpha' (gamma2 + gamma1 omega^2))' - Re int conj(phi) V psi / 2
/// with alpha(0) = alpha0 and alpha'(T) = 0.
template <typename Scalar>
StationarityReport<Scalar> stationarity_residual(const GradientEvaluation<Scalar>& at) {
  const TimeGrid<Scalar>& time = at.control.time;
  const Eigen::Index M = time.steps();
  const RealVector<Scalar> slope = at.control.slopes();
  const RealVector<Scalar> flux = (slope.array() * at.metric.array()).matrix();
  const RealVector<Scalar>& a = at.gradient.node_part;
  // Strong residual at nodes 1..M; the last cell is a half cell with flux(T) = 0.
  RealVector<Scalar> weighted(M);
  for (Eigen::Index m = 1; m <= M; ++m) {
    const Scalar upper = m < M ? flux[m] : Scalar(0);
    const Scalar residual = (upper - flux[m - 1]) / time.weight(m) - Scalar(0.5) * a[m];
    weighted[m - 1] = time.weight(m) * residual;
  }
  const Control<Scalar> u = riesz_map(time, at.metric, weighted);
  StationarityReport<Scalar> out;
  out.weak = std::sqrt(std::max(weighted.dot(u.values.tail(M)), Scalar(0)));
  // flux(T) = flux[M-1] + w_M a_M / 2 is what the last half cell implies.
  out.boundary_slope = std::abs(weighted[M - 1]) / at.metric[M - 1];
  out.last_slope = std::abs(slope[M - 1]);
  out.max_slope = slope.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace gpc
