#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "gpc/functionals.hpp"
#include "gpc/problem.hpp"

namespace gpc {

/// Raised when a propagation produces non-finite or runaway values.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename Scalar>
void require_consistent(const ProblemSpec<Scalar>& spec, const Control<Scalar>& alpha) {
  if (!(alpha.time == spec.time))
    throw std::invalid_argument("control lives on a different time grid than the problem");
}

template <typename Scalar>
void check_finite(const ComplexVector<Scalar>& u, Eigen::Index step, const char* what) {
  constexpr Scalar kRunaway = Scalar(1e150);
  if (!u.allFinite() || u.cwiseAbs().maxCoeff() > kRunaway)
    throw SolverError(std::string(what) + ": non-finite or runaway values at step " +
                      std::to_string(step));
}

/// exp(tau G) = C + S G for the trace-free real generator of u -> -i (c u + d conj(u)).
template <typename Scalar>
void phase_exponential(Scalar c, std::complex<Scalar> d, Scalar tau, Scalar& C, Scalar& S) {
  const Scalar D = c * c - std::norm(d);
  const Scalar z = D * tau * tau;
  if (std::abs(z) < Scalar(1e-6)) {
    C = Scalar(1) - z / Scalar(2) + z * z / Scalar(24);
    S = tau * (Scalar(1) - z / Scalar(6) + z * z / Scalar(120));
  } else if (D > 0) {
    const Scalar theta = std::sqrt(D);
    C = std::cos(theta * tau);
    S = std::sin(theta * tau) / theta;
  } else {
    const Scalar s = std::sqrt(-D);
    C = std::cosh(s * tau);
    S = std::sinh(s * tau) / s;
  }
}

}  // namespace detail

/// Strang splitting for the Gross-Pitaevskii flow: half phase, kinetic, half phase.
///
/// The phase substep exp(-i (U + alpha V + lambda |psi|^{2 sigma}) dt/2) is exact
/// because |psi| does not change under it; alpha is taken at the step midpoint.
template <typename Scalar>
Trajectory<Scalar> solve_forward(const ProblemSpec<Scalar>& spec, const Control<Scalar>& alpha) {
  detail::require_consistent(spec, alpha);
  const auto& grid = *spec.grid;
  const Eigen::Index M = spec.time.steps();
  const Scalar half = Scalar(0.5) * spec.time.dt();
  const ComplexVector<Scalar> kinetic = kinetic_multiplier(grid, spec.time.dt());
  SpectralTransform<Scalar> transform(grid.size());

  Trajectory<Scalar> traj(TrajectoryKind::state, spec.grid, spec.time);
  ComplexVector<Scalar> u = spec.psi0;
  traj.nodes.col(0) = u;
  const RealVector<Scalar> alpha_mid = alpha.midpoint_values();

  auto phase = [&](Scalar a) {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      Scalar potential = spec.trap[i] + a * spec.control[i];
      if (spec.lambda != Scalar(0)) {
        const Scalar rho = std::norm(u[i]);
        potential += spec.lambda * (spec.sigma == 1 ? rho : std::pow(rho, spec.sigma));
      }
      u[i] *= std::polar(Scalar(1), -potential * half);
    }
  };

  for (Eigen::Index m = 0; m < M; ++m) {
    phase(alpha_mid[m]);
    transform.apply_multiplier(u, kinetic);
    phase(alpha_mid[m]);
    detail::check_finite(u, m, "solve_forward");
    traj.nodes.col(m + 1) = u;
  }
  return traj;
}

/// Adjoint-type solution: node fields plus the per-interval coupling
/// <eta(t_{m+1/2}), V psi(t_{m+1/2})> read at each step's midpoint.
template <typename Scalar = double>
struct BackwardSolution {
  Trajectory<Scalar> field;
  RealVector<Scalar> coupling;
};

/// Frozen-coefficient linearisation of the flow around a state trajectory.
///
/// Every step uses the same splitting as solve_forward. The pointwise operator
/// delta -> (U + alpha V + lambda (sigma+1) |psi|^{2 sigma}) delta + lambda sigma
/// |psi|^{2 sigma - 2} psi^2 conj(delta) is frozen at the step midpoint (linear
/// interpolation of psi) and exponentiated exactly as a 2x2 real map. Sources
/// enter at the step midpoint, between the two kinetic half steps.
///
/// The backward sweep is the exact transpose of the forward sweep with respect
/// to the real inner product, written for eta = i p; this is the adjoint
/// equation i eta_t = L eta + r integrated backwards with the same scheme.
template <typename Scalar = double>
class Linearization {
 public:
  Linearization(const ProblemSpec<Scalar>& spec, const Trajectory<Scalar>& psi,
                const Control<Scalar>& alpha)
      : spec_(spec), psi_(psi), alpha_(alpha) {
    detail::require_consistent(spec, alpha);
    if (psi.nodes.cols() != spec.time.nodes() || psi.nodes.rows() != spec.grid->size())
      throw GridMismatch("state trajectory shape does not match the problem");
    const Eigen::Index N = spec.grid->size();
    const Eigen::Index M = spec.time.steps();
    const Scalar tau = Scalar(0.5) * spec.time.dt();
    half_kinetic_ = kinetic_multiplier(*spec.grid, tau);
    alpha_mid_ = alpha.midpoint_values();
    psi_mid_ = Scalar(0.5) * (psi.nodes.leftCols(M) + psi.nodes.rightCols(M));
    diag_.resize(N, M);
    conj_.resize(N, M);
    cos_.resize(N, M);
    sin_.resize(N, M);
    const Scalar lambda = spec.lambda;
    const int sigma = spec.sigma;
    for (Eigen::Index j = 0; j < M; ++j) {
      for (Eigen::Index i = 0; i < N; ++i) {
        const std::complex<Scalar> p = psi_mid_(i, j);
        const Scalar rho = std::norm(p);
        Scalar c = spec.trap[i] + alpha_mid_[j] * spec.control[i];
        std::complex<Scalar> d(0);
        if (lambda != Scalar(0)) {
          const Scalar rho_pow = sigma == 1 ? Scalar(1) : std::pow(rho, sigma - 1);
          c += lambda * Scalar(sigma + 1) * rho_pow * rho;
          d = lambda * Scalar(sigma) * rho_pow * p * p;
        }
        diag_(i, j) = c;
        conj_(i, j) = d;
        detail::phase_exponential(c, d, tau, cos_(i, j), sin_(i, j));
      }
    }
  }

  const ProblemSpec<Scalar>& spec() const { return spec_; }
  const Trajectory<Scalar>& state() const { return psi_; }
  const Control<Scalar>& control() const { return alpha_; }
  const ComplexMatrix<Scalar>& state_midpoints() const { return psi_mid_; }

  /// Solves the linearised flow with source v V psi and zero initial data.
  /// The returned mid columns hold the field at each step midpoint with half
  /// of that step's source added.
  Trajectory<Scalar> propagate(const Control<Scalar>& v) const {
    detail::require_consistent(spec_, v);
    const Eigen::Index M = spec_.time.steps();
    const Scalar dt = spec_.time.dt();
    SpectralTransform<Scalar> transform(spec_.grid->size());
    Trajectory<Scalar> out(TrajectoryKind::linearized, spec_.grid, spec_.time, true);
    const RealVector<Scalar> v_mid = v.midpoint_values();
    ComplexVector<Scalar> u = ComplexVector<Scalar>::Zero(spec_.grid->size());
    out.nodes.col(0) = u;
    const std::complex<Scalar> minus_i(0, -1);
    for (Eigen::Index j = 0; j < M; ++j) {
      phase_step(u, j, true);
      transform.apply_multiplier(u, half_kinetic_);
      if (v_mid[j] != Scalar(0)) {
        const ComplexVector<Scalar> jump =
            ((minus_i * dt * v_mid[j]) * spec_.control.array() * psi_mid_.col(j).array()).matrix();
        out.mid.col(j) = u + Scalar(0.5) * jump;
        u += jump;
      } else {
        out.mid.col(j) = u;
      }
      transform.apply_multiplier(u, half_kinetic_);
      phase_step(u, j, true);
      detail::check_finite(u, j, "solve_linearized");
      out.nodes.col(j + 1) = u;
    }
    return out;
  }

  /// Transposed sweep for eta = i p.
  ///
  /// terminal: eta(T). node_source / mid_source (optional, may be empty) are
  /// gradients with respect to the linearised field at nodes and at step
  /// midpoints; they enter as eta += i * source.
  BackwardSolution<Scalar> propagate_backward(const ComplexVector<Scalar>& terminal,
                                              const ComplexMatrix<Scalar>& node_source,
                                              const ComplexMatrix<Scalar>& mid_source,
                                              TrajectoryKind kind) const {
    const Eigen::Index N = spec_.grid->size();
    const Eigen::Index M = spec_.time.steps();
    if (terminal.size() != N) throw GridMismatch("terminal data length");
    const bool has_nodes = node_source.size() != 0;
    const bool has_mid = mid_source.size() != 0;
    if (has_nodes && (node_source.rows() != N || node_source.cols() != M + 1))
      throw GridMismatch("node source shape");
    if (has_mid && (mid_source.rows() != N || mid_source.cols() != M))
      throw GridMismatch("midpoint source shape");

    SpectralTransform<Scalar> transform(N);
    const ComplexVector<Scalar> back_kinetic = half_kinetic_.conjugate();
    const std::complex<Scalar> i_unit(0, 1);
    BackwardSolution<Scalar> sol{Trajectory<Scalar>(kind, spec_.grid, spec_.time, true),
                                 RealVector<Scalar>(M)};
    ComplexVector<Scalar> u = terminal;
    if (has_nodes) u += i_unit * node_source.col(M);
    sol.field.nodes.col(M) = u;
    const auto& grid = *spec_.grid;
    for (Eigen::Index j = M - 1; j >= 0; --j) {
      phase_step(u, j, false);
      transform.apply_multiplier(u, back_kinetic);
      if (has_mid) {
        const ComplexVector<Scalar> jump = i_unit * mid_source.col(j);
        sol.field.mid.col(j) = u + Scalar(0.5) * jump;
        u += jump;
      } else {
        sol.field.mid.col(j) = u;
      }
      sol.coupling[j] = inner(grid, sol.field.mid.col(j),
                              (spec_.control.template cast<std::complex<Scalar>>().array() *
                               psi_mid_.col(j).array())
                                  .matrix());
      transform.apply_multiplier(u, back_kinetic);
      phase_step(u, j, false);
      if (has_nodes) u += i_unit * node_source.col(j);
      detail::check_finite(u, j, "backward sweep");
      sol.field.nodes.col(j) = u;
    }
    return sol;
  }

 private:
  // u <- C u -/+ i S (c u + d conj(u)); the sign flips for the inverse map.
  void phase_step(ComplexVector<Scalar>& u, Eigen::Index j, bool forward) const {
    const std::complex<Scalar> rot = forward ? std::complex<Scalar>(0, -1) : std::complex<Scalar>(0, 1);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const std::complex<Scalar> w = u[i];
      const std::complex<Scalar> gen = diag_(i, j) * w + conj_(i, j) * std::conj(w);
      u[i] = cos_(i, j) * w + rot * sin_(i, j) * gen;
    }
  }

  ProblemSpec<Scalar> spec_;
  Trajectory<Scalar> psi_;
  Control<Scalar> alpha_;
  RealVector<Scalar> alpha_mid_;
  ComplexVector<Scalar> half_kinetic_;
  ComplexMatrix<Scalar> psi_mid_;
  RealMatrix<Scalar> diag_;
  ComplexMatrix<Scalar> conj_;
  RealMatrix<Scalar> cos_;
  RealMatrix<Scalar> sin_;
};

/// Node-wise weights kappa_m with d/dpsi_m of the work cost equal to kappa_m V psi_m.
template <typename Scalar>
RealVector<Scalar> work_cost_node_weights(const ProblemSpec<Scalar>& spec,
                                          const RealVector<Scalar>& slope,
                                          const RealVector<Scalar>& omega_mid) {
  const Eigen::Index M = slope.size();
  RealVector<Scalar> kappa = RealVector<Scalar>::Zero(M + 1);
  const Scalar scale = Scalar(2) * spec.gamma1 * spec.time.dt();
  for (Eigen::Index j = 0; j < M; ++j) {
    const Scalar w = scale * slope[j] * slope[j] * omega_mid[j];
    kappa[j] += w;
    kappa[j + 1] += w;
  }
  return kappa;
}

template <typename Scalar>
Trajectory<Scalar> solve_linearized(const Linearization<Scalar>& lin, const Control<Scalar>& v) {
  return lin.propagate(v);
}

template <typename Scalar>
Trajectory<Scalar> solve_linearized(const ProblemSpec<Scalar>& spec, const Trajectory<Scalar>& psi,
                                    const Control<Scalar>& alpha, const Control<Scalar>& v) {
  return Linearization<Scalar>(spec, psi, alpha).propagate(v);
}

/// Gradient of the work cost with respect to the state nodes, kappa_m V psi_m.
/// Empty when gamma1 = 0.
template <typename Scalar>
ComplexMatrix<Scalar> work_cost_state_gradient(const ProblemSpec<Scalar>& spec, const Trajectory<Scalar>& psi,
                                               const Control<Scalar>& alpha) {
  ComplexMatrix<Scalar> out;
  if (spec.gamma1 == Scalar(0)) return out;
  const RealVector<Scalar> omega_mid = to_midpoints(weight_series(spec, psi));
  const RealVector<Scalar> kappa = work_cost_node_weights(spec, alpha.slopes(), omega_mid);
  const auto V = spec.control.template cast<std::complex<Scalar>>().array();
  out.resize(psi.nodes.rows(), psi.nodes.cols());
  for (Eigen::Index m = 0; m < kappa.size(); ++m) out.col(m) = (kappa[m] * V * psi.nodes.col(m).array()).matrix();
  return out;
}

/// Derivative of work_cost_state_gradient along (v, dpsi). Empty when gamma1 = 0.
template <typename Scalar>
ComplexMatrix<Scalar> work_cost_state_gradient_tangent(const ProblemSpec<Scalar>& spec,
                                                       const Trajectory<Scalar>& psi,
                                                       const Control<Scalar>& alpha,
                                                       const Control<Scalar>& v,
                                                       const Trajectory<Scalar>& dpsi) {
  ComplexMatrix<Scalar> out;
  if (spec.gamma1 == Scalar(0)) return out;
  const Eigen::Index M = spec.time.steps();
  const auto& grid = *spec.grid;
  const auto V = spec.control.template cast<std::complex<Scalar>>().array();
  const RealVector<Scalar> slope = alpha.slopes();
  const RealVector<Scalar> dslope = v.slopes();
  const RealVector<Scalar> omega_mid = to_midpoints(weight_series(spec, psi));
  RealVector<Scalar> domega(M + 1);
  for (Eigen::Index m = 0; m <= M; ++m)
    domega[m] = Scalar(2) * inner(grid, (V * psi.nodes.col(m).array()).matrix(), dpsi.nodes.col(m));
  const RealVector<Scalar> domega_mid = to_midpoints(domega);
  const Scalar scale = Scalar(2) * spec.gamma1 * spec.time.dt();
  RealVector<Scalar> k_psi = RealVector<Scalar>::Zero(M + 1);
  RealVector<Scalar> k_dpsi = RealVector<Scalar>::Zero(M + 1);
  for (Eigen::Index j = 0; j < M; ++j) {
    const Scalar wp =
        scale * (Scalar(2) * slope[j] * dslope[j] * omega_mid[j] + slope[j] * slope[j] * domega_mid[j]);
    const Scalar wd = scale * slope[j] * slope[j] * omega_mid[j];
    k_psi[j] += wp;
    k_psi[j + 1] += wp;
    k_dpsi[j] += wd;
    k_dpsi[j + 1] += wd;
  }
  out.resize(grid.size(), M + 1);
  for (Eigen::Index m = 0; m <= M; ++m)
    out.col(m) = (V * (k_psi[m] * psi.nodes.col(m).array() + k_dpsi[m] * dpsi.nodes.col(m).array())).matrix();
  return out;
}

/// 4 [2 <A psi, dpsi> A psi + <psi, A psi> A dpsi], the derivative of terminal_variation.
template <typename Scalar, typename D1, typename D2>
ComplexVector<Scalar> terminal_variation_tangent(const ProblemSpec<Scalar>& spec,
                                                 const Eigen::MatrixBase<D1>& psi_T,
                                                 const Eigen::MatrixBase<D2>& dpsi_T) {
  const auto& grid = *spec.grid;
  const ComplexVector<Scalar> a_psi = apply_observable(spec, psi_T);
  const ComplexVector<Scalar> a_dpsi = apply_observable(spec, dpsi_T);
  return Scalar(4) * (Scalar(2) * inner(grid, a_psi, ComplexVector<Scalar>(dpsi_T)) * a_psi +
                      inner(grid, ComplexVector<Scalar>(psi_T), a_psi) * a_dpsi);
}

/// Adjoint i phi_t = L phi + 4 gamma1 alpha'^2 omega V psi with
/// phi(T) = 4 i <psi(T), A psi(T)> A psi(T), swept backwards.
template <typename Scalar>
BackwardSolution<Scalar> solve_adjoint(const Linearization<Scalar>& lin) {
  const auto& spec = lin.spec();
  const auto& psi = lin.state();
  const std::complex<Scalar> i_unit(0, 1);
  const ComplexVector<Scalar> terminal = i_unit * terminal_variation(spec, psi.terminal());
  return lin.propagate_backward(terminal, work_cost_state_gradient(spec, psi, lin.control()),
                                ComplexMatrix<Scalar>(), TrajectoryKind::adjoint);
}

template <typename Scalar>
BackwardSolution<Scalar> solve_adjoint(const ProblemSpec<Scalar>& spec, const Trajectory<Scalar>& psi,
                                       const Control<Scalar>& alpha) {
  return solve_adjoint(Linearization<Scalar>(spec, psi, alpha));
}

/// Derivative of the adjoint along a control direction v (cubic case).
///
/// Terminal data i times terminal_variation_tangent; sources from the varied
/// coupling v V phi + 2 lambda (conj(psi) dpsi + psi conj(dpsi)) phi
/// + 2 lambda psi dpsi conj(phi) at step midpoints and from the varied work
/// cost gradient at nodes.
template <typename Scalar>
BackwardSolution<Scalar> solve_second_adjoint(const Linearization<Scalar>& lin,
                                              const BackwardSolution<Scalar>& phi,
                                              const Control<Scalar>& v,
                                              const Trajectory<Scalar>& dpsi) {
  const auto& spec = lin.spec();
  const auto& psi = lin.state();
  if (spec.lambda != Scalar(0) && spec.sigma != 1)
    throw std::invalid_argument("solve_second_adjoint: only the cubic nonlinearity is supported");
  const Eigen::Index M = spec.time.steps();
  const Scalar dt = spec.time.dt();
  const std::complex<Scalar> i_unit(0, 1);
  const auto V = spec.control.template cast<std::complex<Scalar>>().array();
  const ComplexVector<Scalar> terminal = i_unit * terminal_variation_tangent(spec, psi.terminal(), dpsi.terminal());

  const RealVector<Scalar> v_mid = v.midpoint_values();
  ComplexMatrix<Scalar> mid_source(spec.grid->size(), M);
  const auto& psi_mid = lin.state_midpoints();
  for (Eigen::Index j = 0; j < M; ++j) {
    const auto eta = phi.field.mid.col(j).array();
    auto src = (v_mid[j] * V * eta).eval();
    if (spec.lambda != Scalar(0)) {
      const auto p = psi_mid.col(j).array();
      const auto a = dpsi.mid.col(j).array();
      src += Scalar(2) * spec.lambda *
             ((p.conjugate() * a + p * a.conjugate()) * eta + p * a * eta.conjugate());
    }
    mid_source.col(j) = (dt * src).matrix();
  }
  return lin.propagate_backward(terminal,
                                work_cost_state_gradient_tangent(spec, psi, lin.control(), v, dpsi),
                                mid_source, TrajectoryKind::second_adjoint);
}

}  // namespace gpc
