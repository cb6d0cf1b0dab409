#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "gpc/dynamics.hpp"
#include "gpc/functionals.hpp"
#include "gpc/problem.hpp"

namespace gpc {

/// Exact first and second derivatives of the split-step scheme itself.
///
/// solve_forward takes each step as P(a) K P(a) with the phase map
/// P(a) x = exp(-i (U + a V + lambda |x|^{2 sigma}) dt/2) x. This class
/// differentiates that composition directly: forward tangents, the transposed
/// sweep with respect to the real inner product, and the tangent of that
/// transposed sweep. Together they give the Hessian of the discrete objective,
/// which is symmetric to round-off by construction.
///
/// Interval sensitivities are reported per unit time, so they plug into the
/// weak gradient through intervals_to_nodes like the continuous couplings.
template <typename Scalar = double>
class SplitStepSensitivity {
 public:
  using Complex = std::complex<Scalar>;

  /// Node fields z_m and, in `mid`, the field just after the first phase
  /// substep of each step. `interval[j]` is dJ/d(alpha_{j+1/2}) / dt.
  struct Sweep {
    Trajectory<Scalar> field;
    RealVector<Scalar> interval;
  };

  SplitStepSensitivity(const ProblemSpec<Scalar>& spec, const Trajectory<Scalar>& psi,
                       const Control<Scalar>& alpha)
      : spec_(spec), psi_(psi), alpha_(alpha) {
    detail::require_consistent(spec, alpha);
    if (psi.nodes.cols() != spec.time.nodes() || psi.nodes.rows() != spec.grid->size())
      throw GridMismatch("state trajectory shape does not match the problem");
    const Eigen::Index M = spec.time.steps();
    kinetic_ = kinetic_multiplier(*spec.grid, spec.time.dt());
    alpha_mid_ = alpha.midpoint_values();
    SpectralTransform<Scalar> transform(spec.grid->size());
    after_kinetic_.resize(spec.grid->size(), M);
    for (Eigen::Index j = 0; j < M; ++j) {
      ComplexVector<Scalar> u = psi.nodes.col(j);
      phase_forward(u, alpha_mid_[j]);
      transform.apply_multiplier(u, kinetic_);
      after_kinetic_.col(j) = u;
    }
  }

  const ProblemSpec<Scalar>& spec() const { return spec_; }

  /// Derivative of solve_forward along v. `mid` holds the tangent right after
  /// the kinetic substep of each step.
  Trajectory<Scalar> tangent(const Control<Scalar>& v) const {
    detail::require_consistent(spec_, v);
    const Eigen::Index M = spec_.time.steps();
    const RealVector<Scalar> v_mid = v.midpoint_values();
    SpectralTransform<Scalar> transform(spec_.grid->size());
    Trajectory<Scalar> out(TrajectoryKind::linearized, spec_.grid, spec_.time, true);
    ComplexVector<Scalar> du = ComplexVector<Scalar>::Zero(spec_.grid->size());
    out.nodes.col(0) = du;
    for (Eigen::Index j = 0; j < M; ++j) {
      phase_tangent(du, psi_.nodes.col(j), alpha_mid_[j], v_mid[j]);
      transform.apply_multiplier(du, kinetic_);
      out.mid.col(j) = du;
      phase_tangent(du, after_kinetic_.col(j), alpha_mid_[j], v_mid[j]);
      detail::check_finite(du, j, "split-step tangent");
      out.nodes.col(j + 1) = du;
    }
    return out;
  }

  /// Transposed sweep: z_M = terminal (+ node source), z_m = T_m^T z_{m+1} + node source.
  Sweep adjoint(const ComplexVector<Scalar>& terminal, const ComplexMatrix<Scalar>& node_source) const {
    return sweep(terminal, node_source, nullptr);
  }

  /// Tangent of the transposed sweep along (v, dpsi). `terminal` and
  /// `node_source` are the derivatives of the base sweep's data.
  Sweep second_adjoint(const Control<Scalar>& v, const Trajectory<Scalar>& dpsi, const Sweep& base,
                       const ComplexVector<Scalar>& terminal,
                       const ComplexMatrix<Scalar>& node_source) const {
    detail::require_consistent(spec_, v);
    const SecondOrder so{v.midpoint_values(), dpsi, base};
    return sweep(terminal, node_source, &so);
  }

 private:
  struct SecondOrder {
    RealVector<Scalar> v_mid;
    const Trajectory<Scalar>& dpsi;
    const Sweep& base;
  };

  Scalar potential(Eigen::Index i, Scalar a, Scalar rho) const {
    Scalar p = spec_.trap[i] + a * spec_.control[i];
    if (spec_.lambda != Scalar(0)) p += spec_.lambda * ipow(rho, spec_.sigma);
    return p;
  }

  // d(theta)/d(Re(conj(x) dx)) for theta = potential * dt/2.
  Scalar kappa(Scalar rho) const {
    if (spec_.lambda == Scalar(0)) return 0;
    return Scalar(2) * tau() * spec_.lambda * Scalar(spec_.sigma) * ipow(rho, spec_.sigma - 1);
  }

  Scalar kappa_slope(Scalar rho) const {
    if (spec_.lambda == Scalar(0) || spec_.sigma < 2) return 0;
    return Scalar(2) * tau() * spec_.lambda * Scalar(spec_.sigma) * Scalar(spec_.sigma - 1) *
           ipow(rho, spec_.sigma - 2);
  }

  static Scalar ipow(Scalar x, int n) {
    Scalar r = 1;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
  }

  Scalar tau() const { return Scalar(0.5) * spec_.time.dt(); }

  void phase_forward(ComplexVector<Scalar>& u, Scalar a) const {
    for (Eigen::Index i = 0; i < u.size(); ++i)
      u[i] *= std::polar(Scalar(1), -potential(i, a, std::norm(u[i])) * tau());
  }

  template <typename Base>
  void phase_tangent(ComplexVector<Scalar>& du, const Eigen::MatrixBase<Base>& x, Scalar a,
                     Scalar v) const {
    const Complex minus_i(0, -1);
    for (Eigen::Index i = 0; i < du.size(); ++i) {
      const Scalar rho = std::norm(x[i]);
      const Scalar dtheta = tau() * v * spec_.control[i] + kappa(rho) * real_dot(x[i], du[i]);
      du[i] = std::polar(Scalar(1), -potential(i, a, rho) * tau()) * (du[i] + minus_i * dtheta * x[i]);
    }
  }

  // Re(conj(p) q), the pointwise real inner product.
  static Scalar real_dot(Complex p, Complex q) { return p.real() * q.real() + p.imag() * q.imag(); }

  // One phase substep backwards. x is the substep input, z the adjoint at its
  // output (overwritten with the adjoint at its input); returns dJ/da / tau.
  // In second-order mode dz carries the tangent adjoint and dx the tangent input.
  template <typename XBase>
  Scalar phase_backward(const Eigen::MatrixBase<XBase>& x, Scalar a, ComplexVector<Scalar>& z) const {
    const Complex i_unit(0, 1);
    Scalar sens = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const Scalar rho = std::norm(x[i]);
      const Complex e = std::polar(Scalar(1), potential(i, a, rho) * tau());
      const Complex y = std::conj(e) * x[i];
      sens -= spec_.control[i] * real_dot(i_unit * y, z[i]);
      const Complex w = e * z[i];
      z[i] = w + kappa(rho) * real_dot(x[i], i_unit * w) * x[i];
    }
    return spec_.grid->spacing() * sens;
  }

  template <typename XBase, typename DXBase, typename ZBase>
  Scalar phase_backward_tangent(const Eigen::MatrixBase<XBase>& x, const Eigen::MatrixBase<DXBase>& dx,
                                const Eigen::MatrixBase<ZBase>& z, Scalar a, Scalar v,
                                ComplexVector<Scalar>& dz) const {
    const Complex i_unit(0, 1);
    Scalar sens = 0;
    for (Eigen::Index i = 0; i < dz.size(); ++i) {
      const Scalar rho = std::norm(x[i]);
      const Scalar k = kappa(rho);
      const Scalar drho_half = real_dot(x[i], dx[i]);
      const Scalar dtheta = tau() * v * spec_.control[i] + k * drho_half;
      const Complex e = std::polar(Scalar(1), potential(i, a, rho) * tau());
      const Complex y = std::conj(e) * x[i];
      const Complex dy = std::conj(e) * (dx[i] - i_unit * dtheta * x[i]);
      sens -= spec_.control[i] * (real_dot(i_unit * y, dz[i]) + real_dot(i_unit * dy, z[i]));
      const Complex w = e * z[i];
      const Complex dw = i_unit * dtheta * w;
      const Complex wd = e * dz[i];
      Complex out = wd + k * real_dot(x[i], i_unit * wd) * x[i];
      out += dw + k * (real_dot(x[i], i_unit * dw) + real_dot(dx[i], i_unit * w)) * x[i] +
             k * real_dot(x[i], i_unit * w) * dx[i];
      const Scalar ks = kappa_slope(rho);
      if (ks != Scalar(0)) out += ks * Scalar(2) * drho_half * real_dot(x[i], i_unit * w) * x[i];
      dz[i] = out;
    }
    return spec_.grid->spacing() * sens;
  }

  Sweep sweep(const ComplexVector<Scalar>& terminal, const ComplexMatrix<Scalar>& node_source,
              const SecondOrder* so) const {
    const Eigen::Index N = spec_.grid->size();
    const Eigen::Index M = spec_.time.steps();
    if (terminal.size() != N) throw GridMismatch("terminal data length");
    const bool has_nodes = node_source.size() != 0;
    if (has_nodes && (node_source.rows() != N || node_source.cols() != M + 1))
      throw GridMismatch("node source shape");
    SpectralTransform<Scalar> transform(N);
    const ComplexVector<Scalar> back_kinetic = kinetic_.conjugate();
    const Scalar dt = spec_.time.dt();
    const Scalar weight = tau() / dt;

    Sweep out{Trajectory<Scalar>(so ? TrajectoryKind::second_adjoint : TrajectoryKind::adjoint,
                                 spec_.grid, spec_.time, true),
              RealVector<Scalar>::Zero(M)};
    ComplexVector<Scalar> z = terminal;
    if (has_nodes) z += node_source.col(M);
    out.field.nodes.col(M) = z;
    for (Eigen::Index j = M - 1; j >= 0; --j) {
      const Scalar a = alpha_mid_[j];
      Scalar sens;
      if (so) {
        sens = phase_backward_tangent(after_kinetic_.col(j), so->dpsi.mid.col(j),
                                      so->base.field.nodes.col(j + 1), a, so->v_mid[j], z);
      } else {
        sens = phase_backward(after_kinetic_.col(j), a, z);
      }
      transform.apply_multiplier(z, back_kinetic);
      out.field.mid.col(j) = z;
      if (so) {
        sens += phase_backward_tangent(psi_.nodes.col(j), so->dpsi.nodes.col(j), so->base.field.mid.col(j),
                                       a, so->v_mid[j], z);
      } else {
        sens += phase_backward(psi_.nodes.col(j), a, z);
      }
      if (has_nodes) z += node_source.col(j);
      detail::check_finite(z, j, "split-step transposed sweep");
      out.field.nodes.col(j) = z;
      out.interval[j] = weight * sens;
    }
    return out;
  }

  ProblemSpec<Scalar> spec_;
  Trajectory<Scalar> psi_;
  Control<Scalar> alpha_;
  RealVector<Scalar> alpha_mid_;
  ComplexVector<Scalar> kinetic_;
  ComplexMatrix<Scalar> after_kinetic_;
};

}  // namespace gpc
