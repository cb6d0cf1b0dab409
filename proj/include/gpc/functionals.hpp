#pragma once

#include <cmath>
#include <variant>

#include "gpc/problem.hpp"

namespace gpc {

template <typename Scalar = double>
struct ObjectiveBreakdown {
  Scalar expectation = 0;  // <psi(T), A psi(T)>
  Scalar terminal = 0;     // expectation^2
  Scalar work_cost = 0;
  Scalar reg_cost = 0;
  Scalar total = 0;
};

/// Energies at the time nodes and the power alpha' * omega at midpoints.
template <typename Scalar = double>
struct EnergySeries {
  TimeGrid<Scalar> time;
  RealVector<Scalar> energy;  // E(t_m)
  RealVector<Scalar> power;   // dE/dt at t_{m+1/2}
};

template <typename Scalar, typename Derived>
ComplexVector<Scalar> apply_observable(const ProblemSpec<Scalar>& spec,
                                       const Eigen::MatrixBase<Derived>& psi) {
  return std::visit(
      [&](const auto& obs) -> ComplexVector<Scalar> {
        using T = std::decay_t<decltype(obs)>;
        if constexpr (std::is_same_v<T, MultiplicationObservable<Scalar>>) {
          return (obs.profile.template cast<std::complex<Scalar>>().array() * psi.array()).matrix();
        } else {
          // (P - 1) psi with P psi = target * int conj(target) psi dx
          const std::complex<Scalar> overlap = spec.grid->spacing() * obs.target.dot(psi);
          return overlap * obs.target - psi;
        }
      },
      spec.observable);
}

template <typename Scalar>
WaveField<Scalar> apply_observable(const ProblemSpec<Scalar>& spec, const WaveField<Scalar>& psi) {
  require_same_grid(*spec.grid, *psi.grid);
  return WaveField<Scalar>(psi.grid, apply_observable(spec, psi.values));
}

/// omega = int V |psi|^2 dx.
template <typename Scalar, typename Derived>
Scalar weight_omega(const ProblemSpec<Scalar>& spec, const Eigen::MatrixBase<Derived>& psi) {
  return spec.grid->spacing() * (spec.control.array() * psi.array().abs2()).sum();
}

template <typename Scalar>
RealVector<Scalar> weight_series(const ProblemSpec<Scalar>& spec, const Trajectory<Scalar>& psi) {
  RealVector<Scalar> out(psi.nodes.cols());
  for (Eigen::Index m = 0; m < out.size(); ++m) out[m] = weight_omega(spec, psi.field(m));
  return out;
}

/// Node values averaged onto midpoints.
template <typename Scalar>
RealVector<Scalar> to_midpoints(const RealVector<Scalar>& node_values) {
  const Eigen::Index M = node_values.size() - 1;
  return Scalar(0.5) * (node_values.head(M) + node_values.tail(M));
}

/// E = |psi_x|^2 / 2 + lambda/(sigma+1) |psi|^{2 sigma + 2} + (alpha V + U) |psi|^2, integrated.
template <typename Scalar>
Scalar energy(const ProblemSpec<Scalar>& spec, const ComplexVector<Scalar>& psi, Scalar alpha_t,
              SpectralTransform<Scalar>& transform) {
  const auto& grid = *spec.grid;
  const auto rho = psi.array().abs2();
  const Scalar kinetic = Scalar(0.5) * spectral_gradient_norm_sq(grid, psi, transform);
  const Scalar interaction =
      spec.lambda / Scalar(spec.sigma + 1) * grid.spacing() * rho.pow(spec.sigma + 1).sum();
  const Scalar potential =
      grid.spacing() * ((alpha_t * spec.control.array() + spec.trap.array()) * rho).sum();
  return kinetic + interaction + potential;
}

template <typename Scalar>
Scalar energy(const ProblemSpec<Scalar>& spec, const ComplexVector<Scalar>& psi, Scalar alpha_t) {
  SpectralTransform<Scalar> transform(spec.grid->size());
  return energy(spec, psi, alpha_t, transform);
}

template <typename Scalar>
EnergySeries<Scalar> energy_series(const ProblemSpec<Scalar>& spec, const Trajectory<Scalar>& psi,
                                   const Control<Scalar>& alpha) {
  SpectralTransform<Scalar> transform(spec.grid->size());
  EnergySeries<Scalar> series{alpha.time, RealVector<Scalar>(alpha.time.nodes()),
                              RealVector<Scalar>()};
  for (Eigen::Index m = 0; m < alpha.time.nodes(); ++m)
    series.energy[m] = energy(spec, ComplexVector<Scalar>(psi.field(m)), alpha.values[m], transform);
  series.power = (alpha.slopes().array() * to_midpoints(weight_series(spec, psi)).array()).matrix();
  return series;
}

template <typename Scalar = double>
struct WorkBalance {
  Scalar energy_difference = 0;  // E(T) - E(0)
  Scalar power_integral = 0;     // midpoint rule of alpha' omega
};

template <typename Scalar>
WorkBalance<Scalar> work(const EnergySeries<Scalar>& series) {
  return {series.energy[series.energy.size() - 1] - series.energy[0],
          series.time.dt() * series.power.sum()};
}

/// ||E||^2 and ||E'||^2 over [0, T], midpoint rule.
template <typename Scalar = double>
struct EnergyMetrics {
  Scalar energy_l2_sq = 0;
  Scalar power_l2_sq = 0;
};

template <typename Scalar>
EnergyMetrics<Scalar> energy_metrics(const EnergySeries<Scalar>& series) {
  const RealVector<Scalar> mid = to_midpoints(series.energy);
  return {series.time.dt() * mid.squaredNorm(), series.time.dt() * series.power.squaredNorm()};
}

template <typename Scalar>
ObjectiveBreakdown<Scalar> objective(const ProblemSpec<Scalar>& spec, const Trajectory<Scalar>& psi,
                                     const Control<Scalar>& alpha) {
  ObjectiveBreakdown<Scalar> out;
  const ComplexVector<Scalar> psi_T = psi.terminal();
  out.expectation = inner(*spec.grid, psi_T, apply_observable(spec, psi_T));
  out.terminal = out.expectation * out.expectation;
  const RealVector<Scalar> slope = alpha.slopes();
  const Scalar dt = alpha.time.dt();
  out.reg_cost = spec.gamma2 * dt * slope.squaredNorm();
  if (spec.gamma1 != Scalar(0)) {
    const RealVector<Scalar> omega_mid = to_midpoints(weight_series(spec, psi));
    out.work_cost = spec.gamma1 * dt * (slope.array() * omega_mid.array()).square().sum();
  }
  out.total = out.terminal + out.work_cost + out.reg_cost;
  return out;
}

/// 4 <psi_T, A psi_T> A psi_T, the psi(T)-gradient of the terminal term.
template <typename Scalar, typename Derived>
ComplexVector<Scalar> terminal_variation(const ProblemSpec<Scalar>& spec,
                                         const Eigen::MatrixBase<Derived>& psi_T) {
  const ComplexVector<Scalar> a_psi = apply_observable(spec, psi_T);
  return Scalar(4) * inner(*spec.grid, psi_T, a_psi) * a_psi;
}

/// 4 alpha'^2 omega V psi; callers scale by gamma1.
template <typename Scalar, typename Derived>
ComplexVector<Scalar> running_variation(const ProblemSpec<Scalar>& spec,
                                        const Eigen::MatrixBase<Derived>& psi_t, Scalar slope) {
  const Scalar omega = weight_omega(spec, psi_t);
  return (Scalar(4) * slope * slope * omega *
          (spec.control.template cast<std::complex<Scalar>>().array() * psi_t.array()))
      .matrix();
}

}  // namespace gpc
