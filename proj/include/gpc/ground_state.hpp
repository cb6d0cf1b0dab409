#pragma once

#include <cmath>
#include <stdexcept>

#include "gpc/functionals.hpp"
#include "gpc/spectral_grid.hpp"

namespace gpc {

template <typename Scalar = double>
struct GroundStateResult {
  ComplexVector<Scalar> state;
  Scalar energy = 0;
  int steps = 0;
};

/// Ground state of -d_xx/2 + U by normalised imaginary-time splitting.
///
/// Runs a short ladder of decreasing pseudo-time steps; each rung iterates
/// until the energy changes by less than `tolerance` between checks.
template <typename Scalar>
GroundStateResult<Scalar> ground_state(const SpatialGrid<Scalar>& grid, const RealVector<Scalar>& trap,
                                       Scalar tolerance = Scalar(1e-10), int max_steps = 400000) {
  if (trap.size() != grid.size()) throw GridMismatch("trap potential length");
  const auto& x = grid.nodes();
  const auto& k = grid.wavenumbers();
  SpectralTransform<Scalar> transform(grid.size());

  // Seed: Gaussian matched to the curvature of U at its minimum.
  Eigen::Index i_min;
  trap.minCoeff(&i_min);
  const Eigen::Index N = grid.size();
  const Eigen::Index ip = (i_min + 1) % N, im = (i_min + N - 1) % N;
  const Scalar h = grid.spacing();
  const Scalar curvature = std::max((trap[ip] - 2 * trap[i_min] + trap[im]) / (h * h), Scalar(1e-2));
  const Scalar width = Scalar(1) / std::sqrt(std::sqrt(curvature));
  ComplexVector<Scalar> psi(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Scalar s = (x[i] - x[i_min]) / width;
    psi[i] = std::exp(-Scalar(0.5) * s * s);
  }
  psi /= std::sqrt(mass(grid, psi));

  auto energy_of = [&](const ComplexVector<Scalar>& u) {
    return Scalar(0.5) * spectral_gradient_norm_sq(grid, u, transform) +
           h * (trap.array() * u.array().abs2()).sum();
  };

  GroundStateResult<Scalar> out;
  Scalar e_prev = energy_of(psi);
  for (Scalar dtau : {Scalar(1e-1), Scalar(1e-2), Scalar(1e-3)}) {
    const RealVector<Scalar> half_potential = (-Scalar(0.5) * dtau * trap.array()).exp().matrix();
    const ComplexVector<Scalar> kinetic =
        (-Scalar(0.5) * dtau * k.array().square()).exp().matrix().template cast<std::complex<Scalar>>();
    const int check_every = 20;
    while (out.steps < max_steps) {
      for (int s = 0; s < check_every; ++s) {
        psi.array() *= half_potential.array();
        transform.apply_multiplier(psi, kinetic);
        psi.array() *= half_potential.array();
        psi /= std::sqrt(mass(grid, psi));
      }
      out.steps += check_every;
      const Scalar e = energy_of(psi);
      const bool done = std::abs(e - e_prev) < tolerance;
      e_prev = e;
      if (done) break;
    }
  }
  // Fix the global phase so the state is real and positive at its peak.
  psi = psi.real().template cast<std::complex<Scalar>>();
  Eigen::Index i_peak;
  psi.cwiseAbs().maxCoeff(&i_peak);
  if (psi[i_peak].real() < 0) psi = -psi;
  psi /= std::sqrt(mass(grid, psi));
  out.state = psi;
  out.energy = energy_of(psi);
  return out;
}

}  // namespace gpc
