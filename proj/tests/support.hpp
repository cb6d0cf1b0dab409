#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "gpc/ground_state.hpp"
#include "gpc/optimize.hpp"

namespace gpc::test {

inline constexpr double kPi = std::numbers::pi;

/// Two-well splitting problem on a configurable mesh; the observable wells have
/// squared width kappa L^2 as in the built-in scenarios.
inline ProblemSpec<double> split_problem(Eigen::Index points, Eigen::Index steps, double lambda = 0,
                                         double gamma1 = 0, double gamma2 = 1.5e-6, double horizon = 10) {
  const double L = 20;
  auto grid = make_grid(L, points);
  ProblemSpec<double> s{grid, TimeGrid<double>(horizon, steps)};
  const auto& x = grid->nodes();
  s.trap = (30.0 * (x.array() / L).square()).matrix();
  s.control = (-8.0 * x.array().square() / (L * L)).exp().matrix();
  const double w2 = 0.07 * L * L;
  s.observable = MultiplicationObservable<double>{
      (1.0 - (-(x.array() + 5).square() / w2).exp() - (-(x.array() - 5).square() / w2).exp()).matrix()};
  s.lambda = lambda;
  s.gamma1 = gamma1;
  s.gamma2 = gamma2;
  s.psi0 = ground_state(*grid, s.trap).state;
  return s;
}

/// Normalised Gaussian exp(-(x - c)^2 / (2 s^2) + i k x).
inline ComplexVector<double> gaussian(const SpatialGrid<double>& grid, double c, double s, double k = 0) {
  ComplexVector<double> psi(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double d = (grid.nodes()[i] - c) / s;
    psi[i] = std::polar(std::exp(-0.5 * d * d), k * grid.nodes()[i]);
  }
  return psi / std::sqrt(mass(grid, psi));
}

/// A smooth control with alpha(0) = alpha0.
inline Control<double> wavy_control(const TimeGrid<double>& time, double amplitude, double alpha0 = 0) {
  Control<double> a(time, alpha0);
  for (Eigen::Index m = 0; m < time.nodes(); ++m) {
    const double t = time.node(m);
    a.values[m] += amplitude * std::sin(0.3 * t) * t / time.horizon();
  }
  return a;
}

inline ComplexVector<double> random_field(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  ComplexVector<double> v(n);
  for (auto& z : v) z = {nd(rng), nd(rng)};
  return v;
}

inline double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0 ? std::abs(a - b) / s : 0.0;
}

}  // namespace gpc::test
