#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gpc/dynamics.hpp"
#include "gpc/functionals.hpp"
#include "support.hpp"

using namespace gpc;
using test::kPi;

namespace {

Control<double> ramp(const TimeGrid<double>& time, double slope) {
  Control<double> a(time, 0.0);
  for (Eigen::Index m = 0; m < time.nodes(); ++m) a.values[m] = slope * time.node(m);
  return a;
}

}  // namespace

TEST_CASE("energy of the zero field is zero") {
  const ProblemSpec<double> s = test::split_problem(64, 16, 8.0);
  CHECK(energy(s, ComplexVector<double>(ComplexVector<double>::Zero(64)), 3.0) == 0);
}

TEST_CASE("harmonic ground state has energy omega0 / 2") {
  const ProblemSpec<double> s = test::split_problem(256, 16);
  CHECK(energy(s, s.psi0, 0.0) == doctest::Approx(0.5 * std::sqrt(0.15)).epsilon(1e-9));
}

TEST_CASE("energy of a moving Gaussian against an independent quadrature") {
  ProblemSpec<double> s = test::split_problem(256, 16, 2.0);
  const double c = -1.5, w = 1.2, k = 0.8, alpha = 0.7;
  const ComplexVector<double> psi = test::gaussian(*s.grid, c, w, k);
  // |psi_x|^2 integrates to 1/(2 w^2) + k^2; the rest on a ten times finer mesh.
  const double kinetic = 0.5 * (1 / (2 * w * w) + k * k);
  const SpatialGrid<double> fine(20, 2560);
  double rest = 0;
  for (Eigen::Index i = 0; i < 2560; ++i) {
    const double x = fine.nodes()[i];
    const double rho = std::exp(-(x - c) * (x - c) / (w * w)) / (w * std::sqrt(kPi));
    const double V = std::exp(-8 * x * x / 400), U = 30 * x * x / 400;
    rest += fine.spacing() * ((alpha * V + U) * rho + 0.5 * 2.0 * rho * rho);
  }
  CHECK(energy(s, psi, alpha) == doctest::Approx(kinetic + rest).epsilon(1e-10));
}

TEST_CASE("omega is the mass when V is one") {
  ProblemSpec<double> s = test::split_problem(64, 32, 8.0);
  s.control = RealVector<double>::Ones(64);
  const Trajectory<double> psi = solve_forward(s, test::wavy_control(s.time, 2));
  const RealVector<double> omega = weight_series(s, psi);
  CHECK((omega.array() - 1).abs().maxCoeff() < 1e-12);
}

TEST_CASE("work balance") {
  SUBCASE("constant control does no work") {
    const ProblemSpec<double> s = test::split_problem(64, 64, 8.0);
    const Control<double> a(s.time, 1.3);
    const WorkBalance<double> w = work(energy_series(s, solve_forward(s, a), a));
    CHECK(w.power_integral == 0);
    CHECK(std::abs(w.energy_difference) < 1e-3);
  }
  SUBCASE("energy change equals the integrated power up to O(dt^2)") {
    double previous = 0;
    for (Eigen::Index M : {Eigen::Index(128), Eigen::Index(256), Eigen::Index(512)}) {
      const ProblemSpec<double> s = test::split_problem(128, M, 8.0);
      const Control<double> a = test::wavy_control(s.time, 5);
      const WorkBalance<double> w = work(energy_series(s, solve_forward(s, a), a));
      const double defect = std::abs(w.energy_difference - w.power_integral);
      CAPTURE(M);
      CHECK(defect < 1e-2 * std::abs(w.power_integral));
      if (previous > 0) CHECK(previous / defect == doctest::Approx(4).epsilon(0.2));
      previous = defect;
    }
  }
}

TEST_CASE("objective parts") {
  ProblemSpec<double> s = test::split_problem(64, 50, 0.0, 3e-3, 2e-4);
  s.control = RealVector<double>::Ones(64);  // omega = 1
  const Control<double> a = ramp(s.time, 0.4);
  const Trajectory<double> psi = solve_forward(s, a);
  const ObjectiveBreakdown<double> J = objective(s, psi, a);
  CHECK(J.reg_cost == doctest::Approx(2e-4 * 0.16 * 10).epsilon(1e-12));
  CHECK(J.work_cost == doctest::Approx(3e-3 * 0.16 * 10).epsilon(1e-10));
  CHECK(J.terminal == doctest::Approx(J.expectation * J.expectation));
  CHECK(J.total == doctest::Approx(J.terminal + J.work_cost + J.reg_cost));
  const auto& A = std::get<MultiplicationObservable<double>>(s.observable).profile;
  CHECK(J.expectation <= A.maxCoeff());
  CHECK(J.expectation >= A.minCoeff());
}

TEST_CASE("projection observable") {
  ProblemSpec<double> s = test::split_problem(64, 32, 8.0);
  const Control<double> a = test::wavy_control(s.time, 1);
  const ComplexVector<double> psi_T = solve_forward(s, a).terminal();
  SUBCASE("reaching the target costs nothing") {
    s.observable = ProjectionObservable<double>{std::polar(1.0, 0.4) * psi_T};
    const ObjectiveBreakdown<double> J = objective(s, solve_forward(s, a), a);
    CHECK(std::abs(J.expectation) < 1e-12);
  }
  SUBCASE("an orthogonal target gives expectation -1") {
    std::mt19937_64 rng(3);
    ComplexVector<double> t = test::random_field(64, rng);
    t -= (psi_T.dot(t) / psi_T.squaredNorm()) * psi_T;
    t /= std::sqrt(mass(*s.grid, t));
    s.observable = ProjectionObservable<double>{t};
    CHECK(objective(s, solve_forward(s, a), a).expectation == doctest::Approx(-1).epsilon(1e-12));
  }
}

TEST_CASE("state variations match finite differences in psi") {
  std::mt19937_64 rng(5);
  const ProblemSpec<double> s = test::split_problem(64, 16, 8.0);
  const ComplexVector<double> psi = test::gaussian(*s.grid, 2, 1.5, 0.3);
  const ComplexVector<double> delta = test::random_field(64, rng);
  const double h = 1e-6;
  auto terminal = [&](const ComplexVector<double>& p) {
    const double e = inner(*s.grid, p, apply_observable(s, p));
    return e * e;
  };
  const ComplexVector<double> pp = psi + h * delta, pm = psi - h * delta;
  const double fd = (terminal(pp) - terminal(pm)) / (2 * h);
  CHECK(inner(*s.grid, terminal_variation(s, psi), delta) == doctest::Approx(fd).epsilon(1e-8));

  const double slope = 0.9;
  auto running = [&](const ComplexVector<double>& p) {
    const double w = weight_omega(s, p);
    return slope * slope * w * w;
  };
  const double fd_run = (running(pp) - running(pm)) / (2 * h);
  CHECK(inner(*s.grid, running_variation(s, psi, slope), delta) == doctest::Approx(fd_run).epsilon(1e-8));
}

TEST_CASE("objective is invariant under a global phase") {
  ProblemSpec<double> s = test::split_problem(64, 64, 8.0, 4e-5, 1e-9);
  const Control<double> a = test::wavy_control(s.time, 3);
  const double J0 = objective(s, solve_forward(s, a), a).total;
  s.psi0 *= std::polar(1.0, 1.1);
  CHECK(objective(s, solve_forward(s, a), a).total == doctest::Approx(J0).epsilon(1e-12));
}

TEST_CASE("regularisation is convex in the control") {
  const ProblemSpec<double> s = test::split_problem(32, 40);
  const Trajectory<double> psi = solve_forward(s, s.initial_guess());
  const Control<double> a = test::wavy_control(s.time, 3), b = ramp(s.time, -0.2);
  const Control<double> mid = 0.5 * a + 0.5 * b;
  const double ra = objective(s, psi, a).reg_cost, rb = objective(s, psi, b).reg_cost;
  CHECK(objective(s, psi, mid).reg_cost <= 0.5 * (ra + rb));
}
