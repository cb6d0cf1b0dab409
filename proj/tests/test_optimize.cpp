#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "gpc/optimize.hpp"
#include "support.hpp"

using namespace gpc;
using test::kPi;

namespace {

Control<double> smooth(const TimeGrid<double>& time, double f, double phase = 0) {
  Control<double> v(time, 0.0);
  for (Eigen::Index m = 0; m < time.nodes(); ++m)
    v.values[m] = std::sin(f * kPi * time.node(m) / time.horizon() + phase) - std::sin(phase);
  return v;
}

WeakGradient<double> random_gradient(const TimeGrid<double>& time, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  WeakGradient<double> g(time);
  for (auto& x : g.node_part) x = nd(rng);
  for (auto& x : g.midpoint_part) x = nd(rng);
  return g;
}

/// Metric matrix on the hat basis e_1..e_M, assembled column by column.
Eigen::MatrixXd dense_metric(const TimeGrid<double>& time, const RealVector<double>& p) {
  const Eigen::Index M = time.steps();
  Eigen::MatrixXd out(M, M);
  for (Eigen::Index j = 0; j < M; ++j) {
    Control<double> e(time, 0.0);
    e.values[j + 1] = 1;
    out.col(j) = metric_apply(time, p, e);
  }
  return out;
}

/// No observable, no interaction: J is the regularisation alone.
ProblemSpec<double> quadratic_problem(Eigen::Index steps) {
  ProblemSpec<double> s = test::split_problem(32, steps, 0.0, 0.0, 1e-3);
  s.observable = MultiplicationObservable<double>{RealVector<double>::Zero(32)};
  return s;
}

}  // namespace

TEST_CASE("pairing is linear in both arguments") {
  std::mt19937_64 rng(1);
  const TimeGrid<double> time(2, 20);
  const WeakGradient<double> g = random_gradient(time, rng), h = random_gradient(time, rng);
  const Control<double> u = smooth(time, 1), v = smooth(time, 2.5, 0.3);
  CHECK(pairing(2.0 * g + h, u) == doctest::Approx(2 * pairing(g, u) + pairing(h, u)).epsilon(1e-13));
  CHECK(pairing(g, -3.0 * u + v) == doctest::Approx(-3 * pairing(g, u) + pairing(g, v)).epsilon(1e-13));
  CHECK_THROWS_AS(pairing(g, Control<double>(TimeGrid<double>(2, 21), 0.0)), std::invalid_argument);
}

TEST_CASE("Riesz map") {
  const TimeGrid<double> time(10, 64);
  const double gamma2 = 1.5e-6, c = 0.37;
  const RealVector<double> p = RealVector<double>::Constant(64, gamma2);

  SUBCASE("constant node part has a closed-form direction") {
    WeakGradient<double> g(time);
    g.node_part.setConstant(c);
    const Control<double> d = riesz_solve(p, g);
    const RealVector<double> slope = d.slopes();
    for (Eigen::Index j = 0; j < 64; ++j) {
      const double t_mid = time.node(j) + 0.5 * time.dt();
      CHECK(slope[j] == doctest::Approx(-c * (10 - t_mid) / (2 * gamma2)).epsilon(1e-12));
    }
    for (Eigen::Index m = 0; m <= 64; ++m) {
      const double t = time.node(m);
      CHECK(d.values[m] == doctest::Approx(-c * (10 * t - t * t / 2) / (2 * gamma2)).epsilon(1e-12));
    }
  }
  SUBCASE("solves the weak equation and vanishes at t = 0") {
    std::mt19937_64 rng(2);
    const WeakGradient<double> g = random_gradient(time, rng);
    RealVector<double> weight(64);
    for (Eigen::Index j = 0; j < 64; ++j) weight[j] = 1 + 0.5 * std::sin(0.3 * j);
    const Control<double> d = riesz_solve(weight, g);
    CHECK(d.values[0] == 0);
    const RealVector<double> residual = metric_apply(time, weight, d) + to_dual(g);
    CHECK(residual.norm() <= 1e-12 * to_dual(g).norm());
  }
  SUBCASE("rejects a non-positive weight") {
    CHECK_THROWS_AS(riesz_map(time, RealVector<double>(RealVector<double>::Zero(64)), RealVector<double>(RealVector<double>::Ones(64))),
                    std::invalid_argument);
  }
}

TEST_CASE("dual norm") {
  std::mt19937_64 rng(4);
  const TimeGrid<double> time(3, 5);
  RealVector<double> p(5);
  p << 1.0, 0.5, 2.0, 0.3, 1.2;
  const WeakGradient<double> g = random_gradient(time, rng), h = random_gradient(time, rng);
  SUBCASE("matches a dense solve of the metric") {
    const Eigen::MatrixXd G = dense_metric(time, p);
    const Eigen::VectorXd r = to_dual(g);
    const double oracle = std::sqrt(r.dot(G.ldlt().solve(r)));
    CHECK(dual_norm(g, p) == doctest::Approx(oracle).epsilon(1e-10));
  }
  SUBCASE("is a norm") {
    CHECK(dual_norm(-2.5 * g, p) == doctest::Approx(2.5 * dual_norm(g, p)).epsilon(1e-13));
    CHECK(dual_norm(g + h, p) <= dual_norm(g, p) + dual_norm(h, p));
    CHECK(dual_norm(WeakGradient<double>(time), p) == 0);
  }
}

TEST_CASE("Armijo backtracking") {
  const TimeGrid<double> time(1, 8);
  const Control<double> a = smooth(time, 1.3);
  const auto quad = [](const Control<double>& u) { return 0.5 * u.values.squaredNorm(); };
  const double J0 = quad(a), slope = -a.values.squaredNorm();
  SUBCASE("full step on an exact quadratic model") {
    const LineSearchResult<double> r = armijo_search(quad, a, -1.0 * a, J0, slope);
    CHECK(r.success);
    CHECK(r.step == 1);
    CHECK(r.evaluations == 1);
  }
  SUBCASE("overshooting direction is halved") {
    const LineSearchResult<double> r = armijo_search(quad, a, -4.0 * a, J0, 4 * slope);
    CHECK(r.success);
    CHECK(r.step == 0.25);
    CHECK(r.value <= J0 + 1e-3 * r.step * 4 * slope);
  }
  SUBCASE("ascent directions are refused") {
    CHECK_THROWS_AS(armijo_search(quad, a, a, J0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(armijo_search(quad, a, a, J0, -slope), std::invalid_argument);
  }
  SUBCASE("a tie below the ulp of J0 is not a decrease") {
    const auto flat = [&](const Control<double>&) { return J0; };
    const double tiny = -1e-3 * J0 * std::numeric_limits<double>::epsilon();
    const LineSearchResult<double> r = armijo_search(flat, a, -1.0 * a, J0, tiny, 1e-3, 0.1);
    CHECK_FALSE(r.success);
    CHECK(r.evaluations == 4);
  }
}

TEST_CASE("MINRES") {
  SUBCASE("SPD system against a dense solve") {
    Eigen::MatrixXd A(5, 5);
    A << 4, 1, 0, 0, 1, 1, 3, 1, 0, 0, 0, 1, 5, 2, 0, 0, 0, 2, 6, 1, 1, 0, 0, 1, 2;
    Eigen::VectorXd b(5);
    b << 1, -2, 0.5, 3, -1;
    const auto r = minres<double>([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; },
                                  [](const Eigen::VectorXd& x) { return x; }, b, 1e-14, 50);
    CHECK(r.status == MinresStatus::converged);
    CHECK((r.solution - A.ldlt().solve(b)).norm() < 1e-10);
  }
  SUBCASE("indefinite operator: residuals never increase") {
    Eigen::VectorXd diag(12);
    for (int i = 0; i < 12; ++i) diag[i] = (i % 2 ? -1.0 : 1.0) * (1 + 0.7 * i);
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(12, -1, 2);
    const auto r = minres<double>([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return diag.cwiseProduct(x); },
                                  [](const Eigen::VectorXd& x) { return x; }, b, 1e-12, 50);
    CHECK(r.status == MinresStatus::converged);
    for (std::size_t k = 1; k < r.residuals.size(); ++k) CHECK(r.residuals[k] <= r.residuals[k - 1] * (1 + 1e-14));
    CHECK((diag.cwiseProduct(r.solution) - b).norm() < 1e-10 * b.norm());
  }
  SUBCASE("Hessian equal to the preconditioner converges in one step") {
    const ProblemSpec<double> s = quadratic_problem(40);
    const GradientEvaluation<double> at = reduced_gradient(s, test::wavy_control(s.time, 2));
    const MinresResult<double> r = newton_direction(s, at, 1e-10, 20);
    CHECK(r.status == MinresStatus::converged);
    CHECK(r.iterations == 1);
  }
}

TEST_CASE("discrete gradient matches central differences of J") {
  const ProblemSpec<double> s = test::split_problem(64, 128, 8.0, 4e-5, 1e-3);
  const Control<double> a = test::wavy_control(s.time, 4);
  const GradientEvaluation<double> at = reduced_gradient(s, a);
  const WeakGradient<double> g = discrete_gradient(s, at);
  for (double f : {0.5, 1.5, 3.0}) {
    CAPTURE(f);
    const Control<double> v = smooth(s.time, f, 0.2);
    const double h = 1e-5;
    const double fd =
        (detail::objective_value(s, a + h * v) - detail::objective_value(s, a + (-h) * v)) / (2 * h);
    CHECK(test::rel(pairing(g, v), fd) < 1e-7);
  }
}

TEST_CASE("Hessian products") {
  const ProblemSpec<double> s = test::split_problem(64, 128, 8.0, 4e-5, 1e-3);
  const Control<double> a = test::wavy_control(s.time, 4);
  const GradientEvaluation<double> at = reduced_gradient(s, a);
  const Control<double> v = smooth(s.time, 1.0, 0.4), w = smooth(s.time, 2.5, -0.3);

  SUBCASE("zero direction") {
    const WeakGradient<double> h = hessian_vec(s, at, Control<double>(s.time, 0.0));
    CHECK(h.node_part.norm() == 0);
    CHECK(h.midpoint_part.norm() == 0);
  }
  SUBCASE("symmetric") {
    const double vw = pairing(hessian_vec(s, at, v), w), wv = pairing(hessian_vec(s, at, w), v);
    CHECK(test::rel(vw, wv) < 1e-10);
  }
  SUBCASE("matches central differences of the discrete gradient") {
    const double h = 1e-4;
    const GradientEvaluation<double> plus = reduced_gradient(s, a + h * w), minus = reduced_gradient(s, a + (-h) * w);
    const double fd = (pairing(discrete_gradient(s, plus), v) - pairing(discrete_gradient(s, minus), v)) / (2 * h);
    CHECK(test::rel(pairing(hessian_vec(s, at, w), v), fd) < 1e-6);
  }
}

TEST_CASE("continuous adjoint gradient and Hessian approach the discrete ones at second order") {
  double prev_g = 0, prev_h = 0;
  for (Eigen::Index M : {Eigen::Index(256), Eigen::Index(512), Eigen::Index(1024)}) {
    CAPTURE(M);
    const ProblemSpec<double> s = test::split_problem(64, M, 8.0, 4e-5, 1e-3);
    const Control<double> a = test::wavy_control(s.time, 4);
    const GradientEvaluation<double> at = reduced_gradient(s, a);
    const Control<double> v = smooth(s.time, 0.5, 0.2);
    const double eg = std::abs(pairing(at.gradient, v) - pairing(discrete_gradient(s, at), v));
    const double eh = std::abs(pairing(linearized_hessian_vec(s, at, v), v) - pairing(hessian_vec(s, at, v), v));
    if (prev_g > 0) {
      CHECK(prev_g / eg == doctest::Approx(4).epsilon(0.15));
      CHECK(prev_h / eh == doctest::Approx(4).epsilon(0.15));
    }
    prev_g = eg;
    prev_h = eh;
  }
}

TEST_CASE("stationarity residual") {
  SUBCASE("vanishes for a constant control when nothing drives the state") {
    const ProblemSpec<double> s = quadratic_problem(32);
    const StationarityReport<double> r = stationarity_residual(reduced_gradient(s, s.initial_guess()));
    CHECK(r.weak == 0);
    CHECK(r.boundary_slope == 0);
  }
  SUBCASE("is positive away from a critical point") {
    const ProblemSpec<double> s = test::split_problem(64, 64, 8.0);
    const StationarityReport<double> r = stationarity_residual(reduced_gradient(s, test::wavy_control(s.time, 3)));
    CHECK(r.weak > 0);
    CHECK(r.boundary_slope > 0);
    CHECK(r.max_slope >= r.last_slope);
  }
  SUBCASE("certifies a converged Newton run") {
    const ProblemSpec<double> s = test::split_problem(64, 64, 8.0, 4e-5, 1e-4);
    const OptimizeReport<double> opt = newton(s, s.initial_guess());
    REQUIRE(opt.status == OptimizeStatus::converged);
    const StationarityReport<double> r =
        stationarity_residual(detail::evaluate_gradient(s, opt.control, GradientModel::discrete));
    CHECK(r.weak <= 10 * 1e-8 * opt.initial_dual_norm);
    CHECK(r.boundary_slope <= 1e-6 * r.max_slope);
    CHECK(r.last_slope > r.boundary_slope);
  }
}

TEST_CASE("optimizers") {
  SUBCASE("a critical start needs no iterations") {
    const ProblemSpec<double> s = quadratic_problem(32);
    const OptimizeReport<double> r = newton(s, s.initial_guess());
    CHECK(r.status == OptimizeStatus::converged);
    CHECK(r.iterations == 0);
  }
  SUBCASE("pure regularisation: Newton reaches the constant control in one step") {
    const ProblemSpec<double> s = quadratic_problem(32);
    const OptimizeReport<double> r = newton(s, test::wavy_control(s.time, 2));
    CHECK(r.status == OptimizeStatus::converged);
    CHECK(r.iterations <= 2);
    CHECK(r.control.values.cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("zero control potential: the state ignores the control") {
    ProblemSpec<double> s = test::split_problem(32, 32, 8.0);
    s.control = RealVector<double>::Zero(32);
    const double terminal = objective(s, solve_forward(s, s.initial_guess()), s.initial_guess()).terminal;
    const OptimizeReport<double> r = newton(s, test::wavy_control(s.time, 1));
    CHECK(r.status == OptimizeStatus::converged);
    CHECK(r.objective.terminal == doctest::Approx(terminal).epsilon(1e-12));
    CHECK(r.objective.reg_cost < 1e-12);
  }
  SUBCASE("accepted steps satisfy the Armijo condition and J decreases") {
    const ProblemSpec<double> s = test::split_problem(64, 64, 0.0, 0.0, 1e-3);
    OptimizerSettings<double> settings;
    settings.max_iterations = 6;
    for (const auto& r : {newton(s, s.initial_guess(), settings), gradient_descent(s, s.initial_guess(), settings)}) {
      REQUIRE(!r.history.empty());
      for (const auto& rec : r.history) {
        if (!rec.accepted) continue;
        CHECK(rec.slope < 0);
        CHECK(rec.value_next <= rec.value + settings.armijo_mu * rec.step * rec.slope);
      }
      CHECK(r.objective.total < r.history.front().value);
    }
  }
  SUBCASE("start must honour alpha0") {
    const ProblemSpec<double> s = quadratic_problem(16);
    CHECK_THROWS_AS(newton(s, Control<double>(s.time, 0.5)), std::invalid_argument);
  }
}
