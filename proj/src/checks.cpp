#include "gpc/checks.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gpc/parallel.hpp"

namespace gpc {

namespace {

double relative(double value, double reference) {
  const double scale = std::max(std::abs(reference), std::abs(value));
  return scale > 0 ? std::abs(value - reference) / scale : 0.0;
}

ProblemSpec<double> with_steps(const ProblemSpec<double>& spec, Eigen::Index steps) {
  ProblemSpec<double> out = spec;
  out.time = TimeGrid<double>(spec.time.horizon(), steps);
  return out;
}

}  // namespace

std::vector<Control<double>> smooth_directions(const TimeGrid<double>& time, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  constexpr int modes = 4;
  std::vector<Control<double>> out;
  for (int d = 0; d < count; ++d) {
    double c[modes];
    for (double& ck : c) ck = normal(rng);
    Control<double> v(time, 0.0);
    for (Eigen::Index m = 0; m < time.nodes(); ++m) {
      const double s = time.node(m) / time.horizon();
      double value = 0;
      for (int k = 1; k <= modes; ++k) value += c[k - 1] * std::sin((k - 0.5) * std::numbers::pi * s) / k;
      v.values[m] = value;
    }
    out.push_back(std::move(v));
  }
  return out;
}

GradientCheck check_gradient(const ProblemSpec<double>& spec, const Control<double>& alpha,
                             const std::vector<Control<double>>& directions, const std::vector<double>& steps,
                             GradientModel model) {
  const GradientEvaluation<double> eval = detail::evaluate_gradient(spec, alpha, model);
  const std::size_t nd = directions.size(), nh = steps.size();
  std::vector<double> fd(nd * nh);
  parallel_for(nd * nh, [&](std::size_t k) {
    const Control<double>& v = directions[k / nh];
    const double h = steps[k % nh];
    const double plus = detail::objective_value(spec, alpha + h * v);
    const double minus = detail::objective_value(spec, alpha + (-h) * v);
    fd[k] = (plus - minus) / (2 * h);
  });
  GradientCheck out;
  for (std::size_t d = 0; d < nd; ++d) {
    const double analytic = pairing(eval.gradient, directions[d]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nh; ++i) {
      const double f = fd[d * nh + i];
      const double err = relative(analytic, f);
      out.rows.push_back({static_cast<int>(d), steps[i], analytic, f, err});
      best = std::min(best, err);
    }
    out.best_error.push_back(best);
    out.worst_best_error = std::max(out.worst_best_error, best);
  }
  return out;
}

HessianCheck check_hessian(const ProblemSpec<double>& spec, const Control<double>& alpha,
                           const std::vector<Control<double>>& directions, const std::vector<double>& steps,
                           GradientModel model) {
  if (directions.size() % 2 != 0) throw std::invalid_argument("check_hessian: need an even number of directions");
  const GradientEvaluation<double> eval = reduced_gradient(spec, alpha);
  const std::size_t pairs = directions.size() / 2, nh = steps.size();
  std::vector<WeakGradient<double>> hv(directions.size(), WeakGradient<double>(spec.time));
  // Warm the shared sensitivity cache before fanning out.
  hv[0] = hessian_vec(spec, eval, directions[0]);
  parallel_for(directions.size() - 1, [&](std::size_t k) { hv[k + 1] = hessian_vec(spec, eval, directions[k + 1]); });
  std::vector<double> fd(pairs * nh);
  parallel_for(pairs * nh, [&](std::size_t k) {
    const Control<double>& v = directions[2 * (k / nh)];
    const Control<double>& w = directions[2 * (k / nh) + 1];
    const double h = steps[k % nh];
    const GradientEvaluation<double> plus = detail::evaluate_gradient(spec, alpha + h * v, model);
    const GradientEvaluation<double> minus = detail::evaluate_gradient(spec, alpha + (-h) * v, model);
    fd[k] = (pairing(plus.gradient, w) - pairing(minus.gradient, w)) / (2 * h);
  });
  HessianCheck out;
  for (std::size_t p = 0; p < pairs; ++p) {
    const Control<double>& v = directions[2 * p];
    const Control<double>& w = directions[2 * p + 1];
    const double hvw = pairing(hv[2 * p], w), hwv = pairing(hv[2 * p + 1], v);
    const double sym = relative(hvw, hwv);
    out.symmetry.push_back(sym);
    out.worst_symmetry = std::max(out.worst_symmetry, sym);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nh; ++i) {
      const double f = fd[p * nh + i];
      const double err = relative(hvw, f);
      out.rows.push_back({static_cast<int>(p), steps[i], hvw, f, err});
      best = std::min(best, err);
    }
    out.best_error.push_back(best);
    out.worst_best_error = std::max(out.worst_best_error, best);
  }
  return out;
}

Control<double> sample_control(const TimeGrid<double>& time, const std::function<double(double)>& alpha) {
  Control<double> out(time, 0.0);
  for (Eigen::Index m = 0; m < time.nodes(); ++m) out.values[m] = alpha(time.node(m));
  return out;
}

double probe_control(const ProblemSpec<double>& spec, double t) {
  return spec.alpha0 + std::sin(2 * std::numbers::pi * t / spec.time.horizon());
}

OrderCheck check_splitting_order(const ProblemSpec<double>& spec, const std::function<double(double)>& alpha,
                                 const std::vector<Eigen::Index>& steps, Eigen::Index reference_steps) {
  OrderCheck out;
  out.steps = steps;
  out.reference_steps = reference_steps;
  std::vector<Eigen::Index> all = steps;
  all.push_back(reference_steps);
  std::vector<ComplexVector<double>> terminal(all.size());
  parallel_for(all.size(), [&](std::size_t k) {
    const ProblemSpec<double> s = with_steps(spec, all[k]);
    terminal[k] = solve_forward(s, sample_control(s.time, alpha)).terminal();
  });
  const ComplexVector<double>& ref = terminal.back();
  for (std::size_t k = 0; k < steps.size(); ++k) out.errors.push_back((terminal[k] - ref).norm() / ref.norm());
  for (std::size_t k = 0; k + 1 < steps.size(); ++k)
    out.orders.push_back(std::log(out.errors[k] / out.errors[k + 1]) /
                         std::log(double(steps[k + 1]) / double(steps[k])));
  return out;
}

MassCheck check_mass(const ProblemSpec<double>& spec, const Control<double>& alpha) {
  const Trajectory<double> psi = solve_forward(spec, alpha);
  MassCheck out;
  const double m0 = mass(*spec.grid, psi.field(0));
  for (Eigen::Index m = 0; m < spec.time.nodes(); ++m) {
    const double drift = std::abs(mass(*spec.grid, psi.field(m)) / m0 - 1.0);
    if (drift > out.drift) {
      out.drift = drift;
      out.worst_step = m;
    }
  }
  return out;
}

}  // namespace gpc
