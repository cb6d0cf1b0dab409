#include "gpc/scenarios.hpp"

#include <chrono>
#include <cmath>

namespace gpc {

namespace {

constexpr double kHalfWidth = 20;
constexpr double kKappa = 0.07;
constexpr double kY1 = -2 * kHalfWidth / 8;
constexpr double kY2 = 2 * kHalfWidth / 8;

// Gaussian wells of the observable have squared width kappa L^2.
double well_width() { return std::sqrt(kKappa) * kHalfWidth; }

RunConfig base_config() {
  RunConfig c;
  c.half_width = kHalfWidth;
  c.points = 256;
  c.horizon = 10;
  c.steps = 1024;
  c.trap = PotentialSpec{.kind = "harmonic", .strength = 30, .scale = kHalfWidth};
  c.initial_state = StateSpec{.kind = "ground-state"};
  c.alpha0 = 0;
  c.optimizer = OptimizerKind::newton;
  c.settings = OptimizerSettings<double>{};
  return c;
}

RunConfig split_config(double lambda, double gamma1, double gamma2) {
  RunConfig c = base_config();
  c.lambda = lambda;
  c.gamma1 = gamma1;
  c.gamma2 = gamma2;
  c.control_potential = PotentialSpec{.kind = "gaussian-bump",
                                      .offset = 0,
                                      .amplitude = 1,
                                      .center = 0,
                                      .width = kHalfWidth / std::sqrt(8.0)};
  c.observable.kind = "multiplication";
  c.observable.profile = PotentialSpec{.kind = "two-bump-complement", .width = well_width(), .centers = {kY1, kY2}};
  return c;
}

std::vector<ReferenceValue> split_references(const std::string& experiment, double terminal,
                                             std::optional<double> energy, std::optional<double> power) {
  std::vector<ReferenceValue> out{{"terminal", terminal, "reported <A psi(T), psi(T)>^2, " + experiment}};
  if (energy) out.push_back({"energy_l2_sq", *energy, "reported ||E||^2 over [0, T], " + experiment});
  if (power) out.push_back({"power_l2_sq", *power, "reported ||dE/dt||^2 over [0, T], " + experiment});
  return out;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"shift-linear",  "split-linear-g2", "split-linear-g1",
                                                 "split-bec-g1",  "split-bec-g2",    "split-attractive"};
  return names;
}

Scenario builtin(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "shift-linear") {
    s.description = "shift a linear wave packet towards y1 = -5 with a linear control potential";
    RunConfig c = base_config();
    c.control_potential = PotentialSpec{.kind = "linear-offset", .offset = 0.3, .slope = 3.0 / 200};
    c.observable.kind = "multiplication";
    c.observable.profile =
        PotentialSpec{.kind = "gaussian-bump", .offset = 1, .amplitude = -1, .center = kY1, .width = well_width()};
    c.gamma1 = 0;
    c.gamma2 = 1e-6;
    c.optimizer = OptimizerKind::gradient;
    c.settings.max_iterations = 20000;
    s.config = c;
  } else if (name == "split-linear-g2") {
    s.description = "split a linear wave packet, H1 regularisation only";
    s.config = split_config(0, 0, 1.5e-6);
    s.references = split_references("linear splitting with gamma1 = 0, gamma2 = 1.5e-6", 2.261e-3, 64.5, 95.0);
  } else if (name == "split-linear-g1") {
    s.description = "split a linear wave packet, work cost plus weak H1 regularisation";
    s.config = split_config(0, 4e-5, 1e-9);
    s.references = split_references("linear splitting with gamma1 = 4e-5, gamma2 = 1e-9", 2.269e-3, 49.1, 43.4);
  } else if (name == "split-bec-g1") {
    s.description = "split a repulsive condensate (lambda = 8), work cost plus weak H1 regularisation";
    s.config = split_config(8, 4e-5, 1e-9);
    s.warm_start = "split-linear-g1";
    s.references =
        split_references("repulsive condensate splitting with gamma1 = 4e-5, gamma2 = 1e-9", 3.720e-3, 79.5, 68.5);
  } else if (name == "split-bec-g2") {
    s.description = "split a repulsive condensate (lambda = 8), H1 regularisation only";
    s.config = split_config(8, 0, 1.5e-6);
    s.warm_start = "split-linear-g2";
    s.references =
        split_references("repulsive condensate splitting with gamma1 = 0, gamma2 = 1.5e-6", 3.382e-3, 91.8, 172.1);
  } else if (name == "split-attractive") {
    s.description = "split an attractive condensate (lambda = -1), work cost plus weak H1 regularisation";
    s.config = split_config(-1, 4e-5, 1e-9);
    s.warm_start = "split-linear-g1";
    s.references = split_references("attractive condensate splitting with gamma1 = 4e-5, gamma2 = 1e-9", 2.143e-3,
                                    std::nullopt, std::nullopt);
  } else {
    throw UnknownScenario(name);
  }
  s.config.output.directory = std::filesystem::path("out") / name;
  return s;
}

std::vector<double> snapshot_times(const RunConfig& config) {
  if (!config.output.snapshot_times.empty()) return config.output.snapshot_times;
  return {0.0, 0.4 * config.horizon, config.horizon};
}

Analysis analyze(const ProblemSpec<double>& spec, const Control<double>& control,
                 const std::vector<double>& times, bool with_gradient, GradientModel model) {
  Analysis a{control,
             solve_forward(spec, control),
             {},
             EnergySeries<double>{spec.time, {}, {}},
             {},
             {},
             {},
             {},
             {},
             {},
             0,
             std::nullopt,
             0};
  if (with_gradient) {
    const GradientEvaluation<double> eval = detail::evaluate_gradient(spec, control, model);
    a.stationarity = stationarity_residual(eval);
    a.gradient_dual_norm = dual_norm(eval.gradient, eval.metric);
  }
  a.objective = objective(spec, a.state, control);
  a.energy = energy_series(spec, a.state, control);
  a.metrics = energy_metrics(a.energy);
  a.work = work(a.energy);
  a.omega = weight_series(spec, a.state);

  const TimeGrid<double>& time = spec.time;
  a.density.resize(spec.grid->size(), static_cast<Eigen::Index>(times.size()));
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto m = std::clamp<Eigen::Index>(std::llround(times[k] / time.dt()), 0, time.steps());
    a.snapshot_times.push_back(time.node(m));
    a.density.col(static_cast<Eigen::Index>(k)) = a.state.field(m).cwiseAbs2();
  }

  if (const auto* obs = std::get_if<MultiplicationObservable<double>>(&spec.observable)) {
    RealVector<double> t = (1.0 - obs->profile.array()).cwiseMax(0.0).matrix();
    const double norm_sq = spec.grid->spacing() * t.squaredNorm();
    if (norm_sq > 0) a.target = t / std::sqrt(norm_sq);
  } else if (const auto* proj = std::get_if<ProjectionObservable<double>>(&spec.observable)) {
    a.target = proj->target.cwiseAbs2();
  }

  const double m0 = mass(*spec.grid, a.state.field(0));
  for (Eigen::Index m = 0; m < time.nodes(); ++m)
    a.mass_drift = std::max(a.mass_drift, std::abs(mass(*spec.grid, a.state.field(m)) / m0 - 1.0));
  return a;
}

OptimizeReport<double> run_optimizer(const RunConfig& config, const ProblemSpec<double>& spec,
                                     const Control<double>& start) {
  return config.optimizer == OptimizerKind::gradient ? gradient_descent(spec, start, config.settings)
                                                     : newton(spec, start, config.settings);
}

RunOutcome optimize(const RunConfig& config, const std::optional<Control<double>>& start) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec<double> spec = build_problem(config);
  const Control<double> first = start ? *start : initial_control(config, spec);
  OptimizeReport<double> report = run_optimizer(config, spec, first);
  Analysis analysis = analyze(spec, report.control, snapshot_times(config), true, config.settings.gradient_model);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return RunOutcome{config, std::move(report), std::move(analysis), seconds};
}

ScenarioResult run(const Scenario& scenario, WarmStartCache* cache) {
  WarmStartCache local;
  WarmStartCache& store = cache ? *cache : local;
  std::optional<RunOutcome> warm;
  std::optional<Control<double>> start;
  if (scenario.warm_start) {
    if (const Control<double>* hit = store.find(*scenario.warm_start)) {
      start = *hit;
    } else {
      ScenarioResult linear = run(builtin(*scenario.warm_start), &store);
      start = linear.outcome.report.control;
      warm = std::move(linear.outcome);
    }
  }
  RunOutcome outcome = optimize(scenario.config, start);
  store.store(scenario.name, outcome.report.control);
  return ScenarioResult{scenario, std::move(outcome), std::move(warm)};
}

}  // namespace gpc
