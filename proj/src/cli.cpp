#include "gpc/cli.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "gpc/checks.hpp"
#include "gpc/config.hpp"
#include "gpc/output.hpp"
#include "gpc/scenarios.hpp"

namespace gpc {

namespace {

constexpr double kGradientTolerance = 1e-4;
constexpr double kSymmetryTolerance = 1e-6;
constexpr double kHessianTolerance = 1e-3;
constexpr double kOrderTolerance = 0.15;
constexpr double kMassTolerance = 1e-12;

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

int status_code(const OptimizeReport<double>& report) {
  // Running out of iterations is a budget, not a failure.
  const bool failed =
      report.status == OptimizeStatus::solver_failure || report.status == OptimizeStatus::line_search_failure;
  return failed ? exit_failure : exit_ok;
}

void print_run(std::ostream& out, const OptimizeReport<double>& report, const Analysis& a) {
  out << "status " << to_string(report.status) << " after " << report.iterations << " iterations";
  if (report.initial_dual_norm > 0) out << ", relative dual norm " << sci(report.final_dual_norm / report.initial_dual_norm);
  out << "\n";
  if (!report.message.empty()) out << "  " << report.message << "\n";
  out << "terminal " << sci(a.objective.terminal) << "  J " << sci(a.objective.total) << "  ||E||^2 "
      << sci(a.metrics.energy_l2_sq) << "  ||dE/dt||^2 " << sci(a.metrics.power_l2_sq) << "  mass drift "
      << sci(a.mass_drift) << "\n";
}

int cmd_scenario(const std::string& name, const std::string& out_dir, std::ostream& out, std::ostream& err,
                 const std::string& usage) {
  Scenario scenario;
  try {
    scenario = builtin(name);
  } catch (const UnknownScenario& e) {
    err << e.what() << "\n" << usage << "\nknown scenarios:";
    for (const auto& n : builtin_names()) err << " " << n;
    err << "\n";
    return exit_usage;
  }
  const std::filesystem::path dir = out_dir.empty() ? scenario.config.output.directory : std::filesystem::path(out_dir);
  scenario.config.output.directory = dir;
  out << "scenario " << name << ": " << scenario.description << "\n";
  const ScenarioResult result = run(scenario);
  if (result.warm_start) {
    out << "warm start " << *scenario.warm_start << ": ";
    print_run(out, result.warm_start->report, result.warm_start->analysis);
  }
  print_run(out, result.outcome.report, result.outcome.analysis);
  for (const auto& r : scenario.references) {
    const nlohmann::json j = reference_json({r}, result.outcome.analysis)[0];
    out << "  " << r.quantity << " measured " << sci(j["measured"].get<double>()) << " published " << sci(r.value)
        << " (ratio " << sci(j["ratio"].get<double>()) << ")\n";
  }
  write_scenario(dir, result);
  out << "wrote " << dir.string() << "\n";
  return status_code(result.outcome.report);
}

int cmd_optimize(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  RunConfig config = load_config(config_path);
  if (!out_dir.empty()) config.output.directory = out_dir;
  const RunOutcome o = optimize(config);
  print_run(out, o.report, o.analysis);
  nlohmann::json summary = analysis_json(o.analysis);
  summary["optimizer"] = report_json(config, o.report);
  summary["reference_targets"] = nlohmann::json::array();
  summary["runtime_seconds"] = o.seconds;
  summary["config"] = to_json(config);
  const auto grid = make_grid(config.half_width, static_cast<Eigen::Index>(config.points));
  write_outputs(config.output.directory, *grid, o.analysis, std::move(summary), &o.report);
  out << "wrote " << config.output.directory.string() << "\n";
  return status_code(o.report);
}

int cmd_simulate(const std::string& config_path, const std::string& control_path, const std::string& out_dir,
                 std::ostream& out) {
  RunConfig config = load_config(config_path);
  if (!out_dir.empty()) config.output.directory = out_dir;
  const ProblemSpec<double> spec = build_problem(config);
  const Control<double> alpha = read_control_csv(control_path, spec.time);
  if (std::abs(alpha.values[0] - spec.alpha0) > 0)
    throw ConfigError({control_path + ": control must start at alpha0 = " + std::to_string(spec.alpha0)});
  const Analysis a = analyze(spec, alpha, snapshot_times(config), false);
  out << "terminal " << sci(a.objective.terminal) << "  J " << sci(a.objective.total) << "  mass drift "
      << sci(a.mass_drift) << "\n";
  nlohmann::json summary = analysis_json(a);
  summary["control_file"] = control_path;
  summary["config"] = to_json(config);
  write_outputs(config.output.directory, *spec.grid, a, std::move(summary), nullptr);
  out << "wrote " << config.output.directory.string() << "\n";
  return exit_ok;
}

void print_fd_rows(std::ostream& out, const std::vector<FdRow>& rows, const char* label) {
  out << label << "\n  dir          h        analytic  finite-diff     rel.err\n";
  for (const auto& r : rows) {
    char line[128];
    std::snprintf(line, sizeof line, "  %3d  %9.1e  %14.6e  %14.6e  %10.3e\n", r.direction, r.h, r.analytic,
                  r.finite_difference, r.relative_error);
    out << line;
  }
}

int cmd_check(const std::string& config_path, const std::string& kind, std::uint64_t seed, std::ostream& out,
              std::ostream& err) {
  const RunConfig config = load_config(config_path);
  const ProblemSpec<double> spec = build_problem(config);
  const Control<double> alpha = initial_control(config, spec);
  const std::vector<double> steps = {1e-3, 1e-4, 1e-5};

  if (kind == "gradient") {
    const GradientCheck c = check_gradient(spec, alpha, smooth_directions(spec.time, 5, seed), steps,
                                           config.settings.gradient_model);
    print_fd_rows(out, c.rows, "gradient: <g, v> against central differences of J");
    out << "worst best-h relative error " << sci(c.worst_best_error) << " (tolerance " << sci(kGradientTolerance)
        << ")\n";
    if (c.worst_best_error > kGradientTolerance) {
      err << "gradient check failed: worst relative error " << sci(c.worst_best_error) << "\n";
      return exit_failure;
    }
    return exit_ok;
  }
  if (kind == "hessian") {
    const HessianCheck c = check_hessian(spec, alpha, smooth_directions(spec.time, 6, seed), steps,
                                          config.settings.gradient_model);
    out << "symmetry |<Hv,w> - <Hw,v>| / max:";
    for (double s : c.symmetry) out << " " << sci(s);
    out << "\n";
    print_fd_rows(out, c.rows, "hessian: <Hv, w> against central differences of <g, w>");
    out << "worst symmetry defect " << sci(c.worst_symmetry) << " (tolerance " << sci(kSymmetryTolerance)
        << "), worst best-h FD error " << sci(c.worst_best_error) << " (tolerance " << sci(kHessianTolerance)
        << ")\n";
    if (c.worst_symmetry > kSymmetryTolerance || c.worst_best_error > kHessianTolerance) {
      err << "hessian check failed\n";
      return exit_failure;
    }
    return exit_ok;
  }
  if (kind == "splitting-order") {
    const Eigen::Index M = spec.time.steps();
    if (M < 8 || M % 8 != 0) throw ConfigError({"/time/steps: splitting-order check needs a multiple of 8"});
    const std::vector<Eigen::Index> sweep = {M / 8, M / 4, M / 2};
    const OrderCheck c = check_splitting_order(
        spec, [&](double t) { return probe_control(spec, t); }, sweep, 8 * M);
    out << "splitting order against M_ref = " << c.reference_steps << "\n     M    rel.error   order\n";
    double worst = 0;
    for (std::size_t k = 0; k < c.steps.size(); ++k) {
      char line[96];
      if (k == 0)
        std::snprintf(line, sizeof line, "  %4ld  %11.4e       -\n", long(c.steps[k]), c.errors[k]);
      else
        std::snprintf(line, sizeof line, "  %4ld  %11.4e  %6.3f\n", long(c.steps[k]), c.errors[k], c.orders[k - 1]);
      out << line;
    }
    for (double p : c.orders) worst = std::max(worst, std::abs(p - 2.0));
    out << "worst deviation from order 2: " << sci(worst) << " (tolerance " << sci(kOrderTolerance) << ")\n";
    if (worst > kOrderTolerance) {
      err << "splitting-order check failed: order deviates from 2 by " << worst << "\n";
      return exit_failure;
    }
    return exit_ok;
  }
  if (kind == "mass") {
    const MassCheck c = check_mass(spec, sample_control(spec.time, [&](double t) { return probe_control(spec, t); }));
    out << "max relative mass drift " << sci(c.drift) << " at step " << c.worst_step << " (tolerance "
        << sci(kMassTolerance) << ")\n";
    if (c.drift > kMassTolerance) {
      err << "mass check failed: drift " << sci(c.drift) << "\n";
      return exit_failure;
    }
    return exit_ok;
  }
  err << "unknown check kind '" << kind << "'\n";
  return exit_usage;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal bilinear control of the 1D Gross-Pitaevskii equation", "gpc"};
  app.require_subcommand(1);

  std::string name, out_dir;
  auto* scenario = app.add_subcommand("scenario", "run a built-in experiment and write its outputs");
  scenario->add_option("name", name, "scenario name")->required();
  scenario->add_option("--out", out_dir, "output directory (default out/<name>)");

  std::string config_path;
  auto* opt = app.add_subcommand("optimize", "optimise a problem described by a JSON config");
  opt->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  opt->add_option("--out", out_dir, "output directory (overrides the config)");

  std::string control_path;
  auto* sim = app.add_subcommand("simulate", "propagate under a given control table");
  sim->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  sim->add_option("--control", control_path, "CSV with columns t,alpha")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "output directory (overrides the config)");

  std::string kind;
  std::uint64_t seed = 20240917;
  auto* check = app.add_subcommand("check", "compare the implementation against oracles");
  check->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  check->add_option("--kind", kind, "gradient | hessian | splitting-order | mass")
      ->required()
      ->check(CLI::IsMember({"gradient", "hessian", "splitting-order", "mass"}));
  check->add_option("--seed", seed, "seed for the random test directions")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*scenario) return cmd_scenario(name, out_dir, out, err, scenario->help());
    if (*opt) return cmd_optimize(config_path, out_dir, out);
    if (*sim) return cmd_simulate(config_path, control_path, out_dir, out);
    return cmd_check(config_path, kind, seed, out, err);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return exit_usage;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return exit_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace gpc
