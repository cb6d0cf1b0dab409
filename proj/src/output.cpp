#include "gpc/output.hpp"

#include <cstdio>
#include <fstream>
#include <system_error>

namespace gpc {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string column_label(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "rho_t%g", t);
  return buf;
}

const char* to_string(DirectionKind k) { return k == DirectionKind::newton ? "newton" : "gradient"; }

double measured(const std::string& quantity, const Analysis& a) {
  if (quantity == "terminal") return a.objective.terminal;
  if (quantity == "energy_l2_sq") return a.metrics.energy_l2_sq;
  if (quantity == "power_l2_sq") return a.metrics.power_l2_sq;
  throw std::invalid_argument("unknown reference quantity '" + quantity + "'");
}

}  // namespace

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

std::string control_csv(const Control<double>& control) {
  std::string s = "t,alpha\n";
  for (Eigen::Index m = 0; m < control.time.nodes(); ++m)
    s += fmt(control.time.node(m)) + "," + fmt(control.values[m]) + "\n";
  return s;
}

std::string omega_csv(const TimeGrid<double>& time, const RealVector<double>& omega) {
  std::string s = "t,omega\n";
  for (Eigen::Index m = 0; m < time.nodes(); ++m) s += fmt(time.node(m)) + "," + fmt(omega[m]) + "\n";
  return s;
}

std::string energy_csv(const EnergySeries<double>& energy) {
  std::string s = "t,energy\n";
  for (Eigen::Index m = 0; m < energy.time.nodes(); ++m)
    s += fmt(energy.time.node(m)) + "," + fmt(energy.energy[m]) + "\n";
  return s;
}

std::string density_csv(const SpatialGrid<double>& grid, const Analysis& a) {
  std::string s = "x";
  for (double t : a.snapshot_times) s += "," + column_label(t);
  const bool has_target = a.target.size() == grid.size();
  if (has_target) s += ",target";
  s += "\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    s += fmt(grid.nodes()[i]);
    for (Eigen::Index k = 0; k < a.density.cols(); ++k) s += "," + fmt(a.density(i, k));
    if (has_target) s += "," + fmt(a.target[i]);
    s += "\n";
  }
  return s;
}

std::string history_csv(const std::vector<IterationRecord<double>>& history) {
  std::string s = "iteration,J,dual_norm,direction,slope,step,J_next,inner_iterations,accepted\n";
  for (const auto& r : history) {
    s += std::to_string(r.iteration) + "," + fmt(r.value) + "," + fmt(r.dual_norm) + "," + to_string(r.direction) +
         "," + fmt(r.slope) + "," + fmt(r.step) + "," + fmt(r.value_next) + "," +
         std::to_string(r.inner_iterations) + "," + (r.accepted ? "1" : "0") + "\n";
  }
  return s;
}

nlohmann::json reference_json(const std::vector<ReferenceValue>& references, const Analysis& a) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : references) {
    const double m = measured(r.quantity, a);
    out.push_back({{"quantity", r.quantity},
                   {"value", r.value},
                   {"measured", m},
                   {"ratio", m / r.value},
                   {"tag", "paper_target"},
                   {"provenance", r.provenance}});
  }
  return out;
}

nlohmann::json analysis_json(const Analysis& a) {
  nlohmann::json j;
  j["objective"] = {{"expectation", a.objective.expectation},
                    {"terminal", a.objective.terminal},
                    {"work_cost", a.objective.work_cost},
                    {"reg_cost", a.objective.reg_cost},
                    {"total", a.objective.total}};
  j["energy_metrics"] = {{"energy_l2_sq", a.metrics.energy_l2_sq}, {"power_l2_sq", a.metrics.power_l2_sq}};
  j["work"] = {{"energy_difference", a.work.energy_difference}, {"power_integral", a.work.power_integral}};
  j["mass_drift"] = a.mass_drift;
  j["snapshot_times"] = a.snapshot_times;
  if (a.stationarity) {
    j["stationarity"] = {{"weak_residual", a.stationarity->weak},
                         {"terminal_slope", a.stationarity->boundary_slope},
                         {"last_interval_slope", a.stationarity->last_slope},
                         {"max_slope", a.stationarity->max_slope},
                         {"gradient_dual_norm", a.gradient_dual_norm}};
  }
  return j;
}

nlohmann::json report_json(const RunConfig& config, const OptimizeReport<double>& r) {
  const double rel = r.initial_dual_norm > 0 ? r.final_dual_norm / r.initial_dual_norm : 0.0;
  int accepted = 0;
  for (const auto& h : r.history) accepted += h.accepted;
  return {{"method", to_string(config.optimizer)},
          {"status", to_string(r.status)},
          {"iterations", r.iterations},
          {"accepted_steps", accepted},
          {"forward_solves", r.forward_solves},
          {"initial_dual_norm", r.initial_dual_norm},
          {"final_dual_norm", r.final_dual_norm},
          {"relative_dual_norm", rel},
          {"tolerance", config.settings.tolerance},
          {"message", r.message}};
}

void write_outputs(const std::filesystem::path& dir, const SpatialGrid<double>& grid, const Analysis& a,
                   nlohmann::json summary, const OptimizeReport<double>* report) {
  std::filesystem::create_directories(dir);
  const TimeGrid<double>& time = a.control.time;
  write_atomically(dir / "control.csv", control_csv(a.control));
  write_atomically(dir / "omega.csv", omega_csv(time, a.omega));
  write_atomically(dir / "energy.csv", energy_csv(a.energy));
  write_atomically(dir / "density.csv", density_csv(grid, a));
  if (report) write_atomically(dir / "history.csv", history_csv(report->history));
  write_atomically(dir / "summary.json", summary.dump(2) + "\n");
}

void write_scenario(const std::filesystem::path& dir, const ScenarioResult& result) {
  const RunOutcome& o = result.outcome;
  nlohmann::json summary = analysis_json(o.analysis);
  summary["scenario"] = result.scenario.name;
  summary["description"] = result.scenario.description;
  summary["optimizer"] = report_json(o.config, o.report);
  summary["reference_targets"] = reference_json(result.scenario.references, o.analysis);
  if (result.scenario.warm_start) {
    nlohmann::json w{{"scenario", *result.scenario.warm_start}};
    if (result.warm_start) {
      w["optimizer"] = report_json(result.warm_start->config, result.warm_start->report);
      w["terminal"] = result.warm_start->analysis.objective.terminal;
      w["runtime_seconds"] = result.warm_start->seconds;
    }
    summary["warm_start"] = w;
  }
  summary["runtime_seconds"] = o.seconds;
  summary["config"] = to_json(o.config);
  const auto grid = make_grid(o.config.half_width, static_cast<Eigen::Index>(o.config.points));
  write_outputs(dir, *grid, o.analysis, std::move(summary), &o.report);
}

}  // namespace gpc
