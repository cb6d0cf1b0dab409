#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpc/config.hpp"
#include "gpc/functionals.hpp"
#include "gpc/optimize.hpp"

namespace gpc {

/// A published number the run can be compared against. `provenance` says in
/// words which experiment and which quantity it is.
struct ReferenceValue {
  std::string quantity;  // "terminal", "energy_l2_sq" or "power_l2_sq"
  double value = 0;
  std::string provenance;
};

struct Scenario {
  std::string name;
  std::string description;
  RunConfig config;
  std::optional<std::string> warm_start;  // linear scenario whose optimum seeds this one
  std::vector<ReferenceValue> references;
};

class UnknownScenario : public std::invalid_argument {
 public:
  explicit UnknownScenario(const std::string& name) : std::invalid_argument("unknown scenario '" + name + "'") {}
};

const std::vector<std::string>& builtin_names();
Scenario builtin(const std::string& name);

/// Everything derived from one control on one problem: the post-processing
/// shared by optimize, simulate and the scenario runner.
struct Analysis {
  Control<double> control;
  Trajectory<double> state;
  ObjectiveBreakdown<double> objective;
  EnergySeries<double> energy;
  EnergyMetrics<double> metrics;
  WorkBalance<double> work;
  RealVector<double> omega;
  std::vector<double> snapshot_times;  // snapped to the nearest time node
  RealMatrix<double> density;          // one column per snapshot
  RealVector<double> target;           // plot aid, empty if not defined
  double mass_drift = 0;               // max_m |mass(psi_m) / mass(psi_0) - 1|
  std::optional<StationarityReport<double>> stationarity;
  double gradient_dual_norm = 0;
};

/// `with_gradient` also evaluates the gradient of the given model for the
/// stationarity check; use the model the optimizer ran with.
Analysis analyze(const ProblemSpec<double>& spec, const Control<double>& control,
                 const std::vector<double>& snapshot_times, bool with_gradient,
                 GradientModel model = GradientModel::discrete);

/// Snapshot times from the config, or {0, 0.4 T, T}.
std::vector<double> snapshot_times(const RunConfig& config);

struct RunOutcome {
  RunConfig config;
  OptimizeReport<double> report;
  Analysis analysis;
  double seconds = 0;
};

OptimizeReport<double> run_optimizer(const RunConfig& config, const ProblemSpec<double>& spec,
                                     const Control<double>& start);

/// Optimises the configured problem from `start` (or the configured initial control).
RunOutcome optimize(const RunConfig& config, const std::optional<Control<double>>& start = std::nullopt);

/// Optimal controls of finished scenarios, reused as warm starts.
class WarmStartCache {
 public:
  const Control<double>* find(const std::string& name) const {
    const auto it = controls_.find(name);
    return it == controls_.end() ? nullptr : &it->second;
  }
  void store(const std::string& name, const Control<double>& control) { controls_.insert_or_assign(name, control); }

 private:
  std::map<std::string, Control<double>> controls_;
};

struct ScenarioResult {
  Scenario scenario;
  RunOutcome outcome;
  std::optional<RunOutcome> warm_start;  // present when the linear run had to be computed here
};

ScenarioResult run(const Scenario& scenario, WarmStartCache* cache = nullptr);

}  // namespace gpc
