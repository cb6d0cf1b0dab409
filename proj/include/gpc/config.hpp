#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpc/optimize.hpp"
#include "gpc/problem.hpp"

namespace gpc {

/// A potential on the spatial grid, either a named formula or a sampled table.
///
///   harmonic              strength * (x / scale)^2
///   linear-offset         offset + slope * x
///   gaussian-bump         offset + amplitude * exp(-(x - center)^2 / width^2)
///   two-bump-complement   1 - sum_k exp(-(x - c_k)^2 / width^2)
///   table                 linear interpolation of (x, values) onto the nodes
struct PotentialSpec {
  std::string kind = "harmonic";
  double strength = 0;
  double scale = 1;
  double offset = 0;
  double slope = 0;
  double amplitude = 1;
  double center = 0;
  double width = 1;
  std::vector<double> centers;
  std::vector<double> table_x;
  std::vector<double> table_values;
};

/// Initial or target state: the trap ground state or a normalised Gaussian.
struct StateSpec {
  std::string kind = "ground-state";
  double center = 0;
  double width = 1;
  double momentum = 0;
};

struct ObservableSpec {
  std::string kind = "multiplication";
  PotentialSpec profile;
  StateSpec target;
};

enum class OptimizerKind { gradient, newton };

struct OutputSpec {
  std::filesystem::path directory = "out";
  std::vector<double> snapshot_times;  // empty: {0, 0.4 T, T}
};

/// Everything needed to build a problem and run an optimiser on it.
struct RunConfig {
  double half_width = 20;
  int points = 256;
  double horizon = 10;
  int steps = 1024;
  double lambda = 0;
  int sigma = 1;
  PotentialSpec trap;
  PotentialSpec control_potential;
  ObservableSpec observable;
  double gamma1 = 0;
  double gamma2 = 1;
  double alpha0 = 0;
  StateSpec initial_state;
  std::optional<std::filesystem::path> initial_control_csv;
  OptimizerKind optimizer = OptimizerKind::newton;
  OptimizerSettings<double> settings;
  OutputSpec output;
};

/// Raised for malformed configuration; carries one message per offending path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses and validates a configuration document. Unknown keys are errors.
/// Relative CSV paths are resolved against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

RealVector<double> sample_potential(const PotentialSpec& p, const SpatialGrid<double>& grid);
ComplexVector<double> build_state(const StateSpec& s, const SpatialGrid<double>& grid,
                                  const RealVector<double>& trap);

/// Builds and validates the problem described by `config`.
ProblemSpec<double> build_problem(const RunConfig& config);

/// Reads a (t, alpha) CSV with a header row; times must match `time` nodes.
Control<double> read_control_csv(const std::filesystem::path& path, const TimeGrid<double>& time);

/// The starting control: the CSV if given, otherwise alpha == alpha0.
Control<double> initial_control(const RunConfig& config, const ProblemSpec<double>& spec);

const char* to_string(OptimizerKind kind);

}  // namespace gpc
