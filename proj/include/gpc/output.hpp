#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpc/scenarios.hpp"

namespace gpc {

/// Writes `contents` to `path` through a sibling temporary and a rename, so
/// readers never observe a partial file.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

std::string control_csv(const Control<double>& control);
std::string omega_csv(const TimeGrid<double>& time, const RealVector<double>& omega);
std::string energy_csv(const EnergySeries<double>& energy);
std::string density_csv(const SpatialGrid<double>& grid, const Analysis& analysis);
std::string history_csv(const std::vector<IterationRecord<double>>& history);

/// One measured-vs-published entry per reference, tagged "paper_target".
nlohmann::json reference_json(const std::vector<ReferenceValue>& references, const Analysis& analysis);

nlohmann::json analysis_json(const Analysis& analysis);
nlohmann::json report_json(const RunConfig& config, const OptimizeReport<double>& report);

/// Writes summary.json, control.csv, omega.csv, energy.csv, density.csv and,
/// when `report` is given, history.csv.
void write_outputs(const std::filesystem::path& directory, const SpatialGrid<double>& grid,
                   const Analysis& analysis, nlohmann::json summary, const OptimizeReport<double>* report);

/// Summary and files for a scenario run.
void write_scenario(const std::filesystem::path& directory, const ScenarioResult& result);

}  // namespace gpc
