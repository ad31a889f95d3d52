#pragma once

// Serialization of results: JSON documents, sweep CSV tables, file output.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "sepcross/error.hpp"
#include "sepcross/portrait.hpp"
#include "sepcross/simulate.hpp"

namespace sepcross::io {

std::string version();

// Shortest round-trip decimal; NaN becomes an empty field.
std::string format_number(double x);

// Pretty JSON with a trailing newline; NaN and infinities become null.
std::string dump(const nlohmann::json& j);

void write_file(const std::filesystem::path& path, const std::string& content);

nlohmann::json chart_json(const SaddleChart& chart);
// Loop polylines are thinned to at most max_points samples each.
nlohmann::json portrait_json(const SeparatrixGeometry& geo, std::size_t max_points = 400);

std::vector<std::string> sweep_columns(const std::vector<std::string>& z_names);
std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<std::string>& z_names);
nlohmann::json sweep_context_json(const SweepContext& ctx);

std::string events_csv(const TrajectoryRecord& traj, const std::vector<std::string>& z_names);
nlohmann::json trajectory_json(const TrajectoryRecord& traj);
nlohmann::json crossing_json(const CrossingRecord& cr);

nlohmann::json error_json(ErrorKind kind, const std::string& message);

}  // namespace sepcross::io
