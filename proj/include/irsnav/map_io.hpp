#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "irsnav/planner.hpp"
#include "irsnav/power_map.hpp"
#include "irsnav/rate_map.hpp"

namespace irsnav {

/// Grid values as CSV: row i = x index, column j = y index, "NA" for cells without a finite value.
/// `to_db` converts linear values to 10 log10 before printing with six decimals.
std::string grid_csv(const Grid& grid, std::span<const double> values, bool to_db);

nlohmann::json grid_to_json(const Grid& g);
Grid grid_from_json(const nlohmann::json& j);
nlohmann::json tolerances_to_json(const ConvexTolerances& t);

/// Sidecar with linear values (null where untraversable), flags, phase mode, units and the scenario hash.
nlohmann::json power_map_to_json(const PowerGainMap& map, const Scenario& s);
PowerGainMap power_map_from_json(const nlohmann::json& j);

nlohmann::json rate_map_to_json(const RateMap& map, const Scenario& s, const ConvexTolerances& tol);
/// Per-cell decoding order, phases, powers and gains.
nlohmann::json rate_cells_to_json(const RateMap& map);
RateMap rate_map_from_json(const nlohmann::json& sidecar, const nlohmann::json* cells = nullptr);

nlohmann::json path_to_json(const PlanResult& r, const Grid& grid, const Scenario& s, const std::string& map_hash);
std::string path_csv(const PlanResult& r, const Grid& grid, double z);

/// Hash of a serialized map sidecar, used to tie paths to the map they were planned on.
std::string json_hash(const nlohmann::json& j);

void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace irsnav
