#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "irsnav/geometry.hpp"

namespace irsnav {

enum class WallAxis { X, Y };

/// IRS panel layout: nx_sub x nz_sub sub-surfaces, each a contiguous block_x x block_z block of elements.
struct IrsArray {
  int subsurfaces_x = 10;
  int subsurfaces_z = 6;
  int block_x = 4;
  int block_z = 5;
  double spacing_wavelengths = 0.5;

  int subsurface_count() const { return subsurfaces_x * subsurfaces_z; }
  int elements_per_subsurface() const { return block_x * block_z; }
  int element_count() const { return subsurface_count() * elements_per_subsurface(); }
};

struct RadioParams {
  double carrier_ghz = 2.0;
  double p_max_dbm = 20.0;
  double noise_power_dbm = -90.0;
  double rician_kappa_db = 3.0;
  IrsArray irs;

  double p_max_watt() const;
  double noise_power_watt() const;
  double kappa_linear() const;
  double wavelength_m() const;
};

struct Scenario {
  Room room;
  double grid_delta_x = 0.5;
  double grid_delta_y = 0.5;
  double grid_epsilon = 0.025;
  Point3 ap;
  Point3 irs_center;
  WallAxis irs_wall_normal = WallAxis::Y;
  Point3 sru;
  std::vector<Obstacle> obstacles;
  double mru_height = 1.0;
  Point3 q_initial;
  Point3 q_final;
  double v_max = 1.0;
  RadioParams radio;
  /// Rate floor of the static user, bit/s/Hz.
  double rs_target = 1.0;
  /// Constant added to the mobile user's rate requirement to absorb the Jensen gap.
  double rm_margin = 0.0;

  Grid grid() const;
  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  Scenario without_irs() const;
  Scenario with_phase_grouping(int subsurfaces_x, int subsurfaces_z) const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

/// FNV-1a over the canonical JSON dump; stable across runs and platforms.
std::uint64_t scenario_hash(const Scenario& s);
std::string hash_hex(std::uint64_t h);

bool is_cell_blocked_by_obstacle(const Scenario& s, CellIndex c);
/// Number of grid cells whose center lies inside an obstacle footprint.
std::size_t blocked_cell_count(const Scenario& s);

/// Built-in copy of the reference indoor-factory layout (20 m x 20 m room, five 4 x 4 x 1.3 m boxes).
Scenario default_scenario();
/// Reduced layout for the rate-map pipeline: 1 m grid and 8 sub-surfaces.
Scenario desk_scenario();

}  // namespace irsnav
