#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "irsnav/geometry.hpp"
#include "irsnav/scenario.hpp"

namespace irsnav {

struct FeasibleMap {
  Grid grid;
  std::vector<std::uint8_t> mask;

  bool at(CellIndex c) const { return mask[grid.linear(c)] != 0; }
  std::size_t count() const;
};

/// mask = value >= threshold; -inf cells are never feasible.
FeasibleMap threshold_map(const Grid& grid, std::span<const double> values, double threshold);

struct GridGraph {
  Grid grid;
  /// Vertex id per linear cell index, -1 for infeasible cells.
  std::vector<int> vertex_of_cell;
  /// Linear cell index of each vertex, increasing.
  std::vector<std::size_t> cell_of_vertex;
  std::vector<std::vector<std::pair<int, double>>> adjacency;

  std::size_t vertex_count() const { return cell_of_vertex.size(); }
  std::size_t edge_count() const;
  bool has_edge(int u, int v) const;
};

/// 8-neighborhood graph over feasible cells weighted by center distance.
GridGraph build_graph(const FeasibleMap& feasible);

struct PlannedPath {
  std::vector<CellIndex> waypoints;
  double total_distance = 0.0;
  double travel_time = 0.0;
  std::vector<double> values;
};

class InfeasibleEndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimum-distance path, or nullopt when start and goal are disconnected. Among equal-distance relaxations the
/// smaller predecessor vertex wins. Throws InfeasibleEndpointError if either endpoint is not a vertex.
std::optional<PlannedPath> shortest_path(const GridGraph& graph, CellIndex start, CellIndex goal);

/// Nearest cell center; throws std::invalid_argument if the point is farther than half a cell diagonal.
CellIndex snap_to_cell(const Grid& grid, const Point3& p);

enum class PlanStatus { Ok, NoPath, InfeasibleEndpoint };

struct PlanResult {
  PlanStatus status = PlanStatus::NoPath;
  PlannedPath path;
  double threshold = 0.0;
  CellIndex start;
  CellIndex goal;
};

/// threshold_map -> build_graph -> shortest_path from q_I to q_F; fills per-waypoint map values and travel time.
PlanResult plan(const Scenario& s, const Grid& grid, std::span<const double> values, double threshold);

}  // namespace irsnav
