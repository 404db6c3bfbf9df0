#include "irsnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace irsnav {

std::size_t FeasibleMap::count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m != 0;
  return n;
}

FeasibleMap threshold_map(const Grid& grid, std::span<const double> values, double threshold) {
  if (values.size() != grid.cell_count()) throw std::invalid_argument("map size does not match the grid");
  FeasibleMap f;
  f.grid = grid;
  f.mask.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double v = values[k];
    f.mask[k] = (std::isfinite(v) && v >= threshold) ? 1 : 0;
  }
  return f;
}

std::size_t GridGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& a : adjacency) n += a.size();
  return n / 2;
}

bool GridGraph::has_edge(int u, int v) const {
  return std::any_of(adjacency[u].begin(), adjacency[u].end(), [v](const auto& e) { return e.first == v; });
}

GridGraph build_graph(const FeasibleMap& feasible) {
  GridGraph g;
  g.grid = feasible.grid;
  const Grid& grid = g.grid;
  g.vertex_of_cell.assign(grid.cell_count(), -1);
  for (std::size_t k = 0; k < grid.cell_count(); ++k) {
    if (feasible.mask[k]) {
      g.vertex_of_cell[k] = static_cast<int>(g.cell_of_vertex.size());
      g.cell_of_vertex.push_back(k);
    }
  }
  g.adjacency.resize(g.cell_of_vertex.size());
  const double diag = grid.diagonal();
  for (std::size_t v = 0; v < g.cell_of_vertex.size(); ++v) {
    const CellIndex c = grid.from_linear(g.cell_of_vertex[v]);
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const CellIndex n{c.i + di, c.j + dj};
        if (!grid.valid(n)) continue;
        const int u = g.vertex_of_cell[grid.linear(n)];
        if (u < 0) continue;
        const double w = (di != 0 && dj != 0) ? diag : (di != 0 ? grid.delta_x() : grid.delta_y());
        g.adjacency[v].emplace_back(u, w);
      }
    }
  }
  return g;
}

std::optional<PlannedPath> shortest_path(const GridGraph& graph, CellIndex start, CellIndex goal) {
  const Grid& grid = graph.grid;
  if (!grid.valid(start) || !grid.valid(goal)) throw InfeasibleEndpointError("start or goal outside the grid");
  const int s = graph.vertex_of_cell[grid.linear(start)];
  const int t = graph.vertex_of_cell[grid.linear(goal)];
  if (s < 0) throw InfeasibleEndpointError("start cell is not feasible");
  if (t < 0) throw InfeasibleEndpointError("goal cell is not feasible");

  const std::size_t n = graph.vertex_count();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> pred(n, -1);
  std::vector<std::uint8_t> done(n, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[s] = 0.0;
  pq.emplace(0.0, s);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (done[u] || d > dist[u]) continue;
    done[u] = 1;
    if (u == t) break;
    for (const auto& [v, w] : graph.adjacency[u]) {
      if (done[v]) continue;
      const double nd = d + w;
      if (nd < dist[v] || (nd == dist[v] && u < pred[v])) {
        const bool improved = nd < dist[v];
        dist[v] = nd;
        pred[v] = u;
        if (improved) pq.emplace(nd, v);
      }
    }
  }
  if (!(dist[t] < inf)) return std::nullopt;

  PlannedPath path;
  for (int v = t; v != -1; v = pred[v]) path.waypoints.push_back(grid.from_linear(graph.cell_of_vertex[v]));
  std::reverse(path.waypoints.begin(), path.waypoints.end());
  path.total_distance = dist[t];
  return path;
}

CellIndex snap_to_cell(const Grid& grid, const Point3& p) {
  const CellIndex c = grid.nearest_cell(p.x, p.y);
  const Point3 q = grid.cell_center(c, p.z);
  if (horizontal_distance(p, q) > 0.5 * grid.diagonal() + 1e-9) {
    throw std::invalid_argument("endpoint does not lie within half a cell of any cell center");
  }
  return c;
}

PlanResult plan(const Scenario& s, const Grid& grid, std::span<const double> values, double threshold) {
  PlanResult r;
  r.threshold = threshold;
  r.start = snap_to_cell(grid, s.q_initial);
  r.goal = snap_to_cell(grid, s.q_final);
  const FeasibleMap f = threshold_map(grid, values, threshold);
  if (!f.at(r.start) || !f.at(r.goal)) {
    r.status = PlanStatus::InfeasibleEndpoint;
    return r;
  }
  const GridGraph g = build_graph(f);
  auto path = shortest_path(g, r.start, r.goal);
  if (!path) {
    r.status = PlanStatus::NoPath;
    return r;
  }
  r.status = PlanStatus::Ok;
  r.path = std::move(*path);
  r.path.travel_time = r.path.total_distance / s.v_max;
  for (CellIndex c : r.path.waypoints) r.path.values.push_back(values[grid.linear(c)]);
  return r;
}

}  // namespace irsnav
