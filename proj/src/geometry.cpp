#include "irsnav/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace irsnav {

namespace {

constexpr double kParamEps = 1e-12;

int integer_count(double extent, double delta, const char* axis) {
  const double ratio = extent / delta;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument(std::string("grid resolution does not divide the room extent along ") + axis);
  }
  return static_cast<int>(rounded);
}

}  // namespace

double distance(const Point3& a, const Point3& b) {
  const Point3 d = a - b;
  return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

double horizontal_distance(const Point3& a, const Point3& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool Obstacle::covers(double x, double y) const {
  return x >= x_min() && x <= x_max() && y >= y_min() && y <= y_max();
}

bool Room::contains(const Point3& p, double tol) const {
  return p.x >= x_min - tol && p.x <= x_max() + tol && p.y >= y_min - tol && p.y <= y_max() + tol &&
         p.z >= -tol && p.z <= height + tol;
}

bool Room::on_boundary_wall(const Point3& p, double tol) const {
  if (!contains(p, tol)) return false;
  return std::abs(p.x - x_min) <= tol || std::abs(p.x - x_max()) <= tol || std::abs(p.y - y_min) <= tol ||
         std::abs(p.y - y_max()) <= tol;
}

Grid::Grid(double origin_x, double origin_y, double delta_x, double delta_y, int nx, int ny)
    : origin_x_(origin_x), origin_y_(origin_y), delta_x_(delta_x), delta_y_(delta_y), nx_(nx), ny_(ny) {
  if (!(delta_x > 0.0) || !(delta_y > 0.0)) throw std::invalid_argument("grid resolution must be positive");
  if (nx < 1 || ny < 1) throw std::invalid_argument("grid must have at least one cell per axis");
}

Grid Grid::for_room(const Room& room, double delta_x, double delta_y, double epsilon) {
  if (!(delta_x > 0.0) || !(delta_y > 0.0)) throw std::invalid_argument("grid resolution must be positive");
  if (delta_x > epsilon * room.size_x * (1.0 + 1e-12) || delta_y > epsilon * room.size_y * (1.0 + 1e-12)) {
    throw std::invalid_argument("grid resolution exceeds the accuracy threshold epsilon * extent");
  }
  const int nx = integer_count(room.size_x, delta_x, "x");
  const int ny = integer_count(room.size_y, delta_y, "y");
  return Grid(room.x_min + 0.5 * delta_x, room.y_min + 0.5 * delta_y, delta_x, delta_y, nx, ny);
}

std::size_t Grid::linear(CellIndex c) const {
  if (!valid(c)) throw std::out_of_range("cell index out of range");
  return static_cast<std::size_t>(c.i - 1) * static_cast<std::size_t>(ny_) + static_cast<std::size_t>(c.j - 1);
}

CellIndex Grid::from_linear(std::size_t k) const {
  if (k >= cell_count()) throw std::out_of_range("linear cell index out of range");
  return {static_cast<int>(k / static_cast<std::size_t>(ny_)) + 1, static_cast<int>(k % static_cast<std::size_t>(ny_)) + 1};
}

Point3 Grid::cell_center(CellIndex c, double z) const {
  if (!valid(c)) throw std::out_of_range("cell index out of range");
  return {origin_x_ + (c.i - 1) * delta_x_, origin_y_ + (c.j - 1) * delta_y_, z};
}

CellIndex Grid::nearest_cell(double x, double y) const {
  // Round half down so that a point midway between two centers maps to the lower index.
  auto snap = [](double offset, double delta, int n) {
    const double u = offset / delta;
    int k = static_cast<int>(std::ceil(u - 0.5 - 1e-12));
    return std::clamp(k, 0, n - 1) + 1;
  };
  return {snap(x - origin_x_, delta_x_, nx_), snap(y - origin_y_, delta_y_, ny_)};
}

bool segment_hits_box(const Point3& a, const Point3& b, const Obstacle& box) {
  const double lo[3] = {box.x_min(), box.y_min(), 0.0};
  const double hi[3] = {box.x_max(), box.y_max(), box.height};
  const double p[3] = {a.x, a.y, a.z};
  const double d[3] = {b.x - a.x, b.y - a.y, b.z - a.z};

  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (p[k] < lo[k] || p[k] > hi[k]) return false;
      continue;
    }
    double t1 = (lo[k] - p[k]) / d[k];
    double t2 = (hi[k] - p[k]) / d[k];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
    if (t_enter > t_exit) return false;
  }
  // Restrict to the open parameter interval (0, 1).
  return t_enter < 1.0 - kParamEps && t_exit > kParamEps;
}

bool has_line_of_sight(std::span<const Obstacle> obstacles, const Point3& a, const Point3& b) {
  return std::none_of(obstacles.begin(), obstacles.end(),
                      [&](const Obstacle& box) { return segment_hits_box(a, b, box); });
}

}  // namespace irsnav
