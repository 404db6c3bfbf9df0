#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace irsnav {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

double distance(const Point3& a, const Point3& b);
double horizontal_distance(const Point3& a, const Point3& b);

/// Axis-aligned box standing on the floor: z in [0, height].
struct Obstacle {
  double center_x = 0.0;
  double center_y = 0.0;
  double size_x = 0.0;
  double size_y = 0.0;
  double height = 0.0;

  double x_min() const { return center_x - 0.5 * size_x; }
  double x_max() const { return center_x + 0.5 * size_x; }
  double y_min() const { return center_y - 0.5 * size_y; }
  double y_max() const { return center_y + 0.5 * size_y; }

  /// Closed horizontal footprint test.
  bool covers(double x, double y) const;
};

/// Horizontal room extent [x_min, x_min+size_x] x [y_min, y_min+size_y], floor at z = 0.
struct Room {
  double x_min = 0.0;
  double y_min = 0.0;
  double size_x = 0.0;
  double size_y = 0.0;
  double height = 0.0;

  double x_max() const { return x_min + size_x; }
  double y_max() const { return y_min + size_y; }
  bool contains(const Point3& p, double tol = 1e-9) const;
  bool on_boundary_wall(const Point3& p, double tol = 1e-9) const;
};

/// 1-based cell index, matching the (i, j) convention of the radio maps.
struct CellIndex {
  int i = 1;
  int j = 1;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform grid of cell centers; origin is the center of the lower-left cell.
class Grid {
 public:
  Grid() = default;
  Grid(double origin_x, double origin_y, double delta_x, double delta_y, int nx, int ny);

  /// Discretizes `room` at (delta_x, delta_y); throws unless the room size is an integer multiple of the
  /// resolution and delta <= epsilon * extent along both axes.
  static Grid for_room(const Room& room, double delta_x, double delta_y, double epsilon);

  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  double delta_x() const { return delta_x_; }
  double delta_y() const { return delta_y_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

  bool valid(CellIndex c) const { return c.i >= 1 && c.i <= nx_ && c.j >= 1 && c.j <= ny_; }
  /// Row-major linear index with i (x index) as the row.
  std::size_t linear(CellIndex c) const;
  CellIndex from_linear(std::size_t k) const;

  /// Cell center at height z. Throws std::out_of_range on an invalid index.
  Point3 cell_center(CellIndex c, double z) const;

  /// Nearest cell center to (x, y); ties resolve toward the lower index.
  CellIndex nearest_cell(double x, double y) const;

  double diagonal() const { return std::hypot(delta_x_, delta_y_); }

 private:
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double delta_x_ = 1.0;
  double delta_y_ = 1.0;
  int nx_ = 0;
  int ny_ = 0;
};

/// True iff the open segment (a, b) touches the closed box. Touching a face or edge counts.
bool segment_hits_box(const Point3& a, const Point3& b, const Obstacle& box);

/// Line-of-sight test against a list of boxes; walls, floor and ceiling never block.
bool has_line_of_sight(std::span<const Obstacle> obstacles, const Point3& a, const Point3& b);

}  // namespace irsnav
