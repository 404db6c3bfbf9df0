#include <doctest.h>

#include <random>
#include <set>

#include "irsnav/scenario.hpp"

using namespace irsnav;

TEST_CASE("cell centers of the default grid") {
  const Grid g = default_scenario().grid();
  CHECK(g.nx() == 40);
  CHECK(g.ny() == 40);
  const Point3 a = g.cell_center({1, 1}, 1.0);
  CHECK(a.x == doctest::Approx(-9.75));
  CHECK(a.y == doctest::Approx(-9.75));
  CHECK(a.z == 1.0);
  const Point3 b = g.cell_center({40, 40}, 1.0);
  CHECK(b.x == doctest::Approx(9.75));
  CHECK(b.y == doctest::Approx(9.75));
  CHECK_THROWS_AS(g.cell_center({0, 1}, 1.0), std::out_of_range);
  CHECK_THROWS_AS(g.cell_center({1, 41}, 1.0), std::out_of_range);
}

TEST_CASE("cell centers are injective and tile the room") {
  const Scenario s = default_scenario();
  const Grid g = s.grid();
  std::set<std::pair<long, long>> seen;
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    const CellIndex c = g.from_linear(k);
    CHECK(g.linear(c) == k);
    const Point3 q = g.cell_center(c, 0.0);
    seen.insert({std::lround(q.x * 1000), std::lround(q.y * 1000)});
    CHECK(q.x - 0.5 * g.delta_x() >= s.room.x_min - 1e-12);
    CHECK(q.x + 0.5 * g.delta_x() <= s.room.x_max() + 1e-12);
    CHECK(q.y - 0.5 * g.delta_y() >= s.room.y_min - 1e-12);
    CHECK(q.y + 0.5 * g.delta_y() <= s.room.y_max() + 1e-12);
  }
  CHECK(seen.size() == g.cell_count());
  CHECK(g.nx() * g.delta_x() == doctest::Approx(s.room.size_x));
  CHECK(g.ny() * g.delta_y() == doctest::Approx(s.room.size_y));
}

TEST_CASE("grid resolution must divide the room and respect epsilon") {
  const Room room{-10.0, -10.0, 20.0, 20.0, 5.0};
  CHECK_NOTHROW(Grid::for_room(room, 0.5, 0.5, 0.025));
  CHECK_THROWS(Grid::for_room(room, 0.5, 0.5, 0.02));
  CHECK_THROWS(Grid::for_room(room, 0.3, 0.5, 0.025));
}

TEST_CASE("nearest cell ties resolve toward the lower index") {
  const Grid g = default_scenario().grid();
  const CellIndex c = g.nearest_cell(-10.0, 0.0);
  CHECK(c.i == 1);
  CHECK(c.j == 20);
}

TEST_CASE("obstacle footprints block cell centers") {
  const Scenario s = default_scenario();
  const Grid g = s.grid();
  // Cell containing (0.25, 0.25) lies in the central box.
  CHECK(is_cell_blocked_by_obstacle(s, g.nearest_cell(0.25, 0.25)));
  CHECK_FALSE(is_cell_blocked_by_obstacle(s, {1, 1}));
  const Obstacle box{0.0, 0.0, 4.0, 4.0, 1.3};
  CHECK(box.covers(0.0, 0.0));
  CHECK(box.covers(2.0, 0.0));
  CHECK(box.covers(2.0, -2.0));
  CHECK_FALSE(box.covers(2.0 + 1e-9, 0.0));
  // Five 4 m boxes on a 0.5 m grid: 8 x 8 centers each.
  CHECK(blocked_cell_count(s) == 5 * 64);
}

TEST_CASE("line of sight against boxes") {
  const std::vector<Obstacle> boxes{{0.0, 0.0, 4.0, 4.0, 1.3}};
  CHECK(has_line_of_sight(boxes, {0.0, 10.0, 2.0}, {0.0, 9.0, 1.0}));
  // Parametrized as y = 10 - 12t, z = 2 - t: the segment enters the footprint at t = 2/3 (z = 1.333) and meets the
  // box top z = 1.3 at t = 0.7, y = 1.6, still inside the footprint.
  CHECK_FALSE(has_line_of_sight(boxes, {0.0, 10.0, 2.0}, {0.0, -2.0, 1.0}));
  // With z = 2 - 0.2t the segment stays above 1.8 over the footprint.
  CHECK(has_line_of_sight(boxes, {0.0, 10.0, 2.0}, {0.0, -2.0, 1.8}));
  // Grazing the top face counts as blocked.
  CHECK_FALSE(has_line_of_sight(boxes, {-5.0, 0.0, 1.3}, {5.0, 0.0, 1.3}));
  // Grazing a side face counts as blocked.
  CHECK_FALSE(has_line_of_sight(boxes, {2.0, -5.0, 1.0}, {2.0, 5.0, 1.0}));
  CHECK(has_line_of_sight(boxes, {2.0 + 1e-6, -5.0, 1.0}, {2.0 + 1e-6, 5.0, 1.0}));
}

TEST_CASE("line of sight is symmetric and obstacle free rooms never block") {
  const Scenario s = default_scenario();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(s.room.x_min, s.room.x_max());
  std::uniform_real_distribution<double> uy(s.room.y_min, s.room.y_max());
  std::uniform_real_distribution<double> uz(0.0, s.room.height);
  const std::vector<Obstacle> none;
  int blocked = 0;
  for (int t = 0; t < 2000; ++t) {
    const Point3 a{ux(rng), uy(rng), uz(rng)};
    const Point3 b{ux(rng), uy(rng), uz(rng)};
    const bool ab = has_line_of_sight(s.obstacles, a, b);
    CHECK(ab == has_line_of_sight(s.obstacles, b, a));
    CHECK(has_line_of_sight(none, a, b));
    blocked += !ab;
  }
  CHECK(blocked > 0);
}

TEST_CASE("segment-box test agrees with dense sampling") {
  const Obstacle box{1.0, -2.0, 3.0, 2.0, 1.0};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::uniform_real_distribution<double> uz(0.0, 2.0);
  for (int t = 0; t < 500; ++t) {
    const Point3 a{u(rng), u(rng), uz(rng)};
    const Point3 b{u(rng), u(rng), uz(rng)};
    bool hit = false;
    for (int k = 1; k < 4000 && !hit; ++k) {
      const double s = k / 4000.0;
      const Point3 p = a + s * (b - a);
      hit = box.covers(p.x, p.y) && p.z >= 0.0 && p.z <= box.height;
    }
    // Sampling can only miss hits of tiny length, never invent them.
    if (hit) CHECK(segment_hits_box(a, b, box));
  }
}
