#pragma once

#include "irsnav/scenario.hpp"

namespace fixture {

// 6 m x 6 m room on a 1 m grid with a 2-sub-surface IRS and one low box.
inline irsnav::Scenario toy_scenario() {
  using namespace irsnav;
  Scenario s;
  s.room = Room{-3.0, -3.0, 6.0, 6.0, 3.0};
  s.grid_delta_x = 1.0;
  s.grid_delta_y = 1.0;
  s.grid_epsilon = 0.2;
  s.ap = {0.0, 3.0, 2.0};
  s.irs_center = {0.0, -3.0, 2.0};
  s.irs_wall_normal = WallAxis::Y;
  s.sru = {1.5, -1.5, 1.3};
  s.obstacles = {Obstacle{-1.0, 1.0, 1.0, 1.0, 2.5}};
  s.mru_height = 1.0;
  s.q_initial = {-2.5, -2.5, 1.0};
  s.q_final = {2.5, 2.5, 1.0};
  s.radio.irs = IrsArray{2, 1, 2, 2, 0.5};
  s.rs_target = 1.0;
  s.validate();
  return s;
}

}  // namespace fixture
