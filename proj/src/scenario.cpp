#include "irsnav/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace irsnav {

using nlohmann::json;

namespace {

constexpr double kSpeedOfLight = 299792458.0;

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

Point3 point_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json point_to_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing required field '") + key + "'");
  return *it;
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

bool inside_any_obstacle(const Scenario& s, const Point3& p) {
  for (const auto& o : s.obstacles) {
    if (o.covers(p.x, p.y) && p.z <= o.height) return true;
  }
  return false;
}

}  // namespace

double RadioParams::p_max_watt() const { return dbm_to_watt(p_max_dbm); }
double RadioParams::noise_power_watt() const { return dbm_to_watt(noise_power_dbm); }
double RadioParams::kappa_linear() const { return std::pow(10.0, rician_kappa_db / 10.0); }
double RadioParams::wavelength_m() const { return kSpeedOfLight / (carrier_ghz * 1e9); }

Grid Scenario::grid() const { return Grid::for_room(room, grid_delta_x, grid_delta_y, grid_epsilon); }

void Scenario::validate() const {
  if (!(room.size_x > 0.0 && room.size_y > 0.0 && room.height > 0.0)) throw std::invalid_argument("room extent must be positive");
  (void)grid();
  for (const Point3* p : {&ap, &irs_center, &sru, &q_initial, &q_final}) {
    if (!p->finite()) throw std::invalid_argument("scenario points must be finite");
  }
  for (const auto& o : obstacles) {
    if (!(o.size_x > 0.0 && o.size_y > 0.0 && o.height > 0.0)) throw std::invalid_argument("obstacle sizes must be positive");
    if (o.x_min() < room.x_min - 1e-9 || o.x_max() > room.x_max() + 1e-9 || o.y_min() < room.y_min - 1e-9 ||
        o.y_max() > room.y_max() + 1e-9 || o.height > room.height + 1e-9) {
      throw std::invalid_argument("obstacle lies outside the room");
    }
  }
  if (!room.on_boundary_wall(ap)) throw std::invalid_argument("AP must be mounted on a room wall");
  if (!room.on_boundary_wall(irs_center)) throw std::invalid_argument("IRS must be mounted on a room wall");
  for (const Point3* q : {&q_initial, &q_final}) {
    if (!room.contains(*q)) throw std::invalid_argument("start/goal must lie inside the room");
    if (inside_any_obstacle(*this, *q)) throw std::invalid_argument("start/goal lies inside an obstacle");
  }
  if (!(mru_height > 0.0) || !(v_max > 0.0)) throw std::invalid_argument("MRU height and speed must be positive");
  const auto& irs = radio.irs;
  if (irs.subsurfaces_x < 0 || irs.subsurfaces_z < 0 || irs.block_x < 1 || irs.block_z < 1) {
    throw std::invalid_argument("invalid IRS layout");
  }
  if (!(irs.spacing_wavelengths > 0.0)) throw std::invalid_argument("IRS element spacing must be positive");
  if (!(radio.carrier_ghz > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
  if (!std::isfinite(radio.p_max_dbm) || !std::isfinite(radio.noise_power_dbm) || !std::isfinite(radio.rician_kappa_db)) {
    throw std::invalid_argument("radio powers must be finite");
  }
  if (!(rs_target >= 0.0) || !(rm_margin >= 0.0)) throw std::invalid_argument("rate targets must be nonnegative");
}

Scenario Scenario::without_irs() const {
  Scenario s = *this;
  s.radio.irs.subsurfaces_x = 0;
  s.radio.irs.subsurfaces_z = 0;
  return s;
}

Scenario Scenario::with_phase_grouping(int subsurfaces_x, int subsurfaces_z) const {
  Scenario s = *this;
  s.radio.irs.subsurfaces_x = subsurfaces_x;
  s.radio.irs.subsurfaces_z = subsurfaces_z;
  return s;
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  const json& room = require(j, "room");
  s.room.x_min = require(room, "x_min").get<double>();
  s.room.y_min = require(room, "y_min").get<double>();
  s.room.size_x = require(room, "size_x").get<double>();
  s.room.size_y = require(room, "size_y").get<double>();
  s.room.height = require(room, "height").get<double>();

  const json& grid = require(j, "grid");
  s.grid_delta_x = require(grid, "delta_x").get<double>();
  s.grid_delta_y = require(grid, "delta_y").get<double>();
  s.grid_epsilon = value_or(grid, "epsilon", 0.025);

  s.ap = point_from_json(require(j, "ap"), "ap");
  s.sru = point_from_json(require(j, "sru"), "sru");

  const json& irs = require(j, "irs");
  s.irs_center = point_from_json(require(irs, "center"), "irs.center");
  const auto axis = value_or<std::string>(irs, "wall_normal", "y");
  if (axis == "x") {
    s.irs_wall_normal = WallAxis::X;
  } else if (axis == "y") {
    s.irs_wall_normal = WallAxis::Y;
  } else {
    throw std::invalid_argument("irs.wall_normal must be \"x\" or \"y\"");
  }
  s.radio.irs.subsurfaces_x = require(irs, "subsurfaces_x").get<int>();
  s.radio.irs.subsurfaces_z = require(irs, "subsurfaces_z").get<int>();
  s.radio.irs.block_x = require(irs, "block_x").get<int>();
  s.radio.irs.block_z = require(irs, "block_z").get<int>();
  s.radio.irs.spacing_wavelengths = value_or(irs, "spacing_wavelengths", 0.5);

  for (const auto& o : value_or(j, "obstacles", json::array())) {
    Obstacle box;
    const json& c = require(o, "center");
    const json& sz = require(o, "size");
    box.center_x = c.at(0).get<double>();
    box.center_y = c.at(1).get<double>();
    box.size_x = sz.at(0).get<double>();
    box.size_y = sz.at(1).get<double>();
    box.height = require(o, "height").get<double>();
    s.obstacles.push_back(box);
  }

  const json& mru = require(j, "mru");
  s.mru_height = require(mru, "height").get<double>();
  s.q_initial = point_from_json(require(mru, "start"), "mru.start");
  s.q_final = point_from_json(require(mru, "goal"), "mru.goal");
  s.v_max = value_or(mru, "v_max", 1.0);

  const json& radio = require(j, "radio");
  s.radio.carrier_ghz = require(radio, "carrier_ghz").get<double>();
  s.radio.p_max_dbm = require(radio, "p_max_dbm").get<double>();
  s.radio.noise_power_dbm = require(radio, "noise_power_dbm").get<double>();
  s.radio.rician_kappa_db = require(radio, "rician_kappa_db").get<double>();

  if (auto it = j.find("rates"); it != j.end()) {
    s.rs_target = value_or(*it, "rs_target", 1.0);
    s.rm_margin = value_or(*it, "rm_margin", 0.0);
  }
  s.validate();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json obstacles = json::array();
  for (const auto& o : s.obstacles) {
    obstacles.push_back({{"center", {o.center_x, o.center_y}}, {"size", {o.size_x, o.size_y}}, {"height", o.height}});
  }
  const auto& irs = s.radio.irs;
  return json{
      {"room", {{"x_min", s.room.x_min}, {"y_min", s.room.y_min}, {"size_x", s.room.size_x},
                {"size_y", s.room.size_y}, {"height", s.room.height}}},
      {"grid", {{"delta_x", s.grid_delta_x}, {"delta_y", s.grid_delta_y}, {"epsilon", s.grid_epsilon}}},
      {"ap", point_to_json(s.ap)},
      {"sru", point_to_json(s.sru)},
      {"irs", {{"center", point_to_json(s.irs_center)},
               {"wall_normal", s.irs_wall_normal == WallAxis::X ? "x" : "y"},
               {"subsurfaces_x", irs.subsurfaces_x},
               {"subsurfaces_z", irs.subsurfaces_z},
               {"block_x", irs.block_x},
               {"block_z", irs.block_z},
               {"spacing_wavelengths", irs.spacing_wavelengths}}},
      {"obstacles", obstacles},
      {"mru", {{"height", s.mru_height}, {"start", point_to_json(s.q_initial)},
               {"goal", point_to_json(s.q_final)}, {"v_max", s.v_max}}},
      {"radio", {{"carrier_ghz", s.radio.carrier_ghz}, {"p_max_dbm", s.radio.p_max_dbm},
                 {"noise_power_dbm", s.radio.noise_power_dbm}, {"rician_kappa_db", s.radio.rician_kappa_db}}},
      {"rates", {{"rs_target", s.rs_target}, {"rm_margin", s.rm_margin}}},
  };
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("scenario file is not valid JSON: " + std::string(e.what()));
  }
  try {
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed scenario field: " + std::string(e.what()));
  }
}

std::uint64_t scenario_hash(const Scenario& s) {
  const std::string text = scenario_to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool is_cell_blocked_by_obstacle(const Scenario& s, CellIndex c) {
  const Point3 q = s.grid().cell_center(c, s.mru_height);
  for (const auto& o : s.obstacles) {
    if (o.covers(q.x, q.y)) return true;
  }
  return false;
}

std::size_t blocked_cell_count(const Scenario& s) {
  const Grid g = s.grid();
  std::size_t n = 0;
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    if (is_cell_blocked_by_obstacle(s, g.from_linear(k))) ++n;
  }
  return n;
}

Scenario default_scenario() {
  Scenario s;
  s.room = Room{-10.0, -10.0, 20.0, 20.0, 5.0};
  s.grid_delta_x = 0.5;
  s.grid_delta_y = 0.5;
  s.grid_epsilon = 0.025;
  s.ap = {0.0, 10.0, 2.0};
  s.irs_center = {0.0, -10.0, 2.0};
  s.irs_wall_normal = WallAxis::Y;
  s.sru = {0.0, 0.0, 1.3};
  for (auto [cx, cy] : {std::pair{-5.0, -5.0}, {5.0, -5.0}, {0.0, 0.0}, {-3.0, 4.0}, {3.0, 4.0}}) {
    s.obstacles.push_back(Obstacle{cx, cy, 4.0, 4.0, 1.3});
  }
  s.mru_height = 1.0;
  s.q_initial = {-10.0, 0.0, 1.0};
  s.q_final = {10.0, 0.0, 1.0};
  s.v_max = 1.0;
  s.radio = RadioParams{};
  s.radio.irs = IrsArray{10, 6, 4, 5, 0.5};
  s.rs_target = 1.0;
  s.rm_margin = 0.0;
  return s;
}

Scenario desk_scenario() {
  Scenario s = default_scenario();
  s.grid_delta_x = 1.0;
  s.grid_delta_y = 1.0;
  s.grid_epsilon = 0.05;
  s.radio.irs = IrsArray{4, 2, 4, 5, 0.5};
  return s;
}

}  // namespace irsnav
