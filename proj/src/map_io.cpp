#include "irsnav/map_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace irsnav {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double value_or_neg_inf(const json& j) { return j.is_null() ? kNegInf : j.get<double>(); }

const char* scheme_name(AccessScheme s) { return s == AccessScheme::Oma ? "oma" : "noma"; }
const char* order_name(DecodingOrder o) { return o == DecodingOrder::SruStrong ? "sru_strong" : "mru_strong"; }

}  // namespace

std::string grid_csv(const Grid& grid, std::span<const double> values, bool to_db) {
  if (values.size() != grid.cell_count()) throw std::invalid_argument("map size does not match the grid");
  std::string out;
  char buf[64];
  for (int i = 1; i <= grid.nx(); ++i) {
    for (int j = 1; j <= grid.ny(); ++j) {
      if (j > 1) out += ',';
      const double v = values[grid.linear({i, j})];
      if (!std::isfinite(v) || (to_db && !(v > 0.0))) {
        out += "NA";
        continue;
      }
      std::snprintf(buf, sizeof buf, "%.6f", to_db ? 10.0 * std::log10(v) : v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

json grid_to_json(const Grid& g) {
  return {{"origin", {g.origin_x(), g.origin_y()}}, {"delta", {g.delta_x(), g.delta_y()}}, {"nx", g.nx()},
          {"ny", g.ny()}};
}

Grid grid_from_json(const json& j) {
  return Grid(j.at("origin")[0].get<double>(), j.at("origin")[1].get<double>(), j.at("delta")[0].get<double>(),
              j.at("delta")[1].get<double>(), j.at("nx").get<int>(), j.at("ny").get<int>());
}

json tolerances_to_json(const ConvexTolerances& t) {
  return {{"sdp_tolerance", t.sdp_tolerance},
          {"feasibility_tolerance", t.feasibility_tolerance},
          {"sca_budget_slack", t.sca_budget_slack},
          {"sic_margin", t.sic_margin},
          {"constraint_tolerance", t.constraint_tolerance},
          {"sca_tolerance", t.sca_tolerance},
          {"rank_tolerance", t.rank_tolerance},
          {"sca_max_iterations", t.sca_max_iterations},
          {"eps0", t.eps0}};
}

json power_map_to_json(const PowerGainMap& map, const Scenario& s) {
  json values = json::array();
  json flags = json::array();
  for (std::size_t k = 0; k < map.values.size(); ++k) {
    values.push_back(map.traversable[k] ? finite_or_null(map.values[k]) : json(nullptr));
    flags.push_back(map.traversable[k] ? 0 : 1);
  }
  return {{"kind", "power_gain_map"},
          {"scenario_hash", hash_hex(scenario_hash(s))},
          {"phase_mode", map.mode.name()},
          {"units", {{"values", "linear"}, {"csv", "dB"}}},
          {"layout", "row-major, i (x index) major, 1-based (i, j) -> (i-1)*ny + (j-1)"},
          {"flag_codes", {{"0", "traversable"}, {"1", "untraversable"}}},
          {"grid", grid_to_json(map.grid)},
          {"values", values},
          {"flags", flags}};
}

PowerGainMap power_map_from_json(const json& j) {
  PowerGainMap map;
  map.grid = grid_from_json(j.at("grid"));
  map.mode = parse_phase_mode(j.at("phase_mode").get<std::string>());
  const auto& values = j.at("values");
  const auto& flags = j.at("flags");
  if (values.size() != map.grid.cell_count() || flags.size() != map.grid.cell_count()) {
    throw std::invalid_argument("sidecar size does not match its grid");
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    const bool trav = flags[k].get<int>() == 0;
    map.traversable.push_back(trav ? 1 : 0);
    map.values.push_back(trav ? value_or_neg_inf(values[k]) : kNegInf);
  }
  return map;
}

json rate_map_to_json(const RateMap& map, const Scenario& s, const ConvexTolerances& tol) {
  json values = json::array();
  json flags = json::array();
  for (std::size_t k = 0; k < map.values.size(); ++k) {
    values.push_back(finite_or_null(map.values[k]));
    flags.push_back(static_cast<int>(map.cells[k].flag));
  }
  return {{"kind", "rate_map"},
          {"scenario_hash", hash_hex(scenario_hash(s))},
          {"scheme", scheme_name(map.scheme)},
          {"rs_target", map.rs_target},
          {"units", {{"values", "bit/s/Hz"}, {"csv", "bit/s/Hz"}}},
          {"layout", "row-major, i (x index) major, 1-based (i, j) -> (i-1)*ny + (j-1)"},
          {"flag_codes", {{"0", "ok"}, {"1", "untraversable"}, {"2", "infeasible"}, {"3", "not_computed"}, {"4", "stalled"}}},
          {"globally_infeasible", map.globally_infeasible()},
          {"tolerances", tolerances_to_json(tol)},
          {"grid", grid_to_json(map.grid)},
          {"values", values},
          {"flags", flags}};
}

json rate_cells_to_json(const RateMap& map) {
  json cells = json::array();
  for (std::size_t k = 0; k < map.cells.size(); ++k) {
    const RateCellArtifact& a = map.cells[k];
    if (a.flag != CellFlag::Ok) continue;
    const CellIndex c = map.grid.from_linear(k);
    cells.push_back({{"i", c.i},
                     {"j", c.j},
                     {"order", order_name(a.order)},
                     {"theta", a.theta},
                     {"p_m", a.p_m},
                     {"p_s", a.p_s},
                     {"gain_m", a.gain_m},
                     {"gain_s", a.gain_s},
                     {"probes", a.probes},
                     {"stalled_probes", a.stalled_probes}});
  }
  return {{"kind", "rate_map_cells"}, {"scheme", scheme_name(map.scheme)}, {"cells", cells}};
}

RateMap rate_map_from_json(const json& sidecar, const json* cells) {
  RateMap map;
  map.grid = grid_from_json(sidecar.at("grid"));
  map.scheme = sidecar.at("scheme").get<std::string>() == "oma" ? AccessScheme::Oma : AccessScheme::Noma;
  map.rs_target = sidecar.at("rs_target").get<double>();
  const auto& values = sidecar.at("values");
  const auto& flags = sidecar.at("flags");
  if (values.size() != map.grid.cell_count() || flags.size() != map.grid.cell_count()) {
    throw std::invalid_argument("sidecar size does not match its grid");
  }
  map.cells.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    map.values.push_back(value_or_neg_inf(values[k]));
    map.cells[k].flag = static_cast<CellFlag>(flags[k].get<int>());
  }
  if (cells != nullptr) {
    for (const auto& c : cells->at("cells")) {
      RateCellArtifact& a = map.cells[map.grid.linear({c.at("i").get<int>(), c.at("j").get<int>()})];
      a.order = c.at("order").get<std::string>() == "mru_strong" ? DecodingOrder::MruStrong : DecodingOrder::SruStrong;
      a.theta = c.at("theta").get<std::vector<double>>();
      a.p_m = c.at("p_m").get<double>();
      a.p_s = c.at("p_s").get<double>();
      a.gain_m = c.at("gain_m").get<double>();
      a.gain_s = c.at("gain_s").get<double>();
      a.probes = c.at("probes").get<int>();
      a.stalled_probes = c.value("stalled_probes", 0);
    }
  }
  return map;
}

json path_to_json(const PlanResult& r, const Grid& grid, const Scenario& s, const std::string& map_hash) {
  json j = {{"kind", "planned_path"},
            {"scenario_hash", hash_hex(scenario_hash(s))},
            {"map_hash", map_hash},
            {"threshold", r.threshold},
            {"start", {r.start.i, r.start.j}},
            {"goal", {r.goal.i, r.goal.j}}};
  switch (r.status) {
    case PlanStatus::Ok:
      j["status"] = "ok";
      break;
    case PlanStatus::NoPath:
      j["status"] = "no_path";
      break;
    case PlanStatus::InfeasibleEndpoint:
      j["status"] = "infeasible_endpoint";
      break;
  }
  if (r.status != PlanStatus::Ok) return j;
  json wps = json::array();
  for (std::size_t k = 0; k < r.path.waypoints.size(); ++k) {
    const CellIndex c = r.path.waypoints[k];
    const Point3 q = grid.cell_center(c, s.mru_height);
    wps.push_back({{"i", c.i}, {"j", c.j}, {"x", q.x}, {"y", q.y}, {"value", finite_or_null(r.path.values[k])}});
  }
  j["waypoints"] = wps;
  j["total_distance_m"] = r.path.total_distance;
  j["travel_time_s"] = r.path.travel_time;
  return j;
}

std::string path_csv(const PlanResult& r, const Grid& grid, double z) {
  std::ostringstream os;
  os.precision(17);
  os << "x,y,value\n";
  for (std::size_t k = 0; k < r.path.waypoints.size(); ++k) {
    const Point3 q = grid.cell_center(r.path.waypoints[k], z);
    os << q.x << ',' << q.y << ',' << r.path.values[k] << '\n';
  }
  return os.str();
}

std::string json_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return hash_hex(h);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return json::parse(f);
}

}  // namespace irsnav
