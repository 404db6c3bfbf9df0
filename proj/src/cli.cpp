#include "irsnav/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "irsnav/map_io.hpp"

namespace irsnav {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kCommands = {"build-power-map", "build-rate-map", "plan", "validate", "sweep"};
const std::vector<std::string> kSweepVariables = {"gamma", "rate", "subsurfaces", "phase"};

std::string fmt(double v, int decimals = 6) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

AccessScheme scheme_of(const RunConfig& c) { return c.scheme == "oma" ? AccessScheme::Oma : AccessScheme::Noma; }

Scenario load_config_scenario(const RunConfig& c) {
  Scenario s;
  try {
    s = load_scenario(c.scenario_path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (c.rs_target) s.rs_target = *c.rs_target;
  if (c.no_irs) s = s.without_irs();
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return s;
}

ConvexTolerances tolerances_of(const RunConfig& c) {
  ConvexTolerances t;
  if (c.eps0) t.eps0 = *c.eps0;
  return t;
}

RateMapOptions rate_options(const RunConfig& c, std::ostream& log) {
  RateMapOptions o;
  o.tolerances = tolerances_of(c);
  o.workers = c.workers;
  if (c.log_probes) {
    o.probe_sink = [&log](const ProbeRecord& r) {
      log << "probe r0=" << fmt(r.r0, 6) << " relaxed=" << (r.relaxed_feasible ? 1 : 0) << " status=" << to_string(r.status)
          << " sca_iterations=" << r.sca_iterations << " dc_gap=" << r.dc_gap << " certified=" << fmt(r.certified_rate, 6)
          << '\n';
    };
  }
  return o;
}

const char* status_name(PlanStatus s) {
  switch (s) {
    case PlanStatus::Ok:
      return "ok";
    case PlanStatus::NoPath:
      return "no_path";
    case PlanStatus::InfeasibleEndpoint:
      return "infeasible_endpoint";
  }
  return "?";
}

ExitCode exit_of(PlanStatus s) {
  switch (s) {
    case PlanStatus::Ok:
      return ExitCode::Ok;
    case PlanStatus::NoPath:
      return ExitCode::NoPath;
    case PlanStatus::InfeasibleEndpoint:
      return ExitCode::InfeasibleQos;
  }
  return ExitCode::Generic;
}

struct MapStats {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
};

MapStats finite_range(const std::vector<double>& v) {
  MapStats m;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    m.min = std::min(m.min, x);
    m.max = std::max(m.max, x);
  }
  return m;
}

void write_power_map(const PowerGainMap& map, const Scenario& s, const fs::path& dir, std::ostream& out) {
  write_text(dir / "power_map.csv", grid_csv(map.grid, map.values, true));
  write_text(dir / "power_map.json", power_map_to_json(map, s).dump(1) + "\n");
  out << "wrote " << (dir / "power_map.csv").string() << " and power_map.json\n";
}

void write_rate_map(const RateMap& map, const Scenario& s, const ConvexTolerances& tol, const fs::path& dir,
                    std::ostream& out) {
  write_text(dir / "rate_map.csv", grid_csv(map.grid, map.values, false));
  write_text(dir / "rate_map.json", rate_map_to_json(map, s, tol).dump(1) + "\n");
  write_text(dir / "rate_map_cells.json", rate_cells_to_json(map).dump(1) + "\n");
  out << "wrote " << (dir / "rate_map.csv").string() << ", rate_map.json and rate_map_cells.json\n";
}

ExitCode rate_map_exit(const RateMap& map) {
  if (map.count(CellFlag::Stalled) > 0) return ExitCode::SolverStall;
  if (map.globally_infeasible()) return ExitCode::InfeasibleQos;
  return ExitCode::Ok;
}

ExitCode cmd_build_power_map(const RunConfig& c, std::ostream& out) {
  const Scenario s = load_config_scenario(c);
  const PowerGainMap map = build_power_gain_map(s, parse_phase_mode(c.phase_mode), c.workers);
  write_power_map(map, s, c.out_dir, out);
  const double gamma_db = c.gamma_db.value_or(-60.0);
  const MapStats st = finite_range(map.values);
  out << "power map " << map.mode.name() << " M=" << s.radio.irs.element_count() << " min_db=" << fmt(linear_to_db(st.min))
      << " max_db=" << fmt(linear_to_db(st.max)) << " eta(" << fmt(gamma_db, 2)
      << " dB)=" << fmt(coverage_fraction(map, db_to_linear(gamma_db))) << '\n';
  return ExitCode::Ok;
}

ExitCode cmd_build_rate_map(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const Scenario s = load_config_scenario(c);
  const RateMapOptions opt = rate_options(c, log);
  const RateMap map = build_rate_map(s, scheme_of(c), opt);
  write_rate_map(map, s, opt.tolerances, c.out_dir, out);
  const MapStats st = finite_range(map.values);
  out << "rate map " << c.scheme << " rs_target=" << fmt(s.rs_target, 3) << " ok=" << map.count(CellFlag::Ok)
      << " infeasible=" << map.count(CellFlag::Infeasible) << " stalled=" << map.count(CellFlag::Stalled)
      << " min=" << fmt(st.min) << " max=" << fmt(st.max) << '\n';
  return rate_map_exit(map);
}

// Values and sidecar hash of the map a plan runs on, loaded from --map or built inline.
struct PlanMap {
  Grid grid;
  std::vector<double> values;
  std::string hash;
  double threshold = 0.0;
  ExitCode build_status = ExitCode::Ok;
};

PlanMap plan_map(const RunConfig& c, const Scenario& s, std::ostream& out, std::ostream& log) {
  PlanMap m;
  const bool rate = c.rate_target.has_value();
  m.threshold = rate ? *c.rate_target + s.rm_margin : db_to_linear(*c.gamma_db);
  json sidecar;
  if (!c.map_path.empty()) {
    sidecar = read_json(c.map_path);
    if (sidecar.value("scenario_hash", "") != hash_hex(scenario_hash(s))) {
      throw ConfigError("map " + c.map_path + " was built for a different scenario");
    }
    const std::string kind = sidecar.value("kind", "");
    if (kind != (rate ? "rate_map" : "power_gain_map")) {
      throw ConfigError("map " + c.map_path + " does not match the requested threshold kind");
    }
    if (rate) {
      const RateMap r = rate_map_from_json(sidecar);
      m.grid = r.grid;
      m.values = r.values;
    } else {
      const PowerGainMap p = power_map_from_json(sidecar);
      m.grid = p.grid;
      m.values = p.values;
    }
  } else if (rate) {
    const RateMapOptions opt = rate_options(c, log);
    const RateMap r = build_rate_map(s, scheme_of(c), opt);
    write_rate_map(r, s, opt.tolerances, c.out_dir, out);
    sidecar = rate_map_to_json(r, s, opt.tolerances);
    m.grid = r.grid;
    m.values = r.values;
    m.build_status = rate_map_exit(r);
  } else {
    const PowerGainMap p = build_power_gain_map(s, parse_phase_mode(c.phase_mode), c.workers);
    write_power_map(p, s, c.out_dir, out);
    sidecar = power_map_to_json(p, s);
    m.grid = p.grid;
    m.values = p.values;
  }
  m.hash = json_hash(sidecar);
  return m;
}

ExitCode cmd_plan(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const Scenario s = load_config_scenario(c);
  const PlanMap m = plan_map(c, s, out, log);
  if (m.build_status == ExitCode::SolverStall) return m.build_status;
  const PlanResult r = plan(s, m.grid, m.values, m.threshold);
  const fs::path dir = c.out_dir;
  write_text(dir / "path.json", path_to_json(r, m.grid, s, m.hash).dump(1) + "\n");
  if (r.status == PlanStatus::Ok) write_text(dir / "path.csv", path_csv(r, m.grid, s.mru_height));
  out << "plan status=" << status_name(r.status);
  if (r.status == PlanStatus::Ok) {
    out << " waypoints=" << r.path.waypoints.size() << " distance_m=" << fmt(r.path.total_distance)
        << " time_s=" << fmt(r.path.travel_time);
  }
  out << '\n';
  return exit_of(r.status);
}

ExitCode cmd_validate(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const Scenario s = load_config_scenario(c);
  const Grid grid = s.grid();
  std::vector<CellIndex> cells;
  for (std::size_t k = 0; k < grid.cell_count(); ++k) {
    const CellIndex ci = grid.from_linear(k);
    if (!is_cell_blocked_by_obstacle(s, ci)) cells.push_back(ci);
  }
  std::mt19937_64 rng(c.seed);
  std::shuffle(cells.begin(), cells.end(), rng);
  cells.resize(std::min<std::size_t>(cells.size(), static_cast<std::size_t>(c.validate_cells)));
  std::sort(cells.begin(), cells.end(), [&](CellIndex a, CellIndex b) { return grid.linear(a) < grid.linear(b); });

  RateMapOptions opt = rate_options(c, log);
  opt.only_cells = cells;
  const AccessScheme scheme = scheme_of(c);
  const RateMap rates = build_rate_map(s, scheme, opt);
  const double sigma2 = s.radio.noise_power_watt();
  const ChannelModel model(s);

  std::ostringstream csv;
  csv << "i,j,gain_closed,gain_mc,gain_stderr,gain_ok,rate_m_bound,rate_m_mc,rate_m_stderr,rate_m_gap,rate_s_bound,"
         "rate_s_mc,rate_s_stderr,rate_s_gap,jensen_ok\n";
  int gain_ok = 0;
  int jensen_checked = 0;
  int jensen_ok = 0;
  double gap_m = 0.0;
  double gap_s = 0.0;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    const CellIndex ci = cells[t];
    const CellChannelStats st = model.stats_at(grid.cell_center(ci, s.mru_height));
    const PhaseConfig ph = optimal_phases(st);
    const double closed = expected_gain(st, ph.theta);
    const McEstimate mc = mc_expected_gain(s, ci, ph.theta, c.samples, c.seed + 2 * t + 1);
    const bool g_ok = std::abs(mc.mean - closed) <= 3.0 * mc.stderr_;
    gain_ok += g_ok;
    csv << ci.i << ',' << ci.j << ',' << closed << ',' << mc.mean << ',' << mc.stderr_ << ',' << g_ok;
    const RateCellArtifact& a = rates.cells[grid.linear(ci)];
    if (a.flag != CellFlag::Ok) {
      csv << ",NA,NA,NA,NA,NA,NA,NA,NA,NA\n";
      continue;
    }
    const RateMcEstimate rm =
        mc_expected_rate(s, ci, a.theta, a.p_m, a.p_s, scheme, a.order, c.samples, c.seed + 2 * t + 2);
    const double bm = user_rate_bound(a, scheme, true, sigma2);
    const double bs = user_rate_bound(a, scheme, false, sigma2);
    const bool j_ok = bm - rm.mru.mean >= -3.0 * rm.mru.stderr_ && bs - rm.sru.mean >= -3.0 * rm.sru.stderr_;
    ++jensen_checked;
    jensen_ok += j_ok;
    gap_m += bm - rm.mru.mean;
    gap_s += bs - rm.sru.mean;
    csv << ',' << bm << ',' << rm.mru.mean << ',' << rm.mru.stderr_ << ',' << bm - rm.mru.mean << ',' << bs << ','
        << rm.sru.mean << ',' << rm.sru.stderr_ << ',' << bs - rm.sru.mean << ',' << j_ok << '\n';
  }
  const fs::path dir = c.out_dir;
  write_text(dir / "validation.csv", csv.str());
  const json summary = {{"kind", "validation"},
                        {"scenario_hash", hash_hex(scenario_hash(s))},
                        {"scheme", c.scheme},
                        {"samples", c.samples},
                        {"seed", c.seed},
                        {"tolerances", tolerances_to_json(opt.tolerances)},
                        {"cells", cells.size()},
                        {"gain_within_3se", gain_ok},
                        {"rate_cells", jensen_checked},
                        {"jensen_ok", jensen_ok},
                        {"mean_gap_mru", jensen_checked ? gap_m / jensen_checked : 0.0},
                        {"mean_gap_sru", jensen_checked ? gap_s / jensen_checked : 0.0}};
  write_text(dir / "validation.json", summary.dump(1) + "\n");
  out << "validate cells=" << cells.size() << " gain_within_3se=" << gain_ok << " jensen_ok=" << jensen_ok << "/"
      << jensen_checked << " mean_gap_mru=" << fmt(summary["mean_gap_mru"].get<double>())
      << " mean_gap_sru=" << fmt(summary["mean_gap_sru"].get<double>()) << '\n';
  return ExitCode::Ok;
}

std::string plan_columns(const PlanResult& r) {
  return fmt(r.status == PlanStatus::Ok ? r.path.total_distance : std::nan("")) + "," + status_name(r.status);
}

ExitCode cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const Scenario s = load_config_scenario(c);
  const std::vector<double> xs = c.sweep.values();
  std::ostringstream csv;
  const std::string& var = c.sweep.variable;
  if (var == "gamma") {
    const PowerGainMap map = build_power_gain_map(s, parse_phase_mode(c.phase_mode), c.workers);
    csv << "gamma_db,eta,distance_m,status\n";
    for (double g : xs) {
      const double lin = db_to_linear(g);
      csv << fmt(g) << ',' << fmt(coverage_fraction(map, lin)) << ',' << plan_columns(plan(s, map.grid, map.values, lin))
          << '\n';
    }
  } else if (var == "rate") {
    const RateMap map = build_rate_map(s, scheme_of(c), rate_options(c, log));
    if (map.count(CellFlag::Stalled) > 0) return ExitCode::SolverStall;
    csv << "rate_target,distance_m,status\n";
    for (double r : xs) csv << fmt(r) << ',' << plan_columns(plan(s, map.grid, map.values, r + s.rm_margin)) << '\n';
  } else if (var == "subsurfaces") {
    const double lin = db_to_linear(*c.gamma_db);
    csv << "subsurfaces_x,elements,eta,distance_m,status\n";
    for (double x : xs) {
      const int nx = static_cast<int>(std::lround(x));
      const Scenario sx = s.with_phase_grouping(nx, s.radio.irs.subsurfaces_z);
      const PowerGainMap map = build_power_gain_map(sx, parse_phase_mode(c.phase_mode), c.workers);
      csv << nx << ',' << sx.radio.irs.element_count() << ',' << fmt(coverage_fraction(map, lin)) << ','
          << plan_columns(plan(sx, map.grid, map.values, lin)) << '\n';
    }
  } else {
    const double lin = db_to_linear(*c.gamma_db);
    std::vector<PhaseMode> modes;
    for (double b : xs) modes.push_back(PhaseMode::bits(static_cast<int>(std::lround(b))));
    modes.push_back(PhaseMode::continuous());
    csv << "phase_mode,eta,distance_m,status\n";
    for (const PhaseMode& m : modes) {
      const PowerGainMap map = build_power_gain_map(s, m, c.workers);
      csv << m.name() << ',' << fmt(coverage_fraction(map, lin)) << ',' << plan_columns(plan(s, map.grid, map.values, lin))
          << '\n';
    }
  }
  const fs::path file = fs::path(c.out_dir) / ("sweep_" + var + ".csv");
  write_text(file, "# scenario_hash=" + hash_hex(scenario_hash(s)) + "\n" + csv.str());
  out << "wrote " << file.string() << " (" << xs.size() << " points)\n";
  return ExitCode::Ok;
}

}  // namespace

std::vector<double> SweepRange::values() const {
  if (points < 1) throw ConfigError("sweep range is empty");
  if (points == 1) return {from};
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) v[k] = from + (to - from) * k / (points - 1);
  return v;
}

void RunConfig::validate() const {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    throw ConfigError("unknown command '" + command + "'");
  }
  if (scenario_path.empty() || !fs::exists(scenario_path)) throw ConfigError("scenario file not found: " + scenario_path);
  if (!map_path.empty() && !fs::exists(map_path)) throw ConfigError("map file not found: " + map_path);
  try {
    parse_phase_mode(phase_mode);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (scheme != "noma" && scheme != "oma") throw ConfigError("scheme must be noma or oma");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (samples < 2) throw ConfigError("samples must be at least 2");
  if (validate_cells < 1) throw ConfigError("validate-cells must be at least 1");
  if (eps0 && !(*eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  if (rs_target && !(*rs_target >= 0.0)) throw ConfigError("rs-target must be nonnegative");
  if (command == "plan") {
    if (gamma_db.has_value() == rate_target.has_value()) {
      throw ConfigError("plan needs exactly one of --gamma-db and --rate-target");
    }
  }
  if (command == "sweep") {
    if (std::find(kSweepVariables.begin(), kSweepVariables.end(), sweep.variable) == kSweepVariables.end()) {
      throw ConfigError("unknown sweep variable '" + sweep.variable + "'");
    }
    if (sweep.points < 1) throw ConfigError("sweep range is empty");
    if (!std::isfinite(sweep.from) || !std::isfinite(sweep.to) || sweep.from > sweep.to) {
      throw ConfigError("sweep range must satisfy from <= to");
    }
    if ((sweep.variable == "subsurfaces" || sweep.variable == "phase") && !gamma_db) {
      throw ConfigError("this sweep needs --gamma-db");
    }
    if (sweep.variable == "subsurfaces" && sweep.from < 0.0) throw ConfigError("subsurface counts must be nonnegative");
    if (sweep.variable == "phase" && (sweep.from < 1.0 || sweep.to > 16.0)) {
      throw ConfigError("phase sweep covers 1 to 16 bits");
    }
  }
}

ExitCode run(const RunConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  if (config.command == "build-power-map") return cmd_build_power_map(config, out);
  if (config.command == "build-rate-map") return cmd_build_rate_map(config, out, log);
  if (config.command == "plan") return cmd_plan(config, out, log);
  if (config.command == "validate") return cmd_validate(config, out, log);
  return cmd_sweep(config, out, log);
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  c.workers = std::max(1u, std::thread::hardware_concurrency());
  CLI::App app{"Radio-map construction and QoS-constrained path planning for IRS-assisted indoor robots"};
  app.add_option("--scenario", c.scenario_path, "Scenario JSON file")->required();
  app.add_option("--command", c.command, "build-power-map | build-rate-map | plan | validate | sweep")->required();
  app.add_option("--phase-mode", c.phase_mode, "cont, 1bit, 2bit, 3bit (or <b>bit, L<levels>)");
  app.add_option("--scheme", c.scheme, "noma or oma");
  app.add_option("--gamma-db", c.gamma_db, "Channel power gain threshold in dB");
  app.add_option("--rate-target", c.rate_target, "MRU rate threshold in bit/s/Hz");
  app.add_option("--rs-target", c.rs_target, "SRU rate floor in bit/s/Hz (overrides the scenario)");
  app.add_option("--map", c.map_path, "Existing map sidecar to plan on");
  app.add_option("--out", c.out_dir, "Output directory");
  app.add_option("--seed", c.seed, "Monte Carlo seed");
  app.add_option("--workers", c.workers, "Worker threads for cell-level parallelism");
  app.add_option("--eps0", c.eps0, "Bisection tolerance in bit/s/Hz");
  app.add_option("--samples", c.samples, "Monte Carlo samples per cell");
  app.add_option("--validate-cells", c.validate_cells, "Number of sampled cells for validate");
  app.add_flag("--no-irs", c.no_irs, "Remove the IRS from the scenario");
  app.add_flag("--log-probes", c.log_probes, "Print one line per bisection probe to stderr");
  app.add_option("--sweep", c.sweep.variable, "gamma | rate | subsurfaces | phase");
  app.add_option("--sweep-from", c.sweep.from, "First sweep value");
  app.add_option("--sweep-to", c.sweep.to, "Last sweep value");
  app.add_option("--sweep-points", c.sweep.points, "Number of sweep points");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::ConfigError);
  }
  try {
    return static_cast<int>(run(c, out, err));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::ConfigError);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Generic);
  }
}

}  // namespace irsnav
