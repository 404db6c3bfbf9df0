#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "irsnav/cli.hpp"
#include "irsnav/map_io.hpp"

using namespace irsnav;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "irsnav");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

// Scratch directory holding the toy scenario, removed on destruction.
struct Workspace {
  fs::path dir;
  std::string toy;
  std::string room;

  Workspace() {
    dir = fs::temp_directory_path() / "irsnav_cli_test";
    fs::remove_all(dir);
    toy = (dir / "toy.json").string();
    room = (dir / "room.json").string();
    write_text(toy, scenario_to_json(fixture::toy_scenario()).dump(1));
    write_text(room, scenario_to_json(default_scenario()).dump(1));
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string out(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("configuration errors exit with code 4") {
  Workspace w;
  CHECK(run_cli({"--command", "plan"}).code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "fly"}).code == 4);
  CHECK(run_cli({"--scenario", w.out("missing.json"), "--command", "build-power-map"}).code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "build-power-map", "--phase-mode", "9x"}).code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "build-rate-map", "--scheme", "tdma"}).code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "plan"}).code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "plan", "--gamma-db", "-60", "--rate-target", "1"}).code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "sweep", "--sweep", "gamma", "--sweep-points", "0"}).code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "sweep", "--sweep", "gamma", "--sweep-from", "1", "--sweep-to",
                 "0", "--sweep-points", "3"})
            .code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "sweep", "--sweep", "speed", "--sweep-points", "2"}).code == 4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "plan", "--gamma-db", "-60", "--map", w.out("none.json")}).code ==
        4);
  CHECK(run_cli({"--scenario", w.toy, "--command", "build-power-map", "--workers", "0"}).code == 4);

  write_text(w.out("bad.json"), "{\"room\": 3}");
  const Run bad = run_cli({"--scenario", w.out("bad.json"), "--command", "build-power-map"});
  CHECK(bad.code == 4);
  CHECK(bad.err.find("config error") != std::string::npos);
}

TEST_CASE("power map outputs are reproducible") {
  Workspace w;
  const Run a = run_cli({"--scenario", w.room, "--command", "build-power-map", "--out", w.out("a"), "--workers", "2"});
  const Run b = run_cli({"--scenario", w.room, "--command", "build-power-map", "--out", w.out("b"), "--workers", "1"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.out.find("M=1200") != std::string::npos);
  for (const char* f : {"power_map.csv", "power_map.json"}) {
    const std::string x = slurp(fs::path(w.out("a")) / f);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(fs::path(w.out("b")) / f));
  }
  const nlohmann::json side = read_json(fs::path(w.out("a")) / "power_map.json");
  CHECK(side.at("scenario_hash") == hash_hex(scenario_hash(default_scenario())));
  CHECK(power_map_from_json(side).grid.cell_count() == 1600);
}

TEST_CASE("plan exit codes") {
  Workspace w;
  SUBCASE("low threshold finds a path") {
    const Run r = run_cli({"--scenario", w.room, "--command", "plan", "--gamma-db", "-120", "--out", w.out("p")});
    CHECK(r.code == 0);
    const nlohmann::json j = read_json(fs::path(w.out("p")) / "path.json");
    CHECK(j.at("status") == "ok");
    CHECK(j.at("total_distance_m").get<double>() == doctest::Approx(21.157).epsilon(1e-4));
    CHECK(fs::exists(fs::path(w.out("p")) / "path.csv"));
  }
  SUBCASE("unreachable endpoint") {
    const Run r = run_cli({"--scenario", w.room, "--command", "plan", "--gamma-db", "0", "--out", w.out("p")});
    CHECK(r.code == 3);
    CHECK(read_json(fs::path(w.out("p")) / "path.json").at("status") == "infeasible_endpoint");
  }
  SUBCASE("disconnected map loaded with --map") {
    const Scenario s = fixture::toy_scenario();
    PowerGainMap m = build_power_gain_map(s, PhaseMode::continuous(), 1);
    for (int j = 1; j <= m.grid.ny(); ++j) {
      if (m.is_traversable({4, j})) m.values[m.grid.linear({4, j})] = 1e-20;
    }
    write_text(w.out("wall.json"), power_map_to_json(m, s).dump());
    const Run r = run_cli(
        {"--scenario", w.toy, "--command", "plan", "--gamma-db", "-150", "--map", w.out("wall.json"), "--out", w.out("p")});
    CHECK(r.code == 2);
    const nlohmann::json j = read_json(fs::path(w.out("p")) / "path.json");
    CHECK(j.at("status") == "no_path");
    CHECK(j.at("map_hash") == json_hash(power_map_to_json(m, s)));
  }
  SUBCASE("map built for another scenario") {
    const Scenario s = fixture::toy_scenario();
    write_text(w.out("toy_map.json"), power_map_to_json(build_power_gain_map(s, PhaseMode::continuous(), 1), s).dump());
    CHECK(run_cli({"--scenario", w.room, "--command", "plan", "--gamma-db", "-60", "--map", w.out("toy_map.json")})
              .code == 4);
    // A power map cannot serve a rate threshold.
    CHECK(run_cli({"--scenario", w.toy, "--command", "plan", "--rate-target", "1", "--map", w.out("toy_map.json")})
              .code == 4);
  }
}

TEST_CASE("rate map commands on the toy room") {
  Workspace w;
  const Run a = run_cli({"--scenario", w.toy, "--command", "build-rate-map", "--out", w.out("r1")});
  REQUIRE(a.code == 0);
  const Run b = run_cli({"--scenario", w.toy, "--command", "build-rate-map", "--out", w.out("r2"), "--workers", "2"});
  REQUIRE(b.code == 0);
  for (const char* f : {"rate_map.csv", "rate_map.json", "rate_map_cells.json"}) {
    CHECK(slurp(fs::path(w.out("r1")) / f) == slurp(fs::path(w.out("r2")) / f));
  }
  const nlohmann::json side = read_json(fs::path(w.out("r1")) / "rate_map.json");
  CHECK(side.at("globally_infeasible") == false);
  CHECK(side.at("tolerances").at("eps0").get<double>() > 0.0);

  const Run plan = run_cli({"--scenario", w.toy, "--command", "plan", "--rate-target", "0.5", "--map",
                            w.out("r1/rate_map.json"), "--out", w.out("p")});
  CHECK(plan.code == 0);

  const Run oma = run_cli({"--scenario", w.toy, "--command", "build-rate-map", "--scheme", "oma", "--rs-target", "60",
                           "--out", w.out("r3")});
  CHECK(oma.code == 3);
  CHECK(read_json(fs::path(w.out("r3")) / "rate_map.json").at("globally_infeasible") == true);
}

TEST_CASE("sweep and validate") {
  Workspace w;
  const Run s = run_cli({"--scenario", w.toy, "--command", "sweep", "--sweep", "gamma", "--sweep-from", "-80",
                         "--sweep-to", "-40", "--sweep-points", "5", "--out", w.out("s")});
  REQUIRE(s.code == 0);
  const std::string csv = slurp(fs::path(w.out("s")) / "sweep_gamma.csv");
  CHECK(csv.rfind("# scenario_hash=" + hash_hex(scenario_hash(fixture::toy_scenario())) + "\ngamma_db,eta,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

  const Run p = run_cli({"--scenario", w.toy, "--command", "sweep", "--sweep", "phase", "--sweep-from", "1",
                         "--sweep-to", "3", "--sweep-points", "3", "--gamma-db", "-60", "--out", w.out("s")});
  REQUIRE(p.code == 0);
  CHECK(slurp(fs::path(w.out("s")) / "sweep_phase.csv").find("\ncont,") != std::string::npos);

  const Run v = run_cli({"--scenario", w.toy, "--command", "validate", "--validate-cells", "4", "--samples", "2000",
                         "--seed", "3", "--out", w.out("v")});
  REQUIRE(v.code == 0);
  const nlohmann::json j = read_json(fs::path(w.out("v")) / "validation.json");
  CHECK(j.at("cells") == 4);
  CHECK(j.at("samples") == 2000);
}
