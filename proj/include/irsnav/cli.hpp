#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace irsnav {

enum class ExitCode : int { Ok = 0, Generic = 1, NoPath = 2, InfeasibleQos = 3, ConfigError = 4, SolverStall = 5 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepRange {
  /// gamma | rate | subsurfaces | phase
  std::string variable;
  double from = 0.0;
  double to = 0.0;
  int points = 0;

  /// Evenly spaced points from `from` to `to` inclusive.
  std::vector<double> values() const;
};

struct RunConfig {
  std::string scenario_path;
  std::string command;
  std::string phase_mode = "cont";
  std::string scheme = "noma";
  std::optional<double> gamma_db;
  std::optional<double> rate_target;
  std::optional<double> rs_target;
  std::string map_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int workers = 1;
  std::optional<double> eps0;
  int samples = 10000;
  int validate_cells = 20;
  bool no_irs = false;
  bool log_probes = false;
  SweepRange sweep;

  /// Throws ConfigError on missing files, unknown names or malformed ranges.
  void validate() const;
};

/// Executes one command. Progress and summary lines go to `out`, per-probe solver lines to `log`.
ExitCode run(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Parses argv and runs; returns the process exit code.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace irsnav
