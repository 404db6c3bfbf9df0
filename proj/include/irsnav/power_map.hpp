#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irsnav/channel.hpp"

namespace irsnav {

/// Phase resolution: levels == 0 means continuous phases, otherwise L = levels discrete values.
struct PhaseMode {
  int levels = 0;

  static PhaseMode continuous() { return {}; }
  static PhaseMode bits(int b) { return {1 << b}; }
  bool is_continuous() const { return levels == 0; }
  /// "cont", "1bit", "2bit", ... for powers of two, "L<levels>" otherwise.
  std::string name() const;
};

/// Accepts "cont", "<b>bit" and "L<levels>".
PhaseMode parse_phase_mode(const std::string& text);

struct PhaseConfig {
  std::vector<double> theta;
};

/// theta_n = arg(h_tilde) - arg(w_tilde[n]) wrapped to [0, 2pi), with arg(0) taken as 0.
PhaseConfig optimal_phases(const CellChannelStats& stats);

/// Closed-form maximum (|h_tilde| + ||w_tilde||_1)^2 + tau.
double max_expected_gain(const CellChannelStats& stats);

/// Maps each phase to the nearest of {0, 2pi/L, ..., (L-1) 2pi/L} in circular distance; ties go to the lower level.
PhaseConfig quantize_phases(const PhaseConfig& phases, int levels);

double wrap_phase(double theta);

struct PowerGainMap {
  Grid grid;
  PhaseMode mode;
  /// Linear gains indexed by Grid::linear; -inf for cells inside obstacles.
  std::vector<double> values;
  std::vector<std::uint8_t> traversable;

  double at(CellIndex c) const { return values[grid.linear(c)]; }
  bool is_traversable(CellIndex c) const { return traversable[grid.linear(c)] != 0; }
  std::size_t traversable_count() const;
};

/// Per-cell value of the map at one location.
double cell_power_gain(const CellChannelStats& stats, PhaseMode mode);

PowerGainMap build_power_gain_map(const Scenario& s, PhaseMode mode, int workers = 1);

/// Fraction of traversable cells with value >= gamma_bar_linear. Throws if no cell is traversable.
double coverage_fraction(const PowerGainMap& map, double gamma_bar_linear);

}  // namespace irsnav
