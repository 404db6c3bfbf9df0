#include "irsnav/power_map.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "irsnav/parallel.hpp"

namespace irsnav {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double arg_or_zero(cdouble z) { return z == cdouble{0.0, 0.0} ? 0.0 : std::arg(z); }

}  // namespace

std::string PhaseMode::name() const {
  if (is_continuous()) return "cont";
  int b = 0;
  while ((1 << b) < levels) ++b;
  if ((1 << b) == levels) return std::to_string(b) + "bit";
  return "L" + std::to_string(levels);
}

PhaseMode parse_phase_mode(const std::string& text) {
  if (text == "cont" || text == "continuous") return PhaseMode::continuous();
  try {
    if (text.size() > 3 && text.substr(text.size() - 3) == "bit") {
      const int b = std::stoi(text.substr(0, text.size() - 3));
      if (b >= 1 && b <= 16) return PhaseMode::bits(b);
    } else if (text.size() > 1 && text[0] == 'L') {
      const int l = std::stoi(text.substr(1));
      if (l >= 2) return PhaseMode{l};
    }
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("unknown phase mode '" + text + "'");
}

double wrap_phase(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

PhaseConfig optimal_phases(const CellChannelStats& stats) {
  PhaseConfig p;
  const double ref = arg_or_zero(stats.h_tilde);
  p.theta.resize(static_cast<std::size_t>(stats.w_tilde.size()));
  for (Eigen::Index n = 0; n < stats.w_tilde.size(); ++n) {
    p.theta[static_cast<std::size_t>(n)] = wrap_phase(ref - arg_or_zero(stats.w_tilde[n]));
  }
  return p;
}

double max_expected_gain(const CellChannelStats& stats) {
  double amp = std::abs(stats.h_tilde);
  for (Eigen::Index n = 0; n < stats.w_tilde.size(); ++n) amp += std::abs(stats.w_tilde[n]);
  return amp * amp + stats.tau;
}

PhaseConfig quantize_phases(const PhaseConfig& phases, int levels) {
  if (levels < 2) throw std::invalid_argument("quantization needs at least two levels");
  const double delta = kTwoPi / levels;
  PhaseConfig out;
  out.theta.reserve(phases.theta.size());
  for (double theta : phases.theta) {
    const double t = wrap_phase(theta);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < levels; ++k) {
      double d = std::abs(t - k * delta);
      d = std::min(d, kTwoPi - d);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    out.theta.push_back(best * delta);
  }
  return out;
}

std::size_t PowerGainMap::traversable_count() const {
  std::size_t n = 0;
  for (auto t : traversable) n += t != 0;
  return n;
}

double cell_power_gain(const CellChannelStats& stats, PhaseMode mode) {
  const double bound = max_expected_gain(stats);
  if (mode.is_continuous()) return bound;
  const PhaseConfig q = quantize_phases(optimal_phases(stats), mode.levels);
  // The closed form is an upper bound; clip rounding noise when quantization lands on the optimum.
  return std::min(expected_gain(stats, q.theta), bound);
}

PowerGainMap build_power_gain_map(const Scenario& s, PhaseMode mode, int workers) {
  PowerGainMap map;
  map.grid = s.grid();
  map.mode = mode;
  const std::size_t n = map.grid.cell_count();
  map.values.assign(n, -std::numeric_limits<double>::infinity());
  map.traversable.assign(n, 0);
  const ChannelModel model(s);
  parallel_for(n, workers, [&](std::size_t k) {
    const CellIndex c = map.grid.from_linear(k);
    if (is_cell_blocked_by_obstacle(s, c)) return;
    map.traversable[k] = 1;
    map.values[k] = cell_power_gain(model.stats_at(map.grid.cell_center(c, s.mru_height)), mode);
  });
  return map;
}

double coverage_fraction(const PowerGainMap& map, double gamma_bar_linear) {
  std::size_t total = 0;
  std::size_t hit = 0;
  for (std::size_t k = 0; k < map.values.size(); ++k) {
    if (!map.traversable[k]) continue;
    ++total;
    if (map.values[k] >= gamma_bar_linear) ++hit;
  }
  if (total == 0) throw std::invalid_argument("coverage is undefined when no cell is traversable");
  return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace irsnav
