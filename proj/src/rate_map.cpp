#include "irsnav/rate_map.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "irsnav/parallel.hpp"

namespace irsnav {

double noma_rate_bound(double lambda_l, double p_l, double p_lbar, double mu_l, double sigma2) {
  if (p_l < 0.0 || p_lbar < 0.0) throw std::invalid_argument("powers must be nonnegative");
  if (p_l == 0.0) return 0.0;
  if (!(lambda_l > 0.0)) throw std::invalid_argument("channel gain must be positive when power is allocated");
  return std::log2(1.0 + p_l / (mu_l * p_lbar + sigma2 / lambda_l));
}

double oma_rate_bound(double lambda_l, double p_l, double sigma2) {
  if (p_l < 0.0) throw std::invalid_argument("power must be nonnegative");
  if (p_l == 0.0) return 0.0;
  if (!(lambda_l > 0.0)) throw std::invalid_argument("channel gain must be positive when power is allocated");
  return 0.5 * std::log2(1.0 + 2.0 * lambda_l * p_l / sigma2);
}

std::size_t RateMap::count(CellFlag f) const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.flag == f;
  return n;
}

bool RateMap::globally_infeasible() const { return count(CellFlag::Ok) == 0 && count(CellFlag::Infeasible) > 0; }

double user_rate_bound(const RateCellArtifact& a, AccessScheme scheme, bool mru, double sigma2) {
  const double gain = mru ? a.gain_m : a.gain_s;
  const double p = mru ? a.p_m : a.p_s;
  if (scheme == AccessScheme::Oma) return oma_rate_bound(gain, p, sigma2);
  // The weak user sees the strong user's signal as interference.
  const bool mru_weak = a.order == DecodingOrder::SruStrong;
  const double mu = (mru == mru_weak) ? 1.0 : 0.0;
  return noma_rate_bound(gain, p, mru ? a.p_s : a.p_m, mu, sigma2);
}

double reevaluate_rate(const RateMap& map, CellIndex c, double sigma2) {
  const RateCellArtifact& a = map.cells[map.grid.linear(c)];
  if (a.flag != CellFlag::Ok) return -std::numeric_limits<double>::infinity();
  return user_rate_bound(a, map.scheme, true, sigma2);
}

RateSolution solve_rate_cell(const RateCellProblem& base, AccessScheme scheme, const ConvexTolerances& tol,
                             DecodingOrder* chosen, const ProbeSink& sink) {
  RateCellProblem p = base;
  if (scheme == AccessScheme::Oma) {
    if (chosen != nullptr) *chosen = DecodingOrder::SruStrong;
    return solve_oma_cell(p, tol, sink);
  }
  p.scheme = AccessScheme::Noma;
  p.order = DecodingOrder::SruStrong;
  RateSolution a = bisection_max_rate(p, tol, sink);
  p.order = DecodingOrder::MruStrong;
  RateSolution b = bisection_max_rate(p, tol, sink);
  const bool ok_a = a.status == SolveStatus::RankOneAchieved || a.status == SolveStatus::Feasible;
  const bool ok_b = b.status == SolveStatus::RankOneAchieved || b.status == SolveStatus::Feasible;
  const bool take_b = ok_b && (!ok_a || b.rate > a.rate);
  if (chosen != nullptr) *chosen = take_b ? DecodingOrder::MruStrong : DecodingOrder::SruStrong;
  RateSolution& best = take_b ? b : a;
  // Neither order solved: report a stall if either one stalled.
  if (!ok_a && !ok_b && b.status == SolveStatus::Stalled) a.status = SolveStatus::Stalled;
  best.probes = a.probes + b.probes;
  std::vector<ProbeRecord>& other = take_b ? a.trace : b.trace;
  best.trace.insert(best.trace.end(), other.begin(), other.end());
  return std::move(best);
}

RateMap build_rate_map(const Scenario& s, AccessScheme scheme, const RateMapOptions& options) {
  RateMap map;
  map.grid = s.grid();
  map.scheme = scheme;
  map.rs_target = s.rs_target;
  const std::size_t n = map.grid.cell_count();
  map.values.assign(n, -std::numeric_limits<double>::infinity());
  map.cells.assign(n, RateCellArtifact{});

  for (std::size_t k = 0; k < n; ++k) {
    map.cells[k].flag = is_cell_blocked_by_obstacle(s, map.grid.from_linear(k)) ? CellFlag::Untraversable
                                                                                 : CellFlag::NotComputed;
  }
  std::vector<std::size_t> todo;
  if (options.only_cells.empty()) {
    for (std::size_t k = 0; k < n; ++k) {
      if (map.cells[k].flag == CellFlag::NotComputed) todo.push_back(k);
    }
  } else {
    for (CellIndex c : options.only_cells) {
      const std::size_t k = map.grid.linear(c);
      if (map.cells[k].flag == CellFlag::NotComputed) todo.push_back(k);
    }
  }

  const ChannelModel model(s);
  const SruChannelStats sru = model.sru_stats();
  std::mutex sink_mutex;
  ProbeSink sink;
  if (options.probe_sink) {
    sink = [&](const ProbeRecord& r) {
      std::lock_guard lock(sink_mutex);
      options.probe_sink(r);
    };
  }
  parallel_for(todo.size(), options.workers, [&](std::size_t t) {
    const std::size_t k = todo[t];
    const CellIndex c = map.grid.from_linear(k);
    RateCellArtifact& art = map.cells[k];
    const CellChannelStats st = model.stats_at(map.grid.cell_center(c, s.mru_height));
    const RateCellProblem p = make_rate_problem(st, sru, s, scheme, DecodingOrder::SruStrong);
    DecodingOrder order = DecodingOrder::SruStrong;
    const RateSolution sol = solve_rate_cell(p, scheme, options.tolerances, &order, sink);
    art.probes = sol.probes;
    for (const ProbeRecord& r : sol.trace) art.stalled_probes += r.status == SolveStatus::Stalled;
    if (sol.status == SolveStatus::Infeasible || sol.status == SolveStatus::Stalled) {
      art.flag = sol.status == SolveStatus::Stalled ? CellFlag::Stalled : CellFlag::Infeasible;
      return;
    }
    art.flag = CellFlag::Ok;
    art.order = order;
    art.theta = sol.phases.theta;
    art.p_m = sol.state.p_m;
    art.p_s = sol.state.p_s;
    art.gain_m = sol.gain_m;
    art.gain_s = sol.gain_s;
    map.values[k] = sol.rate;
  });
  return map;
}

}  // namespace irsnav
