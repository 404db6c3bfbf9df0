#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "irsnav/convex_core.hpp"

namespace irsnav {

/// log2(1 + p_l / (mu_l p_lbar + sigma2 / lambda_l)); zero when p_l = 0.
double noma_rate_bound(double lambda_l, double p_l, double p_lbar, double mu_l, double sigma2);
/// 0.5 log2(1 + 2 lambda_l p_l / sigma2).
double oma_rate_bound(double lambda_l, double p_l, double sigma2);

/// NotComputed marks traversable cells left out of a partial build; Stalled cells had a feasible relaxation but no
/// rank-one point could be recovered.
enum class CellFlag : std::uint8_t { Ok = 0, Untraversable = 1, Infeasible = 2, NotComputed = 3, Stalled = 4 };

struct RateCellArtifact {
  CellFlag flag = CellFlag::Untraversable;
  DecodingOrder order = DecodingOrder::SruStrong;
  std::vector<double> theta;
  double p_m = 0.0;
  double p_s = 0.0;
  double gain_m = 0.0;
  double gain_s = 0.0;
  int probes = 0;
  /// Probes whose rank reduction ended without a rank-one point.
  int stalled_probes = 0;
};

struct RateMap {
  Grid grid;
  AccessScheme scheme = AccessScheme::Noma;
  double rs_target = 0.0;
  /// bit/s/Hz indexed by Grid::linear; -inf for untraversable or infeasible cells.
  std::vector<double> values;
  std::vector<RateCellArtifact> cells;

  double at(CellIndex c) const { return values[grid.linear(c)]; }
  std::size_t count(CellFlag f) const;
  /// True when no traversable cell admits the SRU rate floor.
  bool globally_infeasible() const;
};

/// Jensen-bound rate of one user (MRU when `mru`) at the artifact's powers and gains.
double user_rate_bound(const RateCellArtifact& a, AccessScheme scheme, bool mru, double sigma2);

/// Rate of the MRU at its stored powers and phases, re-evaluated through the bound formulas.
double reevaluate_rate(const RateMap& map, CellIndex c, double sigma2);

struct RateMapOptions {
  ConvexTolerances tolerances;
  int workers = 1;
  /// Restricts the build to these cells (all traversable cells when empty).
  std::vector<CellIndex> only_cells;
  ProbeSink probe_sink;
};

/// Best of both decoding orders for NOMA, or the OMA solve, at one cell.
RateSolution solve_rate_cell(const RateCellProblem& base, AccessScheme scheme, const ConvexTolerances& tol,
                             DecodingOrder* chosen, const ProbeSink& sink = nullptr);

RateMap build_rate_map(const Scenario& s, AccessScheme scheme, const RateMapOptions& options = {});

}  // namespace irsnav
