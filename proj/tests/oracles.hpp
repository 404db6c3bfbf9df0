#pragma once

// Reference implementations used only by the tests. They recompute quantities from first principles without
// calling the library routines they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "irsnav/convex_core.hpp"

namespace oracle {

using cd = std::complex<double>;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// |row . [e^{j theta}, 1]|^2 + tau, summed term by term.
inline double gain(const Eigen::VectorXcd& row, double tau, const double* theta) {
  const int n = static_cast<int>(row.size()) - 1;
  cd acc = row[n];
  for (int k = 0; k < n; ++k) acc += row[k] * std::polar(1.0, theta[k]);
  return std::norm(acc) + tau;
}

/// Best MRU rate at fixed expected gains, solved directly from the rate expressions:
///  SRU-strong NOMA: MRU sees the SRU signal as interference, SRU decodes interference free after SIC, needs a_s >= a_m.
///  MRU-strong NOMA: the mirror, needs a_m >= a_s.
///  OMA: each user gets half the band.
/// Returns -inf when the SRU floor cannot be met. `sic_rel_tol` admits gain orderings violated by that relative amount.
inline double rate_at_gains(irsnav::AccessScheme scheme, irsnav::DecodingOrder order, double am, double as, double pmax,
                            double s2, double rs, double sic_rel_tol = 0.0) {
  using irsnav::AccessScheme;
  using irsnav::DecodingOrder;
  if (scheme == AccessScheme::Oma) {
    const double ps = (std::pow(4.0, rs) - 1.0) * s2 / (2.0 * as);
    const double pm = pmax - ps;
    if (pm < 0.0) return kNegInf;
    return 0.5 * std::log2(1.0 + 2.0 * am * pm / s2);
  }
  if (order == DecodingOrder::SruStrong) {
    if (as < am * (1.0 - sic_rel_tol)) return kNegInf;
    const double ps = (std::pow(2.0, rs) - 1.0) * s2 / as;
    if (ps > pmax) return kNegInf;
    const double pm = pmax - ps;
    return std::log2(1.0 + pm * am / (ps * am + s2));
  }
  if (am < as * (1.0 - sic_rel_tol)) return kNegInf;
  // p_s >= (2^rs - 1)(p_m a_s + s2) / a_s with p_m + p_s = pmax.
  const double q = std::pow(2.0, rs) - 1.0;
  const double pm = (pmax - q * s2 / as) / (1.0 + q);
  if (pm < 0.0) return kNegInf;
  return std::log2(1.0 + pm * am / s2);
}

inline double rate_at_phases(const irsnav::RateCellProblem& p, const double* theta, double sic_rel_tol = 0.0) {
  return rate_at_gains(p.scheme, p.order, gain(p.row_m, p.tau_m, theta), gain(p.row_s, p.tau_s, theta), p.p_max,
                       p.sigma2, p.rs_target, sic_rel_tol);
}

/// Grid maximum of the N = 2 rate over (theta_1, theta_2): a `levels` x `levels` scan, then repeated 3x zooms
/// around the best few coarse points to resolve optima that sit on the SIC boundary between grid nodes.
inline double max_rate_n2(const irsnav::RateCellProblem& p, int levels = 128, int seeds = 6, int zooms = 8) {
  struct Node {
    double r;
    double a;
    double b;
  };
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(levels) * levels);
  const double h = kTwoPi / levels;
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      const double th[2] = {i * h, j * h};
      nodes.push_back({rate_at_phases(p, th), th[0], th[1]});
    }
  }
  std::partial_sort(nodes.begin(), nodes.begin() + seeds, nodes.end(),
                    [](const Node& x, const Node& y) { return x.r > y.r; });
  double best = nodes.front().r;
  for (int s = 0; s < seeds; ++s) {
    Node c = nodes[s];
    // Any node within one coarse step may lead to the true optimum from a feasible or an infeasible side.
    double span = h;
    for (int z = 0; z < zooms; ++z) {
      Node next = c;
      const int m = 16;
      for (int i = -m; i <= m; ++i) {
        for (int j = -m; j <= m; ++j) {
          const double th[2] = {c.a + span * i / m, c.b + span * j / m};
          const double r = rate_at_phases(p, th);
          if (r > next.r) next = {r, th[0], th[1]};
        }
      }
      c = next;
      span /= 4.0;
    }
    best = std::max(best, c.r);
  }
  return best;
}

/// Random N-sub-surface toy cell with gains spread over two decades.
inline irsnav::RateCellProblem toy_problem(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  irsnav::RateCellProblem p;
  p.row_m.resize(n + 1);
  p.row_s.resize(n + 1);
  const double sm = std::exp(nd(rng));
  const double ss = std::exp(nd(rng));
  for (int k = 0; k <= n; ++k) {
    p.row_m[k] = 1e-4 * sm * cd(nd(rng), nd(rng));
    p.row_s[k] = 1e-4 * ss * cd(nd(rng), nd(rng));
  }
  p.tau_m = 1e-9 * std::exp(nd(rng));
  p.tau_s = 1e-9 * std::exp(nd(rng));
  p.p_max = 0.1;
  p.sigma2 = 1e-12;
  p.rs_target = 1.0;
  return p;
}

/// Shortest 8-neighbour distance on a boolean mask by Bellman-Ford style relaxation until a fixed point.
inline double grid_dp_distance(const std::vector<std::vector<bool>>& mask, int si, int sj, int ti, int tj, double dx,
                               double dy) {
  const int nx = static_cast<int>(mask.size());
  const int ny = static_cast<int>(mask[0].size());
  const double inf = std::numeric_limits<double>::infinity();
  if (!mask[si][sj] || !mask[ti][tj]) return inf;
  std::vector<std::vector<double>> d(nx, std::vector<double>(ny, inf));
  d[si][sj] = 0.0;
  const double diag = std::sqrt(dx * dx + dy * dy);
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        if (!mask[i][j]) continue;
        for (int a = -1; a <= 1; ++a) {
          for (int b = -1; b <= 1; ++b) {
            const int u = i + a;
            const int v = j + b;
            if ((a == 0 && b == 0) || u < 0 || v < 0 || u >= nx || v >= ny || !mask[u][v]) continue;
            const double w = (a != 0 && b != 0) ? diag : (a != 0 ? dx : dy);
            if (d[u][v] + w < d[i][j]) {
              d[i][j] = d[u][v] + w;
              changed = true;
            }
          }
        }
      }
    }
  }
  return d[ti][tj];
}

}  // namespace oracle
