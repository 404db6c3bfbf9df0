#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "irsnav/rate_map.hpp"

using namespace irsnav;

namespace {

using fixture::toy_scenario;

double cap(const Scenario& s, CellIndex c, AccessScheme scheme) {
  const CellChannelStats st = compute_cell_stats(s, c);
  const double snr = s.radio.p_max_watt() * max_expected_gain(st) / s.radio.noise_power_watt();
  return scheme == AccessScheme::Oma ? 0.5 * std::log2(1.0 + 2.0 * snr) : std::log2(1.0 + snr);
}

}  // namespace

TEST_CASE("rate bound expressions") {
  CHECK(noma_rate_bound(1e-6, 0.1, 0.0, 1.0, 1e-12) == doctest::Approx(16.6096).epsilon(1e-5));
  CHECK(noma_rate_bound(1e-6, 0.1, 0.05, 0.0, 1e-12) == doctest::Approx(std::log2(1.0 + 1e-7 / 1e-12)));
  CHECK(noma_rate_bound(1e-6, 0.1, 0.05, 1.0, 1e-12) == doctest::Approx(std::log2(1.0 + 0.1 / (0.05 + 1e-6))));
  CHECK(noma_rate_bound(1e-6, 0.0, 0.05, 1.0, 1e-12) == 0.0);
  CHECK(oma_rate_bound(1.5, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(oma_rate_bound(1e-6, 0.0, 1e-12) == 0.0);
  double prev = 0.0;
  for (double lambda = 1e-9; lambda < 1e-3; lambda *= 2.0) {
    const double v = oma_rate_bound(lambda, 0.1, 1e-12);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS(oma_rate_bound(0.0, 0.1, 1e-12));
  CHECK_THROWS(noma_rate_bound(1e-6, -0.1, 0.0, 0.0, 1e-12));
}

TEST_CASE("toy rate maps") {
  const Scenario s = toy_scenario();
  RateMapOptions opt;
  const RateMap noma = build_rate_map(s, AccessScheme::Noma, opt);
  const RateMap oma = build_rate_map(s, AccessScheme::Oma, opt);
  const double sigma2 = s.radio.noise_power_watt();
  REQUIRE(noma.grid.cell_count() == 36);
  CHECK(noma.count(CellFlag::Untraversable) == blocked_cell_count(s));
  CHECK(noma.count(CellFlag::Ok) > 0);
  CHECK_FALSE(noma.globally_infeasible());
  for (std::size_t k = 0; k < noma.values.size(); ++k) {
    const CellIndex c = noma.grid.from_linear(k);
    for (const RateMap* m : {&noma, &oma}) {
      const RateCellArtifact& a = m->cells[k];
      if (a.flag != CellFlag::Ok) {
        CHECK(std::isinf(m->values[k]));
        continue;
      }
      CHECK(m->values[k] >= 0.0);
      CHECK(m->values[k] <= cap(s, c, m->scheme) + 1e-9);
      CHECK(a.theta.size() == 2);
      CHECK(a.p_m + a.p_s <= s.radio.p_max_watt() * (1.0 + 1e-6));
      // Stored phases and powers reproduce the value through the bound formulas.
      CHECK(std::abs(reevaluate_rate(*m, c, sigma2) - m->values[k]) <= 1e-6 * std::max(1.0, m->values[k]));
      // SRU floor holds at the stored state.
      CHECK(user_rate_bound(a, m->scheme, false, sigma2) >= s.rs_target * (1.0 - 1e-6));
    }
    if (noma.cells[k].flag == CellFlag::Ok && oma.cells[k].flag == CellFlag::Ok) {
      CHECK(noma.values[k] >= oma.values[k] - 1e-2);
    }
  }
}

TEST_CASE("rate maps do not depend on the worker count") {
  const Scenario s = toy_scenario();
  RateMapOptions one;
  RateMapOptions three;
  three.workers = 3;
  const RateMap a = build_rate_map(s, AccessScheme::Noma, one);
  const RateMap b = build_rate_map(s, AccessScheme::Noma, three);
  CHECK(a.values == b.values);
}

TEST_CASE("OMA without an SRU floor reduces to the single-user cap") {
  Scenario s = toy_scenario();
  s.rs_target = 0.0;
  const RateMap m = build_rate_map(s, AccessScheme::Oma);
  for (std::size_t k = 0; k < m.values.size(); ++k) {
    if (m.cells[k].flag != CellFlag::Ok) continue;
    const double ref = cap(s, m.grid.from_linear(k), AccessScheme::Oma);
    CHECK(m.values[k] <= ref + 1e-9);
    CHECK(m.values[k] >= ref - 1e-3);
  }
}

TEST_CASE("a vanishing power budget makes every cell infeasible") {
  Scenario s = toy_scenario();
  s.radio.p_max_dbm = -200.0;
  const RateMap m = build_rate_map(s, AccessScheme::Noma);
  CHECK(m.count(CellFlag::Ok) == 0);
  CHECK(m.count(CellFlag::Infeasible) == m.grid.cell_count() - blocked_cell_count(s));
  CHECK(m.globally_infeasible());
}

TEST_CASE("raising the SRU floor never raises a cell value") {
  Scenario s = toy_scenario();
  RateMapOptions opt;
  opt.only_cells = {{1, 1}, {4, 5}, {6, 6}, {5, 2}};
  std::vector<double> prev(opt.only_cells.size(), INFINITY);
  for (double rs : {0.0, 1.0, 3.0, 6.0}) {
    s.rs_target = rs;
    const RateMap m = build_rate_map(s, AccessScheme::Noma, opt);
    for (std::size_t t = 0; t < opt.only_cells.size(); ++t) {
      const double v = m.at(opt.only_cells[t]);
      CHECK(v <= prev[t] + opt.tolerances.eps0);
      prev[t] = v;
    }
    CHECK(m.count(CellFlag::NotComputed) + m.count(CellFlag::Untraversable) + opt.only_cells.size() == 36);
  }
}
