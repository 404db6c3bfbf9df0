#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "irsnav/power_map.hpp"

using namespace irsnav;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

CellChannelStats random_stats(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CellChannelStats st;
  st.h_tilde = 1e-4 * cdouble(nd(rng), nd(rng));
  st.w_tilde.resize(n);
  for (int k = 0; k < n; ++k) st.w_tilde[k] = 1e-4 * std::exp(nd(rng)) * cdouble(nd(rng), nd(rng));
  st.tau = 1e-9 * std::exp(nd(rng));
  return st;
}

}  // namespace

TEST_CASE("phase mode names") {
  CHECK(parse_phase_mode("cont").is_continuous());
  CHECK(parse_phase_mode("1bit").levels == 2);
  CHECK(parse_phase_mode("3bit").levels == 8);
  CHECK(parse_phase_mode("L5").levels == 5);
  CHECK(PhaseMode::bits(2).name() == "2bit");
  CHECK(PhaseMode{5}.name() == "L5");
  CHECK(PhaseMode::continuous().name() == "cont");
  CHECK_THROWS(parse_phase_mode("fast"));
  CHECK_THROWS(parse_phase_mode("L1"));
}

TEST_CASE("aligned channels need no phase shift") {
  CellChannelStats st;
  st.h_tilde = {2.0, 0.0};
  st.w_tilde = Eigen::VectorXcd::Constant(4, cdouble(0.5, 0.0));
  st.tau = 0.1;
  const PhaseConfig p = optimal_phases(st);
  for (double t : p.theta) CHECK(t == doctest::Approx(0.0));
  CHECK(max_expected_gain(st) == doctest::Approx(16.1));
}

TEST_CASE("closed-form optimum is attained and is an upper bound") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    const CellChannelStats st = random_stats(rng, 1 + t % 8);
    const double closed = max_expected_gain(st);
    const PhaseConfig p = optimal_phases(st);
    for (double th : p.theta) {
      CHECK(th >= 0.0);
      CHECK(th < kTwoPi);
    }
    CHECK(std::abs(expected_gain(st, p.theta) - closed) <= 1e-12 * closed);
  }
}

TEST_CASE("blocked direct link uses a zero reference phase") {
  std::mt19937_64 rng(2);
  CellChannelStats st = random_stats(rng, 5);
  st.h_tilde = 0.0;
  const PhaseConfig p = optimal_phases(st);
  CHECK(std::abs(expected_gain(st, p.theta) - max_expected_gain(st)) <= 1e-12 * max_expected_gain(st));
  // All cascaded terms end up at phase zero.
  for (int n = 0; n < 5; ++n) CHECK(std::arg(st.w_tilde[n] * std::polar(1.0, p.theta[n])) == doctest::Approx(0.0));
}

TEST_CASE("exhaustive 16-level search never beats the closed form") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const CellChannelStats st = random_stats(rng, 3);
    const double closed = max_expected_gain(st);
    double best = 0.0;
    for (int a = 0; a < 16; ++a) {
      for (int b = 0; b < 16; ++b) {
        for (int c = 0; c < 16; ++c) {
          const double th[3] = {kTwoPi * a / 16, kTwoPi * b / 16, kTwoPi * c / 16};
          best = std::max(best, expected_gain(st, th));
        }
      }
    }
    CHECK(best <= closed);
    // The grid is within one half step of the optimum, which bounds the loss.
    CHECK(best >= st.tau + (closed - st.tau) * std::pow(std::cos(kTwoPi / 32), 2) * (1 - 1e-12));
  }
}

TEST_CASE("quantization to the nearest level") {
  const auto q = [](double th, int levels) { return quantize_phases({{th}}, levels).theta[0]; };
  CHECK(q(0.0, 2) == 0.0);
  CHECK(q(0.0, 8) == 0.0);
  CHECK(q(std::numbers::pi - 0.01, 2) == doctest::Approx(std::numbers::pi));
  // Circular distance: just below 2 pi maps back to level 0.
  CHECK(q(kTwoPi - 0.01, 4) == 0.0);
  // Midway between levels 0 and 1 of a 4-level set: the lower level.
  CHECK(q(std::numbers::pi / 4, 4) == 0.0);
  CHECK(q(3 * std::numbers::pi / 4, 4) == doctest::Approx(std::numbers::pi / 2));
  CHECK_THROWS(quantize_phases({{0.3}}, 1));
  CHECK(wrap_phase(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(wrap_phase(7.0) == doctest::Approx(7.0 - kTwoPi));
}

TEST_CASE("discrete values never exceed continuous ones") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const CellChannelStats st = random_stats(rng, 6);
    const double c = cell_power_gain(st, PhaseMode::continuous());
    for (int b : {1, 2, 3}) {
      const double v = cell_power_gain(st, PhaseMode::bits(b));
      CHECK(v <= c);
      CHECK(v >= st.tau);
    }
  }
}

TEST_CASE("power map of the default scenario") {
  const Scenario s = default_scenario();
  const PowerGainMap with = build_power_gain_map(s, PhaseMode::continuous(), 2);
  const PowerGainMap without = build_power_gain_map(s.without_irs(), PhaseMode::continuous(), 1);
  CHECK(with.traversable_count() == with.grid.cell_count() - blocked_cell_count(s));
  for (std::size_t k = 0; k < with.values.size(); ++k) {
    if (!with.traversable[k]) {
      CHECK(std::isinf(with.values[k]));
      CHECK(with.values[k] < 0.0);
      continue;
    }
    CHECK(std::isfinite(with.values[k]));
    CHECK(with.values[k] >= without.values[k]);
  }
  // The map is identical regardless of worker count.
  const PowerGainMap serial = build_power_gain_map(s, PhaseMode::continuous(), 1);
  CHECK(serial.values == with.values);

  // No IRS: |h|^2 + L / (K + 1) at every traversable cell.
  const Scenario bare = s.without_irs();
  for (CellIndex c : {CellIndex{1, 1}, CellIndex{12, 38}, CellIndex{40, 1}}) {
    const CellChannelStats st = compute_cell_stats(bare, c);
    CHECK(without.at(c) == doctest::Approx(std::norm(st.h_tilde) + st.link_ap.gain / (st.link_ap.rician_k + 1.0)));
  }
}

TEST_CASE("IRS improves gains near the IRS wall") {
  const Scenario s = default_scenario();
  const PowerGainMap with = build_power_gain_map(s, PhaseMode::continuous(), 1);
  const PowerGainMap without = build_power_gain_map(s.without_irs(), PhaseMode::continuous(), 1);
  // Strip y in [-10, -8] is the closest to the panel.
  double near_gain = 0.0;
  double far_gain = 0.0;
  int nn = 0;
  int nf = 0;
  for (std::size_t k = 0; k < with.values.size(); ++k) {
    if (!with.traversable[k]) continue;
    const Point3 q = with.grid.cell_center(with.grid.from_linear(k), 1.0);
    const double d = linear_to_db(with.values[k]) - linear_to_db(without.values[k]);
    if (q.y < -8.0) {
      near_gain += d;
      ++nn;
    } else if (q.y > 8.0) {
      far_gain += d;
      ++nf;
    }
  }
  CHECK(near_gain / nn > far_gain / nf);
}

TEST_CASE("coverage fraction") {
  const Scenario s = desk_scenario();
  const PowerGainMap m = build_power_gain_map(s, PhaseMode::continuous(), 1);
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t k = 0; k < m.values.size(); ++k) {
    if (!m.traversable[k]) continue;
    lo = std::min(lo, m.values[k]);
    hi = std::max(hi, m.values[k]);
  }
  CHECK(coverage_fraction(m, lo * 0.5) == 1.0);
  CHECK(coverage_fraction(m, lo) == 1.0);
  CHECK(coverage_fraction(m, hi * 2.0) == 0.0);
  double prev = 1.0;
  for (int k = 0; k <= 40; ++k) {
    const double eta = coverage_fraction(m, db_to_linear(-75.0 + k));
    CHECK(eta <= prev);
    prev = eta;
  }
  PowerGainMap empty = m;
  std::fill(empty.traversable.begin(), empty.traversable.end(), 0);
  CHECK_THROWS(coverage_fraction(empty, 1.0));
}
