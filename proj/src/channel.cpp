#include "irsnav/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace irsnav {

namespace {

void require_positive_distance(double d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("path loss requires a positive finite distance");
}

cdouble unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

// Ziggurat sampler; its output sequence does not depend on the standard library in use.
using Normal = boost::random::normal_distribution<double>;

// Circularly-symmetric complex Gaussian with unit variance.
cdouble draw_cn(Normal& nd, std::mt19937_64& rng) {
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

std::vector<cdouble> element_phasors(std::span<const double> theta, int n_sub, int nbar) {
  if (static_cast<int>(theta.size()) != n_sub) throw std::invalid_argument("phase vector length must equal the sub-surface count");
  std::vector<cdouble> out(static_cast<std::size_t>(n_sub) * nbar);
  for (int n = 0; n < n_sub; ++n) {
    const cdouble e = unit_phasor(theta[n]);
    for (int k = 0; k < nbar; ++k) out[static_cast<std::size_t>(n) * nbar + k] = e;
  }
  return out;
}

cdouble effective(const Eigen::VectorXcd& g, cdouble h, const Eigen::VectorXcd& r, const std::vector<cdouble>& phasor) {
  cdouble c = std::conj(h);
  for (Eigen::Index i = 0; i < g.size(); ++i) c += std::conj(r[i]) * phasor[i] * g[i];
  return c;
}

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  McEstimate finish() const {
    McEstimate e;
    e.mean = sum / n;
    if (n > 1) {
      const double var = std::max(0.0, (sum_sq - n * e.mean * e.mean) / (n - 1));
      e.stderr_ = std::sqrt(var / n);
    }
    return e;
  }
};

Point3 traversable_center(const Scenario& s, CellIndex c) {
  const Point3 q = s.grid().cell_center(c, s.mru_height);
  if (is_cell_blocked_by_obstacle(s, c)) throw std::invalid_argument("cell lies inside an obstacle footprint");
  return q;
}

}  // namespace

double pathloss_los_db(double d, double fc_ghz) {
  require_positive_distance(d);
  if (!(fc_ghz > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
  return 31.84 + 21.5 * std::log10(d) + 19.0 * std::log10(fc_ghz);
}

double pathloss_nlos_db(double d, double fc_ghz) {
  const double los = pathloss_los_db(d, fc_ghz);
  return std::max(los, 32.4 + 23.0 * std::log10(d) + 20.0 * std::log10(fc_ghz));
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

LinkState make_link(double d, bool line_of_sight, const RadioParams& radio) {
  LinkState l;
  l.distance = d;
  if (line_of_sight) {
    l.kind = LinkKind::LoS;
    l.rician_k = radio.kappa_linear();
    l.gain = db_to_linear(-pathloss_los_db(d, radio.carrier_ghz));
  } else {
    l.kind = LinkKind::NLoS;
    l.rician_k = 0.0;
    l.gain = db_to_linear(-pathloss_nlos_db(d, radio.carrier_ghz));
  }
  return l;
}

Eigen::VectorXcd los_steering_vector(std::span<const Point3> elements, const Point3& point, double wavelength) {
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  const double k = 2.0 * std::numbers::pi / wavelength;
  Eigen::VectorXcd a(static_cast<Eigen::Index>(elements.size()));
  for (std::size_t m = 0; m < elements.size(); ++m) {
    const double d = distance(elements[m], point);
    if (!(d > 0.0)) throw std::invalid_argument("point coincides with an IRS element");
    a[static_cast<Eigen::Index>(m)] = unit_phasor(-k * d);
  }
  return a;
}

std::vector<Point3> irs_element_positions(const Scenario& s) {
  const IrsArray& a = s.radio.irs;
  const int cols = a.subsurfaces_x * a.block_x;
  const int rows = a.subsurfaces_z * a.block_z;
  const double pitch = a.spacing_wavelengths * s.radio.wavelength_m();
  std::vector<Point3> out;
  out.reserve(static_cast<std::size_t>(a.element_count()));
  for (int sz = 0; sz < a.subsurfaces_z; ++sz) {
    for (int sx = 0; sx < a.subsurfaces_x; ++sx) {
      for (int ez = 0; ez < a.block_z; ++ez) {
        for (int ex = 0; ex < a.block_x; ++ex) {
          const double u = (sx * a.block_x + ex - 0.5 * (cols - 1)) * pitch;
          const double v = (sz * a.block_z + ez - 0.5 * (rows - 1)) * pitch;
          Point3 p = s.irs_center;
          if (s.irs_wall_normal == WallAxis::Y) {
            p.x += u;
          } else {
            p.y += u;
          }
          p.z += v;
          out.push_back(p);
        }
      }
    }
  }
  return out;
}

ChannelModel::ChannelModel(const Scenario& scenario)
    : scenario_(scenario), elements_(irs_element_positions(scenario)) {
  if (!elements_.empty()) {
    const bool los = has_line_of_sight(scenario_.obstacles, scenario_.ap, scenario_.irs_center);
    ap_irs_ = make_link(distance(scenario_.ap, scenario_.irs_center), los, scenario_.radio);
    g_los_ = los_steering_vector(elements_, scenario_.ap, scenario_.radio.wavelength_m());
  }
}

ChannelModel::Receiver ChannelModel::receiver(const Point3& position) const {
  Receiver rx;
  rx.position = position;
  const double lambda = scenario_.radio.wavelength_m();
  const double d_ap = distance(scenario_.ap, position);
  rx.ap = make_link(d_ap, has_line_of_sight(scenario_.obstacles, scenario_.ap, position), scenario_.radio);
  rx.h_los = unit_phasor(-2.0 * std::numbers::pi * d_ap / lambda);
  if (!elements_.empty()) {
    const double d_irs = distance(scenario_.irs_center, position);
    rx.irs = make_link(d_irs, has_line_of_sight(scenario_.obstacles, scenario_.irs_center, position), scenario_.radio);
    rx.r_los = los_steering_vector(elements_, position, lambda);
  }
  return rx;
}

CellChannelStats ChannelModel::stats(const Receiver& rx) const {
  CellChannelStats st;
  st.link_ap = rx.ap;
  st.link_irs = rx.irs;
  st.link_ap_irs = ap_irs_;
  st.element_count = element_count();
  const double k_am = rx.ap.rician_k;
  st.h_tilde = std::sqrt(rx.ap.gain * k_am / (k_am + 1.0)) * rx.h_los;
  st.tau = rx.ap.gain / (k_am + 1.0);

  const int n_sub = subsurface_count();
  const int nbar = elements_per_subsurface();
  st.w_tilde = Eigen::VectorXcd::Zero(n_sub);
  if (elements_.empty()) return st;

  const double k_ai = ap_irs_.rician_k;
  const double k_im = rx.irs.rician_k;
  const double scale = std::sqrt(rx.irs.gain * k_im / (k_im + 1.0)) * std::sqrt(ap_irs_.gain * k_ai / (k_ai + 1.0));
  if (scale > 0.0) {
    for (int n = 0; n < n_sub; ++n) {
      cdouble acc{0.0, 0.0};
      for (int k = 0; k < nbar; ++k) {
        const Eigen::Index i = static_cast<Eigen::Index>(n) * nbar + k;
        acc += rx.r_los[i] * g_los_[i];
      }
      st.w_tilde[n] = scale * acc;
    }
  }
  const double m = static_cast<double>(element_count());
  st.tau += ap_irs_.gain * rx.irs.gain * (k_im + k_ai + 1.0) * m / ((k_ai + 1.0) * (k_im + 1.0));
  return st;
}

void ChannelModel::draw_ap_irs(std::mt19937_64& rng, Eigen::VectorXcd& g) const {
  Normal nd(0.0, std::sqrt(0.5));
  const double k = ap_irs_.rician_k;
  const double a = std::sqrt(ap_irs_.gain / (k + 1.0));
  const double sk = std::sqrt(k);
  g.resize(element_count());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = a * (sk * g_los_[i] + draw_cn(nd, rng));
}

void ChannelModel::draw_user(const Receiver& rx, std::mt19937_64& rng, cdouble& h, Eigen::VectorXcd& r) const {
  Normal nd(0.0, std::sqrt(0.5));
  // The stored LoS responses are already conjugated; undo that for the physical channel.
  const double ka = rx.ap.rician_k;
  h = std::sqrt(rx.ap.gain / (ka + 1.0)) * (std::sqrt(ka) * std::conj(rx.h_los) + draw_cn(nd, rng));
  r.resize(element_count());
  if (elements_.empty()) return;
  const double ki = rx.irs.rician_k;
  const double a = std::sqrt(rx.irs.gain / (ki + 1.0));
  const double sk = std::sqrt(ki);
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = a * (sk * std::conj(rx.r_los[i]) + draw_cn(nd, rng));
}

CellChannelStats compute_cell_stats(const Scenario& s, CellIndex c) {
  return ChannelModel(s).stats_at(traversable_center(s, c));
}

SruChannelStats compute_sru_stats(const Scenario& s) { return ChannelModel(s).sru_stats(); }

double expected_gain(const CellChannelStats& stats, std::span<const double> theta) {
  if (static_cast<Eigen::Index>(theta.size()) != stats.w_tilde.size()) {
    throw std::invalid_argument("phase vector length must equal the sub-surface count");
  }
  cdouble los = stats.h_tilde;
  for (Eigen::Index n = 0; n < stats.w_tilde.size(); ++n) los += stats.w_tilde[n] * unit_phasor(theta[n]);
  return std::norm(los) + stats.tau;
}

GainDecomposition decompose_expected_gain(const CellChannelStats& stats, std::span<const double> theta) {
  GainDecomposition d;
  const double tau_total = stats.tau;
  d.los = expected_gain(stats, theta) - tau_total;
  const double k_am = stats.link_ap.rician_k;
  d.direct_scatter = stats.link_ap.gain / (k_am + 1.0);
  if (stats.element_count > 0) {
    const double k_ai = stats.link_ap_irs.rician_k;
    const double k_im = stats.link_irs.rician_k;
    const double base = stats.link_ap_irs.gain * stats.link_irs.gain * stats.element_count / ((k_ai + 1.0) * (k_im + 1.0));
    d.ap_irs_scatter = base * k_im;
    d.irs_user_scatter = base * k_ai;
    d.double_scatter = base;
  }
  return d;
}

ChannelSample sample_channels(const Scenario& s, CellIndex c, std::uint64_t seed) {
  const ChannelModel model(s);
  const auto rx = model.receiver(s.grid().cell_center(c, s.mru_height));
  std::mt19937_64 rng(seed);
  ChannelSample out;
  model.draw_ap_irs(rng, out.g);
  model.draw_user(rx, rng, out.h, out.r);
  return out;
}

cdouble effective_channel(const ChannelSample& sample, std::span<const double> theta, int elements_per_subsurface) {
  if (elements_per_subsurface < 1) throw std::invalid_argument("elements per sub-surface must be positive");
  if (static_cast<Eigen::Index>(theta.size()) * elements_per_subsurface != sample.g.size() ||
      sample.r.size() != sample.g.size()) {
    throw std::invalid_argument("sample dimensions do not match the phase vector");
  }
  return effective(sample.g, sample.h, sample.r,
                   element_phasors(theta, static_cast<int>(theta.size()), elements_per_subsurface));
}

McEstimate mc_expected_gain(const Scenario& s, CellIndex c, std::span<const double> theta, int n_samples,
                            std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
  const ChannelModel model(s);
  const auto rx = model.receiver(traversable_center(s, c));
  const auto phasor = element_phasors(theta, model.subsurface_count(), model.elements_per_subsurface());
  std::mt19937_64 rng(seed);
  Eigen::VectorXcd g;
  Eigen::VectorXcd r;
  cdouble h;
  Accumulator acc;
  for (int t = 0; t < n_samples; ++t) {
    model.draw_ap_irs(rng, g);
    model.draw_user(rx, rng, h, r);
    acc.add(std::norm(effective(g, h, r, phasor)));
  }
  return acc.finish();
}

RateMcEstimate mc_expected_rate(const Scenario& s, CellIndex c, std::span<const double> theta, double p_m, double p_s,
                                AccessScheme scheme, DecodingOrder order, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
  if (!(p_m >= 0.0) || !(p_s >= 0.0)) throw std::invalid_argument("powers must be nonnegative");
  const ChannelModel model(s);
  const auto rx_m = model.receiver(traversable_center(s, c));
  const auto rx_s = model.receiver(s.sru);
  const auto phasor = element_phasors(theta, model.subsurface_count(), model.elements_per_subsurface());
  const double sigma2 = s.radio.noise_power_watt();
  std::mt19937_64 rng(seed);
  Eigen::VectorXcd g;
  Eigen::VectorXcd r;
  cdouble h;
  Accumulator acc_m;
  Accumulator acc_s;
  for (int t = 0; t < n_samples; ++t) {
    model.draw_ap_irs(rng, g);
    model.draw_user(rx_m, rng, h, r);
    const double gm = std::norm(effective(g, h, r, phasor));
    model.draw_user(rx_s, rng, h, r);
    const double gs = std::norm(effective(g, h, r, phasor));
    double rm = 0.0;
    double rs = 0.0;
    if (scheme == AccessScheme::Oma) {
      rm = 0.5 * std::log2(1.0 + 2.0 * p_m * gm / sigma2);
      rs = 0.5 * std::log2(1.0 + 2.0 * p_s * gs / sigma2);
    } else if (order == DecodingOrder::SruStrong) {
      rm = std::log2(1.0 + p_m * gm / (p_s * gm + sigma2));
      rs = std::log2(1.0 + p_s * gs / sigma2);
    } else {
      rm = std::log2(1.0 + p_m * gm / sigma2);
      rs = std::log2(1.0 + p_s * gs / (p_m * gs + sigma2));
    }
    acc_m.add(rm);
    acc_s.add(rs);
  }
  return {acc_m.finish(), acc_s.finish()};
}

}  // namespace irsnav
