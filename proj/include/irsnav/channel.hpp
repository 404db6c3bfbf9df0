#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "irsnav/scenario.hpp"

namespace irsnav {

using cdouble = std::complex<double>;

/// 3GPP InF-SH line-of-sight path loss in dB; d in meters, carrier in GHz.
double pathloss_los_db(double d, double fc_ghz);
/// 3GPP InF-SH non-line-of-sight path loss in dB, never below the LoS value.
double pathloss_nlos_db(double d, double fc_ghz);

double db_to_linear(double db);
double linear_to_db(double lin);

enum class LinkKind { LoS, NLoS };

struct LinkState {
  LinkKind kind = LinkKind::NLoS;
  /// Linear Rician factor; zero for NLoS links.
  double rician_k = 0.0;
  /// Linear large-scale gain 10^(-PL/10).
  double gain = 0.0;
  double distance = 0.0;
};

LinkState make_link(double d, bool line_of_sight, const RadioParams& radio);

/// Unit-modulus LoS response exp(-j 2 pi d_m / lambda) of each element position to `point`.
Eigen::VectorXcd los_steering_vector(std::span<const Point3> elements, const Point3& point, double wavelength);

/// Element positions on the IRS wall plane, ordered sub-surface by sub-surface so that sub-surface n owns the
/// contiguous index range [n * Nbar, (n + 1) * Nbar).
std::vector<Point3> irs_element_positions(const Scenario& s);

/// Deterministic channel statistics of one receiver location, stored as the conjugate-transposed quantities:
/// expected gain = |h_tilde + sum_n w_tilde[n] e^{j theta_n}|^2 + tau.
struct CellChannelStats {
  cdouble h_tilde{0.0, 0.0};
  Eigen::VectorXcd w_tilde;
  double tau = 0.0;
  LinkState link_ap;
  LinkState link_irs;
  LinkState link_ap_irs;
  int element_count = 0;
};

using SruChannelStats = CellChannelStats;

/// One fading realization of the AP-IRS, AP-user and IRS-user channels.
struct ChannelSample {
  Eigen::VectorXcd g;
  cdouble h{0.0, 0.0};
  Eigen::VectorXcd r;
};

/// Per-scenario cache: element layout, AP-IRS link and the LoS AP-IRS vector.
class ChannelModel {
 public:
  explicit ChannelModel(const Scenario& scenario);

  /// Links and LoS responses from the AP and the IRS to one receiver point.
  struct Receiver {
    Point3 position;
    LinkState ap;
    LinkState irs;
    cdouble h_los{1.0, 0.0};  // LoS direct response (conjugated form h_bar^H)
    Eigen::VectorXcd r_los;   // LoS IRS->receiver response (conjugated form r_bar^H)
  };

  const Scenario& scenario() const { return scenario_; }
  int element_count() const { return static_cast<int>(elements_.size()); }
  int subsurface_count() const { return scenario_.radio.irs.subsurface_count(); }
  int elements_per_subsurface() const { return scenario_.radio.irs.elements_per_subsurface(); }
  const LinkState& ap_irs_link() const { return ap_irs_; }

  Receiver receiver(const Point3& position) const;

  /// Statistics at an arbitrary receiver point (no traversability check).
  CellChannelStats stats(const Receiver& rx) const;
  CellChannelStats stats_at(const Point3& position) const { return stats(receiver(position)); }
  SruChannelStats sru_stats() const { return stats_at(scenario_.sru); }

  /// Draws the AP-IRS vector g.
  void draw_ap_irs(std::mt19937_64& rng, Eigen::VectorXcd& g) const;
  /// Draws (h, r) for a receiver. Entries of the scattered parts are CN(0, 1).
  void draw_user(const Receiver& rx, std::mt19937_64& rng, cdouble& h, Eigen::VectorXcd& r) const;

 private:
  Scenario scenario_;
  std::vector<Point3> elements_;
  LinkState ap_irs_;
  Eigen::VectorXcd g_los_;  // unit-modulus LoS AP->element response
};

/// Throws std::invalid_argument for a cell inside an obstacle footprint.
CellChannelStats compute_cell_stats(const Scenario& s, CellIndex c);
SruChannelStats compute_sru_stats(const Scenario& s);

/// Expected effective channel power gain for sub-surface phases theta (radians).
double expected_gain(const CellChannelStats& stats, std::span<const double> theta);

/// The five nonnegative terms of the expected gain: LoS product, direct scattering, scattered AP-IRS, scattered IRS-user,
/// doubly scattered. Their sum equals expected_gain.
struct GainDecomposition {
  double los = 0.0;
  double direct_scatter = 0.0;
  double ap_irs_scatter = 0.0;
  double irs_user_scatter = 0.0;
  double double_scatter = 0.0;
  double total() const { return los + direct_scatter + ap_irs_scatter + irs_user_scatter + double_scatter; }
};
GainDecomposition decompose_expected_gain(const CellChannelStats& stats, std::span<const double> theta);

ChannelSample sample_channels(const Scenario& s, CellIndex c, std::uint64_t seed);

/// Effective channel h^H + r^H Theta g for a sample; theta holds one phase per sub-surface.
cdouble effective_channel(const ChannelSample& sample, std::span<const double> theta, int elements_per_subsurface);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

McEstimate mc_expected_gain(const Scenario& s, CellIndex c, std::span<const double> theta, int n_samples,
                            std::uint64_t seed);

enum class AccessScheme { Noma, Oma };
/// SruStrong: the SRU decodes the MRU signal first (mu_s = 0, mu_m = 1). MruStrong is the mirror.
enum class DecodingOrder { SruStrong, MruStrong };

struct RateMcEstimate {
  McEstimate mru;
  McEstimate sru;
};

/// Monte Carlo mean of the instantaneous NOMA/OMA rates of both users at the given phases and powers (watts).
/// The AP-IRS realization is shared by the two users within a draw.
RateMcEstimate mc_expected_rate(const Scenario& s, CellIndex c, std::span<const double> theta, double p_m, double p_s,
                                AccessScheme scheme, DecodingOrder order, int n_samples, std::uint64_t seed);

}  // namespace irsnav
