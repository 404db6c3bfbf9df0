#include "irsnav/convex_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "irsnav/sdp.hpp"

namespace irsnav {

namespace {

Eigen::MatrixXcd outer(const Eigen::VectorXcd& row) { return row.conjugate() * row.transpose(); }

double gain_of(const Eigen::VectorXcd& row, double tau, const Eigen::MatrixXcd& v) {
  // Tr(H V) with H = conj(row) row^T.
  return (row.transpose() * v * row.conjugate()).value().real() + tau;
}

double gain_of(const Eigen::VectorXcd& row, double tau, std::span<const double> theta) {
  const int n = static_cast<int>(row.size()) - 1;
  if (static_cast<int>(theta.size()) != n) throw std::invalid_argument("phase vector length must equal the sub-surface count");
  cdouble s = row[n];
  for (int k = 0; k < n; ++k) s += row[k] * cdouble(std::cos(theta[k]), std::sin(theta[k]));
  return std::norm(s) + tau;
}

double gain_max_of(const Eigen::VectorXcd& row, double tau) {
  double amp = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k) amp += std::abs(row[k]);
  return amp * amp + tau;
}

double noma_rate(double a, double p_self, double p_other, double mu, double sigma2) {
  if (p_self <= 0.0) return 0.0;
  return std::log2(1.0 + p_self / (mu * p_other + sigma2 / a));
}

double oma_rate(double a, double p, double sigma2) { return p <= 0.0 ? 0.0 : 0.5 * std::log2(1.0 + 2.0 * a * p / sigma2); }

struct Rates {
  double m;
  double s;
};

Rates rates_at(const RateCellProblem& p, double a_m, double a_s, const PowerAllocation& pw) {
  if (p.scheme == AccessScheme::Oma) return {oma_rate(a_m, pw.p_m, p.sigma2), oma_rate(a_s, pw.p_s, p.sigma2)};
  if (p.order == DecodingOrder::SruStrong) {
    return {noma_rate(a_m, pw.p_m, pw.p_s, 1.0, p.sigma2), noma_rate(a_s, pw.p_s, pw.p_m, 0.0, p.sigma2)};
  }
  return {noma_rate(a_m, pw.p_m, pw.p_s, 0.0, p.sigma2), noma_rate(a_s, pw.p_s, pw.p_m, 1.0, p.sigma2)};
}

Eigen::VectorXcd principal_vector(const Eigen::MatrixXcd& v, double* lambda_max = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(v);
  const Eigen::Index n = v.rows();
  if (lambda_max != nullptr) *lambda_max = es.eigenvalues()[n - 1];
  return es.eigenvectors().col(n - 1);
}

std::vector<double> rounded_phases(const Eigen::MatrixXcd& v) {
  const Eigen::VectorXcd u = principal_vector(v);
  const Eigen::Index n = u.size() - 1;
  const double ref = std::arg(u[n]);
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) theta[static_cast<std::size_t>(k)] = wrap_phase(std::arg(u[k]) - ref);
  return theta;
}

Eigen::MatrixXcd rank_one(std::span<const double> theta) {
  const Eigen::Index n = static_cast<Eigen::Index>(theta.size());
  Eigen::VectorXcd v(n + 1);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = cdouble(std::cos(theta[k]), std::sin(theta[k]));
  v[n] = 1.0;
  return v * v.adjoint();
}

// Real-embedded SDP over V = I + sum_{k<l} (xr_kl + j xi_kl) E_kl + h.c.
class ProbeBuilder {
 public:
  enum class Mode { Relaxed, Sca, SicMax };

  explicit ProbeBuilder(const RateCellProblem& p) : p_(p), n_(static_cast<int>(p.row_m.size())) {
    a_ref_ = std::max(p.gain_m_max(), p.gain_s_max());
    for (int k = 0; k < n_; ++k) {
      for (int l = k + 1; l < n_; ++l) pairs_.emplace_back(k, l);
    }
    coef_m_ = gain_coefficients(p.row_m);
    coef_s_ = gain_coefficients(p.row_s);
    const0_m_ = (p.row_m.squaredNorm() + p.tau_m) / a_ref_;
    const0_s_ = (p.row_s.squaredNorm() + p.tau_s) / a_ref_;
  }

  double a_ref() const { return a_ref_; }

  // sic_sign > 0 asks for a_s >= a_m, < 0 for a_m >= a_s, 0 for no ordering constraint.
  sdp::Problem build(Mode mode, double r0, int sic_sign, const Eigen::VectorXcd* u, double budget,
                     double sic_margin) const {
    sdp::Problem q;
    const int nx = 2 * static_cast<int>(pairs_.size());
    const int bv = q.add_block(sdp::BlockKind::Dense, 2 * n_);
    for (int i = 0; i < nx; ++i) q.add_variable();
    for (int k = 0; k < 2 * n_; ++k) q.add(-1, bv, k, k, 1.0);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto [k, l] = pairs_[i];
      const int xr = static_cast<int>(2 * i);
      const int xi = xr + 1;
      q.add(xr, bv, k, l, -1.0);
      q.add(xr, bv, n_ + k, n_ + l, -1.0);
      q.add(xi, bv, l, n_ + k, -1.0);
      q.add(xi, bv, k, n_ + l, 1.0);
    }

    if (mode == Mode::SicMax) {
      for (int i = 0; i < nx; ++i) q.b[i] = sic_sign * (coef_s_[i] - coef_m_[i]);
      return q;
    }

    const PowerCoefficients pc = power_coefficients(p_, r0);
    const int tm = q.add_variable();
    const int ts = q.add_variable();
    auto user_block = [&](int t, const std::vector<double>& coef, double c0, double k2) {
      const int blk = q.add_block(sdp::BlockKind::Dense, 2);
      q.add(t, blk, 0, 0, -1.0);
      q.add(-1, blk, 0, 1, std::sqrt(std::max(k2, 0.0)));
      q.add(-1, blk, 1, 1, c0);
      for (int i = 0; i < nx; ++i) q.add(i, blk, 1, 1, -coef[i]);
    };
    user_block(tm, coef_m_, const0_m_, pc.alpha / (p_.p_max * a_ref_));
    user_block(ts, coef_s_, const0_s_, pc.beta / (p_.p_max * a_ref_));

    const int lp_rows = (mode == Mode::Sca ? 1 : 0) + (sic_sign != 0 ? 1 : 0);
    if (lp_rows > 0) {
      const int blp = q.add_block(sdp::BlockKind::Diagonal, lp_rows);
      int row = 0;
      if (mode == Mode::Sca) {
        q.add(-1, blp, row, row, budget);
        q.add(tm, blp, row, row, 1.0);
        q.add(ts, blp, row, row, 1.0);
        ++row;
      }
      if (sic_sign != 0) {
        const double margin = sic_margin * std::min(const0_m_, const0_s_);
        q.add(-1, blp, row, row, sic_sign * (const0_s_ - const0_m_) + margin);
        for (int i = 0; i < nx; ++i) q.add(i, blp, row, row, -sic_sign * (coef_s_[i] - coef_m_[i]));
      }
    }

    if (mode == Mode::Relaxed) {
      q.b[tm] = -1.0;
      q.b[ts] = -1.0;
    } else {
      for (std::size_t i = 0; i < pairs_.size(); ++i) {
        const auto [k, l] = pairs_[i];
        const cdouble w = std::conj((*u)[k]) * (*u)[l];
        q.b[static_cast<int>(2 * i)] = 2.0 * w.real();
        q.b[static_cast<int>(2 * i + 1)] = -2.0 * w.imag();
      }
    }
    return q;
  }

  double sic_constant(int sic_sign) const { return sic_sign * (const0_s_ - const0_m_); }

  Eigen::MatrixXcd matrix_from(const Eigen::VectorXd& y) const {
    Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n_, n_);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto [k, l] = pairs_[i];
      const cdouble z(y[static_cast<Eigen::Index>(2 * i)], y[static_cast<Eigen::Index>(2 * i + 1)]);
      v(k, l) = z;
      v(l, k) = std::conj(z);
    }
    return v;
  }

 private:
  std::vector<double> gain_coefficients(const Eigen::VectorXcd& row) const {
    std::vector<double> c(2 * pairs_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto [k, l] = pairs_[i];
      const cdouble h = std::conj(row[k]) * row[l];
      c[2 * i] = 2.0 * h.real() / a_ref_;
      c[2 * i + 1] = 2.0 * h.imag() / a_ref_;
    }
    return c;
  }

  const RateCellProblem& p_;
  int n_;
  double a_ref_ = 1.0;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<double> coef_m_;
  std::vector<double> coef_s_;
  double const0_m_ = 0.0;
  double const0_s_ = 0.0;
};

int sic_sign_of(const RateCellProblem& p) {
  if (p.scheme == AccessScheme::Oma) return 0;
  return p.order == DecodingOrder::SruStrong ? 1 : -1;
}

sdp::Options sdp_options(const ConvexTolerances& tol) {
  sdp::Options o;
  o.tolerance = tol.sdp_tolerance;
  o.max_iterations = 100;
  return o;
}

void fill_residuals(SolveReport& r, const sdp::Result& res) {
  r.primal_residual = res.primal_residual;
  r.dual_residual = res.dual_residual;
  r.gap = res.gap;
}

// Rank-one rounding of V; accepted when the explicit phases meet every constraint.
bool try_rounding(const RateCellProblem& p, double r0, const Eigen::MatrixXcd& v, const ConvexTolerances& tol,
                  SolveReport& out) {
  const std::vector<double> theta = rounded_phases(v);
  const double a_m = p.gain_m(theta);
  const double a_s = p.gain_s(theta);
  const PowerAllocation pw = minimal_powers(p, r0, a_m, a_s);
  if (constraint_violation(p, r0, a_m, a_s, pw) > tol.constraint_tolerance) return false;
  out.status = SolveStatus::RankOneAchieved;
  out.state.v = rank_one(theta);
  out.state.p_m = pw.p_m;
  out.state.p_s = pw.p_s;
  out.dc_gap = normalized_dc_gap(out.state.v);
  return true;
}

// Largest elliptope value of sign * (a_s - a_m) / a_ref; decides whether an ordering can ever hold.
double sic_headroom(const RateCellProblem& p, int sign, const ConvexTolerances& tol) {
  const ProbeBuilder builder(p);
  const sdp::Result res = sdp::solve(builder.build(ProbeBuilder::Mode::SicMax, 0.0, sign, nullptr, 0.0, 0.0),
                                     sdp_options(tol));
  return res.dual_objective + builder.sic_constant(sign);
}

}  // namespace

Eigen::MatrixXcd RateCellProblem::h_m() const { return outer(row_m); }
Eigen::MatrixXcd RateCellProblem::h_s() const { return outer(row_s); }
double RateCellProblem::gain_m(const Eigen::MatrixXcd& v) const { return gain_of(row_m, tau_m, v); }
double RateCellProblem::gain_s(const Eigen::MatrixXcd& v) const { return gain_of(row_s, tau_s, v); }
double RateCellProblem::gain_m(std::span<const double> theta) const { return gain_of(row_m, tau_m, theta); }
double RateCellProblem::gain_s(std::span<const double> theta) const { return gain_of(row_s, tau_s, theta); }
double RateCellProblem::gain_m_max() const { return gain_max_of(row_m, tau_m); }
double RateCellProblem::gain_s_max() const { return gain_max_of(row_s, tau_s); }

RateCellProblem make_rate_problem(const CellChannelStats& mru, const SruChannelStats& sru, const Scenario& s,
                                  AccessScheme scheme, DecodingOrder order) {
  if (mru.w_tilde.size() != sru.w_tilde.size()) throw std::invalid_argument("MRU and SRU statistics disagree on N");
  const Eigen::Index n = mru.w_tilde.size();
  RateCellProblem p;
  p.row_m.resize(n + 1);
  p.row_s.resize(n + 1);
  p.row_m.head(n) = mru.w_tilde;
  p.row_s.head(n) = sru.w_tilde;
  p.row_m[n] = mru.h_tilde;
  p.row_s[n] = sru.h_tilde;
  p.tau_m = mru.tau;
  p.tau_s = sru.tau;
  p.p_max = s.radio.p_max_watt();
  p.sigma2 = s.radio.noise_power_watt();
  p.rs_target = s.rs_target;
  p.scheme = scheme;
  p.order = order;
  return p;
}

PowerCoefficients power_coefficients(const RateCellProblem& p, double r0) {
  const double s2 = p.sigma2;
  if (p.scheme == AccessScheme::Oma) {
    return {(std::pow(4.0, r0) - 1.0) * s2 / 2.0, (std::pow(4.0, p.rs_target) - 1.0) * s2 / 2.0};
  }
  const double cs = (std::exp2(p.rs_target) - 1.0) * s2;
  if (p.order == DecodingOrder::SruStrong) return {(std::exp2(r0) - 1.0) * s2, std::exp2(r0) * cs};
  return {std::exp2(p.rs_target) * (std::exp2(r0) - 1.0) * s2, cs};
}

PowerAllocation minimal_powers(const RateCellProblem& p, double r0, double a_m, double a_s) {
  const double s2 = p.sigma2;
  PowerAllocation pw;
  if (p.scheme == AccessScheme::Oma) {
    pw.p_m = (std::pow(4.0, r0) - 1.0) * s2 / (2.0 * a_m);
    pw.p_s = (std::pow(4.0, p.rs_target) - 1.0) * s2 / (2.0 * a_s);
  } else if (p.order == DecodingOrder::SruStrong) {
    pw.p_s = (std::exp2(p.rs_target) - 1.0) * s2 / a_s;
    pw.p_m = (std::exp2(r0) - 1.0) * (pw.p_s + s2 / a_m);
  } else {
    pw.p_m = (std::exp2(r0) - 1.0) * s2 / a_m;
    pw.p_s = (std::exp2(p.rs_target) - 1.0) * (pw.p_m + s2 / a_s);
  }
  return pw;
}

double max_rate_at_gains(const RateCellProblem& p, double a_m, double a_s) {
  const double s2 = p.sigma2;
  const double cs = (std::exp2(p.rs_target) - 1.0) * s2;
  const double ninf = -std::numeric_limits<double>::infinity();
  if (p.scheme == AccessScheme::Oma) {
    const double left = p.p_max - (std::pow(4.0, p.rs_target) - 1.0) * s2 / (2.0 * a_s);
    const double v = 1.0 + 2.0 * a_m * left / s2;
    return v > 0.0 ? 0.5 * std::log2(v) : ninf;
  }
  if (p.order == DecodingOrder::SruStrong) {
    return std::log2((p.p_max + s2 / a_m) / (s2 / a_m + cs / a_s));
  }
  const double v = 1.0 + (p.p_max - cs / a_s) * a_m / (std::exp2(p.rs_target) * s2);
  return v > 0.0 ? std::log2(v) : ninf;
}

bool sic_satisfied(const RateCellProblem& p, double a_m, double a_s, double rel_tol) {
  if (p.scheme == AccessScheme::Oma) return true;
  const double scale = std::max(a_m, a_s);
  if (p.order == DecodingOrder::SruStrong) return a_s - a_m >= -rel_tol * scale;
  return a_m - a_s >= -rel_tol * scale;
}

double sic_violation(const RateCellProblem& p, double a_m, double a_s) {
  if (p.scheme == AccessScheme::Oma) return 0.0;
  const double d = p.order == DecodingOrder::SruStrong ? a_m - a_s : a_s - a_m;
  return std::max(0.0, d / std::max(a_m, a_s));
}

double power_rate_violation(const RateCellProblem& p, double r0, double a_m, double a_s, const PowerAllocation& pw) {
  double v = std::max(0.0, (pw.p_m + pw.p_s - p.p_max) / p.p_max);
  v = std::max(v, std::max(-pw.p_m, -pw.p_s) / p.p_max);
  const Rates r = rates_at(p, a_m, a_s, pw);
  if (r0 > 0.0) v = std::max(v, (r0 - r.m) / r0);
  if (p.rs_target > 0.0) v = std::max(v, (p.rs_target - r.s) / p.rs_target);
  return v;
}

double constraint_violation(const RateCellProblem& p, double r0, double a_m, double a_s, const PowerAllocation& pw) {
  return std::max(power_rate_violation(p, r0, a_m, a_s, pw), sic_violation(p, a_m, a_s));
}

double rate_upper_bound(const RateCellProblem& p) {
  const double snr = p.p_max * p.gain_m_max() / p.sigma2;
  return p.scheme == AccessScheme::Oma ? 0.5 * std::log2(1.0 + 2.0 * snr) : std::log2(1.0 + snr);
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible:
      return "feasible";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::RankOneAchieved:
      return "rank_one";
    case SolveStatus::Stalled:
      return "stalled";
  }
  return "unknown";
}

double normalized_dc_gap(const Eigen::MatrixXcd& v) {
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(v, Eigen::EigenvaluesOnly).eigenvalues();
  const double nuclear = ev.cwiseAbs().sum();
  const double spectral = ev.cwiseAbs().maxCoeff();
  return spectral > 0.0 ? std::max(0.0, (nuclear - spectral) / spectral) : 0.0;
}

SolveReport solve_feasibility_relaxed(const RateCellProblem& p, double r0, const ConvexTolerances& tol) {
  if (!(r0 >= 0.0)) throw std::invalid_argument("rate target must be nonnegative");
  SolveReport rep;
  const int n = p.subsurfaces();
  {
    // Minimal power falls with both gains, so the closed-form maxima give a necessary condition.
    const PowerCoefficients c = power_coefficients(p, r0);
    if (c.alpha / p.gain_m_max() + c.beta / p.gain_s_max() > p.p_max * (1.0 + tol.feasibility_tolerance)) {
      rep.state.v = Eigen::MatrixXcd::Identity(n + 1, n + 1);
      return rep;
    }
  }
  if (n == 0) {
    rep.state.v = Eigen::MatrixXcd::Identity(1, 1);
  } else {
    const ProbeBuilder builder(p);
    const sdp::Result res =
        sdp::solve(builder.build(ProbeBuilder::Mode::Relaxed, r0, sic_sign_of(p), nullptr, 0.0, tol.sic_margin),
                   sdp_options(tol));
    fill_residuals(rep, res);
    rep.iterations = res.iterations;
    rep.state.v = builder.matrix_from(res.y);
    if (res.status != sdp::Status::Optimal) {
      // An unreachable decoding order makes the relaxation infeasible, which the solver sees as a stall.
      const int sign = sic_sign_of(p);
      if (sign != 0 && sic_headroom(p, sign, tol) < 0.0) return rep;
      rep.status = SolveStatus::Stalled;
    }
  }
  const double a_m = p.gain_m(rep.state.v);
  const double a_s = p.gain_s(rep.state.v);
  const PowerAllocation pw = minimal_powers(p, r0, a_m, a_s);
  rep.state.p_m = pw.p_m;
  rep.state.p_s = pw.p_s;
  rep.dc_gap = normalized_dc_gap(rep.state.v);
  // The ordering constraint is a half-space the solver meets only to its own accuracy, so it is judged at the
  // looser rounding tolerance.
  const bool ok = power_rate_violation(p, r0, a_m, a_s, pw) <= tol.feasibility_tolerance &&
                  sic_violation(p, a_m, a_s) <= tol.constraint_tolerance;
  if (ok) {
    rep.status = SolveStatus::Feasible;
  } else if (rep.status != SolveStatus::Stalled) {
    rep.status = SolveStatus::Infeasible;
  }
  return rep;
}

SolveReport sca_rank_reduction(const RateCellProblem& p, double r0, const SdpState& v0, const ConvexTolerances& tol) {
  {
    const double a_m = p.gain_m(v0.v);
    const double a_s = p.gain_s(v0.v);
    if (constraint_violation(p, r0, a_m, a_s, minimal_powers(p, r0, a_m, a_s)) > tol.constraint_tolerance) {
      throw std::invalid_argument("initial state violates the relaxed constraints");
    }
  }
  SolveReport rep;
  rep.state = v0;
  rep.dc_gap = normalized_dc_gap(v0.v);
  rep.objective_history.push_back(rep.dc_gap);
  if (p.subsurfaces() == 0) {
    rep.iterations = 1;
    try_rounding(p, r0, v0.v, tol, rep);
    return rep;
  }
  const ProbeBuilder builder(p);
  Eigen::MatrixXcd v = v0.v;
  double obj = rep.dc_gap;
  rep.status = SolveStatus::Stalled;
  for (int it = 1; it <= tol.sca_max_iterations; ++it) {
    rep.iterations = it;
    if (try_rounding(p, r0, v, tol, rep)) return rep;
    const Eigen::VectorXcd u = principal_vector(v);
    const sdp::Result res = sdp::solve(
        builder.build(ProbeBuilder::Mode::Sca, r0, sic_sign_of(p), &u, 1.0 + tol.sca_budget_slack, tol.sic_margin),
        sdp_options(tol));
    fill_residuals(rep, res);
    if (res.status != sdp::Status::Optimal) break;
    const Eigen::MatrixXcd next = builder.matrix_from(res.y);
    const double next_obj = normalized_dc_gap(next);
    if (next_obj > obj) break;
    const double a_m = p.gain_m(next);
    const double a_s = p.gain_s(next);
    const PowerAllocation pw = minimal_powers(p, r0, a_m, a_s);
    if (constraint_violation(p, r0, a_m, a_s, pw) > tol.constraint_tolerance) break;
    const double change = obj - next_obj;
    v = next;
    obj = next_obj;
    rep.objective_history.push_back(obj);
    rep.state = {v, pw.p_m, pw.p_s};
    rep.dc_gap = obj;
    if (change < tol.sca_tolerance || obj <= tol.rank_tolerance) {
      if (try_rounding(p, r0, v, tol, rep)) {
        rep.objective_history.push_back(rep.dc_gap);
        return rep;
      }
      if (change < tol.sca_tolerance) break;
    }
  }
  rep.status = SolveStatus::Stalled;
  return rep;
}

PhaseConfig extract_phases(const SdpState& state, double rank_tol) {
  if (normalized_dc_gap(state.v) > rank_tol) throw std::invalid_argument("matrix is not numerically rank one");
  double lmax = 0.0;
  const Eigen::VectorXcd u = principal_vector(state.v, &lmax);
  const Eigen::Index n = u.size() - 1;
  if (std::abs(u[n]) <= 1e-9 * u.norm()) throw std::invalid_argument("last entry of the principal vector vanishes");
  PhaseConfig out;
  out.theta = rounded_phases(state.v);
  return out;
}

namespace {

struct ProbeOutcome {
  bool feasible = false;
  bool relaxed_feasible = false;
  double certified = 0.0;
  std::vector<double> theta;
};

ProbeOutcome run_probe(const RateCellProblem& p, double r0, const ConvexTolerances& tol, RateSolution& sol,
                       const ProbeSink& sink) {
  ProbeRecord rec;
  rec.r0 = r0;
  ProbeOutcome out;
  const SolveReport relaxed = solve_feasibility_relaxed(p, r0, tol);
  rec.relaxed_feasible = relaxed.status == SolveStatus::Feasible;
  rec.status = relaxed.status;
  out.relaxed_feasible = rec.relaxed_feasible;
  if (rec.relaxed_feasible) {
    const SolveReport sca = sca_rank_reduction(p, r0, relaxed.state, tol);
    rec.status = sca.status;
    rec.sca_iterations = sca.iterations;
    rec.dc_gap = sca.dc_gap;
    rec.objective_history = sca.objective_history;
    if (sca.status == SolveStatus::RankOneAchieved) {
      out.theta = extract_phases(sca.state, tol.rank_tolerance).theta;
      const double a_m = p.gain_m(out.theta);
      const double a_s = p.gain_s(out.theta);
      out.certified = max_rate_at_gains(p, a_m, a_s);
      rec.certified_rate = out.certified;
      rec.constraint_violation = constraint_violation(p, r0, a_m, a_s, minimal_powers(p, r0, a_m, a_s));
      out.feasible = true;
    }
  }
  ++sol.probes;
  sol.trace.push_back(rec);
  if (sink) sink(rec);
  return out;
}

void finalize(const RateCellProblem& p, double rate, std::vector<double> theta, RateSolution& sol) {
  sol.rate = rate;
  sol.phases.theta = std::move(theta);
  if (p.subsurfaces() == 0) {
    sol.state.v = Eigen::MatrixXcd::Identity(1, 1);
  } else {
    sol.state.v = rank_one(sol.phases.theta);
  }
  sol.gain_m = p.gain_m(sol.state.v);
  sol.gain_s = p.gain_s(sol.state.v);
  const PowerAllocation pw = minimal_powers(p, rate, sol.gain_m, sol.gain_s);
  sol.state.p_m = pw.p_m;
  sol.state.p_s = pw.p_s;
}


}  // namespace

RateSolution bisection_max_rate(const RateCellProblem& p, const ConvexTolerances& tol, const ProbeSink& sink) {
  RateSolution sol;
  const int sign = sic_sign_of(p);
  if (p.subsurfaces() == 0) {
    const double a_m = p.gain_m_max();
    const double a_s = p.gain_s_max();
    const double r = max_rate_at_gains(p, a_m, a_s);
    if (!sic_satisfied(p, a_m, a_s, 0.0) || !(r >= 0.0)) return sol;
    sol.status = SolveStatus::Feasible;
    finalize(p, r, {}, sol);
    return sol;
  }
  if (sign != 0 && sic_headroom(p, sign, tol) < 0.0) return sol;

  ProbeOutcome first = run_probe(p, 0.0, tol, sol, sink);
  if (!first.feasible) {
    // A relaxation that admits r = 0 without yielding a rank-one point is a solver failure, not infeasibility.
    if (first.relaxed_feasible) sol.status = SolveStatus::Stalled;
    return sol;
  }
  double r_min = std::max(0.0, first.certified);
  double best = r_min;
  std::vector<double> best_theta = first.theta;
  double r_max = rate_upper_bound(p);
  while (r_max - r_min >= tol.eps0) {
    const double mid = 0.5 * (r_min + r_max);
    ProbeOutcome o = run_probe(p, mid, tol, sol, sink);
    if (o.feasible) {
      if (o.certified > best) {
        best = o.certified;
        best_theta = o.theta;
      }
      r_min = std::max(mid, o.certified);
    } else {
      r_max = mid;
    }
  }
  sol.status = SolveStatus::RankOneAchieved;
  finalize(p, best, std::move(best_theta), sol);
  return sol;
}

RateSolution solve_oma_cell(RateCellProblem p, const ConvexTolerances& tol, const ProbeSink& sink) {
  p.scheme = AccessScheme::Oma;
  return bisection_max_rate(p, tol, sink);
}

}  // namespace irsnav
