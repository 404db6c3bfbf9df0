#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "irsnav/channel.hpp"
#include "irsnav/power_map.hpp"

namespace irsnav {

/// Rate-map subproblem of one cell. Each user's expected gain is |row . v|^2 + tau for the augmented phase vector
/// v = [e^{j theta_1}, ..., e^{j theta_N}, 1], i.e. Tr(H V) + tau with H = row^H row and V = v v^H.
struct RateCellProblem {
  Eigen::VectorXcd row_m;
  Eigen::VectorXcd row_s;
  double tau_m = 0.0;
  double tau_s = 0.0;
  double p_max = 0.0;
  double sigma2 = 0.0;
  double rs_target = 0.0;
  AccessScheme scheme = AccessScheme::Noma;
  DecodingOrder order = DecodingOrder::SruStrong;

  int subsurfaces() const { return static_cast<int>(row_m.size()) - 1; }
  Eigen::MatrixXcd h_m() const;
  Eigen::MatrixXcd h_s() const;
  double gain_m(const Eigen::MatrixXcd& v) const;
  double gain_s(const Eigen::MatrixXcd& v) const;
  /// Expected gains for explicit sub-surface phases.
  double gain_m(std::span<const double> theta) const;
  double gain_s(std::span<const double> theta) const;
  /// Closed-form maxima over all phases.
  double gain_m_max() const;
  double gain_s_max() const;
};

RateCellProblem make_rate_problem(const CellChannelStats& mru, const SruChannelStats& sru, const Scenario& s,
                                  AccessScheme scheme, DecodingOrder order);

/// Total power needed for rate r0 is alpha / a_m + beta / a_s (plus the SIC ordering for NOMA).
struct PowerCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
};
PowerCoefficients power_coefficients(const RateCellProblem& p, double r0);

struct PowerAllocation {
  double p_m = 0.0;
  double p_s = 0.0;
};
/// Smallest powers meeting MRU rate r0 and the SRU floor at gains (a_m, a_s).
PowerAllocation minimal_powers(const RateCellProblem& p, double r0, double a_m, double a_s);
/// Largest MRU rate reachable with the full power budget at gains (a_m, a_s); negative when even r0 = 0 fails.
double max_rate_at_gains(const RateCellProblem& p, double a_m, double a_s);
/// True when the decoding order is admissible at these gains (always true for OMA).
bool sic_satisfied(const RateCellProblem& p, double a_m, double a_s, double rel_tol);
/// Relative violation of the SIC ordering (0 for OMA).
double sic_violation(const RateCellProblem& p, double a_m, double a_s);
/// Worst relative violation of the power budget and the two rate constraints.
double power_rate_violation(const RateCellProblem& p, double r0, double a_m, double a_s, const PowerAllocation& pw);
/// Worst relative violation of the power budget, rate and SIC constraints at (a_m, a_s, powers) for rate r0.
double constraint_violation(const RateCellProblem& p, double r0, double a_m, double a_s, const PowerAllocation& pw);
/// Interference-free MRU rate cap used as the initial bisection upper bound.
double rate_upper_bound(const RateCellProblem& p);

struct SdpState {
  Eigen::MatrixXcd v;
  double p_m = 0.0;
  double p_s = 0.0;
};

enum class SolveStatus { Feasible, Infeasible, RankOneAchieved, Stalled };

const char* to_string(SolveStatus s);

struct ConvexTolerances {
  double sdp_tolerance = 1e-9;
  double feasibility_tolerance = 1e-7;
  double sca_budget_slack = 5e-7;
  double sic_margin = 0.0;
  double constraint_tolerance = 1e-6;
  double sca_tolerance = 1e-6;
  double rank_tolerance = 1e-6;
  int sca_max_iterations = 50;
  double eps0 = 1e-3;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Infeasible;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  /// (||V||_* - ||V||_2) / ||V||_2 of the returned state.
  double dc_gap = 0.0;
  /// Normalized DC objective after each accepted iterate, starting with the input state.
  std::vector<double> objective_history;
  SdpState state;
};

/// (||V||_* - ||V||_2) / ||V||_2 for Hermitian PSD V.
double normalized_dc_gap(const Eigen::MatrixXcd& v);

/// Rank-relaxed feasibility at MRU rate r0: returns Feasible with the minimal powers at the relaxed optimum,
/// Infeasible, or Stalled when the interior-point solver does not converge.
SolveReport solve_feasibility_relaxed(const RateCellProblem& p, double r0, const ConvexTolerances& tol = {});

/// Difference-of-convex rank reduction from a relaxed-feasible state.
SolveReport sca_rank_reduction(const RateCellProblem& p, double r0, const SdpState& v0,
                               const ConvexTolerances& tol = {});

/// Phases of the principal eigenvector after rotating its last entry to 1. Throws if V is not numerically rank one
/// or the last entry vanishes.
PhaseConfig extract_phases(const SdpState& state, double rank_tol = 1e-6);

struct ProbeRecord {
  double r0 = 0.0;
  bool relaxed_feasible = false;
  SolveStatus status = SolveStatus::Infeasible;
  int sca_iterations = 0;
  double dc_gap = 0.0;
  /// Largest rate certified by the recovered phases; only meaningful when feasible.
  double certified_rate = 0.0;
  double constraint_violation = 0.0;
  std::vector<double> objective_history;
};

using ProbeSink = std::function<void(const ProbeRecord&)>;

struct RateSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double rate = 0.0;
  SdpState state;
  PhaseConfig phases;
  double gain_m = 0.0;
  double gain_s = 0.0;
  int probes = 0;
  std::vector<ProbeRecord> trace;
};

/// Bisection on the MRU rate for the problem's scheme and decoding order.
RateSolution bisection_max_rate(const RateCellProblem& p, const ConvexTolerances& tol = {},
                                const ProbeSink& sink = nullptr);

/// Same search for the OMA constraint set.
RateSolution solve_oma_cell(RateCellProblem p, const ConvexTolerances& tol = {}, const ProbeSink& sink = nullptr);

}  // namespace irsnav
