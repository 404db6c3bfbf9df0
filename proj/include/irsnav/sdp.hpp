#pragma once

#include <vector>

#include <Eigen/Dense>

namespace irsnav::sdp {

enum class BlockKind { Dense, Diagonal };

/// One coefficient of a symmetric block matrix. Only row <= col is stored; the mirror entry is implied.
struct Entry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Block-diagonal SDP in the form
///   maximize  b^T y   subject to   Z = C - sum_i y_i A_i  >= 0,
/// whose conic dual is  minimize <C, X>  subject to  <A_i, X> = b_i,  X >= 0.
/// Diagonal blocks are linear inequality constraints.
struct Problem {
  std::vector<BlockKind> kinds;
  std::vector<int> sizes;
  std::vector<Entry> c;
  std::vector<std::vector<Entry>> a;
  Eigen::VectorXd b;

  int add_block(BlockKind kind, int size);
  int add_variable();
  /// Adds coef to A_var (var >= 0) or to C (var == -1) at (row, col), symmetric.
  void add(int var, int block, int row, int col, double value);
  int variable_count() const { return static_cast<int>(a.size()); }
};

struct Options {
  double tolerance = 1e-8;
  int max_iterations = 100;
  double step_fraction = 0.95;
};

enum class Status { Optimal, Stalled };

struct Result {
  Status status = Status::Stalled;
  Eigen::VectorXd y;
  /// Per-block primal X and slack Z; diagonal blocks are stored as column vectors.
  std::vector<Eigen::MatrixXd> x;
  std::vector<Eigen::MatrixXd> z;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

/// Infeasible-start primal-dual path following with the HKM direction and a Mehrotra corrector.
Result solve(const Problem& problem, const Options& options = {});

}  // namespace irsnav::sdp
