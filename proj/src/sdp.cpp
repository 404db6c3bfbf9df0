#include "irsnav/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace irsnav::sdp {

namespace {

using Blocks = std::vector<Eigen::MatrixXd>;

struct FullEntry {
  int row;
  int col;
  double value;
};

// Constraint coefficients touching one block, expanded to both triangles.
struct BlockTerm {
  int var;
  std::vector<FullEntry> entries;
};

class Solver {
 public:
  Solver(const Problem& p, const Options& o) : p_(p), o_(o) {
    nb_ = static_cast<int>(p.kinds.size());
    m_ = p.variable_count();
    if (p.b.size() != m_) throw std::invalid_argument("objective length must equal the variable count");
    terms_.resize(nb_);
    for (int i = 0; i < m_; ++i) {
      std::vector<std::vector<FullEntry>> per_block(nb_);
      for (const Entry& e : p.a[i]) expand(e, per_block[e.block]);
      for (int b = 0; b < nb_; ++b) {
        if (!per_block[b].empty()) terms_[b].push_back({i, std::move(per_block[b])});
      }
    }
    c_ = zeros();
    for (const Entry& e : p.c) {
      check(e);
      if (dense(e.block)) {
        c_[e.block](e.row, e.col) += e.value;
        if (e.row != e.col) c_[e.block](e.col, e.row) += e.value;
      } else {
        c_[e.block](e.row, 0) += e.value;
      }
    }
    n_total_ = 0;
    for (int s : p.sizes) n_total_ += s;
  }

  Result run() {
    init_point();
    Result res;
    int slow_steps = 0;
    for (int it = 0; it <= o_.max_iterations; ++it) {
      residuals();
      res.iterations = it;
      if (converged()) {
        res.status = Status::Optimal;
        break;
      }
      if (it == o_.max_iterations || slow_steps >= 5) break;

      zi_ = inverse(z_);
      factor_schur();
      if (!schur_ok_) break;

      // Predictor.
      Eigen::VectorXd dy;
      Blocks dx;
      Blocks dz;
      direction(0.0, nullptr, dy, dx, dz);
      const double ap_aff = std::min(1.0, max_step(x_, dx));
      const double ad_aff = std::min(1.0, max_step(z_, dz));
      const double mu = inner(x_, z_) / n_total_;
      Blocks xa = x_;
      Blocks za = z_;
      axpy(ap_aff, dx, xa);
      axpy(ad_aff, dz, za);
      const double mu_aff = inner(xa, za) / n_total_;
      const double expo = std::max(1.0, 3.0 * std::pow(std::min(ap_aff, ad_aff), 2));
      const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expo), 0.0, 1.0);

      // Corrector with the second-order term dX dZ Z^-1.
      Blocks corr(nb_);
      for (int b = 0; b < nb_; ++b) {
        if (dense(b)) {
          corr[b] = dx[b] * dz[b] * zi_[b];
        } else {
          corr[b] = dx[b].cwiseProduct(dz[b]).cwiseProduct(zi_[b]);
        }
      }
      direction(sigma * mu, &corr, dy, dx, dz);
      const double gamma = std::min(0.99, std::max(o_.step_fraction, 0.9 + 0.09 * std::min(ap_aff, ad_aff)));
      const double ap = std::min(1.0, gamma * max_step(x_, dx));
      const double ad = std::min(1.0, gamma * max_step(z_, dz));
      axpy(ap, dx, x_);
      axpy(ad, dz, z_);
      y_ += ad * dy;
      slow_steps = (std::max(ap, ad) < 1e-8) ? slow_steps + 1 : 0;
    }
    res.y = y_;
    res.x = x_;
    res.z = z_;
    res.primal_objective = inner(c_, x_);
    res.dual_objective = p_.b.dot(y_);
    res.primal_residual = pres_;
    res.dual_residual = dres_;
    res.gap = gap_;
    return res;
  }

 private:
  bool dense(int b) const { return p_.kinds[b] == BlockKind::Dense; }

  void check(const Entry& e) const {
    if (e.block < 0 || e.block >= nb_) throw std::invalid_argument("entry refers to an unknown block");
    const int n = p_.sizes[e.block];
    if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n) throw std::invalid_argument("entry outside its block");
    if (!dense(e.block) && e.row != e.col) throw std::invalid_argument("diagonal block entries must lie on the diagonal");
  }

  void expand(const Entry& e, std::vector<FullEntry>& out) const {
    check(e);
    int r = std::min(e.row, e.col);
    int c = std::max(e.row, e.col);
    out.push_back({r, c, e.value});
    if (r != c) out.push_back({c, r, e.value});
  }

  Blocks zeros() const {
    Blocks out(nb_);
    for (int b = 0; b < nb_; ++b) {
      const int n = p_.sizes[b];
      out[b] = dense(b) ? Eigen::MatrixXd::Zero(n, n) : Eigen::MatrixXd::Zero(n, 1);
    }
    return out;
  }

  Blocks identity(double s) const {
    Blocks out(nb_);
    for (int b = 0; b < nb_; ++b) {
      const int n = p_.sizes[b];
      out[b] = dense(b) ? Eigen::MatrixXd(s * Eigen::MatrixXd::Identity(n, n)) : Eigen::MatrixXd::Constant(n, 1, s);
    }
    return out;
  }

  double inner(const Blocks& a, const Blocks& b) const {
    double s = 0.0;
    for (int k = 0; k < nb_; ++k) s += a[k].cwiseProduct(b[k]).sum();
    return s;
  }

  static void axpy(double alpha, const Blocks& d, Blocks& x) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += alpha * d[k];
  }

  // <A_i, G> for every i; G may be nonsymmetric.
  Eigen::VectorXd apply_a(const Blocks& g) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    for (int b = 0; b < nb_; ++b) {
      const bool d = dense(b);
      for (const BlockTerm& t : terms_[b]) {
        double s = 0.0;
        for (const FullEntry& e : t.entries) s += e.value * (d ? g[b](e.row, e.col) : g[b](e.row, 0));
        out[t.var] += s;
      }
    }
    return out;
  }

  Blocks apply_at(const Eigen::VectorXd& y) const {
    Blocks out = zeros();
    for (int b = 0; b < nb_; ++b) {
      const bool d = dense(b);
      for (const BlockTerm& t : terms_[b]) {
        const double yi = y[t.var];
        if (yi == 0.0) continue;
        for (const FullEntry& e : t.entries) {
          if (d) {
            out[b](e.row, e.col) += yi * e.value;
          } else {
            out[b](e.row, 0) += yi * e.value;
          }
        }
      }
    }
    return out;
  }

  Blocks inverse(const Blocks& z) const {
    Blocks out(nb_);
    for (int b = 0; b < nb_; ++b) {
      if (dense(b)) {
        Eigen::LLT<Eigen::MatrixXd> llt(z[b]);
        const int n = p_.sizes[b];
        out[b] = llt.solve(Eigen::MatrixXd::Identity(n, n));
        out[b] = 0.5 * (out[b] + out[b].transpose()).eval();
      } else {
        out[b] = z[b].cwiseInverse();
      }
    }
    return out;
  }

  void init_point() {
    const double nrm_c = std::sqrt(inner(c_, c_));
    double max_a = 0.0;
    double ratio = 0.0;
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      for (const Entry& e : p_.a[i]) s += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
      const double na = std::sqrt(s);
      max_a = std::max(max_a, na);
      ratio = std::max(ratio, (1.0 + std::abs(p_.b[i])) / (1.0 + na));
    }
    const double sq = std::sqrt(static_cast<double>(n_total_));
    const double xi = std::max({10.0, sq, n_total_ * ratio});
    const double eta = std::max({10.0, sq, max_a, nrm_c});
    x_ = identity(xi);
    z_ = identity(eta);
    y_ = Eigen::VectorXd::Zero(m_);
    norm_b_ = p_.b.norm();
    norm_c_ = nrm_c;
  }

  void residuals() {
    rp_ = p_.b - apply_a(x_);
    rd_ = c_;
    const Blocks aty = apply_at(y_);
    double dn = 0.0;
    for (int b = 0; b < nb_; ++b) {
      rd_[b] -= z_[b] + aty[b];
      dn += rd_[b].squaredNorm();
    }
    pres_ = rp_.norm() / (1.0 + norm_b_);
    dres_ = std::sqrt(dn) / (1.0 + norm_c_);
    const double po = inner(c_, x_);
    const double dobj = p_.b.dot(y_);
    gap_ = inner(x_, z_) / (1.0 + std::abs(po) + std::abs(dobj));
    obj_gap_ = std::abs(po - dobj) / (1.0 + std::abs(po) + std::abs(dobj));
  }

  bool converged() const {
    return pres_ <= o_.tolerance && dres_ <= o_.tolerance && gap_ <= o_.tolerance && obj_gap_ <= o_.tolerance;
  }

  void factor_schur() {
    Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(m_, m_);
    for (int b = 0; b < nb_; ++b) {
      const auto& ts = terms_[b];
      const Eigen::MatrixXd& xb = x_[b];
      const Eigen::MatrixXd& zb = zi_[b];
      if (dense(b)) {
        for (std::size_t p = 0; p < ts.size(); ++p) {
          for (std::size_t q = p; q < ts.size(); ++q) {
            double s = 0.0;
            for (const FullEntry& e : ts[p].entries) {
              for (const FullEntry& f : ts[q].entries) s += e.value * f.value * xb(e.col, f.row) * zb(f.col, e.row);
            }
            mm(ts[p].var, ts[q].var) += s;
            if (ts[p].var != ts[q].var) mm(ts[q].var, ts[p].var) += s;
          }
        }
      } else {
        // Diagonal block: M += A_b^T diag(x / z) A_b.
        const int n = p_.sizes[b];
        Eigen::VectorXd w(n);
        for (int k = 0; k < n; ++k) w[k] = xb(k, 0) * zb(k, 0);
        for (std::size_t p = 0; p < ts.size(); ++p) {
          for (std::size_t q = p; q < ts.size(); ++q) {
            double s = 0.0;
            for (const FullEntry& e : ts[p].entries) {
              for (const FullEntry& f : ts[q].entries) {
                if (e.row == f.row) s += e.value * f.value * w[e.row];
              }
            }
            mm(ts[p].var, ts[q].var) += s;
            if (ts[p].var != ts[q].var) mm(ts[q].var, ts[p].var) += s;
          }
        }
      }
    }
    schur_scale_ = std::max(1.0, mm.diagonal().cwiseAbs().maxCoeff());
    llt_.compute(mm);
    schur_ok_ = llt_.info() == Eigen::Success;
    if (!schur_ok_) {
      mm.diagonal().array() += 1e-14 * schur_scale_;
      llt_.compute(mm);
      schur_ok_ = llt_.info() == Eigen::Success;
    }
  }

  void direction(double sigma_mu, const Blocks* corr, Eigen::VectorXd& dy, Blocks& dx, Blocks& dz) const {
    Blocks xrz(nb_);
    for (int b = 0; b < nb_; ++b) {
      if (dense(b)) {
        xrz[b] = x_[b] * rd_[b] * zi_[b];
      } else {
        xrz[b] = x_[b].cwiseProduct(rd_[b]).cwiseProduct(zi_[b]);
      }
    }
    Eigen::VectorXd rhs = p_.b + apply_a(xrz);
    if (sigma_mu != 0.0) rhs -= sigma_mu * apply_a(zi_);
    if (corr != nullptr) rhs += apply_a(*corr);
    dy = llt_.solve(rhs);
    const Blocks atdy = apply_at(dy);
    dz.resize(nb_);
    dx.resize(nb_);
    for (int b = 0; b < nb_; ++b) {
      dz[b] = rd_[b] - atdy[b];
      if (dense(b)) {
        Eigen::MatrixXd t = sigma_mu * zi_[b] - x_[b] - x_[b] * dz[b] * zi_[b];
        if (corr != nullptr) t -= (*corr)[b];
        dx[b] = 0.5 * (t + t.transpose());
      } else {
        Eigen::MatrixXd t = sigma_mu * zi_[b] - x_[b] - x_[b].cwiseProduct(dz[b]).cwiseProduct(zi_[b]);
        if (corr != nullptr) t -= (*corr)[b];
        dx[b] = t;
      }
    }
  }

  // Largest alpha with x + alpha d >= 0 (infinity if unbounded).
  double max_step(const Blocks& x, const Blocks& d) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (int b = 0; b < nb_; ++b) {
      if (dense(b)) {
        Eigen::LLT<Eigen::MatrixXd> llt(x[b]);
        if (llt.info() != Eigen::Success) return 0.0;
        Eigen::MatrixXd s = llt.matrixL().solve(d[b]);
        s = llt.matrixL().solve(s.transpose().eval());
        const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
        const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues()[0];
        if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
      } else {
        for (Eigen::Index k = 0; k < x[b].rows(); ++k) {
          if (d[b](k, 0) < 0.0) alpha = std::min(alpha, -x[b](k, 0) / d[b](k, 0));
        }
      }
    }
    return alpha;
  }

  const Problem& p_;
  Options o_;
  int nb_ = 0;
  int m_ = 0;
  int n_total_ = 0;
  std::vector<std::vector<BlockTerm>> terms_;
  Blocks c_;
  Blocks x_;
  Blocks z_;
  Blocks zi_;
  Blocks rd_;
  Eigen::VectorXd y_;
  Eigen::VectorXd rp_;
  double norm_b_ = 0.0;
  double norm_c_ = 0.0;
  double pres_ = 0.0;
  double dres_ = 0.0;
  double gap_ = 0.0;
  double obj_gap_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool schur_ok_ = false;
  double schur_scale_ = 1.0;
};

}  // namespace

int Problem::add_block(BlockKind kind, int size) {
  if (size < 1) throw std::invalid_argument("block size must be positive");
  kinds.push_back(kind);
  sizes.push_back(size);
  return static_cast<int>(kinds.size()) - 1;
}

int Problem::add_variable() {
  a.emplace_back();
  b.conservativeResize(b.size() + 1);
  b[b.size() - 1] = 0.0;
  return static_cast<int>(a.size()) - 1;
}

void Problem::add(int var, int block, int row, int col, double value) {
  if (value == 0.0) return;
  Entry e{block, std::min(row, col), std::max(row, col), value};
  if (var < 0) {
    c.push_back(e);
  } else {
    a.at(static_cast<std::size_t>(var)).push_back(e);
  }
}

Result solve(const Problem& problem, const Options& options) { return Solver(problem, options).run(); }

}  // namespace irsnav::sdp
