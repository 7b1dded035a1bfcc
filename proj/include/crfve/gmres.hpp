#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "crfve/assembly.hpp"

namespace crfve {

using LinOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Inner product driving the orthogonalization and the minimized norm:
/// either plain l2 or the energy product u^T M v of an SPD matrix (the finite
/// element stiffness matrix). M is only ever applied, never factorized.
struct InnerProduct {
  enum class Kind { euclidean, energy };
  Kind kind = Kind::euclidean;
  const SpMat* M = nullptr;

  static InnerProduct l2() { return {}; }
  static InnerProduct energy(const SpMat& m) {
    return {Kind::energy, &m};
  }

  Eigen::VectorXd weight(const Eigen::VectorXd& v) const {
    if (kind == Kind::euclidean) return v;
    return (*M) * v;
  }
  double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    if (kind == Kind::euclidean) return a.dot(b);
    return b.dot((*M) * a);
  }
  double norm(const Eigen::VectorXd& a) const {
    return std::sqrt(std::max(0.0, dot(a, a)));
  }
};

struct GmresOptions {
  double rtol = 1e-6;
  int maxit = 500;
  int stagnation_window = 50;
  bool record_basis = false;  // keep the orthonormal basis for diagnostics
};

/// Residual of the *unpreconditioned* system, monitored for the stopping
/// test: convergence is declared on || b - A u_m ||_2 / || b ||_2 even while
/// the iteration itself minimizes the preconditioned residual in `ip`.
struct TrueResidualMonitor {
  LinOp apply_A;
  Eigen::VectorXd b;
};

struct KrylovReport {
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
  bool breakdown = false;  // happy breakdown: invariant subspace reached
  std::vector<double> residual_history;          // monitored l2, relative
  std::vector<double> precond_residual_history;  // l2 of g - T u_m, relative
  std::vector<double> ip_residual_history;       // minimized norm, relative
  std::optional<double> cp;  // filled by callers that also run the estimators
  std::optional<double> Cp;
  Eigen::MatrixXd basis;  // only when record_basis
};

struct GmresResult {
  Eigen::VectorXd u;
  KrylovReport report;
};

/// Full (unrestarted) GMRES for T u = g with Arnoldi orthogonalization in the
/// given inner product and zero initial guess. Records three residual
/// histories per step; stops on the monitored l2 residual.
inline GmresResult gmres(const LinOp& T, const Eigen::VectorXd& g,
                         const InnerProduct& ip, const GmresOptions& opts = {},
                         const TrueResidualMonitor* monitor = nullptr) {
  const Eigen::Index n = g.size();
  GmresResult res;
  res.u = Eigen::VectorXd::Zero(n);
  KrylovReport& rep = res.report;

  const double g_l2 = g.norm();
  const double den_mon = monitor ? monitor->b.norm() : g_l2;
  const double beta = ip.norm(g);
  rep.residual_history.push_back(1.0);
  rep.precond_residual_history.push_back(1.0);
  rep.ip_residual_history.push_back(1.0);
  if (beta == 0.0 || den_mon == 0.0) {
    rep.converged = true;
    return res;
  }

  const int maxit = std::min<int>(opts.maxit, static_cast<int>(n));
  std::vector<Eigen::VectorXd> Q;
  Q.push_back(g / beta);
  Eigen::MatrixXd Hraw = Eigen::MatrixXd::Zero(maxit + 1, maxit);
  Eigen::MatrixXd Hrot = Eigen::MatrixXd::Zero(maxit + 1, maxit);
  Eigen::VectorXd gvec = Eigen::VectorXd::Zero(maxit + 1);
  gvec[0] = beta;
  std::vector<double> cs(maxit), sn(maxit);

  for (int m = 1; m <= maxit; ++m) {
    const int j = m - 1;
    Eigen::VectorXd w = T(Q[j]);
    const double wnorm0 = ip.norm(w);

    // orthogonalize against the basis (classical Gram-Schmidt with a second
    // pass when cancellation is detected)
    Eigen::VectorXd h = Eigen::VectorXd::Zero(m);
    {
      Eigen::VectorXd z = ip.weight(w);
      for (int i = 0; i < m; ++i) h[i] = Q[i].dot(z);
      for (int i = 0; i < m; ++i) w -= h[i] * Q[i];
    }
    if (ip.norm(w) < 0.7071 * wnorm0) {
      Eigen::VectorXd z = ip.weight(w);
      Eigen::VectorXd c2(m);
      for (int i = 0; i < m; ++i) c2[i] = Q[i].dot(z);
      for (int i = 0; i < m; ++i) w -= c2[i] * Q[i];
      h += c2;
    }
    const double hnext = ip.norm(w);
    for (int i = 0; i < m; ++i) Hraw(i, j) = h[i];
    Hraw(m, j) = hnext;

    const bool breakdown = hnext <= 1e-13 * std::max(wnorm0, 1e-300);
    if (!breakdown) Q.push_back(w / hnext);

    // Givens update of column j
    for (int i = 0; i < m; ++i) Hrot(i, j) = Hraw(i, j);
    Hrot(m, j) = hnext;
    for (int i = 0; i < j; ++i) {
      const double t0 = cs[i] * Hrot(i, j) + sn[i] * Hrot(i + 1, j);
      const double t1 = -sn[i] * Hrot(i, j) + cs[i] * Hrot(i + 1, j);
      Hrot(i, j) = t0;
      Hrot(i + 1, j) = t1;
    }
    {
      const double a = Hrot(j, j), b2 = Hrot(m, j);
      const double r = std::hypot(a, b2);
      cs[j] = r == 0.0 ? 1.0 : a / r;
      sn[j] = r == 0.0 ? 0.0 : b2 / r;
      Hrot(j, j) = r;
      Hrot(m, j) = 0.0;
      const double t = cs[j] * gvec[j] + sn[j] * gvec[m];
      gvec[m] = -sn[j] * gvec[j] + cs[j] * gvec[m];
      gvec[j] = t;
    }

    // current iterate
    Eigen::VectorXd y = Hrot.topLeftCorner(m, m)
                            .triangularView<Eigen::Upper>()
                            .solve(gvec.head(m));
    Eigen::VectorXd um = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) um += y[i] * Q[i];

    // preconditioned residual vector through the Arnoldi relation
    Eigen::VectorXd small = -Hraw.topLeftCorner(m + 1, m) * y;
    small[0] += beta;
    Eigen::VectorXd pv = Eigen::VectorXd::Zero(n);
    const int ncols = static_cast<int>(Q.size());
    for (int i = 0; i < std::min(m + 1, ncols); ++i) pv += small[i] * Q[i];

    const double ip_rel = std::abs(gvec[m]) / beta;
    const double pre_rel = pv.norm() / g_l2;
    double mon_rel = pre_rel;
    if (monitor) mon_rel = (monitor->b - monitor->apply_A(um)).norm() / den_mon;

    rep.ip_residual_history.push_back(ip_rel);
    rep.precond_residual_history.push_back(pre_rel);
    rep.residual_history.push_back(mon_rel);
    rep.iterations = m;
    res.u = um;

    if (mon_rel <= opts.rtol) {
      rep.converged = true;
    }
    if (m >= opts.stagnation_window) {
      const double before = rep.residual_history[m - opts.stagnation_window];
      if (rep.residual_history[m] >= before * (1.0 - 1e-9)) rep.stagnated = true;
    }
    if (breakdown) rep.breakdown = true;
    if (rep.converged || breakdown) break;
  }

  if (opts.record_basis) {
    rep.basis.resize(n, static_cast<Eigen::Index>(Q.size()));
    for (std::size_t i = 0; i < Q.size(); ++i) rep.basis.col(i) = Q[i];
  }
  return res;
}

}  // namespace crfve
