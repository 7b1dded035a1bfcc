#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "crfve/gmres.hpp"

namespace crfve {

struct SpectralEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Eigenvalue count of a symmetric tridiagonal matrix below x (Sturm/LDL
/// recurrence), used to bisect for the extreme eigenvalues.
inline int sturm_count(const std::vector<double>& a, const std::vector<double>& b,
                       double x) {
  int count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double off = i == 0 ? 0.0 : b[i - 1];
    d = a[i] - x - (i == 0 ? 0.0 : off * off / d);
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++count;
  }
  return count;
}

inline double tridiag_extreme(const std::vector<double>& a,
                              const std::vector<double>& b, bool smallest) {
  double radius = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double r = std::abs(a[i]);
    if (i > 0) r += std::abs(b[i - 1]);
    if (i + 1 < a.size()) r += std::abs(b[i]);
    radius = std::max(radius, r);
  }
  double lo = -radius - 1.0, hi = radius + 1.0;
  const int n = static_cast<int>(a.size());
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    int c = sturm_count(a, b, mid);
    if (smallest ? (c >= 1) : (c >= n))
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

inline Eigen::VectorXd seeded_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

/// Shared machinery for the adjoint of T in the `ip` inner product:
/// ip-adjoint(T) = M^{-1} T^T M, with M factorized once up front.
class AdjointContext {
 public:
  AdjointContext(const InnerProduct& ip, Eigen::Index n) : ip_(ip) {
    if (ip.kind == InnerProduct::Kind::energy) {
      ldlt_.compute(*ip.M);
      if (ldlt_.info() != Eigen::Success)
        throw std::runtime_error("inner-product matrix is not SPD");
    }
    (void)n;
  }
  Eigen::VectorXd adjoint_apply(const LinOp& Tt, const Eigen::VectorXd& v) const {
    if (ip_.kind == InnerProduct::Kind::euclidean) return Tt(v);
    return ldlt_.solve(Tt((*ip_.M) * v));
  }
  const InnerProduct& ip() const { return ip_; }

 private:
  InnerProduct ip_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

/// Lanczos in the ip inner product with full reorthogonalization, tracking
/// one extreme Ritz value of a self-adjoint operator until it plateaus.
inline SpectralEstimate lanczos_extreme(const LinOp& S, Eigen::Index n,
                                        const InnerProduct& ip, double tol,
                                        int maxit, bool smallest, unsigned seed) {
  maxit = std::min<int>(maxit, static_cast<int>(n));
  std::vector<Eigen::VectorXd> Q;
  std::vector<double> a, b;  // tridiagonal diag / offdiag
  Eigen::VectorXd q = seeded_vector(n, seed);
  q /= ip.norm(q);
  Q.push_back(q);

  SpectralEstimate est;
  double prev = 0.0;
  int stable = 0;
  for (int j = 0; j < maxit; ++j) {
    Eigen::VectorXd w = S(Q[j]);
    const double alpha = ip.dot(w, Q[j]);
    a.push_back(alpha);
    // full reorthogonalization keeps the Ritz values trustworthy
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd z = ip.weight(w);
      for (const auto& qi : Q) w -= qi.dot(z) * qi;
    }
    const double beta = ip.norm(w);
    est.iterations = j + 1;
    const double lam = tridiag_extreme(a, b, smallest);
    est.value = lam;
    if (beta <= 1e-12 * std::abs(alpha)) {
      est.converged = true;  // exact invariant subspace
      break;
    }
    // a plateau of the tracked Ritz value over several steps ends the sweep
    if (j > 0 && std::abs(lam - prev) <= tol * std::max(std::abs(lam), 1e-30)) {
      if (++stable >= 5 && j >= 20) {
        est.converged = true;
        break;
      }
    } else {
      stable = 0;
    }
    prev = lam;
    b.push_back(beta);
    Q.push_back(w / beta);
  }
  return est;
}

}  // namespace detail

/// Smallest eigenvalue of the ip-symmetric part (T + T*)/2 of the
/// preconditioned operator, by Lanczos in the ip inner product with full
/// reorthogonalization. `Tt` must apply the Euclidean transpose of T.
inline SpectralEstimate estimate_cp(const LinOp& T, const LinOp& Tt, Eigen::Index n,
                                    const InnerProduct& ip, double tol = 1e-6,
                                    int maxit = 400) {
  detail::AdjointContext ctx(ip, n);
  auto S = [&](const Eigen::VectorXd& v) {
    return (0.5 * (T(v) + ctx.adjoint_apply(Tt, v))).eval();
  };
  return detail::lanczos_extreme(S, n, ip, tol, maxit, /*smallest=*/true,
                                 987654321u);
}

/// ip-operator norm of T: square root of the largest eigenvalue of the
/// self-adjoint product T*T, again by Lanczos (clustered top eigenvalues
/// would stall a plain power iteration).
inline SpectralEstimate estimate_Cp(const LinOp& T, const LinOp& Tt, Eigen::Index n,
                                    const InnerProduct& ip, double tol = 1e-6,
                                    int maxit = 2000) {
  detail::AdjointContext ctx(ip, n);
  auto S = [&](const Eigen::VectorXd& v) { return ctx.adjoint_apply(Tt, T(v)); };
  SpectralEstimate est = detail::lanczos_extreme(S, n, ip, tol, maxit,
                                                 /*smallest=*/false, 123456789u);
  est.value = std::sqrt(std::max(0.0, est.value));
  return est;
}

/// Dense matrix of a linear operator, column by column. Guarded: meant for
/// spectrum dumps of small problems only.
inline Eigen::MatrixXd dense_operator(const LinOp& T, Eigen::Index n) {
  if (n > 3000)
    throw std::invalid_argument("dense spectrum limited to dimension 3000");
  Eigen::MatrixXd D(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    D.col(j) = T(e);
    e[j] = 0.0;
  }
  return D;
}

/// Full eigenvalue set of a dense real matrix, sorted by real part (ties by
/// imaginary part).
inline std::vector<std::complex<double>> dense_spectrum(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("dense eigenvalue iteration failed");
  std::vector<std::complex<double>> ev(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) ev[i] = es.eigenvalues()[i];
  std::sort(ev.begin(), ev.end(), [](auto x, auto y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  return ev;
}

/// Reference values for small problems: extreme eigenvalues of the symmetric
/// part and the ip-norm of T, computed densely through the generalized
/// symmetric eigenproblem with the ip matrix.
inline double dense_cp(const Eigen::MatrixXd& T, const Eigen::MatrixXd& M) {
  Eigen::MatrixXd C = 0.5 * (M * T + T.transpose() * M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(C, M,
                                                                Eigen::EigenvaluesOnly);
  return ges.eigenvalues().minCoeff();
}

inline double dense_Cp(const Eigen::MatrixXd& T, const Eigen::MatrixXd& M) {
  Eigen::MatrixXd C = T.transpose() * M * T;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(C, M,
                                                                Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, ges.eigenvalues().maxCoeff()));
}

}  // namespace crfve
