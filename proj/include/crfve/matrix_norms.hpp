#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <random>

#include "crfve/assembly.hpp"

namespace crfve {

/// Spectral norm (largest singular value) of a sparse matrix, via power
/// iteration on B^T B with a fixed-seed start vector. Deterministic across
/// runs; accurate to ~tol relative for well-separated top singular values.
inline double spectral_norm(const SpMat& B, double tol = 1e-8, int maxit = 20000) {
  const Eigen::Index n = B.cols();
  if (n == 0 || B.nonZeros() == 0) return 0.0;
  std::mt19937 rng(20240229u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  v.normalize();
  const SpMat Bt = SpMat(B.transpose());
  double sigma = 0.0;
  int stable = 0;
  for (int it = 0; it < maxit; ++it) {
    Eigen::VectorXd Bv = B * v;
    double s = Bv.norm();
    if (s == 0.0) return 0.0;
    Eigen::VectorXd w = Bt * Bv;
    double wn = w.norm();
    if (wn == 0.0) return s;
    v = w / wn;
    if (std::abs(s - sigma) <= tol * std::max(s, 1e-300)) {
      if (++stable >= 3) return s;
    } else {
      stable = 0;
    }
    sigma = s;
  }
  return sigma;
}

struct NonsymmetryMeasures {
  double norm_skew = 0.0;        // || A - A^T ||_2
  double norm_nonnormal = 0.0;   // || A A^T - A^T A ||_2
};

/// Departure of an assembled operator from symmetry and from normality.
inline NonsymmetryMeasures nonsymmetry_measures(const OperatorMatrix& op,
                                                double tol = 1e-8) {
  NonsymmetryMeasures r;
  const SpMat At = SpMat(op.A.transpose());
  r.norm_skew = spectral_norm(SpMat(op.A - At), tol);
  r.norm_nonnormal = spectral_norm(SpMat(SpMat(op.A * At) - SpMat(At * op.A)), tol);
  return r;
}

/// || A_fe - A_fve ||_2, the measured size of the perturbation between the two
/// discretizations; decays like O(h) for smooth coefficients and vanishes for
/// element-wise constant ones.
inline double perturbation_norm(const OperatorMatrix& fe, const OperatorMatrix& fve,
                                double tol = 1e-8) {
  return spectral_norm(SpMat(fe.A - fve.A), tol);
}

}  // namespace crfve
