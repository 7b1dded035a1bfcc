#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>
#include <stdexcept>
#include <vector>

#include "crfve/assembly.hpp"
#include "crfve/partition.hpp"

namespace crfve {

namespace detail {

inline SpMat submatrix(const SpMat& A, const std::vector<int>& idx) {
  std::vector<int> loc(A.rows(), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) loc[idx[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (SpMat::InnerIterator it(A, idx[k]); it; ++it)
      if (loc[it.row()] >= 0)
        trips.emplace_back(loc[it.row()], static_cast<int>(k), it.value());
  SpMat S(idx.size(), idx.size());
  S.setFromTriplets(trips.begin(), trips.end());
  return S;
}

/// Factorized block: Cholesky-type for symmetric blocks, full LU otherwise.
/// LU is what keeps the finite volume variant well-defined; a singular block
/// is reported instead of being regularized away.
class BlockSolver {
 public:
  BlockSolver(const SpMat& A, bool symmetric, const std::string& what)
      : symmetric_(symmetric) {
    if (symmetric_) {
      ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
      ldlt_->compute(A);
      if (ldlt_->info() != Eigen::Success)
        throw std::runtime_error(what + ": symmetric block factorization failed");
    } else {
      lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
      lu_->compute(A);
      if (lu_->info() != Eigen::Success)
        throw std::runtime_error(what + ": block is singular");
    }
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (symmetric_) return ldlt_->solve(b);
    return lu_->solve(b);
  }
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& b) const {
    if (symmetric_) return ldlt_->solve(b);
    return lu_->transpose().solve(b);
  }

 private:
  bool symmetric_;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu_;
};

}  // namespace detail

/// Additive average Schwarz operator T = T_0 + sum_i T_i in one of three
/// variants:
///   1: local and coarse problems and the residual source all use the finite
///      element form (the symmetric positive definite setting);
///   2: finite element local/coarse solves driven by the finite volume
///      residual;
///   3: finite volume form throughout (nonsymmetric local solves).
/// Applications are matrix-free: one multiply by the source matrix, one solve
/// per subdomain plus the coarse solve, summed in a fixed order.
class SchwarzOperator {
 public:
  SchwarzOperator(const TriMesh& mesh, const Partition& part,
                  const OperatorMatrix& fe, const OperatorMatrix& fve, int variant)
      : variant_(variant), n_(fe.dim()) {
    if (variant < 1 || variant > 3)
      throw std::invalid_argument("Schwarz variant must be 1, 2 or 3");
    if (fe.mesh_id != mesh.id || (variant != 1 && fve.mesh_id != mesh.id))
      throw std::invalid_argument("operator matrices belong to a different mesh");
    if (part.mesh_id != mesh.id)
      throw std::invalid_argument("partition belongs to a different mesh");

    const bool fe_blocks = variant != 3;
    const SpMat& local_src = fe_blocks ? fe.A : fve.A;
    B_ = (variant == 1) ? fe.A : fve.A;
    Bt_ = SpMat(B_.transpose());

    index_sets_.reserve(part.n_subdomains());
    blocks_.reserve(part.n_subdomains());
    for (int i = 0; i < part.n_subdomains(); ++i) {
      const auto& idx = part.subdomains[i].interior_dofs;
      if (idx.empty())
        throw std::invalid_argument("subdomain " + std::to_string(i) +
                                    " has no interior dofs");
      index_sets_.push_back(idx);
      blocks_.emplace_back(detail::submatrix(local_src, idx), fe_blocks,
                           "subdomain " + std::to_string(i));
    }

    coarse_ = build_coarse_map(part, n_);
    if (coarse_.dim() > 0) {
      SpMat A0 = SpMat(coarse_.P.transpose() * local_src * coarse_.P);
      coarse_solver_ =
          std::make_unique<detail::BlockSolver>(A0, fe_blocks, "coarse space");
    }
  }

  int variant() const { return variant_; }
  int dim() const { return n_; }
  const SpMat& source() const { return B_; }
  const CoarseMap& coarse_map() const { return coarse_; }

  /// Local+coarse solves applied to a residual functional r.
  Eigen::VectorXd precondition(const Eigen::VectorXd& r) const {
    Eigen::VectorXd out =
        coarse_solver_
            ? Eigen::VectorXd(coarse_.P *
                              coarse_solver_->solve(coarse_.P.transpose() * r))
            : Eigen::VectorXd::Zero(n_).eval();
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& idx = index_sets_[i];
      Eigen::VectorXd rl(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) rl[k] = r[idx[k]];
      Eigen::VectorXd xl = blocks_[i].solve(rl);
      for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] += xl[k];
    }
    return out;
  }

  Eigen::VectorXd precondition_transpose(const Eigen::VectorXd& r) const {
    Eigen::VectorXd out =
        coarse_solver_
            ? Eigen::VectorXd(coarse_.P * coarse_solver_->solve_transpose(
                                              coarse_.P.transpose() * r))
            : Eigen::VectorXd::Zero(n_).eval();
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& idx = index_sets_[i];
      Eigen::VectorXd rl(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) rl[k] = r[idx[k]];
      Eigen::VectorXd xl = blocks_[i].solve_transpose(rl);
      for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] += xl[k];
    }
    return out;
  }

  /// T u: the preconditioned operator applied to a coefficient vector.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
    return precondition(B_ * u);
  }

  /// T^T v (transpose in the Euclidean sense; adjoints in other inner
  /// products are formed by the spectral estimators on top of this).
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const {
    return Bt_ * precondition_transpose(v);
  }

  /// Right-hand side g with T u = g for the solution u of the underlying
  /// discrete problem: computable from the load vector alone.
  Eigen::VectorXd build_g(const Eigen::VectorXd& load) const {
    return precondition(load);
  }

 private:
  int variant_;
  int n_;
  SpMat B_, Bt_;
  std::vector<std::vector<int>> index_sets_;
  std::vector<detail::BlockSolver> blocks_;
  CoarseMap coarse_;
  std::unique_ptr<detail::BlockSolver> coarse_solver_;
};

inline SchwarzOperator build_schwarz(const TriMesh& mesh, const Partition& part,
                                     const OperatorMatrix& fe,
                                     const OperatorMatrix& fve, int variant) {
  return SchwarzOperator(mesh, part, fe, fve, variant);
}

}  // namespace crfve
