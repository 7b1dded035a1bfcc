#include <gtest/gtest.h>

#include <Eigen/SparseLU>
#include <cmath>
#include <random>

#include "crfve/assembly.hpp"
#include "crfve/coefficient.hpp"
#include "crfve/dual_mesh.hpp"
#include "crfve/gmres.hpp"
#include "crfve/mesh.hpp"
#include "crfve/partition.hpp"
#include "crfve/schwarz.hpp"

namespace {

using namespace crfve;

struct Problem {
  TriMesh mesh;
  DualMesh dual;
  Partition part;
  OperatorMatrix fe;
  OperatorMatrix fve;
  CrFunction bfe;
  CrFunction bfve;
};

Problem make_problem(int n, int blocks, int freq) {
  CoefficientSpec spec;
  spec.base = CoefficientSpec::Base::sinusoidal;
  spec.frequency = freq;
  Problem p{build_unit_square_mesh(n), {}, {}, {}, {}, {}, {}};
  p.dual = build_dual_mesh(p.mesh);
  p.part = build_block_partition(p.mesh, blocks);
  CoefficientField field = make_field(spec);
  p.fe = assemble_fe_matrix(p.mesh, field);
  p.fve = assemble_fve_matrix(p.mesh, p.dual, field);
  auto one = [](Point2) { return 1.0; };
  p.bfe = assemble_fe_rhs(p.mesh, one);
  p.bfve = assemble_fve_rhs(p.mesh, p.dual, one);
  return p;
}

Eigen::VectorXd direct_solve(const SpMat& A, const Eigen::VectorXd& b) {
  Eigen::SparseLU<SpMat> lu;
  SpMat Ac = A;
  Ac.makeCompressed();
  lu.compute(Ac);
  EXPECT_EQ(lu.info(), Eigen::Success);
  return lu.solve(b);
}

TEST(Schwarz, CoarseDimensionMatchesTheInterface) {
  Problem p = make_problem(32, 4, 10);
  SchwarzOperator op(p.mesh, p.part, p.fe, p.fve, 2);
  // three interior grid lines each way, 32 edges per line
  EXPECT_EQ(p.part.interface_dofs.size(), 192u);
  EXPECT_EQ(op.coarse_map().dim(), 192);
}

TEST(Schwarz, PreconditionerIsSymmetricPositiveDefinite) {
  Problem p = make_problem(8, 2, 10);
  SchwarzOperator op(p.mesh, p.part, p.fe, p.fve, 1);
  std::mt19937 rng(3u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  int n = op.dim();
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd u(n), v(n);
    for (int i = 0; i < n; ++i) {
      u[i] = dist(rng);
      v[i] = dist(rng);
    }
    Eigen::VectorXd Cu = op.precondition(u);
    Eigen::VectorXd Cv = op.precondition(v);
    double uv = u.dot(Cv), vu = v.dot(Cu);
    EXPECT_NEAR(uv, vu, 1e-11 * (std::abs(uv) + 1.0));
    EXPECT_GT(u.dot(Cu), 0.0);
  }
}

TEST(Schwarz, VariantsOneAndTwoShareThePreconditioner) {
  Problem p = make_problem(8, 2, 10);
  SchwarzOperator op1(p.mesh, p.part, p.fe, p.fve, 1);
  SchwarzOperator op2(p.mesh, p.part, p.fe, p.fve, 2);
  SchwarzOperator op3(p.mesh, p.part, p.fe, p.fve, 3);
  std::mt19937 rng(5u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd r(op1.dim());
  for (int i = 0; i < r.size(); ++i) r[i] = dist(rng);
  Eigen::VectorXd c1 = op1.precondition(r);
  Eigen::VectorXd c2 = op2.precondition(r);
  Eigen::VectorXd c3 = op3.precondition(r);
  EXPECT_LE((c1 - c2).norm(), 1e-13 * c1.norm());
  EXPECT_GT((c1 - c3).norm(), 1e-8 * c1.norm());
}

TEST(Schwarz, ResidualSourceFollowsVariant) {
  Problem p = make_problem(8, 2, 10);
  SchwarzOperator op1(p.mesh, p.part, p.fe, p.fve, 1);
  SchwarzOperator op2(p.mesh, p.part, p.fe, p.fve, 2);
  EXPECT_LE((SpMat(op1.source() - p.fe.A)).norm(), 0.0);
  EXPECT_LE((SpMat(op2.source() - p.fve.A)).norm(), 0.0);
}

TEST(Schwarz, TransposeApplicationIsTheAdjoint) {
  Problem p = make_problem(8, 2, 10);
  for (int k : {1, 2, 3}) {
    SchwarzOperator op(p.mesh, p.part, p.fe, p.fve, k);
    std::mt19937 rng(7u + k);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd u(op.dim()), v(op.dim());
    for (int i = 0; i < u.size(); ++i) {
      u[i] = dist(rng);
      v[i] = dist(rng);
    }
    double a = v.dot(op.apply(u));
    double b = op.apply_transpose(v).dot(u);
    EXPECT_NEAR(a, b, 1e-10 * (std::abs(a) + 1.0));
  }
}

TEST(Schwarz, PreconditionedSolveMatchesDirectSolve) {
  Problem p = make_problem(8, 2, 10);
  for (int k : {1, 2, 3}) {
    SchwarzOperator op(p.mesh, p.part, p.fe, p.fve, k);
    const OperatorMatrix& sys = (k == 1) ? p.fe : p.fve;
    const CrFunction& load = (k == 1) ? p.bfe : p.bfve;
    Eigen::VectorXd b =
        Eigen::Map<const Eigen::VectorXd>(load.values.data(), load.values.size());
    Eigen::VectorXd g = op.build_g(b);
    InnerProduct ip = InnerProduct::energy(p.fe.A);
    GmresOptions opts;
    opts.rtol = 1e-10;
    opts.maxit = 300;
    TrueResidualMonitor mon{[&](const Eigen::VectorXd& x) { return sys.A * x; }, b};
    GmresResult res = gmres([&](const Eigen::VectorXd& x) { return op.apply(x); },
                            g, ip, opts, &mon);
    EXPECT_TRUE(res.report.converged) << "variant " << k;
    Eigen::VectorXd ustar = direct_solve(sys.A, b);
    double rel = (res.u - ustar).norm() / ustar.norm();
    EXPECT_LE(rel, 1e-8) << "variant " << k;
  }
}

TEST(Schwarz, SingleSubdomainIsAnExactSolver) {
  // with one subdomain there is no interface, the coarse space is empty and
  // the single block solve is exact: the Krylov iteration finishes at once
  Problem p = make_problem(8, 1, 10);
  SchwarzOperator op(p.mesh, p.part, p.fe, p.fve, 1);
  Eigen::VectorXd b =
      Eigen::Map<const Eigen::VectorXd>(p.bfe.values.data(), p.bfe.values.size());
  Eigen::VectorXd g = op.build_g(b);
  InnerProduct ip = InnerProduct::energy(p.fe.A);
  GmresOptions opts;
  opts.rtol = 1e-10;
  TrueResidualMonitor mon{[&](const Eigen::VectorXd& x) { return p.fe.A * x; }, b};
  GmresResult res = gmres([&](const Eigen::VectorXd& x) { return op.apply(x); },
                          g, ip, opts, &mon);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LE(res.report.iterations, 2);
  Eigen::VectorXd ustar = direct_solve(p.fe.A, b);
  EXPECT_LE((res.u - ustar).norm() / ustar.norm(), 1e-9);
}

TEST(Schwarz, RejectsUnknownVariant) {
  Problem p = make_problem(4, 2, 10);
  EXPECT_THROW(SchwarzOperator(p.mesh, p.part, p.fe, p.fve, 0), std::invalid_argument);
  EXPECT_THROW(SchwarzOperator(p.mesh, p.part, p.fe, p.fve, 4), std::invalid_argument);
}

TEST(Schwarz, RejectsMismatchedMeshes) {
  Problem p = make_problem(4, 2, 10);
  Problem q = make_problem(4, 2, 10);  // distinct mesh identity
  EXPECT_THROW(SchwarzOperator(p.mesh, p.part, q.fe, p.fve, 1), std::invalid_argument);
}

}  // namespace
