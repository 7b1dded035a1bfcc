#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "crfve/assembly.hpp"
#include "crfve/coefficient.hpp"
#include "crfve/dual_mesh.hpp"
#include "crfve/gmres.hpp"
#include "crfve/mesh.hpp"
#include "crfve/partition.hpp"
#include "crfve/schwarz.hpp"
#include "crfve/spectral.hpp"

namespace {

using namespace crfve;

struct Fixture {
  TriMesh mesh;
  DualMesh dual;
  Partition part;
  OperatorMatrix fe;
  OperatorMatrix fve;
  Eigen::VectorXd load;
};

Fixture make_fixture(int n, int blocks, int freq) {
  CoefficientSpec spec;
  spec.base = CoefficientSpec::Base::sinusoidal;
  spec.frequency = freq;
  Fixture s{build_unit_square_mesh(n), {}, {}, {}, {}, {}};
  s.dual = build_dual_mesh(s.mesh);
  s.part = build_block_partition(s.mesh, blocks);
  CoefficientField field = make_field(spec);
  s.fe = assemble_fe_matrix(s.mesh, field);
  s.fve = assemble_fve_matrix(s.mesh, s.dual, field);
  CrFunction b = assemble_fve_rhs(s.mesh, s.dual, [](Point2) { return 1.0; });
  s.load = Eigen::Map<const Eigen::VectorXd>(b.values.data(), b.values.size());
  return s;
}

double cp_for(int n, int blocks, int freq, int variant) {
  Fixture s = make_fixture(n, blocks, freq);
  SchwarzOperator op(s.mesh, s.part, s.fe, s.fve, variant);
  InnerProduct ip = InnerProduct::energy(s.fe.A);
  SpectralEstimate est = estimate_cp(
      [&](const Eigen::VectorXd& x) { return op.apply(x); },
      [&](const Eigen::VectorXd& x) { return op.apply_transpose(x); },
      op.dim(), ip);
  EXPECT_TRUE(est.converged);
  return est.value;
}

TEST(Gmres, IdentityConvergesImmediately) {
  Eigen::VectorXd b(5);
  b << 1, -2, 3, 0.5, 4;
  GmresResult res = gmres([](const Eigen::VectorXd& x) { return x; }, b,
                          InnerProduct::l2());
  EXPECT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 1);
  EXPECT_LE((res.u - b).norm(), 1e-12 * b.norm());
}

TEST(Gmres, MatchesDenseFactorization) {
  std::mt19937 rng(41u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  int n = 12;
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = dist(rng);
  Eigen::MatrixXd A = B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b[i] = dist(rng);
  GmresOptions opts;
  opts.rtol = 1e-12;
  GmresResult res = gmres([&](const Eigen::VectorXd& x) { return A * x; }, b,
                          InnerProduct::l2(), opts);
  EXPECT_TRUE(res.report.converged);
  Eigen::VectorXd exact = A.llt().solve(b);
  EXPECT_LE((res.u - exact).norm() / exact.norm(), 1e-10);
}

TEST(Gmres, BasisStaysOrthonormalInTheEnergyProduct) {
  Fixture s = make_fixture(8, 2, 10);
  SchwarzOperator op(s.mesh, s.part, s.fe, s.fve, 2);
  InnerProduct ip = InnerProduct::energy(s.fe.A);
  GmresOptions opts;
  opts.rtol = 1e-10;
  opts.maxit = 120;
  opts.record_basis = true;
  GmresResult res = gmres([&](const Eigen::VectorXd& x) { return op.apply(x); },
                          op.build_g(s.load), ip, opts);
  ASSERT_GE(res.report.basis.cols(), 2);
  for (int i = 0; i < res.report.basis.cols(); ++i)
    for (int j = 0; j <= i; ++j) {
      double d = ip.dot(res.report.basis.col(i), res.report.basis.col(j));
      EXPECT_NEAR(d, i == j ? 1.0 : 0.0, 1e-10);
    }
}

TEST(Gmres, MinimizedResidualHistoryIsMonotone) {
  Fixture s = make_fixture(8, 2, 10);
  SchwarzOperator op(s.mesh, s.part, s.fe, s.fve, 2);
  InnerProduct ip = InnerProduct::energy(s.fe.A);
  GmresOptions opts;
  opts.rtol = 1e-9;
  opts.maxit = 150;
  GmresResult res = gmres([&](const Eigen::VectorXd& x) { return op.apply(x); },
                          op.build_g(s.load), ip, opts);
  EXPECT_TRUE(res.report.converged);
  const auto& h = res.report.ip_residual_history;
  for (std::size_t m = 1; m < h.size(); ++m) EXPECT_LE(h[m], h[m - 1] * (1.0 + 1e-12));
}

TEST(Gmres, ShortRunReportsNoConvergence) {
  Fixture s = make_fixture(8, 2, 10);
  SchwarzOperator op(s.mesh, s.part, s.fe, s.fve, 2);
  GmresOptions opts;
  opts.rtol = 1e-12;
  opts.maxit = 3;
  GmresResult res = gmres([&](const Eigen::VectorXd& x) { return op.apply(x); },
                          op.build_g(s.load), InnerProduct::energy(s.fe.A), opts);
  EXPECT_FALSE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 3);
  EXPECT_EQ(res.report.ip_residual_history.size(), 4u);
}

TEST(Gmres, InnerProductChoiceDoesNotChangeTheSolution) {
  Fixture s = make_fixture(8, 2, 10);
  SchwarzOperator op(s.mesh, s.part, s.fe, s.fve, 2);
  GmresOptions opts;
  opts.rtol = 1e-11;
  opts.maxit = 200;
  Eigen::VectorXd g = op.build_g(s.load);
  auto T = [&](const Eigen::VectorXd& x) { return op.apply(x); };
  GmresResult a = gmres(T, g, InnerProduct::energy(s.fe.A), opts);
  GmresResult b = gmres(T, g, InnerProduct::l2(), opts);
  EXPECT_TRUE(a.report.converged);
  EXPECT_TRUE(b.report.converged);
  EXPECT_LE((a.u - b.u).norm() / a.u.norm(), 1e-8);
}

TEST(Spectral, EstimatesAgreeWithDenseBoundsOnSmallProblem) {
  Fixture s = make_fixture(8, 2, 10);
  for (int k : {1, 2, 3}) {
    SchwarzOperator op(s.mesh, s.part, s.fe, s.fve, k);
    auto T = [&](const Eigen::VectorXd& x) { return op.apply(x); };
    auto Tt = [&](const Eigen::VectorXd& x) { return op.apply_transpose(x); };
    InnerProduct ip = InnerProduct::energy(s.fe.A);
    SpectralEstimate cp = estimate_cp(T, Tt, op.dim(), ip, 1e-8);
    SpectralEstimate Cp = estimate_Cp(T, Tt, op.dim(), ip, 1e-8);
    EXPECT_TRUE(cp.converged);
    EXPECT_TRUE(Cp.converged);
    Eigen::MatrixXd Td = dense_operator(T, op.dim());
    Eigen::MatrixXd M = Eigen::MatrixXd(s.fe.A);
    double cp_exact = dense_cp(Td, M);
    double Cp_exact = dense_Cp(Td, M);
    EXPECT_NEAR(cp.value, cp_exact, 0.02 * cp_exact) << "variant " << k;
    EXPECT_NEAR(Cp.value, Cp_exact, 0.02 * Cp_exact) << "variant " << k;
    EXPECT_GT(cp_exact, 0.0);
    EXPECT_GE(Cp_exact, cp_exact);
  }
}

TEST(Spectral, ConvergenceEnvelopeHolds) {
  Fixture s = make_fixture(8, 2, 10);
  SchwarzOperator op(s.mesh, s.part, s.fe, s.fve, 2);
  auto T = [&](const Eigen::VectorXd& x) { return op.apply(x); };
  InnerProduct ip = InnerProduct::energy(s.fe.A);
  GmresOptions opts;
  opts.rtol = 1e-8;
  opts.maxit = 200;
  GmresResult res = gmres(T, op.build_g(s.load), ip, opts);
  ASSERT_TRUE(res.report.converged);
  Eigen::MatrixXd Td = dense_operator(T, op.dim());
  Eigen::MatrixXd M = Eigen::MatrixXd(s.fe.A);
  double c = dense_cp(Td, M), C = dense_Cp(Td, M);
  double q = 1.0 - (c * c) / (C * C);
  const auto& h = res.report.ip_residual_history;
  for (std::size_t m = 0; m < h.size(); ++m) {
    double bound = std::pow(q, 0.5 * static_cast<double>(m));
    EXPECT_LE(h[m], bound * (1.0 + 1e-8)) << "step " << m;
  }
}

TEST(Spectral, FieldSplitLowerBoundMatchesReference) {
  // h = 1/8, H = 1/4, alpha = 2 + sin(10 pi x) sin(10 pi y): about 1.89e-1
  double cp = cp_for(8, 4, 10, 2);
  EXPECT_GT(cp, 1.89e-1 * 0.75);
  EXPECT_LT(cp, 1.89e-1 * 1.25);
}

TEST(Spectral, LowerBoundScalesLinearlyInMeshRatio) {
  double cp8 = cp_for(8, 4, 10, 2);
  double cp16 = cp_for(16, 4, 10, 2);
  double cp32 = cp_for(32, 4, 10, 2);
  double r1 = cp16 / cp8, r2 = cp32 / cp16;
  EXPECT_GT(r1, 0.4);
  EXPECT_LT(r1, 0.6);
  EXPECT_GT(r2, 0.4);
  EXPECT_LT(r2, 0.6);
}

TEST(Spectral, UpperBoundInsensitiveToCoefficientContrast) {
  CoefficientSpec lo;
  lo.inclusions.push_back(Rect{3.0 / 8.0, 3.0 / 8.0, 5.0 / 8.0, 5.0 / 8.0});
  CoefficientSpec hi = lo;
  hi.alpha1 = 1e3;
  double vals[2];
  int idx = 0;
  for (const CoefficientSpec* spec : {&lo, &hi}) {
    TriMesh mesh = build_unit_square_mesh(8, Diagonal::lower_left, make_tagger(*spec));
    DualMesh dual = build_dual_mesh(mesh);
    Partition part = build_block_partition(mesh, 2);
    CoefficientField field = make_field(*spec);
    OperatorMatrix fe = assemble_fe_matrix(mesh, field);
    OperatorMatrix fve = assemble_fve_matrix(mesh, dual, field);
    SchwarzOperator op(mesh, part, fe, fve, 2);
    InnerProduct ip = InnerProduct::energy(fe.A);
    SpectralEstimate est = estimate_Cp(
        [&](const Eigen::VectorXd& x) { return op.apply(x); },
        [&](const Eigen::VectorXd& x) { return op.apply_transpose(x); },
        op.dim(), ip);
    EXPECT_TRUE(est.converged);
    vals[idx++] = est.value;
  }
  EXPECT_LE(vals[1] / vals[0], 1.3);
  EXPECT_GE(vals[1] / vals[0], 0.7);
}

TEST(Spectral, DenseSpectrumIsSortedAndConjugateClosed) {
  std::mt19937 rng(17u);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  int n = 20;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = dist(rng);
  auto spec = dense_spectrum(A);
  ASSERT_EQ(static_cast<int>(spec.size()), n);
  for (std::size_t i = 1; i < spec.size(); ++i)
    EXPECT_LE(spec[i - 1].real(), spec[i].real() + 1e-12);
  double im_sum = 0.0;
  for (auto z : spec) im_sum += z.imag();
  EXPECT_NEAR(im_sum, 0.0, 1e-8);
}

}  // namespace
