#pragma once

#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "crfve/coefficient.hpp"
#include "crfve/dual_mesh.hpp"
#include "crfve/mesh.hpp"
#include "crfve/quadrature.hpp"

namespace crfve {

using SpMat = Eigen::SparseMatrix<double>;

enum class Symmetry { symmetric, general };

/// Assembled operator on the interior-edge dofs. Convention: entry (i, j) is
/// the form evaluated at trial basis function j against test function i, so
/// rows follow the test space and columns the trial space.
struct OperatorMatrix {
  SpMat A;
  Symmetry symmetry = Symmetry::general;
  std::uint64_t mesh_id = 0;

  int dim() const { return static_cast<int>(A.rows()); }
};

/// Coefficient vector of a Crouzeix-Raviart function: one value per interior
/// edge midpoint, indexed by dof id. Boundary midpoints are implicitly zero
/// (homogeneous Dirichlet data).
struct CrFunction {
  Eigen::VectorXd values;
  std::uint64_t mesh_id = 0;
};

/// Constant gradients of the three local Crouzeix-Raviart basis functions on
/// triangle t; entry i belongs to the edge opposite vertex i. With barycentric
/// coordinates l_i, the basis function of edge i is 1 - 2 l_i.
inline std::array<Point2, 3> local_cr_gradients(const TriMesh& m, int t) {
  const Triangle& T = m.triangles[t];
  const double inv2A = 1.0 / (2.0 * m.signed_area(t));
  std::array<Point2, 3> g;
  for (int i = 0; i < 3; ++i) {
    Point2 d = m.points[T.v[(i + 2) % 3]] - m.points[T.v[(i + 1) % 3]];
    // gradient of l_i, then scaled by -2
    g[i] = (-2.0 * inv2A) * Point2{-d.y, d.x};
  }
  return g;
}

namespace detail {

inline double checked_alpha(const CoefficientField& field, Point2 p, int tag) {
  double a = field.eval(p, tag);
  if (!(a > 0.0))
    throw std::runtime_error("non-positive coefficient sample during assembly");
  return a;
}

}  // namespace detail

/// Stiffness matrix of the nonconforming finite element form
///   sum_K int_K alpha grad u . grad v.
/// Symmetric for every coefficient.
inline OperatorMatrix assemble_fe_matrix(const TriMesh& mesh,
                                         const CoefficientField& field,
                                         const TriangleRule& rule = triangle_rule(2)) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.triangles.size());
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const Triangle& T = mesh.triangles[t];
    const auto g = local_cr_gradients(mesh, t);
    const double areaK = mesh.area(t);
    const Point2 p0 = mesh.points[T.v[0]], p1 = mesh.points[T.v[1]],
                 p2 = mesh.points[T.v[2]];
    double coef = 0.0;  // int_K alpha, then scaled by g_i . g_j
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
      coef += rule.nodes[q].w *
              detail::checked_alpha(field, rule.map(p0, p1, p2, static_cast<int>(q)),
                                    T.region_tag);
    coef *= areaK;
    for (int i = 0; i < 3; ++i) {
      int di = mesh.edges[T.e[i]].dof_id;
      if (di < 0) continue;
      for (int j = i; j < 3; ++j) {
        int dj = mesh.edges[T.e[j]].dof_id;
        if (dj < 0) continue;
        double v = coef * dot(g[i], g[j]);
        trips.emplace_back(di, dj, v);
        if (j != i) trips.emplace_back(dj, di, v);
      }
    }
  }
  OperatorMatrix op;
  op.A.resize(mesh.n_interior_edges, mesh.n_interior_edges);
  op.A.setFromTriplets(trips.begin(), trips.end());
  op.symmetry = Symmetry::symmetric;
  op.mesh_id = mesh.id;
  return op;
}

/// Stiffness matrix of the finite volume form: row i holds the fluxes
///   - int_{boundary of b_i} alpha grad(phi_j) . n ds
/// accumulated segment by segment over the control volume of edge i. The
/// coefficient line integrals use the segment rule; gradients and region tags
/// come from the triangle owning each segment. Coincides with the finite
/// element matrix whenever alpha is constant per element.
inline OperatorMatrix assemble_fve_matrix(const TriMesh& mesh, const DualMesh& dual,
                                          const CoefficientField& field,
                                          const SegmentRule& rule = segment_rule(3)) {
  if (dual.primal_id != mesh.id)
    throw std::invalid_argument("dual mesh belongs to a different triangulation");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(12 * dual.volumes.size());
  for (const ControlVolume& cv : dual.volumes) {
    const int row = mesh.edges[cv.edge].dof_id;
    for (const DualSegment& s : cv.segments) {
      const Triangle& T = mesh.triangles[s.owner_tri];
      double alpha_ds = 0.0;
      for (const auto& n : rule.nodes)
        alpha_ds += n.w * detail::checked_alpha(field, s.a + n.t * (s.b - s.a),
                                                T.region_tag);
      alpha_ds *= s.length;
      const auto g = local_cr_gradients(mesh, s.owner_tri);
      for (int j = 0; j < 3; ++j) {
        int dj = mesh.edges[T.e[j]].dof_id;
        if (dj < 0) continue;
        trips.emplace_back(row, dj, -alpha_ds * dot(g[j], s.normal));
      }
    }
  }
  OperatorMatrix op;
  op.A.resize(mesh.n_interior_edges, mesh.n_interior_edges);
  op.A.setFromTriplets(trips.begin(), trips.end());
  op.symmetry = Symmetry::general;
  op.mesh_id = mesh.id;
  return op;
}

/// Finite element load vector: entries sum_K int_K f phi_e.
inline CrFunction assemble_fe_rhs(const TriMesh& mesh,
                                  const std::function<double(Point2)>& f,
                                  const TriangleRule& rule = triangle_rule(2)) {
  CrFunction b;
  b.mesh_id = mesh.id;
  b.values = Eigen::VectorXd::Zero(mesh.n_interior_edges);
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const Triangle& T = mesh.triangles[t];
    const Point2 p0 = mesh.points[T.v[0]], p1 = mesh.points[T.v[1]],
                 p2 = mesh.points[T.v[2]];
    const double areaK = mesh.area(t);
    for (const auto& n : rule.nodes) {
      const double fx = f(n.l0 * p0 + n.l1 * p1 + n.l2 * p2);
      const double lam[3] = {n.l0, n.l1, n.l2};
      for (int i = 0; i < 3; ++i) {
        int di = mesh.edges[T.e[i]].dof_id;
        if (di < 0) continue;
        b.values[di] += areaK * n.w * fx * (1.0 - 2.0 * lam[i]);
      }
    }
  }
  return b;
}

/// Finite volume load vector: entries int_{b_e} f, evaluated by splitting each
/// control volume along its primal edge into two subtriangles.
inline CrFunction assemble_fve_rhs(const TriMesh& mesh, const DualMesh& dual,
                                   const std::function<double(Point2)>& f,
                                   const TriangleRule& rule = triangle_rule(2)) {
  if (dual.primal_id != mesh.id)
    throw std::invalid_argument("dual mesh belongs to a different triangulation");
  CrFunction b;
  b.mesh_id = mesh.id;
  b.values = Eigen::VectorXd::Zero(mesh.n_interior_edges);
  for (const ControlVolume& cv : dual.volumes) {
    const Edge& e = mesh.edges[cv.edge];
    const Point2 pa = mesh.points[e.v0], pb = mesh.points[e.v1];
    double val = 0.0;
    for (int half = 0; half < 2; ++half) {
      const Point2 zc = dual.z[e.tri[half]];
      const double area = 0.5 * std::abs(cross(zc - pa, pb - pa));
      for (const auto& n : rule.nodes)
        val += area * n.w * f(n.l0 * pa + n.l1 * pb + n.l2 * zc);
    }
    b.values[e.dof_id] = val;
  }
  return b;
}

/// Midpoint interpolant: samples u at every interior edge midpoint.
inline CrFunction interpolate_midpoints(const TriMesh& mesh,
                                        const std::function<double(Point2)>& u) {
  CrFunction v;
  v.mesh_id = mesh.id;
  v.values = Eigen::VectorXd::Zero(mesh.n_interior_edges);
  for (const Edge& e : mesh.edges)
    if (e.dof_id >= 0) v.values[e.dof_id] = u(e.midpoint);
  return v;
}

/// Broken H1 distance between a discrete function and an exact one:
///   ( sum_K |grad u_h - grad u|^2_{0,K} + |u_h - u|^2_{0,K} )^{1/2}.
/// Boundary midpoints of u_h evaluate to zero unless a boundary trace is
/// supplied (used when interpolating functions with nonzero Dirichlet data).
inline double broken_h1_error(const TriMesh& mesh, const CrFunction& uh,
                              const std::function<double(Point2)>& u,
                              const std::function<Point2(Point2)>& grad_u,
                              const TriangleRule& rule = triangle_rule(5),
                              const std::function<double(Point2)>& boundary_trace = {}) {
  if (uh.mesh_id != mesh.id)
    throw std::invalid_argument("discrete function belongs to a different mesh");
  double acc = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const Triangle& T = mesh.triangles[t];
    const auto g = local_cr_gradients(mesh, t);
    const double areaK = mesh.area(t);
    const Point2 p0 = mesh.points[T.v[0]], p1 = mesh.points[T.v[1]],
                 p2 = mesh.points[T.v[2]];
    double c[3];
    Point2 grad_h{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      const Edge& e = mesh.edges[T.e[i]];
      c[i] = e.dof_id >= 0 ? uh.values[e.dof_id]
                           : (boundary_trace ? boundary_trace(e.midpoint) : 0.0);
      grad_h = grad_h + c[i] * g[i];
    }
    for (const auto& n : rule.nodes) {
      const Point2 xq = n.l0 * p0 + n.l1 * p1 + n.l2 * p2;
      const double lam[3] = {n.l0, n.l1, n.l2};
      double val_h = 0.0;
      for (int i = 0; i < 3; ++i) val_h += c[i] * (1.0 - 2.0 * lam[i]);
      const Point2 gd = grad_h - grad_u(xq);
      const double vd = val_h - u(xq);
      acc += areaK * n.w * (dot(gd, gd) + vd * vd);
    }
  }
  return std::sqrt(acc);
}

/// Plain-text export: one "i j value" line per stored entry, 0-based indices.
inline void write_matrix_coo(const OperatorMatrix& op, std::ostream& os) {
  os.precision(17);
  for (int k = 0; k < op.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.A, k); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

inline void write_vector(const Eigen::VectorXd& v, std::ostream& os) {
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << "\n";
}

}  // namespace crfve
