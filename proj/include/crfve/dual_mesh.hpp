#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crfve/mesh.hpp"

namespace crfve {

/// Straight piece of a control-volume boundary. Each segment lies strictly
/// inside one primal triangle (the owner), which is where the trial gradient
/// and the coefficient are evaluated during flux assembly.
struct DualSegment {
  Point2 a;
  Point2 b;
  Point2 normal;  // unit, outward w.r.t. the control volume
  double length = 0.0;
  int owner_tri = -1;
};

/// Control volume b_e of an interior edge e: the quadrilateral spanned by the
/// edge endpoints and the interior points of the two incident triangles.
struct ControlVolume {
  int edge = -1;
  double area = 0.0;
  std::vector<DualSegment> segments;  // closed polygonal boundary
};

/// Dual (box) mesh over a triangulation: one control volume per interior edge,
/// plus the subtriangle pieces of boundary edges which complete the tiling of
/// the domain. The interior point of every triangle is its barycenter, so each
/// of the three subtriangles of K has area |K|/3.
struct DualMesh {
  std::uint64_t primal_id = 0;
  std::vector<Point2> z;                       // barycenter per triangle
  std::vector<ControlVolume> volumes;          // indexed by dof id
  std::vector<double> boundary_piece_area;     // per edge id; 0 for interior
};

inline DualMesh build_dual_mesh(const TriMesh& mesh) {
  DualMesh dual;
  dual.primal_id = mesh.id;
  dual.z.resize(mesh.triangles.size());
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    if (mesh.signed_area(t) <= 0.0)
      throw std::runtime_error("dual mesh requires positively oriented, "
                               "non-degenerate triangles (triangle " +
                               std::to_string(t) + ")");
    dual.z[t] = mesh.centroid(t);
  }

  dual.volumes.resize(mesh.n_interior_edges);
  dual.boundary_piece_area.assign(mesh.edges.size(), 0.0);

  for (int eid = 0; eid < static_cast<int>(mesh.edges.size()); ++eid) {
    const Edge& e = mesh.edges[eid];
    const Point2 a = mesh.points[e.v0];
    const Point2 b = mesh.points[e.v1];
    if (e.boundary()) {
      dual.boundary_piece_area[eid] = mesh.area(e.tri[0]) / 3.0;
      continue;
    }
    if (e.dof_id < 0) continue;  // non-manifold input is rejected above/by validate

    ControlVolume& cv = dual.volumes[e.dof_id];
    cv.edge = eid;

    // Quadrilateral a -> z0 -> b -> z1, reordered to counterclockwise so the
    // right-hand perpendicular of each directed side points outward.
    int t0 = e.tri[0], t1 = e.tri[1];
    Point2 q[4] = {a, dual.z[t0], b, dual.z[t1]};
    int owner[4] = {t0, t0, t1, t1};  // owner of side i: q[i] -> q[i+1]
    double twice_area = 0.0;
    for (int i = 0; i < 4; ++i) twice_area += cross(q[i], q[(i + 1) % 4]);
    if (twice_area < 0.0) {
      std::swap(q[1], q[3]);
      owner[0] = owner[1] = t1;
      owner[2] = owner[3] = t0;
      twice_area = -twice_area;
    }
    cv.area = 0.5 * twice_area;
    for (int i = 0; i < 4; ++i) {
      DualSegment s;
      s.a = q[i];
      s.b = q[(i + 1) % 4];
      s.owner_tri = owner[i];
      Point2 d = s.b - s.a;
      s.length = norm(d);
      s.normal = (1.0 / s.length) * Point2{d.y, -d.x};
      cv.segments.push_back(s);
    }
  }
  return dual;
}

}  // namespace crfve
