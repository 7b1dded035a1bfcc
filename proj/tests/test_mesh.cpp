#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "crfve/dual_mesh.hpp"
#include "crfve/mesh.hpp"

namespace {

using namespace crfve;

TEST(Mesh, UnitSquareCountsN1) {
  TriMesh m = build_unit_square_mesh(1);
  EXPECT_EQ(m.points.size(), 4u);
  EXPECT_EQ(m.triangles.size(), 2u);
  EXPECT_EQ(m.edges.size(), 5u);
  EXPECT_EQ(m.n_interior_edges, 1);
  EXPECT_NEAR(m.h, std::sqrt(2.0), 1e-15);
  // the single dof sits at the center of the square
  for (const Edge& e : m.edges)
    if (e.dof_id == 0) {
      EXPECT_NEAR(e.midpoint.x, 0.5, 1e-15);
      EXPECT_NEAR(e.midpoint.y, 0.5, 1e-15);
    }
}

TEST(Mesh, UnitSquareCountsN2) {
  TriMesh m = build_unit_square_mesh(2);
  EXPECT_EQ(m.points.size(), 9u);
  EXPECT_EQ(m.triangles.size(), 8u);
  EXPECT_EQ(m.edges.size(), 16u);
  EXPECT_EQ(m.n_interior_edges, 8);
  EXPECT_NEAR(m.h, std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(Mesh, EdgeCountFormula) {
  for (int n : {3, 4, 5, 8}) {
    TriMesh m = build_unit_square_mesh(n);
    EXPECT_EQ(static_cast<int>(m.edges.size()), 3 * n * n + 2 * n);
    EXPECT_EQ(m.n_interior_edges, 3 * n * n - 2 * n);
    EXPECT_EQ(static_cast<int>(m.triangles.size()), 2 * n * n);
  }
}

TEST(Mesh, PositiveOrientationBothDiagonals) {
  for (Diagonal d : {Diagonal::lower_left, Diagonal::lower_right}) {
    TriMesh m = build_unit_square_mesh(3, d);
    for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t)
      EXPECT_GT(m.signed_area(t), 0.0);
    EXPECT_TRUE(validate_mesh(m).ok());
  }
}

TEST(Mesh, EdgeOppositeVertex) {
  TriMesh m = build_unit_square_mesh(3);
  for (const Triangle& T : m.triangles)
    for (int i = 0; i < 3; ++i) {
      const Edge& e = m.edges[T.e[i]];
      EXPECT_NE(e.v0, T.v[i]);
      EXPECT_NE(e.v1, T.v[i]);
    }
}

TEST(Mesh, DofNumberingLexicographic) {
  TriMesh m = build_unit_square_mesh(4);
  int prev_dof = -1;
  std::pair<int, int> prev_key{-1, -1};
  for (const Edge& e : m.edges) {
    std::pair<int, int> key{e.v0, e.v1};
    EXPECT_LT(prev_key, key);  // edge ids sorted by (min vertex, max vertex)
    prev_key = key;
    if (e.dof_id >= 0) {
      EXPECT_EQ(e.dof_id, prev_dof + 1);  // dofs contiguous in the same order
      prev_dof = e.dof_id;
    }
  }
  EXPECT_EQ(prev_dof, m.n_interior_edges - 1);
}

TEST(Mesh, BoundaryEdgesHaveOneTriangle) {
  TriMesh m = build_unit_square_mesh(4);
  int boundary = 0;
  for (const Edge& e : m.edges) {
    if (e.boundary()) {
      ++boundary;
      EXPECT_EQ(e.dof_id, -1);
    } else {
      EXPECT_EQ(e.n_adjacent, 2);
      EXPECT_GE(e.dof_id, 0);
    }
  }
  EXPECT_EQ(boundary, 4 * 4);
}

TEST(Mesh, FlippedTriangleReported) {
  TriMesh base = build_unit_square_mesh(2);
  std::vector<std::array<int, 3>> tris;
  for (const Triangle& T : base.triangles) tris.push_back(T.v);
  std::swap(tris[3][0], tris[3][1]);
  TriMesh broken = TriMesh::from_raw(base.points, tris);
  MeshDiagnostics d = validate_mesh(broken);
  ASSERT_EQ(d.flipped_triangles.size(), 1u);
  EXPECT_EQ(d.flipped_triangles[0], 3);
  EXPECT_FALSE(d.ok());
}

TEST(Mesh, DuplicatedEdgeReported) {
  // edge (0,2) is claimed by three triangles
  std::vector<Point2> pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {0, 2, 3}, {0, 3, 2}};
  TriMesh broken = TriMesh::from_raw(pts, tris);
  MeshDiagnostics d = validate_mesh(broken);
  EXPECT_FALSE(d.nonconforming_edges.empty());
  EXPECT_FALSE(d.ok());
}

TEST(Mesh, ShapeRegularityOfStructuredMesh) {
  MeshDiagnostics d = validate_mesh(build_unit_square_mesh(4));
  // right isosceles triangles: h / (2 rho) = 1 + 1/sqrt(2)... fixed value
  EXPECT_NEAR(d.shape_regularity, std::sqrt(2.0) + 1.0, 1e-12);
  EXPECT_NEAR(d.h_min, d.h_max, 1e-15);
}

TEST(Mesh, TextRoundTrip) {
  TriMesh m = build_unit_square_mesh(3, Diagonal::lower_left, [](Point2 c) {
    return c.x > 0.5 ? 7 : 0;
  });
  std::stringstream ss;
  write_mesh(m, ss);
  TriMesh r = read_mesh(ss);
  ASSERT_EQ(r.points.size(), m.points.size());
  ASSERT_EQ(r.triangles.size(), m.triangles.size());
  EXPECT_EQ(r.edges.size(), m.edges.size());
  EXPECT_EQ(r.n_interior_edges, m.n_interior_edges);
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    EXPECT_EQ(r.points[i].x, m.points[i].x);  // 17 digits: bit-exact
    EXPECT_EQ(r.points[i].y, m.points[i].y);
  }
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    EXPECT_EQ(r.triangles[t].v, m.triangles[t].v);
    EXPECT_EQ(r.triangles[t].region_tag, m.triangles[t].region_tag);
  }
}

TEST(Mesh, MalformedHeaderRejected) {
  std::stringstream ss("points 3 cells 1\n");
  EXPECT_THROW(read_mesh(ss), std::runtime_error);
}

TEST(DualMesh, SingleCellControlVolume) {
  TriMesh m = build_unit_square_mesh(1);
  DualMesh d = build_dual_mesh(m);
  ASSERT_EQ(d.volumes.size(), 1u);
  const ControlVolume& cv = d.volumes[0];
  EXPECT_NEAR(cv.area, 1.0 / 3.0, 1e-14);
  ASSERT_EQ(cv.segments.size(), 4u);
  for (const DualSegment& s : cv.segments) EXPECT_NEAR(norm(s.normal), 1.0, 1e-14);
}

TEST(DualMesh, VolumesMatchTriangleThirds) {
  TriMesh m = build_unit_square_mesh(3);
  DualMesh d = build_dual_mesh(m);
  for (const ControlVolume& cv : d.volumes) {
    const Edge& e = m.edges[cv.edge];
    double expect = (m.area(e.tri[0]) + m.area(e.tri[1])) / 3.0;
    EXPECT_NEAR(cv.area, expect, 1e-14);
  }
}

TEST(DualMesh, TilesTheDomain) {
  for (int n : {1, 2, 4, 7}) {
    TriMesh m = build_unit_square_mesh(n);
    DualMesh d = build_dual_mesh(m);
    double total = 0.0;
    for (const ControlVolume& cv : d.volumes) total += cv.area;
    for (double a : d.boundary_piece_area) total += a;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(DualMesh, ClosedBoundariesWithOutwardNormals) {
  TriMesh m = build_unit_square_mesh(3);
  DualMesh d = build_dual_mesh(m);
  for (const ControlVolume& cv : d.volumes) {
    Point2 flux{0, 0};
    double green_area = 0.0;
    for (std::size_t i = 0; i < cv.segments.size(); ++i) {
      const DualSegment& s = cv.segments[i];
      const DualSegment& nx = cv.segments[(i + 1) % cv.segments.size()];
      EXPECT_NEAR(s.b.x, nx.a.x, 1e-14);  // closed loop
      EXPECT_NEAR(s.b.y, nx.a.y, 1e-14);
      flux = flux + s.length * s.normal;  // divergence theorem on constants
      Point2 mid = 0.5 * (s.a + s.b);
      green_area += 0.5 * s.length * dot(mid, s.normal);  // div(x)/2 = 1
    }
    EXPECT_NEAR(flux.x, 0.0, 1e-13);
    EXPECT_NEAR(flux.y, 0.0, 1e-13);
    EXPECT_NEAR(green_area, cv.area, 1e-13);  // positive: normals point outward
  }
}

TEST(DualMesh, SharedSegmentsHaveOppositeNormals) {
  TriMesh m = build_unit_square_mesh(2);
  DualMesh d = build_dual_mesh(m);
  // key a segment by its owner and sorted endpoints
  auto key = [](const DualSegment& s) {
    std::pair<double, double> p{s.a.x, s.a.y}, q{s.b.x, s.b.y};
    if (q < p) std::swap(p, q);
    return std::make_tuple(s.owner_tri, p, q);
  };
  std::map<decltype(key(DualSegment{})), Point2> seen;
  int shared = 0;
  for (const ControlVolume& cv : d.volumes)
    for (const DualSegment& s : cv.segments) {
      auto k = key(s);
      auto it = seen.find(k);
      if (it == seen.end()) {
        seen.emplace(k, s.normal);
      } else {
        ++shared;
        EXPECT_NEAR(it->second.x + s.normal.x, 0.0, 1e-14);
        EXPECT_NEAR(it->second.y + s.normal.y, 0.0, 1e-14);
      }
    }
  EXPECT_GT(shared, 0);
}

TEST(DualMesh, DegenerateTriangleRejected) {
  std::vector<Point2> pts = {{0, 0}, {1, 0}, {2, 0}, {0, 1}};
  std::vector<std::array<int, 3>> tris = {{0, 1, 3}, {0, 1, 2}};  // second is flat
  TriMesh m = TriMesh::from_raw(pts, tris);
  EXPECT_THROW(build_dual_mesh(m), std::runtime_error);
}

}  // namespace
