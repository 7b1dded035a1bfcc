#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace crfve {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Mesh edge. Vertices are stored with v0 < v1; an edge is a boundary edge
/// exactly when it has a single incident triangle, and only interior edges
/// carry a degree of freedom (midpoint value of the nonconforming space).
struct Edge {
  int v0 = -1;
  int v1 = -1;
  Point2 midpoint;
  std::array<int, 2> tri{-1, -1};  // incident triangles, first-listed first
  int n_adjacent = 0;              // may exceed 2 in broken input
  int dof_id = -1;                 // -1 on boundary edges

  bool boundary() const { return n_adjacent == 1; }
};

/// Triangle with counterclockwise vertex order; edge i sits opposite vertex i.
struct Triangle {
  std::array<int, 3> v{-1, -1, -1};
  std::array<int, 3> e{-1, -1, -1};
  int region_tag = 0;
  double h_K = 0.0;  // longest edge
};

enum class Diagonal { lower_left, lower_right };

/// Conforming triangulation of a polygonal domain. Instances are built by the
/// factory functions below and not mutated afterwards; functions that need a
/// variant (e.g. different region tags) return a fresh mesh.
class TriMesh {
 public:
  std::vector<Point2> points;
  std::vector<Triangle> triangles;
  std::vector<Edge> edges;

  int n_interior_edges = 0;
  double h = 0.0;       // max over h_K
  int structured_n = 0; // cells per side when built by build_unit_square_mesh
  std::uint64_t id = 0;

  static TriMesh from_raw(std::vector<Point2> pts,
                          const std::vector<std::array<int, 3>>& tris,
                          const std::vector<int>& tags = {});

  /// Copy of this mesh with triangle region tags recomputed from centroids.
  TriMesh with_tags(const std::function<int(Point2)>& tagger) const;

  double signed_area(int t) const {
    const Triangle& T = triangles[t];
    return 0.5 * cross(points[T.v[1]] - points[T.v[0]],
                       points[T.v[2]] - points[T.v[0]]);
  }
  double area(int t) const { return std::abs(signed_area(t)); }
  Point2 centroid(int t) const {
    const Triangle& T = triangles[t];
    return (1.0 / 3.0) * (points[T.v[0]] + points[T.v[1]] + points[T.v[2]]);
  }

  /// Interior-edge dofs in increasing dof order (dof -> edge index).
  std::vector<int> dof_to_edge() const {
    std::vector<int> m(n_interior_edges, -1);
    for (int e = 0; e < static_cast<int>(edges.size()); ++e)
      if (edges[e].dof_id >= 0) m[edges[e].dof_id] = e;
    return m;
  }

 private:
  static std::uint64_t next_id() {
    static std::uint64_t counter = 0;
    return ++counter;
  }
  friend TriMesh finalize_mesh(std::vector<Point2>, std::vector<Triangle>, int);
};

/// Shared builder: derives edges, adjacency, dof numbering and mesh size from
/// vertex/triangle data. Edge ids (and hence dof ids) are lexicographic in the
/// (min vertex, max vertex) pair, which pins the matrix ordering.
inline TriMesh finalize_mesh(std::vector<Point2> pts, std::vector<Triangle> tris,
                             int structured_n) {
  TriMesh m;
  m.points = std::move(pts);
  m.triangles = std::move(tris);
  m.structured_n = structured_n;
  m.id = TriMesh::next_id();

  std::map<std::pair<int, int>, int> edge_of;
  for (const Triangle& T : m.triangles)
    for (int i = 0; i < 3; ++i) {
      int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
      edge_of.emplace(std::minmax(a, b), -1);
    }
  int next = 0;
  for (auto& kv : edge_of) kv.second = next++;  // std::map iterates sorted

  m.edges.resize(edge_of.size());
  for (auto& [key, eid] : edge_of) {
    Edge& e = m.edges[eid];
    e.v0 = key.first;
    e.v1 = key.second;
    e.midpoint = 0.5 * (m.points[e.v0] + m.points[e.v1]);
  }
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    Triangle& T = m.triangles[t];
    double hk = 0.0;
    for (int i = 0; i < 3; ++i) {
      int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
      int eid = edge_of.at(std::minmax(a, b));
      T.e[i] = eid;
      Edge& e = m.edges[eid];
      if (e.n_adjacent < 2) e.tri[e.n_adjacent] = t;
      ++e.n_adjacent;
      hk = std::max(hk, norm(m.points[a] - m.points[b]));
    }
    T.h_K = hk;
    m.h = std::max(m.h, hk);
  }
  int dof = 0;
  for (Edge& e : m.edges) e.dof_id = (e.n_adjacent >= 2) ? dof++ : -1;
  m.n_interior_edges = dof;
  return m;
}

inline TriMesh TriMesh::from_raw(std::vector<Point2> pts,
                                 const std::vector<std::array<int, 3>>& tris,
                                 const std::vector<int>& tags) {
  if (!tags.empty() && tags.size() != tris.size())
    throw std::invalid_argument("region tag list does not match triangle count");
  std::vector<Triangle> ts(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (int i = 0; i < 3; ++i) {
      int v = tris[t][i];
      if (v < 0 || v >= static_cast<int>(pts.size()))
        throw std::invalid_argument("triangle vertex id out of range");
      ts[t].v[i] = v;
    }
    ts[t].region_tag = tags.empty() ? 0 : tags[t];
  }
  return finalize_mesh(std::move(pts), std::move(ts), 0);
}

inline TriMesh TriMesh::with_tags(const std::function<int(Point2)>& tagger) const {
  std::vector<std::array<int, 3>> tris(triangles.size());
  std::vector<int> tags(triangles.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    tris[t] = triangles[t].v;
    tags[t] = tagger(centroid(static_cast<int>(t)));
  }
  TriMesh m = from_raw(points, tris, tags);
  m.structured_n = structured_n;
  return m;
}

/// Uniform triangulation of the unit square: n x n cells, each split along the
/// chosen diagonal. Vertices are grid points (i/n, j/n); h = sqrt(2)/n.
inline TriMesh build_unit_square_mesh(int n, Diagonal diag = Diagonal::lower_left,
                                      const std::function<int(Point2)>& tagger = {}) {
  if (n < 1) throw std::invalid_argument("mesh subdivision n must be >= 1");
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      pts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});

  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Triangle> tris;
  tris.reserve(2u * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j);
      int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      Triangle a, b;
      if (diag == Diagonal::lower_left) {  // diagonal v00 -- v11
        a.v = {v00, v10, v11};
        b.v = {v00, v11, v01};
      } else {  // diagonal v10 -- v01
        a.v = {v00, v10, v01};
        b.v = {v10, v11, v01};
      }
      tris.push_back(a);
      tris.push_back(b);
    }
  TriMesh m = finalize_mesh(std::move(pts), std::move(tris), n);
  if (tagger) {
    for (std::size_t t = 0; t < m.triangles.size(); ++t)
      m.triangles[t].region_tag = tagger(m.centroid(static_cast<int>(t)));
  }
  return m;
}

struct MeshDiagnostics {
  std::vector<int> flipped_triangles;     // non-positive signed area
  std::vector<int> nonconforming_edges;   // more than two incident triangles
  int n_triangles = 0;
  int n_edges = 0;
  int n_interior_edges = 0;
  int n_boundary_edges = 0;
  double h_min = 0.0;
  double h_max = 0.0;
  double shape_regularity = 0.0;  // max over K of h_K / (2 inradius)

  bool ok() const { return flipped_triangles.empty() && nonconforming_edges.empty(); }
};

/// Structural checks on a mesh: orientation, conformity, size statistics.
/// Reports rather than throws so that broken input can be examined.
inline MeshDiagnostics validate_mesh(const TriMesh& m) {
  MeshDiagnostics d;
  d.n_triangles = static_cast<int>(m.triangles.size());
  d.n_edges = static_cast<int>(m.edges.size());
  d.n_interior_edges = m.n_interior_edges;
  d.h_min = m.triangles.empty() ? 0.0 : m.triangles[0].h_K;
  for (int t = 0; t < d.n_triangles; ++t) {
    const Triangle& T = m.triangles[t];
    double sa = m.signed_area(t);
    if (sa <= 0.0) d.flipped_triangles.push_back(t);
    double per = 0.0;
    for (int i = 0; i < 3; ++i)
      per += norm(m.points[T.v[(i + 1) % 3]] - m.points[T.v[(i + 2) % 3]]);
    if (per > 0.0 && std::abs(sa) > 0.0) {
      double inradius = 2.0 * std::abs(sa) / per;
      d.shape_regularity = std::max(d.shape_regularity, T.h_K / (2.0 * inradius));
    }
    d.h_min = std::min(d.h_min, T.h_K);
    d.h_max = std::max(d.h_max, T.h_K);
  }
  for (int e = 0; e < d.n_edges; ++e) {
    if (m.edges[e].n_adjacent > 2) d.nonconforming_edges.push_back(e);
    if (m.edges[e].boundary()) ++d.n_boundary_edges;
  }
  return d;
}

/// Plain-text mesh format:
///   vertices <n> triangles <m>
///   x y                 (n lines)
///   v0 v1 v2 region_tag (m lines)
inline void write_mesh(const TriMesh& m, std::ostream& os) {
  os << "vertices " << m.points.size() << " triangles " << m.triangles.size() << "\n";
  os.precision(17);
  for (const Point2& p : m.points) os << p.x << " " << p.y << "\n";
  for (const Triangle& T : m.triangles)
    os << T.v[0] << " " << T.v[1] << " " << T.v[2] << " " << T.region_tag << "\n";
}

inline TriMesh read_mesh(std::istream& is) {
  std::string kw1, kw2;
  std::size_t nv = 0, nt = 0;
  if (!(is >> kw1 >> nv >> kw2 >> nt) || kw1 != "vertices" || kw2 != "triangles")
    throw std::runtime_error("mesh header must read 'vertices <n> triangles <m>'");
  std::vector<Point2> pts(nv);
  for (auto& p : pts)
    if (!(is >> p.x >> p.y)) throw std::runtime_error("truncated vertex list");
  std::vector<std::array<int, 3>> tris(nt);
  std::vector<int> tags(nt);
  for (std::size_t t = 0; t < nt; ++t)
    if (!(is >> tris[t][0] >> tris[t][1] >> tris[t][2] >> tags[t]))
      throw std::runtime_error("truncated triangle list");
  return TriMesh::from_raw(std::move(pts), tris, tags);
}

}  // namespace crfve
