#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "crfve/assembly.hpp"
#include "crfve/coefficient.hpp"
#include "crfve/mesh.hpp"
#include "crfve/quadrature.hpp"

namespace crfve {

struct Subdomain {
  std::vector<int> triangles;
  std::vector<int> interior_dofs;   // midpoints strictly inside the subdomain
  std::vector<int> boundary_dofs;   // midpoints on the subdomain interface;
                                    // domain-boundary midpoints carry no dof
  std::vector<int> layer_triangles; // triangles touching the subdomain
                                    // boundary by an edge or a vertex
  double H = 0.0;                   // subdomain diameter
  double h = 0.0;                   // max element size inside
};

/// Non-overlapping decomposition of the mesh into subdomains, with the dof
/// splitting used by the average Schwarz method: every interior edge dof is
/// either interior to exactly one subdomain or lies on an interface shared by
/// two of them.
struct Partition {
  std::uint64_t mesh_id = 0;
  int blocks_per_side = 0;  // M for block partitions, 0 otherwise
  std::vector<int> subdomain_of;  // per triangle
  std::vector<Subdomain> subdomains;
  std::vector<int> interface_dofs;  // ascending global dof ids
  std::vector<char> dof_on_interface;  // per dof

  int n_subdomains() const { return static_cast<int>(subdomains.size()); }
};

/// Generic constructor from a triangle -> subdomain map. Subdomain interiors,
/// interfaces and boundary layers are derived from mesh adjacency alone.
inline Partition build_partition(const TriMesh& mesh, std::vector<int> subdomain_of,
                                 int n_subdomains) {
  if (static_cast<int>(subdomain_of.size()) != static_cast<int>(mesh.triangles.size()))
    throw std::invalid_argument("subdomain map does not match triangle count");
  for (int s : subdomain_of)
    if (s < 0 || s >= n_subdomains)
      throw std::invalid_argument("subdomain id out of range");

  Partition part;
  part.mesh_id = mesh.id;
  part.subdomain_of = std::move(subdomain_of);
  part.subdomains.resize(n_subdomains);
  part.dof_on_interface.assign(mesh.n_interior_edges, 0);

  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
    part.subdomains[part.subdomain_of[t]].triangles.push_back(t);

  for (const Edge& e : mesh.edges) {
    if (e.dof_id < 0) continue;
    int s0 = part.subdomain_of[e.tri[0]], s1 = part.subdomain_of[e.tri[1]];
    if (s0 == s1) {
      part.subdomains[s0].interior_dofs.push_back(e.dof_id);
    } else {
      part.dof_on_interface[e.dof_id] = 1;
      part.interface_dofs.push_back(e.dof_id);
      part.subdomains[s0].boundary_dofs.push_back(e.dof_id);
      part.subdomains[s1].boundary_dofs.push_back(e.dof_id);
    }
  }

  // A vertex touches the boundary of subdomain i when it also belongs to a
  // triangle of another subdomain or lies on the domain boundary.
  const int nv = static_cast<int>(mesh.points.size());
  std::vector<std::vector<int>> vertex_subs(nv);
  std::vector<char> vertex_on_domain_boundary(nv, 0);
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
    for (int v : mesh.triangles[t].v) {
      auto& vs = vertex_subs[v];
      int s = part.subdomain_of[t];
      if (std::find(vs.begin(), vs.end(), s) == vs.end()) vs.push_back(s);
    }
  for (const Edge& e : mesh.edges)
    if (e.boundary()) {
      vertex_on_domain_boundary[e.v0] = 1;
      vertex_on_domain_boundary[e.v1] = 1;
    }

  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    int s = part.subdomain_of[t];
    bool touches = false;
    for (int v : mesh.triangles[t].v)
      if (vertex_on_domain_boundary[v] || vertex_subs[v].size() > 1) {
        touches = true;
        break;
      }
    if (touches) part.subdomains[s].layer_triangles.push_back(t);
  }

  for (Subdomain& sd : part.subdomains) {
    if (sd.triangles.empty())
      throw std::invalid_argument("empty subdomain in partition");
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (int t : sd.triangles) {
      sd.h = std::max(sd.h, mesh.triangles[t].h_K);
      for (int v : mesh.triangles[t].v) {
        const Point2& p = mesh.points[v];
        xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
      }
    }
    sd.H = std::hypot(xmax - xmin, ymax - ymin);
    std::sort(sd.interior_dofs.begin(), sd.interior_dofs.end());
    std::sort(sd.boundary_dofs.begin(), sd.boundary_dofs.end());
    if (n_subdomains >= 2 && sd.boundary_dofs.empty())
      throw std::invalid_argument("subdomain without interface dofs");
  }
  std::sort(part.interface_dofs.begin(), part.interface_dofs.end());
  return part;
}

/// M x M block partition of a structured unit-square mesh; requires M | n.
/// Subdomain ids run row-major over the blocks.
inline Partition build_block_partition(const TriMesh& mesh, int M) {
  if (mesh.structured_n <= 0)
    throw std::invalid_argument("block partition needs a structured mesh");
  const int n = mesh.structured_n;
  if (M < 1 || n % M != 0)
    throw std::invalid_argument("blocks per side must divide the mesh subdivision");
  const int cells = n / M;
  std::vector<int> sub(mesh.triangles.size());
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    int cell = t / 2;
    int cx = cell % n, cy = cell / n;
    sub[t] = (cy / cells) * M + (cx / cells);
  }
  Partition p = build_partition(mesh, std::move(sub), M * M);
  p.blocks_per_side = M;
  return p;
}

/// Averaging interpolation: keeps interface values and replaces every value
/// interior to a subdomain by the mean of that subdomain's interface values.
/// Idempotent; reproduces constants away from the domain boundary.
inline CrFunction apply_IA(const Partition& part, const CrFunction& u) {
  if (u.mesh_id != part.mesh_id)
    throw std::invalid_argument("function and partition live on different meshes");
  CrFunction r = u;
  for (const Subdomain& sd : part.subdomains) {
    double mean = 0.0;
    if (!sd.boundary_dofs.empty()) {
      for (int d : sd.boundary_dofs) mean += u.values[d];
      mean /= static_cast<double>(sd.boundary_dofs.size());
    }
    for (int d : sd.interior_dofs) r.values[d] = mean;
  }
  return r;
}

struct LayerContrast {
  double beta1 = 0.0;                  // max_i ratio_i * (H_i/h_i)^p
  std::vector<double> ratio;           // per-subdomain max/min of alpha on the layer
  std::vector<double> H_over_h;
};

/// Contrast of the coefficient over the boundary layers, the quantity that
/// drives the spectral lower bound. Exponent 2 is the general estimate;
/// exponent 1 applies when alpha is bounded below in the subdomain interiors.
inline LayerContrast layer_contrast(const TriMesh& mesh, const Partition& part,
                                    const CoefficientField& field, int exponent = 2,
                                    const TriangleRule& rule = triangle_rule(2)) {
  if (part.mesh_id != mesh.id)
    throw std::invalid_argument("partition belongs to a different mesh");
  if (exponent != 1 && exponent != 2)
    throw std::invalid_argument("layer contrast exponent must be 1 or 2");
  LayerContrast lc;
  for (const Subdomain& sd : part.subdomains) {
    double amin = 1e300, amax = -1e300;
    for (int t : sd.layer_triangles) {
      const Triangle& T = mesh.triangles[t];
      const Point2 p0 = mesh.points[T.v[0]], p1 = mesh.points[T.v[1]],
                   p2 = mesh.points[T.v[2]];
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        double a = field.eval(rule.map(p0, p1, p2, static_cast<int>(q)), T.region_tag);
        amin = std::min(amin, a);
        amax = std::max(amax, a);
      }
    }
    double ratio = (amax > 0.0 && amin < 1e300) ? amax / amin : 1.0;
    double hh = sd.H / sd.h;
    lc.ratio.push_back(ratio);
    lc.H_over_h.push_back(hh);
    lc.beta1 = std::max(lc.beta1, ratio * std::pow(hh, exponent));
  }
  return lc;
}

/// Coarse space of the average Schwarz method: the range of the averaging
/// interpolation, parameterized by the interface values. The prolongation
/// places interface values directly and fills each subdomain interior with
/// the mean of that subdomain's interface values, so the interior constants
/// are slaved to the interface rather than independent unknowns — giving
/// them their own columns would enrich the space and visibly cut the
/// iteration growth under contrast that the method is known for.
struct CoarseMap {
  int n_interface = 0;
  int n_subdomains = 0;
  SpMat P;  // fine x coarse prolongation

  int dim() const { return n_interface; }
};

inline CoarseMap build_coarse_map(const Partition& part, int n_dofs) {
  CoarseMap cm;
  cm.n_interface = static_cast<int>(part.interface_dofs.size());
  cm.n_subdomains = part.n_subdomains();
  std::vector<int> column_of(n_dofs, -1);
  for (int k = 0; k < cm.n_interface; ++k) column_of[part.interface_dofs[k]] = k;
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < cm.n_interface; ++k)
    trips.emplace_back(part.interface_dofs[k], k, 1.0);
  for (const Subdomain& sd : part.subdomains) {
    if (sd.boundary_dofs.empty()) continue;
    const double w = 1.0 / static_cast<double>(sd.boundary_dofs.size());
    for (int d : sd.interior_dofs)
      for (int b : sd.boundary_dofs) trips.emplace_back(d, column_of[b], w);
  }
  cm.P.resize(n_dofs, cm.dim());
  cm.P.setFromTriplets(trips.begin(), trips.end());
  return cm;
}

/// Plain-text dump: triangle -> subdomain map plus per-subdomain dof counts.
inline void write_partition(const Partition& part, std::ostream& os) {
  os << "triangles " << part.subdomain_of.size() << "\n";
  for (std::size_t t = 0; t < part.subdomain_of.size(); ++t)
    os << t << " " << part.subdomain_of[t] << "\n";
  os << "subdomains " << part.n_subdomains() << "\n";
  for (int i = 0; i < part.n_subdomains(); ++i)
    os << i << " " << part.subdomains[i].interior_dofs.size() << " "
       << part.subdomains[i].boundary_dofs.size() << "\n";
}

}  // namespace crfve
