#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crfve/mesh.hpp"

namespace crfve {

/// Quadrature on the reference triangle in barycentric coordinates.
/// Weights are fractions of the physical area: integral ~ |K| * sum w f(x_q).
struct TriangleRule {
  struct Node {
    double l0, l1, l2, w;
  };
  std::vector<Node> nodes;
  int degree = 0;

  Point2 map(const Point2& p0, const Point2& p1, const Point2& p2, int q) const {
    const Node& n = nodes[q];
    return n.l0 * p0 + n.l1 * p1 + n.l2 * p2;
  }
};

/// Rules exact for polynomials of the requested degree: 1 (centroid),
/// 2 (edge midpoints, the default for assembly), 5 (7-point, used for norms).
inline TriangleRule triangle_rule(int degree = 2) {
  TriangleRule r;
  if (degree <= 1) {
    r.degree = 1;
    r.nodes = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0}};
  } else if (degree <= 2) {
    r.degree = 2;
    r.nodes = {{0.5, 0.5, 0.0, 1.0 / 3},
               {0.0, 0.5, 0.5, 1.0 / 3},
               {0.5, 0.0, 0.5, 1.0 / 3}};
  } else {
    r.degree = 5;
    const double s = std::sqrt(15.0);
    const double b1 = (6.0 + s) / 21.0, a1 = 1.0 - 2.0 * b1, w1 = (155.0 + s) / 1200.0;
    const double b2 = (6.0 - s) / 21.0, a2 = 1.0 - 2.0 * b2, w2 = (155.0 - s) / 1200.0;
    r.nodes = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40},
               {a1, b1, b1, w1}, {b1, a1, b1, w1}, {b1, b1, a1, w1},
               {a2, b2, b2, w2}, {b2, a2, b2, w2}, {b2, b2, a2, w2}};
  }
  return r;
}

/// Gauss rule on the unit interval [0,1]; weights are fractions of length.
struct SegmentRule {
  struct Node {
    double t, w;
  };
  std::vector<Node> nodes;
  int degree = 0;
};

inline SegmentRule segment_rule(int degree = 3) {
  SegmentRule r;
  if (degree <= 3) {
    r.degree = 3;
    const double d = 0.5 / std::sqrt(3.0);
    r.nodes = {{0.5 - d, 0.5}, {0.5 + d, 0.5}};
  } else {
    r.degree = 5;
    const double d = 0.5 * std::sqrt(0.6);
    r.nodes = {{0.5 - d, 5.0 / 18}, {0.5, 8.0 / 18}, {0.5 + d, 5.0 / 18}};
  }
  return r;
}

/// Degree-5 rule applied on 4^levels congruent subtriangles. A coefficient
/// that oscillates below the mesh scale is aliased by any single low-order
/// rule; refining the rule instead of the mesh recovers the cancellation in
/// its integrals at fixed cost per element.
inline TriangleRule composite_triangle_rule(int levels) {
  levels = std::max(0, std::min(levels, 5));
  const TriangleRule base = triangle_rule(5);
  if (levels == 0) return base;
  using Bary = std::array<double, 3>;
  using Cell = std::array<Bary, 3>;
  std::vector<Cell> cells = {{Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}}};
  for (int l = 0; l < levels; ++l) {
    std::vector<Cell> next;
    next.reserve(4 * cells.size());
    for (const Cell& c : cells) {
      Bary m01, m12, m20;
      for (int k = 0; k < 3; ++k) {
        m01[k] = 0.5 * (c[0][k] + c[1][k]);
        m12[k] = 0.5 * (c[1][k] + c[2][k]);
        m20[k] = 0.5 * (c[2][k] + c[0][k]);
      }
      next.push_back({c[0], m01, m20});
      next.push_back({m01, c[1], m12});
      next.push_back({m20, m12, c[2]});
      next.push_back({m01, m12, m20});
    }
    cells.swap(next);
  }
  TriangleRule r;
  r.degree = base.degree;
  const double scale = 1.0 / static_cast<double>(cells.size());
  r.nodes.reserve(cells.size() * base.nodes.size());
  for (const Cell& c : cells)
    for (const auto& n : base.nodes) {
      TriangleRule::Node out;
      out.l0 = n.l0 * c[0][0] + n.l1 * c[1][0] + n.l2 * c[2][0];
      out.l1 = n.l0 * c[0][1] + n.l1 * c[1][1] + n.l2 * c[2][1];
      out.l2 = n.l0 * c[0][2] + n.l1 * c[1][2] + n.l2 * c[2][2];
      out.w = n.w * scale;
      r.nodes.push_back(out);
    }
  return r;
}

/// Degree-5 Gauss rule on each of `pieces` equal subintervals of [0,1].
inline SegmentRule composite_segment_rule(int pieces) {
  pieces = std::max(1, std::min(pieces, 64));
  const SegmentRule base = segment_rule(5);
  if (pieces == 1) return base;
  SegmentRule r;
  r.degree = base.degree;
  r.nodes.reserve(pieces * base.nodes.size());
  const double w = 1.0 / static_cast<double>(pieces);
  for (int k = 0; k < pieces; ++k)
    for (const auto& n : base.nodes)
      r.nodes.push_back({(k + n.t) * w, n.w * w});
  return r;
}

}  // namespace crfve
