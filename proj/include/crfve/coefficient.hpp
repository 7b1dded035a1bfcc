#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crfve/mesh.hpp"

namespace crfve {

/// Diffusion coefficient sampled at quadrature points. The region tag of the
/// element owning the sample point is passed along so that jumps across
/// element-aligned interfaces are resolved without ever evaluating exactly on
/// an interface. `piecewise_constant` marks fields that are constant on every
/// element (the regime where the finite volume and finite element stiffness
/// matrices coincide).
struct CoefficientField {
  std::function<double(Point2, int)> eval;
  bool piecewise_constant = false;
};

struct Rect {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
  bool contains(Point2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
};

/// Declarative coefficient description used by configs and experiment presets:
/// a background field (constant, or 2 + sin(f pi x) sin(f pi y)) scaled by
/// alpha1 inside a union of axis-aligned rectangles.
struct CoefficientSpec {
  enum class Base { constant, sinusoidal };
  Base base = Base::sinusoidal;
  double value = 1.0;   // background for Base::constant
  int frequency = 100;  // f in sin(f pi x) sin(f pi y)
  double alpha1 = 1.0;  // multiplier inside the rectangles
  std::vector<Rect> inclusions;

  void validate() const {
    if (base == Base::constant && value < 1.0)
      throw std::invalid_argument("constant coefficient must be >= 1");
    if (alpha1 < 1.0)
      throw std::invalid_argument("inclusion multiplier alpha1 must be >= 1");
    for (const Rect& r : inclusions)
      if (!(r.xmax > r.xmin) || !(r.ymax > r.ymin))
        throw std::invalid_argument("inclusion rectangle is empty");
  }
};

/// Region tagger for a spec: 0 outside, 1 + (first containing rectangle)
/// inside. Meant to be applied to element centroids (TriMesh::with_tags), so
/// rectangles aligned with element edges tag exactly the covered elements.
inline std::function<int(Point2)> make_tagger(const CoefficientSpec& spec) {
  std::vector<Rect> rects = spec.inclusions;
  return [rects](Point2 c) {
    for (std::size_t i = 0; i < rects.size(); ++i)
      if (rects[i].contains(c)) return static_cast<int>(i) + 1;
    return 0;
  };
}

inline CoefficientField make_field(const CoefficientSpec& spec) {
  spec.validate();
  CoefficientField f;
  if (spec.base == CoefficientSpec::Base::constant) {
    double v = spec.value, a1 = spec.alpha1;
    f.eval = [v, a1](Point2, int tag) { return tag > 0 ? a1 * v : v; };
    f.piecewise_constant = true;
  } else {
    double freq = std::numbers::pi * spec.frequency, a1 = spec.alpha1;
    f.eval = [freq, a1](Point2 p, int tag) {
      double base = 2.0 + std::sin(freq * p.x) * std::sin(freq * p.y);
      return tag > 0 ? a1 * base : base;
    };
    f.piecewise_constant = false;
  }
  return f;
}

/// Field taking an independent constant on every element. Requires a mesh
/// retagged so that region_tag equals the triangle index (tag_by_triangle_index).
inline CoefficientField make_element_constant_field(std::vector<double> values) {
  for (double v : values)
    if (!(v > 0.0)) throw std::invalid_argument("element coefficient must be positive");
  CoefficientField f;
  f.eval = [vals = std::move(values)](Point2, int tag) { return vals.at(tag); };
  f.piecewise_constant = true;
  return f;
}

inline TriMesh tag_by_triangle_index(const TriMesh& m) {
  std::vector<std::array<int, 3>> tris(m.triangles.size());
  std::vector<int> tags(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    tris[t] = m.triangles[t].v;
    tags[t] = static_cast<int>(t);
  }
  TriMesh r = TriMesh::from_raw(m.points, tris, tags);
  r.structured_n = m.structured_n;
  return r;
}

}  // namespace crfve
