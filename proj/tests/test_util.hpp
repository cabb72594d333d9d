#pragma once

#include "brakke/geometry.hpp"

#include <cmath>
#include <numbers>

namespace brakke::testing {

inline DiscreteCurve circle(int n, double r, Vec2 c = Vec2::Zero()) {
  DiscreteCurve k;
  k.closed = true;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    k.vertices.push_back(c + r * Vec2(std::cos(a), std::sin(a)));
  }
  return k;
}

inline DiscreteCurve segment(Vec2 a, Vec2 b, int edges, int mult = 1) {
  DiscreteCurve k;
  k.multiplicity = mult;
  for (int i = 0; i <= edges; ++i) k.vertices.push_back(a + (b - a) * (static_cast<double>(i) / edges));
  return k;
}

inline Network single(DiscreteCurve c) {
  Network n;
  n.curves.push_back(std::move(c));
  return n;
}

// Three straight arms from a junction at p to fixed boundary points a, b, c.
inline Network triple_network(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p, int edges = 4) {
  Network n;
  n.junctions.push_back({"P", p});
  const Vec2 pts[3] = {a, b, c};
  const char* ids[3] = {"A", "B", "C"};
  for (int i = 0; i < 3; ++i) {
    DiscreteCurve k = segment(p, pts[i], edges);
    k.start = JunctionEnd{"P"};
    k.end = FixedBoundary{ids[i]};
    n.curves.push_back(k);
    n.boundary_points.push_back({ids[i], pts[i]});
  }
  return n;
}

inline Vec2 unit_at_degrees(double deg) {
  return {std::cos(deg * std::numbers::pi / 180.0), std::sin(deg * std::numbers::pi / 180.0)};
}

}  // namespace brakke::testing
