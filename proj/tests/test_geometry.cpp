#include "brakke/geometry.hpp"
#include "brakke/network_json.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace brakke;
using namespace brakke::testing;

namespace {

// Curvature of the circle through three points, 4 * area / (abc).
double circumcircle_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 u = b - a, v = c - a;
  const double area2 = std::abs(u.x() * v.y() - u.y() * v.x());
  return 2.0 * area2 / ((b - a).norm() * (c - b).norm() * (c - a).norm());
}

// Max relative curvature error on the ellipse (2 cos s, sin s) sampled at
// s_i = 2 pi i / n + 0.3 sin(2 pi i / n), against the exact curvature.
double ellipse_curvature_error(int n) {
  DiscreteCurve k;
  k.closed = true;
  std::vector<double> exact;
  for (int i = 0; i < n; ++i) {
    const double u = 2.0 * std::numbers::pi * i / n;
    const double s = u + 0.3 * std::sin(u);
    k.vertices.emplace_back(2.0 * std::cos(s), std::sin(s));
    const double d = 4.0 * std::sin(s) * std::sin(s) + std::cos(s) * std::cos(s);
    exact.push_back(2.0 / std::pow(d, 1.5));
  }
  double err = 0.0;
  for (const auto& [i, h] : curvature_vectors(k)) err = std::max(err, std::abs(h.norm() / exact[i] - 1.0));
  return err;
}

double circle_curvature_error(int n) {
  DiscreteCurve k;
  k.closed = true;
  for (int i = 0; i < n; ++i) {
    const double u = 2.0 * std::numbers::pi * i / n;
    const double a = u + 0.3 * std::sin(u);
    k.vertices.emplace_back(std::cos(a), std::sin(a));
  }
  double err = 0.0;
  for (const auto& [i, h] : curvature_vectors(k)) err = std::max(err, std::abs(h.norm() - 1.0));
  return err;
}

}  // namespace

TEST_CASE("curvature of a regular 256-gon is 1/r") {
  for (double r : {0.5, 1.0, 3.0}) {
    const auto hs = curvature_vectors(circle(256, r));
    REQUIRE(hs.size() == 256);
    for (const auto& [i, h] : hs) CHECK(std::abs(h.norm() * r - 1.0) < 1e-3);
  }
}

TEST_CASE("curvature of straight polyline vanishes") {
  const auto hs = curvature_vectors(segment({0, 0}, {2, 1}, 2));
  REQUIRE(hs.size() == 1);
  CHECK(hs[0].first == 1);
  CHECK(hs[0].second.norm() < 1e-15);
}

TEST_CASE("right-angle corner against the circumcircle") {
  DiscreteCurve k;
  k.vertices = {{0, 0}, {1, 0}, {1, 1}};
  const auto hs = curvature_vectors(k);
  REQUIRE(hs.size() == 1);
  const Vec2 h = hs[0].second;
  CHECK(h.x() == doctest::Approx(-1.0));
  CHECK(h.y() == doctest::Approx(1.0));
  const double oracle = circumcircle_curvature(k.vertices[0], k.vertices[1], k.vertices[2]);
  CHECK(h.norm() <= 2.0 * oracle);
  CHECK(h.norm() >= 0.5 * oracle);
}

TEST_CASE("curvature converges at second order on non-uniform sampling") {
  const double e1 = ellipse_curvature_error(64), e2 = ellipse_curvature_error(128), e3 = ellipse_curvature_error(256);
  CHECK(e1 / e2 >= 3.5);
  CHECK(e1 / e2 <= 4.5);
  CHECK(e2 / e3 >= 3.5);
  CHECK(e2 / e3 <= 4.5);
  // Vertices on a circle do at least as well.
  CHECK(circle_curvature_error(64) / circle_curvature_error(128) >= 3.5);
}

TEST_CASE("curvature is normal to the tangent bisector") {
  DiscreteCurve k;
  for (int i = 0; i < 40; ++i) {
    const double s = 0.1 * i + 0.03 * std::sin(7.0 * i);
    k.vertices.emplace_back(s, std::sin(2.0 * s));
  }
  const auto hs = curvature_vectors(k);
  for (const auto& [i, h] : hs) {
    const Vec2 ep = k.vertices[i + 1] - k.vertices[i], em = k.vertices[i] - k.vertices[i - 1];
    const Vec2 bis = ep.normalized() + em.normalized();
    CHECK(std::abs(h.normalized().dot(bis.normalized())) < 1e-10);
  }
  // On equal edges the bisector is the chord.
  const DiscreteCurve c = circle(50, 2.0);
  for (const auto& [i, h] : curvature_vectors(c)) {
    const Vec2 chord = c.vertices[(i + 1) % 50] - c.vertices[(i + 49) % 50];
    CHECK(std::abs(h.normalized().dot(chord.normalized())) < 1e-10);
  }
}

TEST_CASE("curvature rejects degenerate edges") {
  DiscreteCurve k;
  k.vertices = {{0, 0}, {1, 0}, {1, 1e-15}};
  CHECK_THROWS_AS(curvature_vectors(k), DegenerateEdge);
}

TEST_CASE("vertex weights match curvature positions") {
  const DiscreteCurve k = segment({0, 0}, {1, 0}, 4, 3);
  const auto w = vertex_weights(k);
  REQUIRE(w.size() == 3);
  for (double x : w) CHECK(x == doctest::Approx(0.75));
}

TEST_CASE("resample unit segment") {
  const DiscreteCurve k = resample(segment({0, 0}, {1, 0}, 1), 0.1);
  REQUIRE(k.vertices.size() == 11);
  for (std::size_t i = 0; i < 11; ++i) CHECK(k.vertices[i].x() == doctest::Approx(0.1 * i).epsilon(1e-12));
  CHECK(k.vertices.front() == Vec2(0, 0));
  CHECK(k.vertices.back() == Vec2(1, 0));
}

TEST_CASE("resample preserves circle length") {
  const DiscreteCurve c = circle(1000, 1.0);
  const DiscreteCurve r = resample(c, 0.05);
  CHECK(std::abs(r.length() / c.length() - 1.0) < 1e-6);
  CHECK(r.min_edge() >= 0.025);
  CHECK(r.max_edge() <= 0.1);
}

TEST_CASE("resample L-shape keeps the corner") {
  DiscreteCurve k;
  k.vertices = {{0, 0}, {1, 0}, {1, 1}};
  const DiscreteCurve r = resample(k, 0.25);
  REQUIRE(r.vertices.size() == 9);
  CHECK((r.vertices[4] - Vec2(1, 0)).norm() < 1e-12);
  CHECK(std::abs(r.length() - 2.0) < 1e-12);
}

TEST_CASE("resample short curve collapses to a segment") {
  const DiscreteCurve r = resample(segment({0, 0}, {0.05, 0}, 5), 0.1);
  CHECK(r.vertices.size() == 2);
}

TEST_CASE("resample edge lengths stay in band") {
  DiscreteCurve k;
  for (int i = 0; i <= 200; ++i) {
    const double s = i / 200.0;
    k.vertices.emplace_back(s, 0.1 * std::sin(3.0 * s));
  }
  const DiscreteCurve r = resample(k, 0.07);
  CHECK(r.min_edge() >= 0.035);
  CHECK(r.max_edge() <= 0.14);
  CHECK(std::abs(r.length() / k.length() - 1.0) < 1e-6);
  CHECK(r.vertices.front() == k.vertices.front());
  CHECK(r.vertices.back() == k.vertices.back());
}

TEST_CASE("measure of segments and circles") {
  CHECK(measure_of(single(segment({0, 0}, {1, 0}, 1))).total_mass() == doctest::Approx(1.0));
  CHECK(measure_of(single(segment({0, 0}, {1, 0}, 1, 2))).total_mass() == doctest::Approx(2.0));
  const double m = measure_of(single(circle(10000, 1.0))).total_mass();
  CHECK(std::abs(m / (2.0 * std::numbers::pi) - 1.0) < 1e-6);
}

TEST_CASE("mass in ball clips edges exactly") {
  const MeasureView mv = measure_of(single(segment({-2, 0}, {2, 0}, 3)));
  CHECK(mv.mass_in_ball({0, 0}, 1.0) == doctest::Approx(2.0));
  CHECK(mv.mass_in_ball({0, 0.6}, 1.0) == doctest::Approx(1.6));
  CHECK(mv.mass_in_ball({0, 5}, 1.0) == 0.0);
  CHECK(mv.mass_in_ball({0, 0}, 100.0) <= mv.total_mass());
  CHECK(segment_length_in_ball({0, 0}, {3, 0}, {3, 0}, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("measure is additive over disjoint unions") {
  Network a = single(circle(100, 1.0));
  Network b = single(segment({5, 0}, {6, 1}, 4, 2));
  const Network ab = merge(a, b);
  const double sum = measure_of(a).total_mass() + measure_of(b).total_mass();
  CHECK(std::abs(measure_of(ab).total_mass() - sum) <= 1e-14 * sum);
}

TEST_CASE("network validation") {
  Network n;
  DiscreteCurve c = segment({0, 0}, {1, 0}, 2);
  c.start = FixedBoundary{"A"};
  c.end = JunctionEnd{"P"};
  n.curves.push_back(c);
  n.boundary_points.push_back({"A", Vec2(0, 0)});
  n.junctions.push_back({"P", Vec2(1, 0)});
  // P has a single incident end.
  CHECK_THROWS_AS(n.validate(), GeometryError);
  DiscreteCurve d = segment({1, 0}, {1, 1}, 2);
  d.start = JunctionEnd{"P"};
  n.curves.push_back(d);
  CHECK_NOTHROW(n.validate());
  n.junctions[0].point = Vec2(1, 1e-9);
  CHECK_THROWS_AS(n.validate(), GeometryError);
}

TEST_CASE("boundary trajectory interpolation") {
  BoundaryTrajectory tr({{0.0, {0, 0}}, {1.0, {1, 0}}, {2.0, {2, 0}}});
  CHECK((tr.position(0.5) - Vec2(0.5, 0)).norm() < 1e-12);
  CHECK((tr.velocity(1.3) - Vec2(1, 0)).norm() < 1e-12);
  CHECK((tr.position(3.0) - Vec2(3, 0)).norm() < 1e-12);
  // Samples of a parabola: exact at the nodes.
  std::vector<BoundaryTrajectory::Sample> s;
  for (int i = 0; i <= 20; ++i) s.push_back({0.05 * i, Vec2(0.05 * i, 0.0025 * i * i)});
  BoundaryTrajectory p(s);
  for (const auto& q : s) CHECK((p.position(q.t) - q.x).norm() < 1e-12);
  CHECK(std::abs(p.velocity(0.5).y() - 1.0) < 1e-2);
}

TEST_CASE("network JSON round trip") {
  Network n;
  DiscreteCurve c = segment({0, 0}, {1, 0}, 2);
  c.start = FixedBoundary{"A"};
  c.end = MovingBoundary{"G"};
  n.curves.push_back(c);
  n.curves.push_back(circle(5, 1.0, {3, 3}));
  n.boundary_points.push_back({"A", Vec2(0, 0)});
  n.boundary_points.push_back({"G", BoundaryTrajectory({{0.0, {1, 0}}, {1.0, {2, 0}}})});
  const Network m = network_from_json(network_to_json(n));
  REQUIRE(m.curves.size() == 2);
  CHECK(m.curves[0].vertices == n.curves[0].vertices);
  CHECK(m.curves[0].start == n.curves[0].start);
  CHECK(m.curves[0].end == n.curves[0].end);
  CHECK(m.curves[1].closed);
  CHECK(m.boundary_points[1].moving());
  CHECK(network_to_json(m) == network_to_json(n));
  CHECK_THROWS_AS(network_from_json(nlohmann::json::parse(R"({"curves":[{"vertices":[[0]]}]})")), GeometryError);
  CHECK_THROWS_AS(network_from_json(nlohmann::json::parse(R"({"curves":[{"vertices":[[0,0],[1,0]],"start":"bogus"}]})")),
                  GeometryError);
}
