#include "brakke/flow.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace brakke;
using namespace brakke::testing;

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 dir(double deg) { return {std::cos(deg * kPi / 180.0), std::sin(deg * kPi / 180.0)}; }

Network triple(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  Network n;
  n.junctions.push_back({"P", p});
  const Vec2 pts[3] = {a, b, c};
  const char* ids[3] = {"A", "B", "C"};
  for (int i = 0; i < 3; ++i) {
    DiscreteCurve k = segment(p, pts[i], 4);
    k.start = JunctionEnd{"P"};
    k.end = FixedBoundary{ids[i]};
    n.curves.push_back(k);
    n.boundary_points.push_back({ids[i], pts[i]});
  }
  return n;
}

double mean_radius(const DiscreteCurve& c) {
  double r = 0.0;
  for (const auto& v : c.vertices) r += v.norm();
  return r / static_cast<double>(c.vertices.size());
}

}  // namespace

TEST_CASE("shrinking circle follows sqrt(1 - 2t)") {
  FlowParams p;
  p.target_h = 0.01;
  p.t_end = 0.45;
  p.snapshot_every = 0.05;
  const auto traj = run(single(circle(628, 1.0)), p);
  CHECK(traj.events.empty());
  CHECK(traj.snapshots.back().time == doctest::Approx(0.45));
  for (const auto& s : traj.snapshots) {
    const double exact = std::sqrt(1.0 - 2.0 * s.time);
    CHECK(std::abs(mean_radius(s.network.curves[0]) / exact - 1.0) < 1e-3);
  }
}

TEST_CASE("shrinking circle vanishes near t = r0^2 / 2") {
  FlowParams p;
  p.target_h = 0.02;
  p.t_end = 1.0;
  p.snapshot_every = 0.05;
  const auto traj = run(single(circle(100, 1.0)), p);
  const auto e = traj.first_event(EventKind::CurveVanished);
  REQUIRE(e);
  CHECK(std::abs(e->time / 0.5 - 1.0) < 0.02);
}

TEST_CASE("mass is non-increasing with fixed boundary") {
  FlowParams p;
  p.target_h = 0.05;
  p.t_end = 0.3;
  const auto traj = run(triple(dir(90), dir(210), dir(330), {0.3, 0.2}), p);
  for (std::size_t i = 1; i < traj.snapshots.size(); ++i)
    CHECK(traj.snapshots[i].total_mass <= traj.snapshots[i - 1].total_mass + 1e-9);
}

TEST_CASE("straight segment is stationary") {
  Network n = single(segment({0, 0}, {1, 0.5}, 20));
  n.curves[0].start = FixedBoundary{"A"};
  n.curves[0].end = FixedBoundary{"B"};
  n.boundary_points = {{"A", Vec2(0, 0)}, {"B", Vec2(1, 0.5)}};
  FlowSnapshot s = make_snapshot(n, 0.0);
  FlowParams p;
  p.target_h = 0.05;
  for (int i = 0; i < 50; ++i) s = step_network(s, p).snapshot;
  for (std::size_t i = 0; i < n.curves[0].vertices.size(); ++i)
    CHECK((s.network.curves[0].vertices[i] - n.curves[0].vertices[i]).norm() < 1e-12);
}

TEST_CASE("snapshot curvature matches geometry") {
  const FlowSnapshot s = make_snapshot(single(circle(37, 0.7)), 0.0);
  const auto hs = curvature_vectors(s.network.curves[0]);
  for (const auto& [i, h] : hs) CHECK(s.curvature[0][i] == h);
}

TEST_CASE("symmetric triple junction converges to the Fermat point") {
  FlowParams p;
  p.target_h = 0.02;
  p.t_end = 5.0;
  p.snapshot_every = 0.5;
  const auto traj = run(triple(dir(90), dir(210), dir(330), {0.3, 0.2}), p);
  CHECK(traj.events.empty());
  const auto& last = traj.snapshots.back();
  CHECK(last.network.junctions[0].point.norm() < 1e-3);
  CHECK(std::abs(last.total_mass - 3.0) < 1e-3);
  for (const auto& s : traj.snapshots) {
    CHECK(junction_residual(s.network, "P") < 1e-9);
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(s.network.curves[b].vertices.back() == traj.snapshots.front().network.curves[b].vertices.back());
  }
}

TEST_CASE("obtuse triangle: junction reaches the boundary") {
  FlowParams p;
  p.target_h = 0.02;
  p.t_end = 2.0;
  p.snapshot_every = 0.01;
  const auto traj = run(triple(dir(150), dir(180), dir(210), {-0.7, 0.0}), p);
  const auto e = traj.first_event(EventKind::JunctionHitBoundary);
  REQUIRE(e);
  CHECK(e->time > 0.0);
  CHECK(e->singular_time >= e->time);
  CHECK((e->location - dir(180)).norm() < p.target_h);
  CHECK(traj.snapshots.back().time == doctest::Approx(e->time));
}

TEST_CASE("junction placed where no balance exists is reported") {
  // Seen from (-0.5, 0) the three boundary points lie in a 108 degree cone.
  FlowParams p;
  p.target_h = 0.02;
  p.t_end = 1.0;
  const auto traj = run(triple(dir(150), dir(180), dir(210), {-0.5, 0.0}), p);
  REQUIRE(traj.events.size() == 1);
  CHECK(traj.events[0].kind == EventKind::CurvatureBlowup);
  CHECK(traj.events[0].time == 0.0);
}

TEST_CASE("semi-implicit scheme tracks the circle") {
  FlowParams p;
  p.scheme = Scheme::SemiImplicit;
  p.target_h = 0.02;
  p.dt_max = 1e-4;
  p.t_end = 0.3;
  p.snapshot_every = 0.1;
  const auto traj = run(single(circle(300, 1.0)), p);
  for (const auto& s : traj.snapshots)
    CHECK(std::abs(mean_radius(s.network.curves[0]) / std::sqrt(1.0 - 2.0 * s.time) - 1.0) < 5e-3);
}

TEST_CASE("moving boundary ends follow their trajectory") {
  Network n = single(segment({0, 0}, {1, 0}, 10));
  n.curves[0].start = FixedBoundary{"A"};
  n.curves[0].end = MovingBoundary{"G"};
  n.boundary_points = {{"A", Vec2(0, 0)}, {"G", BoundaryTrajectory({{0.0, {1, 0}}, {1.0, {1, 0.5}}})}};
  FlowParams p;
  p.target_h = 0.1;
  p.t_end = 0.4;
  p.snapshot_every = 0.1;
  const auto traj = run(n, p);
  for (const auto& s : traj.snapshots) {
    CHECK((s.network.curves[0].vertices.back() - Vec2(1, 0.5 * s.time)).norm() < 1e-12);
    CHECK(s.network.curves[0].vertices.front() == Vec2(0, 0));
  }
}

TEST_CASE("mirror-symmetric network stays symmetric") {
  // Circle symmetric about the x axis, vertex set closed under reflection.
  const auto traj = [] {
    FlowParams p;
    p.target_h = 0.05;
    p.t_end = 0.2;
    p.resample_every = 0;
    p.snapshot_every = 0.1;
    DiscreteCurve c;
    c.closed = true;
    for (int i = 0; i < 60; ++i) {
      const double a = 2 * kPi * i / 60;
      c.vertices.emplace_back(std::cos(a) * (1 + 0.2 * std::cos(2 * a)), std::sin(a));
    }
    return run(single(c), p);
  }();
  for (const auto& s : traj.snapshots) {
    // The vertex set is closed under the reflection.
    const auto& v = s.network.curves[0].vertices;
    for (const auto& x : v) {
      const Vec2 m(x.x(), -x.y());
      double best = 1e300;
      for (const auto& y : v) best = std::min(best, (m - y).norm());
      CHECK(best < 1e-9);
    }
  }
}

TEST_CASE("junction balance after relocation") {
  Network n = triple(dir(90), dir(210), dir(330), {0.3, 0.2});
  FlowParams p;
  REQUIRE(balance_junctions(n, p));
  CHECK(junction_residual(n, "P") < 1e-10);
}

TEST_CASE("grim reaper translates") {
  const double edge = 1.5;
  auto exact = [](double x, double t) { return -std::log(std::cos(x)) + t; };
  GraphState s = make_interval_graph(-edge, edge, 3001, [&](double x) { return exact(x, 0.0); });
  s.left_value = [&](double t) { return exact(-edge, t); };
  s.right_value = [&](double t) { return exact(edge, t); };
  const double t_end = 0.2;
  const double dt0 = 0.8 * s.max_dt();
  const long steps = static_cast<long>(std::ceil(t_end / dt0));
  const double dt = t_end / steps;
  std::vector<GraphState> hist{s};
  for (long k = 0; k < steps; ++k) s = step_graph(s, dt);
  hist.push_back(s);
  double err = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) err = std::max(err, std::abs(s.u[i] - exact(s.x(i), t_end)));
  CHECK(err < 1e-3);
  const auto rep = gradient_bound_check(hist);
  CHECK_FALSE(rep.applicable);
  CHECK(rep.max > 10.0);
}

TEST_CASE("graph flow invariants") {
  GraphState z = make_interval_graph(-1, 1, 101, [](double) { return 0.0; });
  std::vector<GraphState> hist{z};
  for (int k = 0; k < 100; ++k) hist.push_back(step_graph(hist.back(), z.max_dt()));
  for (double v : hist.back().u) CHECK(v == 0.0);
  CHECK(gradient_bound_check(hist).max == 0.0);
  CHECK(gradient_bound_check(hist).pass);

  GraphState odd = make_interval_graph(-1, 1, 201, [](double x) { return 0.1 * std::sin(3 * kPi * x) * (1 - x * x); });
  for (int k = 0; k < 2000; ++k) odd = step_graph(odd, 0.9 * odd.max_dt());
  for (std::size_t i = 0; i < odd.u.size(); ++i) CHECK(std::abs(odd.u[i] + odd.u[odd.u.size() - 1 - i]) < 1e-10);

  CHECK_THROWS(step_graph(z, 2.0 * z.max_dt()));
}

TEST_CASE("gradient maximum principle for a small bump") {
  // sup |f'| = 0.05 for f = a (1 - x^2)^2 with a chosen accordingly.
  const double a = 0.05 * 3.0 * std::sqrt(3.0) / 8.0;
  auto f = [&](double x) { return a * (1 - x * x) * (1 - x * x); };
  GraphState s = make_interval_graph(-1, 1, 401, f);
  std::vector<GraphState> hist{s};
  for (int k = 0; k < 20000; ++k) {
    s = step_graph(s, 0.9 * s.max_dt());
    if (k % 100 == 0) hist.push_back(s);
  }
  const auto rep = gradient_bound_check(hist);
  CHECK(rep.applicable);
  CHECK(rep.pass);
  CHECK(rep.initial <= 0.05 + 1e-4);
  CHECK(rep.max <= 0.05 + 1e-6 + 1e-4);
}

TEST_CASE("radial graph flow") {
  // A paraboloid cap in m = 2 keeps its symmetry and decreases.
  GraphState s = make_radial_graph(1.0, 2, 101, [](double r) { return 0.05 * (1 - r * r); });
  const double u0 = s.u[0];
  for (int k = 0; k < 1000; ++k) s = step_graph(s, 0.9 * s.max_dt());
  CHECK(s.u[0] < u0);
  CHECK(s.u.back() == 0.0);
  CHECK(s.u[0] > 0.0);
}
