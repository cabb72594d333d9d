#include "brakke/kernels.hpp"
#include "brakke/varifold.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace brakke;
using namespace brakke::testing;

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 dir(double a) { return {std::cos(a), std::sin(a)}; }

// Three multiplicity-1 curves from P to A, B, C.
Network triple(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p, int edges = 8) {
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

struct Field {
  VectorField x;
  VectorFieldGradient g;
};

// Cubic fields: quadratic ones are integrated exactly by the midpoint rule.
std::vector<Field> polynomial_fields() {
  std::vector<Field> f;
  f.push_back({[](const Vec2& p) { return Vec2(p.x() * p.x() * p.x(), p.y()); },
               [](const Vec2& p) { return (Mat2() << 3 * p.x() * p.x(), 0, 0, 1).finished(); }});
  f.push_back({[](const Vec2& p) { return Vec2(p.y() * p.y() * p.y(), p.x() * p.y()); },
               [](const Vec2& p) { return (Mat2() << 0, 3 * p.y() * p.y(), p.y(), p.x()).finished(); }});
  f.push_back({[](const Vec2& p) { return Vec2(1 + p.x() * p.x() * p.y(), -p.y()); },
               [](const Vec2& p) { return (Mat2() << 2 * p.x() * p.y(), p.x() * p.x(), 0, -1).finished(); }});
  f.push_back({[](const Vec2& p) { return Vec2(p.x() * p.y() * p.y(), p.x() * p.x() - p.y() * p.y()); },
               [](const Vec2& p) { return (Mat2() << p.y() * p.y(), 2 * p.x() * p.y(), 2 * p.x(), -2 * p.y()).finished(); }});
  f.push_back({[](const Vec2& p) { return Vec2(p.x() + 2 * p.y(), 3 * p.x() * p.x() * p.y()); },
               [](const Vec2& p) { return (Mat2() << 1, 2, 6 * p.x() * p.y(), 3 * p.x() * p.x()).finished(); }});
  return f;
}

// |first_variation + sum H.X w - sum nu.X| on an arc with n edges and free ends.
double divergence_defect(const Field& f, int n) {
  DiscreteCurve k;
  for (int i = 0; i <= n; ++i) {
    const double s = 0.2 + 1.2 * i / n;
    k.vertices.emplace_back(std::cos(s) + 0.1 * s, std::sin(s));
  }
  const Network net = single(k);
  double interior = 0.0;
  const auto hs = curvature_vectors(k);
  const auto ws = vertex_weights(k);
  for (std::size_t j = 0; j < hs.size(); ++j) interior += ws[j] * hs[j].second.dot(f.x(k.vertices[hs[j].first]));
  double bdry = 0.0;
  for (const auto& e : end_vectors(net)) bdry += e.nu.dot(f.x(e.position));
  return std::abs(first_variation(net, f.x, f.g) + interior - bdry);
}

}  // namespace

TEST_CASE("to_varifold weights") {
  const auto v = to_varifold(single(segment({0, 0}, {1, 0}, 10)));
  CHECK(v.samples.size() == 10);
  CHECK(v.total_weight() == doctest::Approx(1.0));
  CHECK(to_varifold(single(segment({0, 0}, {1, 0}, 10, 3))).total_weight() == doctest::Approx(3.0));
  for (int n : {100, 1000}) {
    for (const auto& s : to_varifold(single(circle(n, 1.0))).samples) {
      CHECK(std::abs(s.tangent.norm() - 1.0) < 1e-12);
      CHECK(std::abs(s.tangent.dot(s.point.normalized())) < 10.0 / n);
    }
  }
}

TEST_CASE("first variation examples") {
  const VectorField cst = [](const Vec2&) { return Vec2(0.3, -2.0); };
  const VectorFieldGradient zero = [](const Vec2&) { return Mat2::Zero().eval(); };
  CHECK(std::abs(first_variation(single(circle(50, 1.0)), cst, zero)) < 1e-12);
  const VectorField id = [](const Vec2& p) { return p; };
  const VectorFieldGradient eye = [](const Vec2&) { return Mat2::Identity().eval(); };
  CHECK(first_variation(single(segment({0, 0}, {1, 0}, 7)), id, eye) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(first_variation(single(circle(10000, 1.0)), id, eye) - 2 * kPi) < 1e-4);
}

TEST_CASE("first variation rejects an inconsistent gradient") {
  const VectorField id = [](const Vec2& p) { return p; };
  const VectorFieldGradient wrong = [](const Vec2&) { return (2.0 * Mat2::Identity()).eval(); };
  CHECK_THROWS_AS(first_variation(single(segment({0, 0}, {1, 0}, 3)), id, wrong), VarifoldError);
}

TEST_CASE("discrete divergence identity converges") {
  for (const auto& f : polynomial_fields()) {
    const double d1 = divergence_defect(f, 20), d2 = divergence_defect(f, 40), d3 = divergence_defect(f, 80);
    CHECK(std::log2(d1 / d2) >= 1.0);
    CHECK(std::log2(d2 / d3) >= 1.0);
  }
}

TEST_CASE("boundary vectors") {
  Network half;
  DiscreteCurve k = segment({0, 0}, {-1, 0}, 4);
  k.start = FixedBoundary{"O"};
  half.curves.push_back(k);
  half.boundary_points.push_back({"O", Vec2(0, 0)});
  auto nus = boundary_vectors(half);
  REQUIRE(nus.size() == 1);
  CHECK(nus[0].at == "O");
  CHECK((nus[0].nu - Vec2(1, 0)).norm() < 1e-15);

  // Three curves at 120 degrees; the meeting point treated as a boundary point.
  Network star;
  star.boundary_points.push_back({"O", Vec2(0, 0)});
  for (int i = 0; i < 3; ++i) {
    DiscreteCurve c = segment(Vec2::Zero(), dir(2 * kPi * i / 3), 5);
    c.start = FixedBoundary{"O"};
    star.curves.push_back(c);
  }
  nus = boundary_vectors(star);
  REQUIRE(nus.size() == 1);
  CHECK(nus[0].nu.norm() < 1e-12);
  CHECK(nus[0].incident == 3);

  // Two ends with outward tangents 2 theta apart, theta = pi/3.
  Network two;
  two.boundary_points.push_back({"O", Vec2(0, 0)});
  for (double a : {kPi / 3, -kPi / 3}) {
    DiscreteCurve c = segment(Vec2::Zero(), -dir(a), 3);
    c.start = FixedBoundary{"O"};
    two.curves.push_back(c);
  }
  nus = boundary_vectors(two);
  CHECK(nus[0].nu.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nu_admissible(nus));
  CHECK_FALSE(nu_admissible(boundary_vectors(star)) == false);
}

TEST_CASE("|nu| <= k with equality iff tangents agree") {
  Network n;
  n.boundary_points.push_back({"O", Vec2(0, 0)});
  for (double a : {0.1, 0.4, -0.3}) {
    DiscreteCurve c = segment(Vec2::Zero(), -dir(a), 2);
    c.start = FixedBoundary{"O"};
    n.curves.push_back(c);
  }
  CHECK(boundary_vectors(n)[0].nu.norm() < 3.0 - 1e-9);
  for (auto& c : n.curves) c = segment(Vec2::Zero(), Vec2(-1, 0), 2), c.start = FixedBoundary{"O"};
  CHECK(std::abs(boundary_vectors(n)[0].nu.norm() - 3.0) < 1e-9);
}

TEST_CASE("trig bound examples") {
  CHECK(trig_bound(1, 0.7) == doctest::Approx(1.0));
  CHECK(trig_bound(2, kPi / 3) == doctest::Approx(1.0));
  CHECK(trig_bound(3, kPi / 4) == doctest::Approx(std::sqrt(5.0)));
  CHECK_THROWS(trig_bound(2, kPi / 2));

  // k = 2 on a 100 x 100 grid.
  const auto r2 = kernels::serial::trig_grid_min(2, kPi / 3, 100);
  CHECK(std::abs(r2.min_norm - 1.0) < 1e-3);
  // k = 3: no configuration beats the bound by more than the grid resolution.
  const int n = 41;
  const double res = 3 * (2 * kPi / 4 / (n - 1)) / 2;
  const auto r3 = kernels::serial::trig_grid_min(3, kPi / 4, n);
  CHECK(r3.min_norm >= std::sqrt(5.0) - res);
  CHECK(r3.min_norm <= std::sqrt(5.0) + res);
}

TEST_CASE("mod-2 boundary") {
  Network one = single(segment({0, 0}, {1, 0}, 3));
  one.curves[0].start = FixedBoundary{"A"};
  one.curves[0].end = FixedBoundary{"B"};
  one.boundary_points = {{"A", Vec2(0, 0)}, {"B", Vec2(1, 0)}};
  auto m = mod2_boundary(one);
  CHECK(m.labels == std::vector<std::string>{"A", "B"});

  const Network t = triple(dir(kPi / 2), dir(7 * kPi / 6), dir(11 * kPi / 6), {0.3, 0.2});
  m = mod2_boundary(t);
  CHECK(m.odd_points.size() == 4);
  CHECK(std::count(m.labels.begin(), m.labels.end(), "P") == 1);

  Network dbl = one;
  dbl.curves.push_back(one.curves[0]);
  CHECK(mod2_boundary(dbl).odd_points.empty());
  Network mult = one;
  mult.curves[0].multiplicity = 2;
  CHECK(mod2_boundary(mult).odd_points.empty());

  // Free ends count too.
  CHECK(mod2_boundary(single(segment({0, 0}, {1, 1}, 2))).odd_points.size() == 2);
}

TEST_CASE("mod-2 boundary is a homomorphism") {
  Network a = single(segment({0, 0}, {1, 0}, 3));
  Network b = single(segment({1, 0}, {2, 1}, 3));
  Network c = single(circle(20, 1.0, {5, 5}));
  for (const auto& [x, y] : {std::pair{a, b}, std::pair{a, c}, std::pair{b, c}}) {
    CHECK(same_points(mod2_boundary(merge(x, y)), symmetric_difference(mod2_boundary(x), mod2_boundary(y))));
  }
}

TEST_CASE("standard state") {
  Network one = single(segment({0, 0}, {1, 0}, 3));
  one.curves[0].start = FixedBoundary{"A"};
  one.curves[0].end = FixedBoundary{"B"};
  one.boundary_points = {{"A", Vec2(0, 0)}, {"B", Vec2(1, 0)}};
  CHECK(is_standard_state(one, {"A", "B"}).standard);

  const Network t = triple(dir(kPi / 2), dir(7 * kPi / 6), dir(11 * kPi / 6), {0.3, 0.2});
  const auto r = is_standard_state(t, {"A", "B", "C"});
  CHECK_FALSE(r.standard);
  CHECK(r.violators == std::vector<std::string>{"P"});
  CHECK(r.missing_gamma.empty());

  Network loop = one;
  loop.curves.push_back(circle(30, 0.2, {3, 3}));
  CHECK(is_standard_state(loop, {"A", "B"}).standard);
  CHECK_THROWS_AS(is_standard_state(one, {"Z"}), VarifoldError);
}
