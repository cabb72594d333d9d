#include "brakke/monotonicity.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace brakke;
using namespace brakke::testing;

namespace {

constexpr double kPi = std::numbers::pi;

Network line(double half, int edges) { return single(segment({-half, 0.0}, {half, 0.0}, edges)); }

// Segment from a boundary point at `p` to a fixed far end.
Network half_line(const Vec2& p, const Vec2& far, int edges) {
  Network n = single(segment(p, far, edges));
  n.curves[0].start = FixedBoundary{"G"};
  n.curves[0].end = FixedBoundary{"F"};
  n.boundary_points.push_back({"G", p});
  n.boundary_points.push_back({"F", far});
  return n;
}

// n times from -1 to -1e-5 in geometric progression, then 0.
std::vector<double> geomspace(int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(-std::pow(10.0, -5.0 * i / (n - 1)));
  t.push_back(0.0);
  return t;
}

std::vector<double> every(const std::vector<double>& v, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); i += k) out.push_back(v[i]);
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(a + (b - a) * i / (n - 1));
  return t;
}

// Shrinking unit circle, snapshots every 1e-3 up to the discrete extinction.
const FlowTrajectory& circle_flow() {
  static const FlowTrajectory traj = [] {
    FlowParams p;
    p.target_h = 0.01;
    p.t_end = 0.6;
    p.snapshot_every = 1e-3;
    return run(single(circle(628, 1.0)), p);
  }();
  return traj;
}

// Independent oracle: Gaussian mass of a circle of radius r centred at 0 at
// time -tau, by fine trapezoid quadrature of the parametrisation.
double circle_mass(double r, double tau) {
  const int n = 20000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r * 2.0 * kPi / n * std::exp(-r * r / (4.0 * tau)) / std::sqrt(4.0 * kPi * tau);
  return s;
}

}  // namespace

TEST_CASE("cutoff profile") {
  KernelConfig cfg;
  CHECK(cutoff(0.3, cfg).phi == 1.0);
  CHECK(cutoff(0.5, cfg).phi == 1.0);
  CHECK(cutoff(1.0, cfg).phi == 0.0);
  CHECK(cutoff(0.75, cfg).phi == doctest::Approx(0.5));
  for (double s = 0.5; s <= 1.0; s += 0.01) {
    const auto c = cutoff(s, cfg);
    CHECK(c.d1 <= 0.0);
    const double e = 1e-6;
    CHECK(c.d1 == doctest::Approx((cutoff(s + e, cfg).phi - cutoff(s - e, cfg).phi) / (2 * e)).epsilon(1e-5).scale(1));
    CHECK(c.d2 == doctest::Approx((cutoff(s + e, cfg).d1 - cutoff(s - e, cfg).d1) / (2 * e)).epsilon(1e-3).scale(1));
  }
  KernelConfig bad;
  bad.cutoff_inner = 1.0;
  CHECK_THROWS_AS(bad.validate(), MonotonicityError);
}

TEST_CASE("rho_hat examples") {
  KernelConfig cfg;
  auto k = rho_hat({0.0, 0.0}, -1.0, cfg);
  CHECK(k.value == doctest::Approx(1.0 / std::sqrt(4.0 * kPi)).epsilon(1e-15));
  CHECK(k.value == doctest::Approx(0.282095).epsilon(1e-6));
  CHECK(k.gradient.norm() == 0.0);
  k = rho_hat({0.25, 0.0}, -0.5, cfg);
  CHECK(k.value == doctest::Approx(std::exp(-0.03125) / std::sqrt(2.0 * kPi)).epsilon(1e-15));
  CHECK(k.value == doctest::Approx(0.386668).epsilon(1e-5));
  for (const Vec2 x : {Vec2(1.0, 0.0), Vec2(0.0, -1.5), Vec2(3.0, 4.0)}) {
    k = rho_hat(x, -0.3, cfg);
    CHECK(k.value == 0.0);
    CHECK(k.gradient.norm() == 0.0);
  }
  CHECK_THROWS_AS(rho_hat({0.0, 0.0}, 0.0, cfg), MonotonicityError);
}

TEST_CASE("rho_hat gradient matches central differences") {
  KernelConfig cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-1.1, 1.1), ut(-1.0, -0.05);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const Vec2 x(ux(rng), ux(rng));
    const double t = ut(rng);
    const auto k = rho_hat(x, t, cfg);
    const double e = 1e-6;
    Vec2 fd;
    for (int d = 0; d < 2; ++d) {
      Vec2 dx = Vec2::Zero();
      dx[d] = e;
      fd[d] = (rho_hat(x + dx, t, cfg).value - rho_hat(x - dx, t, cfg).value) / (2 * e);
    }
    if (k.gradient.norm() < 1e-3) continue;
    CHECK((fd - k.gradient).norm() <= 1e-6 * k.gradient.norm() + 1e-10);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("rho integrates to one on lines through the origin") {
  for (double t : {-1.0, -0.1, -0.01}) {
    for (double a : {0.0, 0.7, 2.0}) {
      const Vec2 d(std::cos(a), std::sin(a));
      const double L = 12.0 * std::sqrt(-t);
      const int n = 4000;
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += rho((-L + (i + 0.5) * 2 * L / n) * d, t) * 2 * L / n;
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("K integrand vanishes where phi is one") {
  KernelConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ur(0.0, 0.5), ua(0.0, 2 * kPi), ut(-1.0, -1e-3);
  for (int i = 0; i < 500; ++i) {
    const double r = ur(rng), a = ua(rng), b = ua(rng);
    CHECK(std::abs(k_integrand(r * Vec2(std::cos(a), std::sin(a)), {std::cos(b), std::sin(b)}, ut(rng), cfg)) < 1e-8);
  }
  // Backward-heat identity on a line through 0, from finite differences of rho.
  for (double t : {-1.0, -0.2}) {
    for (double s : {-0.6, 0.1, 0.9}) {
      const Vec2 tau(std::cos(0.4), std::sin(0.4));
      const Vec2 x = s * tau;
      const double e = 1e-4;
      const double rt = (rho(x, t + e) - rho(x, t - e)) / (2 * e);
      const double rss = (rho(x + e * tau, t) - 2 * rho(x, t) + rho(x - e * tau, t)) / (e * e);
      CHECK(std::abs(rt + rss) < 1e-6);
    }
  }
}

TEST_CASE("K integrand matches the defining expression") {
  // Oracle: d rho_hat/dt + tau^T Hess(rho_hat) tau + |grad^perp rho|^2/rho by differences.
  KernelConfig cfg;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(0.52, 0.98), ua(0.0, 2 * kPi), ut(-1.0, -0.05);
  for (int i = 0; i < 50; ++i) {
    const double r = ur(rng), a = ua(rng), b = ua(rng), t = ut(rng);
    const Vec2 x = r * Vec2(std::cos(a), std::sin(a));
    const Vec2 tau(std::cos(b), std::sin(b));
    const double e = 1e-4;
    auto f = [&](const Vec2& y, double s) { return rho_hat(y, s, cfg).value; };
    const double dt = (f(x, t + e) - f(x, t - e)) / (2 * e);
    const double hess = (f(x + e * tau, t) - 2 * f(x, t) + f(x - e * tau, t)) / (e * e);
    const Vec2 g = -x * rho(x, t) / (2 * -t);
    const Vec2 gp = g - g.dot(tau) * tau;
    const double want = dt + hess + gp.squaredNorm() / rho(x, t);
    CHECK(k_integrand(x, tau, t, cfg) == doctest::Approx(want).epsilon(1e-4).scale(1e-3));
  }
}

TEST_CASE("K estimate is stable under grid refinement") {
  KernelConfig cfg;
  const double k1 = compute_K(cfg, -1.0, -1e-3, {100, 32, 30});
  const double k2 = compute_K(cfg, -1.0, -1e-3, {200, 64, 60});
  CHECK(k1 > 0.0);
  CHECK(std::isfinite(k1));
  CHECK(std::abs(k2 - k1) < 0.05 * k2);
  KernelConfig off = cfg;
  off.cutoff_enabled = false;
  CHECK(compute_K(off, -1.0, -1e-3) == 0.0);
}

TEST_CASE("boundary correction integrand stays bounded as t -> 0") {
  KernelConfig cfg;
  const Vec2 p(0.3, 0.1), nu(-1.0, 0.0);
  // The integrand peaks near |t| ~ |p|^2 / 6 and decays after that.
  std::vector<double> sup;
  double s = 0.0;
  for (int dec = 0; dec < 4; ++dec) {
    for (double t : linspace(-std::pow(10.0, -dec), -std::pow(10.0, -dec - 1), 400))
      s = std::max(s, std::abs(nu.dot(rho_hat(p, t, cfg).gradient)));
    sup.push_back(s);
  }
  CHECK(sup[3] <= sup[2] * 1.01);
  CHECK(std::isfinite(s));
}

TEST_CASE("density of a static line is one") {
  const auto traj = static_trajectory(line(2.0, 2000), geomspace(400));
  const auto d = gaussian_density(traj, {{0.0, 0.0}, 0.0}, {});
  CHECK(d.density == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(d.density - 1.0) < 1e-3);
  CHECK(monotonicity_check(d.series, 1e-6).pass);
  // Without the cutoff K = 0 and the quantity is the plain Gaussian mass.
  KernelConfig plain;
  plain.cutoff_enabled = false;
  const auto e = gaussian_density(traj, {{0.0, 0.0}, 0.0}, plain);
  CHECK(e.K == 0.0);
  for (std::size_t i = 0; i < e.series.size(); ++i)
    if (e.series.times[i] > -1e-2) CHECK(std::abs(e.series.values[i] - 1.0) < 1e-6);
  CHECK(std::abs(e.density - 1.0) < 1e-6);
}

TEST_CASE("density at the end of a static half-line is one half") {
  const auto traj = static_trajectory(half_line({0.0, 0.0}, {2.0, 0.0}, 1000), geomspace(400));
  const auto d = gaussian_density(traj, {{0.0, 0.0}, 0.0}, {});
  CHECK(std::abs(d.density - 0.5) < 1e-3);
  CHECK(monotonicity_check(d.series, 1e-6).pass);
}

TEST_CASE("static half-line seen from off its end: boundary term keeps the quantity monotone") {
  const auto traj = static_trajectory(half_line({0.0, 0.0}, {2.0, 0.0}, 1000), geomspace(2000));
  const SpacetimePoint c{{0.2, 0.0}, 0.0};
  DensityOptions o;
  o.t0 = 1.0 / 64.0;
  const auto d = gaussian_density(traj, c, {}, o);
  CHECK(std::abs(d.density - 1.0) < 1e-3);
  CHECK(monotonicity_check(d.series, 1e-6).pass);
  // Mass alone increases here; the boundary term is what compensates.
  CHECK(monotonicity_check(d.series.mass_term, 1e-6).pass == false);
}

TEST_CASE("density at the extinction point of the circle") {
  const auto& traj = circle_flow();
  // Oracle: the self-similar circle r^2 = 2 tau has mass sqrt(2 pi / e) at every tau.
  CHECK(circle_mass(std::sqrt(2.0 * 0.1), 0.1) == doctest::Approx(std::sqrt(2.0 * kPi / std::exp(1.0))).epsilon(1e-12));
  DensityOptions o;
  o.t0 = 1.0 / 8.0;
  o.levels = 3;
  const auto d = gaussian_density(traj, {{0.0, 0.0}, 0.5}, {}, o);
  CHECK(std::abs(d.density - 1.52035) < 1e-2);
  const auto m = monotonicity_check(d.series, 1e-3);
  CHECK(m.pass);
  CHECK(m.max_uptick < 1e-3);
}

TEST_CASE("density is invariant under parabolic rescaling") {
  std::vector<double> dens;
  for (double r : {1.0, 0.5, 0.25}) {
    FlowParams p;
    p.target_h = 0.02 * r;
    p.t_end = 0.6 * r * r;
    p.snapshot_every = 2e-3 * r * r;
    const auto traj = run(single(circle(314, r)), p);
    DensityOptions o;
    o.t0 = r * r / 8.0;
    o.levels = 3;
    dens.push_back(gaussian_density(traj, {{0.0, 0.0}, 0.5 * r * r}, {}, o).density);
  }
  CHECK(std::abs(dens[1] - dens[0]) < 2e-2);
  CHECK(std::abs(dens[2] - dens[0]) < 2e-2);
}

TEST_CASE("too few snapshots near the centre") {
  const auto traj = static_trajectory(line(2.0, 200), {-1.0, -0.5, -0.25});
  CHECK_THROWS_AS(gaussian_density(traj, {{0.0, 0.0}, 0.0}, {}), MonotonicityError);
}

TEST_CASE("flowing boundary half-line: monotone with the boundary correction") {
  // Bumped curve from a boundary point at the origin to (3, 0).
  DiscreteCurve k;
  for (int i = 0; i <= 300; ++i) {
    const double x = 3.0 * i / 300;
    k.vertices.push_back({x, 0.3 * std::sin(kPi * x / 3.0)});
  }
  k.start = FixedBoundary{"G"};
  k.end = FixedBoundary{"F"};
  Network n = single(k);
  n.boundary_points = {{"G", Vec2(0.0, 0.0)}, {"F", Vec2(3.0, 0.0)}};
  FlowParams p;
  p.target_h = 0.01;
  p.t_end = 0.3;
  p.snapshot_every = 1e-3;
  const auto traj = run(n, p);
  REQUIRE(traj.events.empty());
  for (const SpacetimePoint c : {SpacetimePoint{{0.0, 0.0}, 0.3}, SpacetimePoint{{0.4, 0.05}, 0.3}}) {
    DensityOptions o;
    o.t0 = 1.0 / 16.0;
    o.levels = 3;
    const auto d = gaussian_density(traj, c, {}, o);
    const auto m = monotonicity_check(d.series, 1e-3);
    CHECK(m.pass);
  }
}

TEST_CASE("dragged endpoint: moving-boundary term keeps the quantity monotone") {
  // The end is pulled from (0.5, 0) to (0.25, 0), lengthening the segment.
  Network n = single(segment({0.5, 0.0}, {3.0, 0.0}, 250));
  n.curves[0].start = MovingBoundary{"G"};
  n.curves[0].end = FixedBoundary{"F"};
  n.boundary_points.push_back({"G", BoundaryTrajectory({{0.0, {0.5, 0.0}}, {1.0, {0.0, 0.0}}})});
  n.boundary_points.push_back({"F", Vec2(3.0, 0.0)});
  FlowParams p;
  p.target_h = 0.01;
  p.t_end = 0.5;
  p.snapshot_every = 1e-4;
  const auto traj = run(n, p);
  REQUIRE(traj.events.empty());
  const SpacetimePoint c{{0.6, 0.0}, 0.5};
  DensityOptions o;
  o.moving = true;
  o.t0 = 1.0 / 256.0;
  o.levels = 3;
  const auto d = gaussian_density(traj, c, {}, o);
  CHECK(monotonicity_check(d.series, 1e-3).pass);
  CHECK(std::abs(d.density - 1.0) < 1e-2);
  // The whole network lies in the view, so the uncut kernel (K = 0) applies
  // and the moving term is what keeps the quantity monotone.
  KernelConfig plain;
  plain.cutoff_enabled = false;
  const auto exact = gaussian_density(traj, c, plain, o);
  CHECK(monotonicity_check(exact.series, 1e-3).pass);
  // Consecutive differences at snapshot spacing 1e-2, where a drift shows.
  CHECK(monotonicity_check(every(exact.series.values, 100), 1e-3).pass);
  o.moving = false;
  const auto bad = gaussian_density(traj, c, plain, o);
  const auto m = monotonicity_check(every(bad.series.values, 100), 1e-3);
  CHECK_FALSE(m.pass);
  CHECK(m.max_uptick > 3e-3);
}

TEST_CASE("monotonicity check detects a corrupted series") {
  std::vector<double> v = {1.0, 0.99, 0.98, 0.97, 0.96};
  CHECK(monotonicity_check(v, 1e-3).pass);
  v[2] += 0.1;
  const auto r = monotonicity_check(v, 1e-3);
  CHECK_FALSE(r.pass);
  CHECK(r.max_uptick == doctest::Approx(0.1 - 0.01));
  std::vector<double> flat = {1.0, 1.0, 1.0, 1.0};
  flat[2] += 0.1;
  CHECK(monotonicity_check(flat, 1e-3).max_uptick == doctest::Approx(0.1));
  CHECK_THROWS_AS(monotonicity_check(std::vector<double>{1.0, 2.0}, 1e-3), MonotonicityError);
}

TEST_CASE("tangent flow at an interior point is a plane") {
  const auto traj = static_trajectory(line(3.0, 600), {0.0, 0.75, 0.9375, 0.984375, 0.99});
  const auto r = tangent_flow(traj, {{0.3, 0.0}, 1.0}, {1.0, 2.0, 4.0, 8.0});
  CHECK(r.classification == TangentClass::Plane);
  CHECK(r.label() == "plane");
  CHECK(r.density_estimate == doctest::Approx(1.0).epsilon(1e-3));
  REQUIRE(r.rescaled.size() == 4);
  CHECK(r.hausdorff.back() < 1e-9);
}

TEST_CASE("tangent flow at a boundary point is a multiplicity-one half-plane") {
  const auto traj = static_trajectory(half_line({0.0, 0.0}, {3.0, 0.0}, 600), {0.0, 0.75, 0.9375, 0.984375});
  const auto r = tangent_flow(traj, {{0.0, 0.0}, 1.0}, {1.0, 2.0, 4.0, 8.0});
  CHECK(r.classification == TangentClass::Halfplane);
  CHECK(r.label() == "halfplane_multiplicity_1");
  CHECK(std::abs(r.density_estimate - 0.5) < 1e-2);
}

TEST_CASE("tangent flow at the circle's extinction point is shrinker-like") {
  const auto r = tangent_flow(circle_flow(), {{0.0, 0.0}, 0.5}, {2.0, 4.0, 8.0});
  CHECK(r.classification == TangentClass::ShrinkerLike);
  CHECK(r.label() == "shrinker_like");
  CHECK(std::abs(r.density_estimate - 1.52) < 2e-2);
}

TEST_CASE("tangent flow without resolution is unresolved") {
  const auto traj = static_trajectory(line(3.0, 600), {0.0, 0.75});
  const auto r = tangent_flow(traj, {{0.0, 0.0}, 1.0}, {1.0, 2.0, 8.0});
  CHECK(r.classification == TangentClass::Unresolved);
  CHECK_FALSE(r.note.empty());
}

TEST_CASE("wedge test examples") {
  const auto hl = wedge_test(to_varifold(half_line({0.0, 0.0}, {1.0, 0.0}, 100)), {0.0, 0.0}, kPi);
  CHECK(hl.contained);
  REQUIRE(hl.decomposition);
  REQUIRE(hl.decomposition->size() == 1);
  CHECK((*hl.decomposition)[0].multiplicity == 1);
  CHECK(hl.standard);
  CHECK(hl.opening < 1e-9);

  const auto fl = wedge_test(to_varifold(line(1.0, 200)), {0.0, 0.0}, kPi);
  CHECK_FALSE(fl.contained);
  CHECK(fl.opening == doctest::Approx(kPi));

  Network v = single(segment({0.0, 0.0}, {1.0, 0.0}, 100));
  v.curves.push_back(segment({0.0, 0.0}, {std::cos(kPi / 3), std::sin(kPi / 3)}, 100));
  const auto two = wedge_test(to_varifold(v), {0.0, 0.0}, kPi);
  CHECK(two.contained);
  CHECK(two.opening == doctest::Approx(kPi / 3));
  REQUIRE(two.decomposition);
  CHECK(two.decomposition->size() == 2);
  CHECK(two.nu.norm() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));
  CHECK_FALSE(two.standard);
  // Cross-check against the boundary vector of the same configuration.
  Network vb = v;
  for (auto& c : vb.curves) c.start = FixedBoundary{"O"};
  vb.curves[0].end = FixedBoundary{"X"};
  vb.curves[1].end = FixedBoundary{"Y"};
  vb.boundary_points = {{"O", Vec2(0, 0)}, {"X", Vec2(1, 0)}, {"Y", Vec2(std::cos(kPi / 3), std::sin(kPi / 3))}};
  for (const auto& b : boundary_vectors(vb))
    if (b.at == "O") CHECK((b.nu - two.nu).norm() < 1e-9);

  // A double half-line is contained but has even multiplicity.
  const auto dbl = wedge_test(to_varifold(single(segment({0, 0}, {0, 1}, 100, 2))), {0.0, 0.0}, kPi);
  CHECK(dbl.contained);
  REQUIRE(dbl.decomposition);
  CHECK((*dbl.decomposition)[0].multiplicity == 2);
  CHECK_FALSE(dbl.standard);
}
