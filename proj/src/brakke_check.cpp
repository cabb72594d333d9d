#include "brakke/brakke_check.hpp"

#include "brakke/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace brakke {

namespace {

// Quintic step used by plateau(): 1 at u <= 0, 0 at u >= 1.
struct Step {
  double q, d1, d2;
};

Step quintic(double u) {
  if (u <= 0.0) return {1.0, 0.0, 0.0};
  if (u >= 1.0) return {0.0, 0.0, 0.0};
  const double v = 1.0 - u;
  return {v * v * v * (1.0 + 3.0 * u + 6.0 * u * u), -30.0 * u * u * v * v, -60.0 * u * v * (1.0 - 2.0 * u)};
}

// Radial function f(|x - c|) given f, f', f'' at s.
Vec2 radial_gradient(const Vec2& y, double s, double f1) { return s > 0.0 ? Vec2(f1 * y / s) : Vec2::Zero(); }

Mat2 radial_hessian(const Vec2& y, double s, double f1, double f2) {
  if (s == 0.0) return f2 * Mat2::Identity();
  const Vec2 e = y / s;
  return f2 * e * e.transpose() + (f1 / s) * (Mat2::Identity() - e * e.transpose());
}

std::vector<const FlowSnapshot*> window(const FlowTrajectory& traj, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("need a < b");
  const double eps = 1e-9 * std::max(1.0, std::abs(b));
  std::vector<const FlowSnapshot*> out;
  for (const auto& s : traj.snapshots)
    if (s.time >= a - eps && s.time <= b + eps) out.push_back(&s);
  if (out.size() < 2 || std::abs(out.front()->time - a) > eps || std::abs(out.back()->time - b) > eps)
    throw std::invalid_argument("[a, b] must start and end at snapshot times");
  return out;
}

double mass_u(const Network& n, const TestFunction& u, double t) {
  const MeasureView mv = measure_of(n);
  const auto& segs = mv.segments();
  return kernels::parallel::sum(segs.size(), [&](std::size_t i) {
    const auto& s = segs[i];
    return (s.b - s.a).norm() * s.weight * u.value(0.5 * (s.a + s.b), t);
  });
}

double mass_dudt(const Network& n, const TestFunction& u, double t) {
  if (u.time_independent) return 0.0;
  const MeasureView mv = measure_of(n);
  const auto& segs = mv.segments();
  return kernels::parallel::sum(segs.size(), [&](std::size_t i) {
    const auto& s = segs[i];
    return (s.b - s.a).norm() * s.weight * u.time_derivative(0.5 * (s.a + s.b), t);
  });
}

// Vertex sums of w u |H|^2 and w H . grad u over interior vertices.
std::pair<double, double> curvature_terms(const FlowSnapshot& s, const TestFunction& u) {
  double uh2 = 0.0, hgu = 0.0;
  for (std::size_t c = 0; c < s.network.curves.size(); ++c) {
    const auto& k = s.network.curves[c];
    const auto& H = s.curvature[c];
    const std::size_t n = k.vertices.size();
    const std::size_t lo = k.closed ? 0 : 1;
    const std::size_t hi = k.closed ? n : n - 1;
    uh2 += kernels::parallel::sum(hi - lo, [&](std::size_t j) {
      const std::size_t i = lo + j;
      const double w = k.multiplicity * 0.5 *
                       ((k.vertices[(i + 1) % n] - k.vertices[i]).norm() + (k.vertices[i] - k.vertices[(i + n - 1) % n]).norm());
      return w * u.value(k.vertices[i], s.time) * H[i].squaredNorm();
    });
    hgu += kernels::parallel::sum(hi - lo, [&](std::size_t j) {
      const std::size_t i = lo + j;
      const double w = k.multiplicity * 0.5 *
                       ((k.vertices[(i + 1) % n] - k.vertices[i]).norm() + (k.vertices[i] - k.vertices[(i + n - 1) % n]).norm());
      if (u.value(k.vertices[i], s.time) <= 0.0) return 0.0;
      return w * H[i].dot(u.gradient(k.vertices[i], s.time));
    });
  }
  return {uh2, hgu};
}

double moving_term(const FlowSnapshot& s, const TestFunction& u) {
  double m = 0.0;
  for (const auto& bv : s.nu) {
    const BoundaryPoint* bp = s.network.find_boundary(bv.at);
    if (bp && bp->moving()) m += u.value(bv.position, s.time) * bv.nu.dot(bp->velocity(s.time));
  }
  return m;
}

template <class F>
double trapezoid(const std::vector<const FlowSnapshot*>& snaps, F&& f) {
  double total = 0.0;
  double prev = f(*snaps.front());
  for (std::size_t i = 1; i < snaps.size(); ++i) {
    const double cur = f(*snaps[i]);
    total += 0.5 * (prev + cur) * (snaps[i]->time - snaps[i - 1]->time);
    prev = cur;
  }
  return total;
}

InequalityReport inequality(const FlowTrajectory& traj, const TestFunction& u, double a, double b, bool moving,
                            const BrakkeOptions& opts) {
  const auto snaps = window(traj, a, b);
  InequalityReport r;
  r.lhs = mass_u(snaps.front()->network, u, a) - mass_u(snaps.back()->network, u, b);
  r.rhs = trapezoid(snaps, [&](const FlowSnapshot& s) {
    const auto [uh2, hgu] = curvature_terms(s, u);
    return uh2 - hgu - mass_dudt(s.network, u, s.time);
  });
  if (moving) {
    const double sign = opts.flip_moving_sign ? -1.0 : 1.0;
    r.rhs -= sign * trapezoid(snaps, [&](const FlowSnapshot& s) { return moving_term(s, u); });
  }
  r.residual = r.lhs - r.rhs;
  r.tol = opts.tol(traj.h, traj.dt);
  r.pass = r.residual >= -r.tol;
  return r;
}

// Portion of segment [a, b] inside the disk B(c, r), as parameters in [0, 1].
std::pair<double, double> clip(const Vec2& a, const Vec2& b, const Vec2& c, double r) {
  const Vec2 d = b - a, p = a - c;
  const double qa = d.squaredNorm();
  if (qa == 0.0) return {1.0, 0.0};
  const double qb = 2.0 * p.dot(d);
  const double qc = p.squaredNorm() - r * r;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return {1.0, 0.0};
  const double sq = std::sqrt(disc);
  return {std::max(0.0, (-qb - sq) / (2.0 * qa)), std::min(1.0, (-qb + sq) / (2.0 * qa))};
}

double point_to_network(const Vec2& p, const Network& n) {
  double d = std::numeric_limits<double>::infinity();
  const MeasureView mv = measure_of(n);
  for (const auto& s : mv.segments()) d = std::min(d, kernels::point_segment_distance(p, s.a, s.b));
  return d;
}

double network_distance(const Network& x, const Network& y) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& a : x.curves)
    for (const auto& b : y.curves)
      d = std::min(d, kernels::parallel::polyline_distance(a.vertices, a.closed, b.vertices, b.closed));
  return d;
}

// Boundary of a network as a point set: boundary points and free ends.
std::vector<Vec2> boundary_set(const Network& n, double t) {
  std::vector<Vec2> out;
  for (const auto& bp : n.boundary_points) out.push_back(bp.position(t));
  for (const auto& c : n.curves) {
    if (c.closed) continue;
    if (is_free(c.start)) out.push_back(c.vertices.front());
    if (is_free(c.end)) out.push_back(c.vertices.back());
  }
  return out;
}

nlohmann::json refinement_json(const std::vector<RefinementRow>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rows) a.push_back({{"h", r.h}, {"dt", r.dt}, {"residual", r.residual}});
  return a;
}

}  // namespace

void TestFunction::validate(double t0, double t1, int count, double rel_tol, std::uint64_t seed) const {
  if (!value || !gradient || !hessian || !time_derivative) throw TestFunctionError(name + ": missing callable");
  if (!(radius > 0.0)) throw TestFunctionError(name + ": radius must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  const double e = 1e-5 * std::max(1.0, radius);
  const double et = 1e-6;
  int done = 0;
  for (int tries = 0; done < count && tries < 1000 * count; ++tries) {
    const double r = 0.95 * radius * std::sqrt(ur(rng));
    const double a = 2.0 * std::numbers::pi * ur(rng);
    const Vec2 x = center + r * Vec2(std::cos(a), std::sin(a));
    const double t = t0 + (t1 - t0) * ur(rng);
    const double v = value(x, t);
    if (v < 0.0) throw TestFunctionError(name + ": negative value");
    if (v <= 1e-6) continue;
    // Stay clear of the support boundary, where u may only be Lipschitz.
    bool inside = true;
    for (const Vec2& dx : {Vec2(e, 0), Vec2(-e, 0), Vec2(0, e), Vec2(0, -e)})
      inside = inside && value(x + 2.0 * dx, t) > 0.0 && value(x + 2.0 * dx, t + et) > 0.0 && value(x, t - et) > 0.0;
    if (!inside) continue;
    auto bad = [&](double fd, double an) { return std::abs(fd - an) > rel_tol * std::max({std::abs(fd), std::abs(an), 1e-3}); };
    const Vec2 g = gradient(x, t);
    const Mat2 hs = hessian(x, t);
    for (int d = 0; d < 2; ++d) {
      Vec2 dx = Vec2::Zero();
      dx[d] = e;
      const double fd = (value(x + dx, t) - value(x - dx, t)) / (2.0 * e);
      if (bad(fd, g[d])) throw TestFunctionError(name + ": gradient disagrees with finite differences");
      const Vec2 fh = (gradient(x + dx, t) - gradient(x - dx, t)) / (2.0 * e);
      for (int k = 0; k < 2; ++k)
        if (bad(fh[k], hs(k, d))) throw TestFunctionError(name + ": Hessian disagrees with finite differences");
    }
    const double ft = (value(x, t + et) - value(x, t - et)) / (2.0 * et);
    if (bad(ft, time_derivative(x, t))) throw TestFunctionError(name + ": time derivative disagrees with finite differences");
    ++done;
  }
  if (done < count) throw TestFunctionError(name + ": could not find points with u > 0");
}

TestFunction bump(const Vec2& c, double R) {
  TestFunction u;
  u.name = "bump";
  u.center = c;
  u.radius = R;
  u.time_independent = true;
  u.value = [c, R](const Vec2& x, double) {
    const double w = 1.0 - (x - c).squaredNorm() / (R * R);
    return w > 0.0 ? w * w * w : 0.0;
  };
  u.gradient = [c, R](const Vec2& x, double) -> Vec2 {
    const double w = 1.0 - (x - c).squaredNorm() / (R * R);
    return w > 0.0 ? Vec2(-6.0 * w * w * (x - c) / (R * R)) : Vec2::Zero();
  };
  u.hessian = [c, R](const Vec2& x, double) -> Mat2 {
    const Vec2 y = x - c;
    const double w = 1.0 - y.squaredNorm() / (R * R);
    if (w <= 0.0) return Mat2::Zero();
    return 24.0 * w * y * y.transpose() / (R * R * R * R) - 6.0 * w * w / (R * R) * Mat2::Identity();
  };
  u.time_derivative = [](const Vec2&, double) { return 0.0; };
  return u;
}

TestFunction growing_bump(const Vec2& c, double R, double rate) {
  const TestFunction b = bump(c, R);
  TestFunction u = b;
  u.name = "growing_bump";
  u.time_independent = false;
  u.value = [b, rate](const Vec2& x, double t) { return b.value(x, t) * (1.0 + rate * t); };
  u.gradient = [b, rate](const Vec2& x, double t) -> Vec2 { return b.gradient(x, t) * (1.0 + rate * t); };
  u.hessian = [b, rate](const Vec2& x, double t) -> Mat2 { return b.hessian(x, t) * (1.0 + rate * t); };
  u.time_derivative = [b, rate](const Vec2& x, double t) { return b.value(x, t) * rate; };
  return u;
}

TestFunction plateau(const Vec2& c, double r_in, double r_out) {
  if (!(0.0 < r_in && r_in < r_out)) throw TestFunctionError("plateau: need 0 < r_in < r_out");
  TestFunction u;
  u.name = "plateau";
  u.center = c;
  u.radius = r_out;
  u.time_independent = true;
  const double w = r_out - r_in;
  u.value = [=](const Vec2& x, double) { return quintic(((x - c).norm() - r_in) / w).q; };
  u.gradient = [=](const Vec2& x, double) {
    const Vec2 y = x - c;
    const double s = y.norm();
    return radial_gradient(y, s, quintic((s - r_in) / w).d1 / w);
  };
  u.hessian = [=](const Vec2& x, double) {
    const Vec2 y = x - c;
    const double s = y.norm();
    const Step q = quintic((s - r_in) / w);
    return radial_hessian(y, s, q.d1 / w, q.d2 / (w * w));
  };
  u.time_derivative = [](const Vec2&, double) { return 0.0; };
  return u;
}

TestFunction trace_function(const Vec2& c, double R) {
  TestFunction u;
  u.name = "trace";
  u.center = c;
  u.radius = R;
  u.value = [c, R](const Vec2& x, double t) { return std::max(0.0, R * R - (x - c).squaredNorm() - 4.0 * t); };
  u.gradient = [c, R](const Vec2& x, double t) -> Vec2 {
    return R * R - (x - c).squaredNorm() - 4.0 * t > 0.0 ? Vec2(-2.0 * (x - c)) : Vec2::Zero();
  };
  u.hessian = [c, R](const Vec2& x, double t) -> Mat2 {
    return R * R - (x - c).squaredNorm() - 4.0 * t > 0.0 ? Mat2(-2.0 * Mat2::Identity()) : Mat2::Zero();
  };
  u.time_derivative = [c, R](const Vec2& x, double t) {
    return R * R - (x - c).squaredNorm() - 4.0 * t > 0.0 ? -4.0 : 0.0;
  };
  return u;
}

nlohmann::json InequalityReport::to_json() const {
  nlohmann::json j = {{"lhs", lhs},      {"rhs", rhs},
                      {"residual", residual}, {"tol", tol},
                      {"verdict", pass ? "pass" : "fail"}, {"refinement_table", refinement_json(refinement)}};
  j["observed_order"] = observed_order ? nlohmann::json(*observed_order) : nlohmann::json(nullptr);
  return j;
}

InequalityReport brakke_inequality(const FlowTrajectory& traj, const TestFunction& u, double a, double b,
                                   const BrakkeOptions& opts) {
  return inequality(traj, u, a, b, false, opts);
}

InequalityReport brakke_inequality_moving(const FlowTrajectory& traj, const TestFunction& u, double a, double b,
                                          const BrakkeOptions& opts) {
  return inequality(traj, u, a, b, true, opts);
}

std::optional<double> observed_order(const std::vector<RefinementRow>& rows) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.residual != 0.0) pts.push_back({std::log(r.h + r.dt), std::log(std::abs(r.residual))});
  if (pts.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

InequalityReport brakke_refinement(const std::vector<const FlowTrajectory*>& trajs, const TestFunction& u, double a,
                                   double b, bool moving, const BrakkeOptions& opts) {
  if (trajs.empty()) throw std::invalid_argument("brakke_refinement needs at least one trajectory");
  InequalityReport last;
  std::vector<RefinementRow> rows;
  for (const auto* t : trajs) {
    last = inequality(*t, u, a, b, moving, opts);
    rows.push_back({t->h, t->dt, last.residual});
  }
  last.refinement = rows;
  last.observed_order = observed_order(rows);
  return last;
}

// ---------------------------------------------------------------------------

double trace_mass(const Network& network, const Vec2& c, double R, double t) {
  const double rr = R * R - 4.0 * t;
  if (rr <= 0.0) return 0.0;
  const double r = std::sqrt(rr);
  const MeasureView mv = measure_of(network);
  const auto& segs = mv.segments();
  return kernels::parallel::sum(segs.size(), [&](std::size_t i) {
    const auto& s = segs[i];
    const auto [s0, s1] = clip(s.a, s.b, c, r);
    if (!(s0 < s1)) return 0.0;
    const Vec2 d = s.b - s.a, p = s.a - c;
    const double val = (rr - p.squaredNorm()) * (s1 - s0) - p.dot(d) * (s1 * s1 - s0 * s0) -
                       d.squaredNorm() * (s1 * s1 * s1 - s0 * s0 * s0) / 3.0;
    return s.weight * d.norm() * val;
  });
}

nlohmann::json AreaBoundReport::to_json() const {
  return {{"times", times},
          {"mass", mass},
          {"allowance", allowance},
          {"boundary_count", boundary_count},
          {"worst_margin", worst_margin},
          {"tol", tol},
          {"verdict", pass ? "pass" : "fail"}};
}

AreaBoundReport area_bound_check(const FlowTrajectory& traj, const Vec2& center, double radius, double tol) {
  AreaBoundReport r;
  r.tol = tol;
  if (traj.snapshots.empty()) throw std::invalid_argument("area_bound_check needs snapshots");
  const double t0 = traj.start_time();
  for (const auto& s : traj.snapshots) {
    int count = 0;
    for (const auto& bp : s.network.boundary_points)
      if ((bp.position(s.time) - center).norm() <= radius) ++count;
    r.boundary_count = std::max(r.boundary_count, count);
  }
  const double m0 = trace_mass(traj.snapshots.front().network, center, radius, 0.0);
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.snapshots) {
    const double t = s.time - t0;
    r.times.push_back(t);
    r.mass.push_back(trace_mass(s.network, center, radius, t));
    r.allowance.push_back(m0 + t * radius * r.boundary_count);
    r.worst_margin = std::min(r.worst_margin, r.allowance.back() - r.mass.back());
  }
  r.pass = r.worst_margin >= -tol;
  return r;
}

nlohmann::json HSquaredReport::to_json() const {
  return {{"lhs", lhs},
          {"rhs", rhs},
          {"hessian_bound", hessian_bound},
          {"support_mass", support_mass},
          {"margin", margin},
          {"tol", tol},
          {"verdict", pass ? "pass" : "fail"}};
}

HSquaredReport h_squared_bound(const FlowTrajectory& traj, const TestFunction& u, double a, double b,
                               const ToleranceModel& tol) {
  if (!u.time_independent) throw TestFunctionError("h_squared_bound needs a time-independent test function");
  const auto snaps = window(traj, a, b);
  HSquaredReport r;
  r.lhs = 0.5 * trapezoid(snaps, [&](const FlowSnapshot& s) { return curvature_terms(s, u).first; });
  const int n = 81;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 x = u.center + u.radius * Vec2(-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1));
      const Eigen::SelfAdjointEigenSolver<Mat2> es(u.hessian(x, a), Eigen::EigenvaluesOnly);
      r.hessian_bound = std::max(r.hessian_bound, es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  for (const auto* s : snaps) r.support_mass = std::max(r.support_mass, measure_of(s->network).mass_in_ball(u.center, u.radius));
  r.rhs = mass_u(snaps.front()->network, u, a) - mass_u(snaps.back()->network, u, b) +
          (b - a) * r.hessian_bound * r.support_mass;
  r.margin = r.rhs - r.lhs;
  r.tol = tol(traj.h, traj.dt);
  r.pass = r.margin >= -r.tol;
  return r;
}

// ---------------------------------------------------------------------------

nlohmann::json AvoidanceReport::to_json() const {
  return {{"times", times},       {"distance", distance}, {"initial", initial},
          {"minimum", minimum},   {"positive", positive}, {"monotone", monotone},
          {"tol", tol},           {"verdict", pass ? "pass" : "fail"}};
}

FlowTrajectory graph_trajectory(const std::vector<GraphState>& states) {
  FlowTrajectory traj;
  for (const auto& g : states) {
    DiscreteCurve c;
    for (std::size_t i = 0; i < g.u.size(); ++i) c.vertices.push_back({g.x(i), g.u[i]});
    Network n;
    n.curves.push_back(std::move(c));
    traj.snapshots.push_back(make_snapshot(std::move(n), g.time));
  }
  if (!states.empty()) traj.h = states.front().dx();
  for (std::size_t i = 1; i < states.size(); ++i) traj.dt = std::max(traj.dt, states[i].time - states[i - 1].time);
  return traj;
}

AvoidanceReport avoidance_check(const FlowTrajectory& flow, const FlowTrajectory& barrier, const ToleranceModel& tol,
                                double time_match) {
  AvoidanceReport r;
  r.tol = tol(std::max(flow.h, barrier.h), std::max(flow.dt, barrier.dt));
  std::size_t j = 0;
  for (const auto& s : flow.snapshots) {
    while (j < barrier.snapshots.size() && barrier.snapshots[j].time < s.time - time_match) ++j;
    if (j == barrier.snapshots.size()) break;
    const auto& bs = barrier.snapshots[j];
    if (std::abs(bs.time - s.time) > time_match) continue;
    if (r.times.empty()) {
      // Hypotheses at the first shared time.
      if (network_distance(s.network, bs.network) <= 0.0) throw AvoidanceError("initial supports intersect");
      for (const auto& p : boundary_set(s.network, s.time))
        if (point_to_network(p, bs.network) <= 0.0) throw AvoidanceError("flow boundary touches the barrier");
      for (const auto& p : boundary_set(bs.network, bs.time))
        if (point_to_network(p, s.network) <= 0.0) throw AvoidanceError("barrier boundary touches the flow");
    }
    r.times.push_back(s.time);
    r.distance.push_back(network_distance(s.network, bs.network));
  }
  if (r.times.empty()) throw AvoidanceError("trajectories share no snapshot times");
  r.initial = r.distance.front();
  r.minimum = *std::min_element(r.distance.begin(), r.distance.end());
  r.positive = r.minimum > 0.0;
  r.monotone = r.minimum >= r.initial - r.tol;
  r.pass = r.positive && r.monotone;
  return r;
}

}  // namespace brakke
