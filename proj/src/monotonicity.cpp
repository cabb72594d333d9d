#include "brakke/monotonicity.hpp"

#include "brakke/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace brakke {

namespace {

constexpr double kPi = std::numbers::pi;

// Portion of segment [a, b] inside the closed disk of radius r about 0, as
// parameters [s0, s1] in [0, 1]; empty when s0 >= s1.
std::pair<double, double> clip_to_disk(const Vec2& a, const Vec2& b, double r) {
  const Vec2 d = b - a;
  const double qa = d.squaredNorm();
  if (qa == 0.0) return {0.0, a.norm() <= r ? 1.0 : 0.0};
  const double qb = 2.0 * a.dot(d);
  const double qc = a.squaredNorm() - r * r;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return {1.0, 0.0};
  const double sq = std::sqrt(disc);
  const double s0 = std::max(0.0, (-qb - sq) / (2.0 * qa));
  const double s1 = std::min(1.0, (-qb + sq) / (2.0 * qa));
  return {s0, s1};
}

double dist_to_segments(const Vec2& p, const std::vector<WeightedSegment>& segs) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : segs) d = std::min(d, kernels::point_segment_distance(p, s.a, s.b));
  return d;
}

// Points every <= step along the segments, with their share of the weight.
struct WeightedPoint {
  Vec2 p;
  double w;
};

std::vector<WeightedPoint> sample_segments(const std::vector<WeightedSegment>& segs, double step) {
  std::vector<WeightedPoint> out;
  for (const auto& s : segs) {
    const double len = (s.b - s.a).norm();
    if (len == 0.0) continue;
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) / n;
      out.push_back({s.a + u * (s.b - s.a), s.weight * len / n});
    }
  }
  return out;
}

double hausdorff(const std::vector<WeightedSegment>& a, const std::vector<WeightedSegment>& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  double h = 0.0;
  for (const auto& p : sample_segments(a, 0.01)) h = std::max(h, dist_to_segments(p.p, b));
  for (const auto& p : sample_segments(b, 0.01)) h = std::max(h, dist_to_segments(p.p, a));
  return h;
}

// Groups angles (radians, any range) into clusters separated by gaps larger
// than `gap` on the circle. Returns index lists.
std::vector<std::vector<std::size_t>> cluster_angles(const std::vector<double>& ang, double gap) {
  std::vector<std::size_t> order(ang.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return ang[x] < ang[y]; });
  std::vector<std::vector<std::size_t>> clusters;
  if (order.empty()) return clusters;
  // Start after the first large gap so no cluster straddles the cut.
  std::size_t start = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double a = ang[order[k]];
    const double b = k + 1 < order.size() ? ang[order[k + 1]] : ang[order[0]] + 2.0 * kPi;
    if (b - a > gap) {
      start = (k + 1) % order.size();
      break;
    }
    if (k + 1 == order.size()) return {order};  // no gap at all: one cluster
  }
  std::vector<std::size_t> cur;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[(start + k) % order.size()];
    if (!cur.empty()) {
      double d = ang[i] - ang[cur.back()];
      if (d < 0.0) d += 2.0 * kPi;
      if (d > gap) {
        clusters.push_back(cur);
        cur.clear();
      }
    }
    cur.push_back(i);
  }
  clusters.push_back(cur);
  return clusters;
}

Vec2 mean_direction(const std::vector<WeightedPoint>& pts, const std::vector<std::size_t>& idx) {
  Vec2 d = Vec2::Zero();
  for (auto i : idx) d += pts[i].w * pts[i].p.normalized();
  return d.norm() > 0.0 ? Vec2(d.normalized()) : Vec2(1.0, 0.0);
}

}  // namespace

void KernelConfig::validate() const {
  if (m != 1) throw MonotonicityError("kernel dimension m must be 1 for curve networks");
  if (!(cutoff_inner > 0.0 && cutoff_inner < cutoff_outer)) throw MonotonicityError("need 0 < cutoff_inner < cutoff_outer");
  if (A < 0.0) throw MonotonicityError("A must be non-negative");
}

CutoffValue cutoff(double s, const KernelConfig& cfg) {
  if (!cfg.cutoff_enabled || s <= cfg.cutoff_inner) return {1.0, 0.0, 0.0};
  if (s >= cfg.cutoff_outer) return {0.0, 0.0, 0.0};
  const double w = cfg.cutoff_outer - cfg.cutoff_inner;
  const double u = (s - cfg.cutoff_inner) / w;
  const double v = 1.0 - u;
  return {v * v * v * (1.0 + 3.0 * u + 6.0 * u * u), -30.0 * u * u * v * v / w,
          -60.0 * u * v * (1.0 - 2.0 * u) / (w * w)};
}

double rho(const Vec2& x, double t, int m) {
  const double tau = -t;
  return std::pow(4.0 * kPi * tau, -0.5 * m) * std::exp(-x.squaredNorm() / (4.0 * tau));
}

KernelValue rho_hat(const Vec2& x, double t, const KernelConfig& cfg) {
  if (!(t < 0.0)) throw MonotonicityError("rho_hat needs t < 0");
  const double s = x.norm();
  const CutoffValue c = cutoff(s, cfg);
  if (c.phi == 0.0 && c.d1 == 0.0) return {};
  const double r = rho(x, t, cfg.m);
  const Vec2 grad_rho = -x * r / (2.0 * -t);
  KernelValue k;
  k.value = c.phi * r;
  k.gradient = c.phi * grad_rho;
  if (s > 0.0) k.gradient += r * c.d1 * x / s;
  return k;
}

double k_integrand(const Vec2& x, const Vec2& tau, double t, const KernelConfig& cfg) {
  const double s = x.norm();
  const CutoffValue c = cutoff(s, cfg);
  if (c.phi == 1.0 && c.d1 == 0.0 && c.d2 == 0.0) return 0.0;
  const double tt = -t;
  const double r = rho(x, t, cfg.m);
  const Vec2 grad_rho = -x * r / (2.0 * tt);
  const Vec2 x_perp = x - x.dot(tau) * tau;
  // |grad^perp rho|^2 / rho = rho |x^perp|^2 / (4 tau^2)
  const double perp = r * x_perp.squaredNorm() / (4.0 * tt * tt);
  const Vec2 xh = x / s;
  const Vec2 grad_phi = c.d1 * xh;
  const double along = tau.dot(xh);
  const double hess_phi_tt = c.d2 * along * along + (c.d1 / s) * (1.0 - along * along);
  return (1.0 - c.phi) * perp + 2.0 * tau.dot(grad_phi) * tau.dot(grad_rho) + r * hess_phi_tt;
}

double compute_K(const KernelConfig& cfg, double t_min, double t_max, const KGrid& grid) {
  if (!cfg.cutoff_enabled) return 0.0;
  if (!(t_min < 0.0 && t_max < 0.0)) throw MonotonicityError("compute_K needs negative times");
  if (t_min > t_max) std::swap(t_min, t_max);
  const double l0 = std::log(-t_max), l1 = std::log(-t_min);
  const int nt = std::max(grid.times, 1);
  const int nr = std::max(grid.radial, 2);
  const int na = std::max(grid.angular, 1);
  const double k = kernels::parallel::min(static_cast<std::size_t>(nt) * nr, [&](std::size_t idx) {
    const int it = static_cast<int>(idx / nr);
    const int ir = static_cast<int>(idx % nr);
    const double t = nt == 1 ? -std::exp(l0) : -std::exp(l0 + (l1 - l0) * it / (nt - 1));
    const double s = cfg.cutoff_inner + (cfg.cutoff_outer - cfg.cutoff_inner) * ir / (nr - 1);
    double best = 0.0;
    for (int ia = 0; ia < na; ++ia) {
      const double a = kPi * ia / na;
      best = std::max(best, std::abs(k_integrand({s, 0.0}, {std::cos(a), std::sin(a)}, t, cfg)));
    }
    return -best;
  });
  return -k * 1.05;
}

double mass_rho_hat(const Network& network, const SpacetimePoint& center, double time, const KernelConfig& cfg) {
  const double t = time - center.t;
  if (!(t < 0.0)) throw MonotonicityError("mass_rho_hat needs a time before the centre");
  const MeasureView mv = measure_of(network);
  const auto& segs = mv.segments();
  return kernels::parallel::sum(segs.size(), [&](std::size_t i) {
    const auto& s = segs[i];
    return rho_hat(0.5 * (s.a + s.b) - center.x, t, cfg).value * (s.b - s.a).norm() * s.weight;
  });
}

void MonotoneSeries::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t,value,mass_term,boundary_term,moving_term,ck_term\n" << std::setprecision(17);
  for (std::size_t i = 0; i < times.size(); ++i) {
    out << times[i] << ',' << values[i] << ',' << mass_term[i] << ',' << boundary_term[i] << ',' << moving_term[i]
        << ',' << ck_term[i] << '\n';
  }
}

DensityResult gaussian_density(const FlowTrajectory& traj, const SpacetimePoint& center, const KernelConfig& cfg,
                               const DensityOptions& opts) {
  cfg.validate();
  std::vector<const FlowSnapshot*> snaps;
  for (const auto& s : traj.snapshots)
    if (s.time < center.t) snaps.push_back(&s);
  if (snaps.size() < 3) throw MonotonicityError("too few snapshots before the centre time");

  DensityResult r;
  const double t_first = snaps.front()->time - center.t;
  const double t_last = snaps.back()->time - center.t;
  const auto [k_lo, k_hi] = opts.k_range.value_or(std::make_pair(t_first, t_last));
  r.K = compute_K(cfg, k_lo, k_hi);
  for (const auto* s : snaps) r.C = std::max(r.C, measure_of(s->network).mass_in_ball(center.x, cfg.cutoff_outer));

  auto boundary_rates = [&](const FlowSnapshot& s) {
    const double t = s.time - center.t;
    double b = 0.0, mv = 0.0;
    for (const auto& bv : s.nu) {
      const KernelValue k = rho_hat(bv.position - center.x, t, cfg);
      b += bv.nu.dot(k.gradient);
      if (opts.moving) {
        const BoundaryPoint* bp = s.network.find_boundary(bv.at);
        if (bp && bp->moving()) mv -= k.value * bv.nu.dot(bp->velocity(s.time));
      }
    }
    return std::make_pair(b, mv);
  };

  auto& ser = r.series;
  double ib = 0.0, imv = 0.0;
  std::pair<double, double> prev{0.0, 0.0};
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const double t = snaps[i]->time - center.t;
    const auto rates = boundary_rates(*snaps[i]);
    if (i > 0) {
      const double dt = t - ser.times.back();
      ib += 0.5 * (prev.first + rates.first) * dt;
      imv += 0.5 * (prev.second + rates.second) * dt;
    }
    prev = rates;
    const double m = mass_rho_hat(snaps[i]->network, center, snaps[i]->time, cfg);
    const double ck = r.C * r.K * t;
    ser.times.push_back(t);
    ser.mass_term.push_back(m);
    ser.boundary_term.push_back(ib);
    ser.moving_term.push_back(imv);
    ser.ck_term.push_back(ck);
    ser.values.push_back(std::exp(-cfg.m * cfg.A * cfg.A * t) * (m + ib + imv - ck));
  }

  if (opts.levels < 3) throw MonotonicityError("density extrapolation needs at least three levels");
  for (int k = 0; k < opts.levels; ++k) {
    const double tk = -opts.t0 * std::pow(4.0, -k);
    auto it = std::lower_bound(ser.times.begin(), ser.times.end(), tk);
    if (it == ser.times.end() || (it == ser.times.begin() && *it != tk)) {
      throw MonotonicityError("too few snapshots near the centre time");
    }
    const std::size_t j = static_cast<std::size_t>(it - ser.times.begin());
    double value;
    if (ser.times[j] == tk) {
      value = mass_rho_hat(snaps[j]->network, center, center.t + tk, cfg);
    } else {
      // Both bracketing networks evaluated at t_k, then blended.
      const double ta = ser.times[j - 1], tb = ser.times[j];
      const double th = (tk - ta) / (tb - ta);
      value = (1.0 - th) * mass_rho_hat(snaps[j - 1]->network, center, center.t + tk, cfg) +
              th * mass_rho_hat(snaps[j]->network, center, center.t + tk, cfg);
    }
    r.sample_times.push_back(tk);
    r.sample_values.push_back(value);
  }
  const std::size_t n = r.sample_values.size();
  const double f1 = r.sample_values[n - 3], f2 = r.sample_values[n - 2], f3 = r.sample_values[n - 1];
  const double r11 = 2.0 * f2 - f1, r12 = 2.0 * f3 - f2;
  r.density = (4.0 * r12 - r11) / 3.0;
  return r;
}

MonotonicityReport monotonicity_check(const std::vector<double>& values, double tol) {
  if (values.size() < 3) throw MonotonicityError("monotonicity check needs at least three values");
  MonotonicityReport r;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double up = values[i] - values[i - 1];
    if (up > r.max_uptick) {
      r.max_uptick = up;
      r.at = i;
    }
  }
  r.pass = r.max_uptick <= tol;
  return r;
}

MonotonicityReport monotonicity_check(const MonotoneSeries& series, double tol) {
  return monotonicity_check(series.values, tol);
}

// ---------------------------------------------------------------------------

std::string TangentFlowResult::label() const {
  switch (classification) {
    case TangentClass::Plane:
      return "plane";
    case TangentClass::Halfplane:
      return "halfplane_multiplicity_" + std::to_string(multiplicity);
    case TangentClass::ShrinkerLike:
      return "shrinker_like";
    case TangentClass::Unresolved:
      return "unresolved";
  }
  return "unresolved";
}

TangentFlowResult tangent_flow(const FlowTrajectory& traj, const SpacetimePoint& center,
                               const std::vector<double>& scales, const TangentFlowOptions& opts) {
  TangentFlowResult r;
  r.scales = scales;
  if (scales.empty()) {
    r.note = "no scales";
    return r;
  }
  if (!std::is_sorted(scales.begin(), scales.end()) || scales.front() <= 0.0)
    throw MonotonicityError("tangent_flow scales must be positive and increasing");

  std::vector<std::vector<WeightedSegment>> full(scales.size());
  std::vector<double> rescaled_time(scales.size(), 0.0);
  bool resolved = true;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const double lam = scales[k];
    const double target = center.t - 1.0 / (lam * lam);
    const FlowSnapshot* best = nullptr;
    for (const auto& s : traj.snapshots) {
      if (s.time >= center.t) continue;
      if (!best || std::abs(s.time - target) < std::abs(best->time - target)) best = &s;
    }
    if (!best || std::abs(best->time - target) > opts.time_match / (lam * lam)) {
      resolved = false;
      r.snapshot_times.push_back(best ? best->time : center.t);
      r.rescaled.emplace_back();
      continue;
    }
    r.snapshot_times.push_back(best->time);
    rescaled_time[k] = lam * lam * (best->time - center.t);
    std::vector<WeightedSegment> clipped;
    const MeasureView mv = measure_of(best->network);
    for (const auto& s : mv.segments()) {
      const Vec2 a = lam * (s.a - center.x), b = lam * (s.b - center.x);
      full[k].push_back({a, b, s.weight});
      const auto [s0, s1] = clip_to_disk(a, b, opts.view_radius);
      if (s0 < s1) clipped.push_back({a + s0 * (b - a), a + s1 * (b - a), s.weight});
    }
    r.rescaled.push_back(std::move(clipped));
  }
  for (std::size_t k = 1; k < scales.size(); ++k) r.hausdorff.push_back(hausdorff(r.rescaled[k - 1], r.rescaled[k]));

  if (!resolved) {
    r.note = "trajectory does not resolve every requested scale";
    return r;
  }
  // Un-cut-off Gaussian mass at the largest scale (rescaled time ~ -1).
  {
    const auto& segs = full.back();
    const double t = rescaled_time.back();
    r.density_estimate = kernels::serial::sum(segs.size(), [&](std::size_t i) {
      const auto& s = segs[i];
      return rho(0.5 * (s.a + s.b), t, 1) * (s.b - s.a).norm() * s.weight;
    });
  }
  if (r.density_estimate < 0.25) {
    r.note = "no mass near the centre";
    return r;
  }
  if (scales.size() < 2 || !(r.hausdorff.back() < opts.converge_tol)) {
    r.note = "rescalings have not converged";
    return r;
  }

  // Ray structure of the last rescaling inside the annulus.
  std::vector<WeightedPoint> pts;
  for (const auto& p : sample_segments(r.rescaled.back(), 0.01)) {
    const double n = p.p.norm();
    if (n >= opts.annulus_inner && n <= opts.view_radius) pts.push_back(p);
  }
  std::vector<double> ang;
  for (const auto& p : pts) ang.push_back(std::atan2(p.p.y(), p.p.x()));
  bool rays_ok = !pts.empty();
  for (const auto& c : cluster_angles(ang, opts.cluster_gap)) {
    const Vec2 d = mean_direction(pts, c);
    double mass = 0.0;
    for (auto i : c) {
      const Vec2& p = pts[i].p;
      const double perp = std::abs(d.x() * p.y() - d.y() * p.x());
      if (perp > opts.ray_tol * p.norm() || d.dot(p) <= 0.0) rays_ok = false;
      mass += pts[i].w;
    }
    const double len = opts.view_radius - opts.annulus_inner;
    r.rays.push_back({d, static_cast<int>(std::lround(mass / len)), mass});
  }
  if (!rays_ok) {
    r.rays.clear();
    r.classification = TangentClass::ShrinkerLike;
    r.note = "converged to a non-conical limit";
    return r;
  }
  if (r.rays.size() == 1 && r.rays[0].multiplicity >= 1) {
    r.multiplicity = r.rays[0].multiplicity;
    if (std::abs(r.density_estimate - 0.5 * r.multiplicity) < 0.1) {
      r.classification = TangentClass::Halfplane;
    } else {
      r.note = "single ray but density does not match its multiplicity";
    }
    return r;
  }
  if (r.rays.size() == 2 && r.rays[0].multiplicity == 1 && r.rays[1].multiplicity == 1 &&
      r.rays[0].direction.dot(r.rays[1].direction) < std::cos(kPi - 0.1)) {
    r.classification = TangentClass::Plane;
    return r;
  }
  r.classification = TangentClass::ShrinkerLike;
  r.note = "union of rays that is not a line or half-line";
  return r;
}

// ---------------------------------------------------------------------------

WedgeResult wedge_test(const DiscreteVarifold& v, const Vec2& edge_point, double opening_limit, double tol,
                       double cluster_gap) {
  if (v.samples.empty()) throw MonotonicityError("wedge_test needs a non-empty varifold");
  WedgeResult r;
  std::vector<WeightedPoint> pts;
  std::vector<double> ang;
  for (const auto& s : v.samples) {
    const Vec2 p = s.point - edge_point;
    if (p.norm() <= tol) continue;
    pts.push_back({p, s.weight});
    ang.push_back(std::atan2(p.y(), p.x()));
  }
  if (pts.empty()) return r;

  std::vector<double> sorted = ang;
  std::sort(sorted.begin(), sorted.end());
  // Largest gap between consecutive directions, including the wrap-around.
  double gap = sorted.front() + 2.0 * kPi - sorted.back();
  double lo = sorted.front(), hi = sorted.back();
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double g = sorted[i] - sorted[i - 1];
    if (g > gap) {
      gap = g;
      lo = sorted[i];
      hi = sorted[i - 1];
    }
  }
  r.opening = 2.0 * kPi - gap;
  r.edge_a = {std::cos(lo), std::sin(lo)};
  r.edge_b = {std::cos(hi), std::sin(hi)};
  r.contained = r.opening < std::min(opening_limit, kPi) - 1e-6;
  if (!r.contained) return r;

  const auto clusters = cluster_angles(ang, cluster_gap);
  if (clusters.size() > 3) return r;
  std::vector<Ray> rays;
  int total = 0;
  for (const auto& c : clusters) {
    const Vec2 d = mean_direction(pts, c);
    double mass = 0.0, rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (auto i : c) {
      mass += pts[i].w;
      rmin = std::min(rmin, pts[i].p.norm());
      rmax = std::max(rmax, pts[i].p.norm());
    }
    // Midpoint samples of a ray [0, R] span [h/2, R - h/2].
    const int mult = static_cast<int>(std::lround(mass / (rmax + rmin)));
    rays.push_back({d, mult, mass});
    r.nu -= mult * d;
    total += mult;
  }
  r.decomposition = rays;
  r.standard = r.nu.norm() <= 1.0 + 1e-6 && total % 2 == 1;
  return r;
}

}  // namespace brakke
