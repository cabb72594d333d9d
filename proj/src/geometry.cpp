#include "brakke/geometry.hpp"

#include "brakke/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace brakke {

bool is_free(const EndpointConstraint& c) { return std::holds_alternative<FreeEnd>(c); }

std::optional<std::string> boundary_id(const EndpointConstraint& c) {
  if (const auto* f = std::get_if<FixedBoundary>(&c)) return f->id;
  if (const auto* m = std::get_if<MovingBoundary>(&c)) return m->id;
  return std::nullopt;
}

std::optional<std::string> junction_id(const EndpointConstraint& c) {
  if (const auto* j = std::get_if<JunctionEnd>(&c)) return j->id;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::size_t DiscreteCurve::edge_count() const {
  if (vertices.size() < 2) return 0;
  return closed ? vertices.size() : vertices.size() - 1;
}

double DiscreteCurve::length() const {
  double l = 0.0;
  for (std::size_t e = 0; e < edge_count(); ++e) l += (edge_end(e) - edge_start(e)).norm();
  return l;
}

double DiscreteCurve::min_edge() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < edge_count(); ++e) m = std::min(m, (edge_end(e) - edge_start(e)).norm());
  return m;
}

double DiscreteCurve::max_edge() const {
  double m = 0.0;
  for (std::size_t e = 0; e < edge_count(); ++e) m = std::max(m, (edge_end(e) - edge_start(e)).norm());
  return m;
}

// ---------------------------------------------------------------------------

BoundaryTrajectory::BoundaryTrajectory(std::vector<Sample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw GeometryError("boundary trajectory needs at least one sample");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!samples_[i].x.allFinite() || !std::isfinite(samples_[i].t)) {
      throw GeometryError("boundary trajectory sample is not finite");
    }
    if (i > 0 && !(samples_[i].t > samples_[i - 1].t)) {
      throw GeometryError("boundary trajectory times must be strictly increasing");
    }
  }
}

Vec2 BoundaryTrajectory::tangent(std::size_t i) const {
  const std::size_t n = samples_.size();
  if (n == 1) return Vec2::Zero();
  if (i == 0) return (samples_[1].x - samples_[0].x) / (samples_[1].t - samples_[0].t);
  if (i + 1 == n) return (samples_[n - 1].x - samples_[n - 2].x) / (samples_[n - 1].t - samples_[n - 2].t);
  return (samples_[i + 1].x - samples_[i - 1].x) / (samples_[i + 1].t - samples_[i - 1].t);
}

std::size_t BoundaryTrajectory::segment(double t) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const Sample& s) { return v < s.t; });
  std::size_t i = static_cast<std::size_t>(std::distance(samples_.begin(), it));
  return i == 0 ? 0 : std::min(i - 1, samples_.size() - 2);
}

Vec2 BoundaryTrajectory::position(double t) const {
  const std::size_t n = samples_.size();
  if (n == 1) return samples_[0].x;
  if (t <= samples_.front().t) return samples_.front().x + (t - samples_.front().t) * tangent(0);
  if (t >= samples_.back().t) return samples_.back().x + (t - samples_.back().t) * tangent(n - 1);
  const std::size_t i = segment(t);
  const double h = samples_[i + 1].t - samples_[i].t;
  const double s = (t - samples_[i].t) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * samples_[i].x + (s3 - 2 * s2 + s) * h * tangent(i) +
         (-2 * s3 + 3 * s2) * samples_[i + 1].x + (s3 - s2) * h * tangent(i + 1);
}

Vec2 BoundaryTrajectory::velocity(double t) const {
  const std::size_t n = samples_.size();
  if (n == 1) return Vec2::Zero();
  if (t <= samples_.front().t) return tangent(0);
  if (t >= samples_.back().t) return tangent(n - 1);
  const std::size_t i = segment(t);
  const double h = samples_[i + 1].t - samples_[i].t;
  const double s = (t - samples_[i].t) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * samples_[i].x + (3 * s2 - 4 * s + 1) * h * tangent(i) +
          (-6 * s2 + 6 * s) * samples_[i + 1].x + (3 * s2 - 2 * s) * h * tangent(i + 1)) /
         h;
}

Vec2 BoundaryPoint::position(double t) const {
  if (const auto* p = std::get_if<Vec2>(&where)) return *p;
  return std::get<BoundaryTrajectory>(where).position(t);
}

Vec2 BoundaryPoint::velocity(double t) const {
  if (std::holds_alternative<Vec2>(where)) return Vec2::Zero();
  return std::get<BoundaryTrajectory>(where).velocity(t);
}

// ---------------------------------------------------------------------------

const BoundaryPoint* Network::find_boundary(const std::string& id) const {
  for (const auto& b : boundary_points)
    if (b.id == id) return &b;
  return nullptr;
}

const Junction* Network::find_junction(const std::string& id) const {
  for (const auto& j : junctions)
    if (j.id == id) return &j;
  return nullptr;
}

Junction* Network::find_junction(const std::string& id) {
  for (auto& j : junctions)
    if (j.id == id) return &j;
  return nullptr;
}

bool Network::has_moving_boundary() const {
  return std::any_of(boundary_points.begin(), boundary_points.end(), [](const auto& b) { return b.moving(); });
}

void Network::validate(double time) const {
  std::map<std::string, int> junction_refs, boundary_refs;
  for (const auto& j : junctions) {
    if (!j.point.allFinite()) throw GeometryError("junction '" + j.id + "' has non-finite position");
    junction_refs[j.id] = 0;
  }
  for (const auto& b : boundary_points) boundary_refs[b.id] = 0;

  auto check_end = [&](const EndpointConstraint& c, const Vec2& at) {
    if (auto bid = boundary_id(c)) {
      const BoundaryPoint* b = find_boundary(*bid);
      if (!b) throw GeometryError("curve references unknown boundary point '" + *bid + "'");
      if (std::holds_alternative<MovingBoundary>(c) != b->moving()) {
        throw GeometryError("constraint kind does not match boundary point '" + *bid + "'");
      }
      if ((b->position(time) - at).norm() > kCoincidenceTol) {
        throw GeometryError("curve end does not coincide with boundary point '" + *bid + "'");
      }
      ++boundary_refs[*bid];
    } else if (auto jid = junction_id(c)) {
      const Junction* j = find_junction(*jid);
      if (!j) throw GeometryError("curve references unknown junction '" + *jid + "'");
      if ((j->point - at).norm() > kCoincidenceTol) {
        throw GeometryError("curve end does not coincide with junction '" + *jid + "'");
      }
      ++junction_refs[*jid];
    }
  };

  for (const auto& c : curves) {
    if (c.multiplicity < 1) throw GeometryError("curve multiplicity must be >= 1");
    const std::size_t need = c.closed ? 3 : 2;
    if (c.vertices.size() < need) throw GeometryError("curve has too few vertices");
    for (const auto& v : c.vertices)
      if (!v.allFinite()) throw GeometryError("curve vertex is not finite");
    for (std::size_t e = 0; e < c.edge_count(); ++e) {
      if ((c.edge_end(e) - c.edge_start(e)).norm() == 0.0) throw GeometryError("consecutive curve vertices coincide");
    }
    if (c.closed) {
      if (!is_free(c.start) || !is_free(c.end)) throw GeometryError("closed curves cannot carry endpoint constraints");
      continue;
    }
    check_end(c.start, c.vertices.front());
    check_end(c.end, c.vertices.back());
  }
  for (const auto& [id, n] : junction_refs)
    if (n < 2) throw GeometryError("junction '" + id + "' is referenced by fewer than two curve ends");
  if (!curves.empty()) {
    for (const auto& [id, n] : boundary_refs)
      if (n < 1) throw GeometryError("boundary point '" + id + "' is not referenced by any curve end");
  }
}

Network merge(const Network& a, const Network& b, const std::string& prefix) {
  Network out = a;
  auto rename = [&](EndpointConstraint c) -> EndpointConstraint {
    return std::visit(
        [&](auto v) -> EndpointConstraint {
          using T = decltype(v);
          if constexpr (std::is_same_v<T, FreeEnd>) {
            return v;
          } else {
            v.id = prefix + v.id;
            return v;
          }
        },
        c);
  };
  for (auto c : b.curves) {
    c.start = rename(c.start);
    c.end = rename(c.end);
    out.curves.push_back(std::move(c));
  }
  for (auto bp : b.boundary_points) {
    bp.id = prefix + bp.id;
    out.boundary_points.push_back(std::move(bp));
  }
  for (auto j : b.junctions) {
    j.id = prefix + j.id;
    out.junctions.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------------------

MeasureView::MeasureView(std::vector<WeightedSegment> segments) : segments_(std::move(segments)) {
  for (const auto& s : segments_) total_ += s.weight * (s.b - s.a).norm();
}

double segment_length_in_ball(const Vec2& a, const Vec2& b, const Vec2& center, double radius) {
  const Vec2 d = b - a;
  const Vec2 f = a - center;
  const double A = d.squaredNorm();
  if (A == 0.0) return 0.0;
  const double B = 2.0 * d.dot(f);
  const double C = f.squaredNorm() - radius * radius;
  const double disc = B * B - 4.0 * A * C;
  if (disc <= 0.0) return 0.0;
  const double sq = std::sqrt(disc);
  const double s1 = std::max(0.0, (-B - sq) / (2.0 * A));
  const double s2 = std::min(1.0, (-B + sq) / (2.0 * A));
  return s2 > s1 ? std::sqrt(A) * (s2 - s1) : 0.0;
}

double MeasureView::mass_in_ball(const Vec2& center, double radius) const {
  double m = 0.0;
  for (const auto& s : segments_) m += s.weight * segment_length_in_ball(s.a, s.b, center, radius);
  return m;
}

MeasureView measure_of(const Network& network) {
  std::vector<WeightedSegment> segs;
  for (const auto& c : network.curves) {
    for (std::size_t e = 0; e < c.edge_count(); ++e) {
      segs.push_back({c.edge_start(e), c.edge_end(e), static_cast<double>(c.multiplicity)});
    }
  }
  return MeasureView(std::move(segs));
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::size_t, Vec2>> curvature_vectors(const DiscreteCurve& curve) {
  const std::size_t n = curve.vertices.size();
  if (n < 3) throw GeometryError("curvature needs at least three vertices");
  std::vector<Vec2> h(n);
  kernels::parallel::curvature(curve.vertices, curve.closed, h);
  std::vector<std::pair<std::size_t, Vec2>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!curve.closed && (i == 0 || i + 1 == n)) continue;
    out.emplace_back(i, h[i]);
  }
  return out;
}

std::vector<double> vertex_weights(const DiscreteCurve& curve) {
  const std::size_t n = curve.vertices.size();
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) {
    if (!curve.closed && (i == 0 || i + 1 == n)) continue;
    const Vec2& prev = curve.vertices[(i + n - 1) % n];
    const Vec2& next = curve.vertices[(i + 1) % n];
    w.push_back(curve.multiplicity * 0.5 * ((next - curve.vertices[i]).norm() + (curve.vertices[i] - prev).norm()));
  }
  return w;
}

// ---------------------------------------------------------------------------

namespace {

double turning_angle(const Vec2& prev, const Vec2& here, const Vec2& next) {
  const Vec2 a = here - prev;
  const Vec2 b = next - here;
  return std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
}

// Uniform arc-length samples of the open path `pts`, excluding the last point.
// With shift = 0.5 the first point is dropped and every sample sits midway
// between the uniform positions, so no vertex of a closed loop is special.
void sample_path(const std::vector<Vec2>& pts, double target_h, std::vector<Vec2>& out, std::vector<char>& movable,
                 double shift = 0.0) {
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double len = cum.back();
  const int m = std::max(1, static_cast<int>(std::lround(len / target_h)));
  if (shift == 0.0) {
    out.push_back(pts.front());
    movable.push_back(0);
  }
  std::size_t seg = 0;
  for (int k = shift == 0.0 ? 1 : 0; k < m; ++k) {
    const double s = len * (k + shift) / m;
    while (seg + 2 < cum.size() && cum[seg + 1] < s) ++seg;
    const double el = cum[seg + 1] - cum[seg];
    const double f = el > 0.0 ? (s - cum[seg]) / el : 0.0;
    out.push_back(pts[seg] + f * (pts[seg + 1] - pts[seg]));
    movable.push_back(1);
  }
}

double polyline_length(const std::vector<Vec2>& v, bool closed) {
  double l = 0.0;
  const std::size_t n = v.size();
  const std::size_t edges = closed ? n : n - 1;
  for (std::size_t e = 0; e < edges; ++e) l += (v[(e + 1) % n] - v[e]).norm();
  return l;
}

void restore_length(std::vector<Vec2>& v, const std::vector<char>& movable, bool closed, double target) {
  const std::size_t n = v.size();
  if (n < 3) return;
  std::vector<Vec2> h(n, Vec2::Zero());
  double dlds = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!movable[i]) continue;
    if (!closed && (i == 0 || i + 1 == n)) continue;
    const Vec2& prev = v[(i + n - 1) % n];
    const Vec2& next = v[(i + 1) % n];
    h[i] = kernels::curvature_at(prev, v[i], next);
    dlds += 0.5 * ((next - v[i]).norm() + (v[i] - prev).norm()) * h[i].squaredNorm();
  }
  const double l0 = polyline_length(v, closed);
  if (dlds <= 0.0 || std::abs(target - l0) <= 1e-14 * target) return;

  // Secant iteration on s for length(v - s H) = target; the first step is the
  // first-variation estimate dL/ds = sum w |H|^2.
  const std::vector<Vec2> base = v;
  auto length_at = [&](double s) {
    std::vector<Vec2> w = base;
    for (std::size_t i = 0; i < n; ++i) w[i] -= s * h[i];
    return polyline_length(w, closed);
  };
  double s0 = 0.0, f0 = l0 - target;
  double s1 = (target - l0) / dlds, f1 = length_at(s1) - target;
  for (int it = 0; it < 50 && std::abs(f1) > 1e-14 * target && f1 != f0; ++it) {
    const double s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
    s0 = s1;
    f0 = f1;
    s1 = s2;
    f1 = length_at(s1) - target;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = base[i] - s1 * h[i];
}

}  // namespace

DiscreteCurve resample(const DiscreteCurve& curve, double target_h, const ResampleOptions& opts) {
  if (!(target_h > 0.0)) throw GeometryError("resample target_h must be positive");
  const auto& v = curve.vertices;
  const std::size_t n = v.size();
  if (n < 2) throw GeometryError("resample needs at least two vertices");
  DiscreteCurve out = curve;
  const double length = curve.length();

  if (!curve.closed && length < target_h) {
    out.vertices = {v.front(), v.back()};
    return out;
  }

  std::vector<std::size_t> keep;
  if (!curve.closed) keep.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!curve.closed && (i == 0 || i + 1 == n)) continue;
    if (std::abs(turning_angle(v[(i + n - 1) % n], v[i], v[(i + 1) % n])) > opts.feature_angle) keep.push_back(i);
  }
  if (!curve.closed) keep.push_back(n - 1);

  std::vector<Vec2> nv;
  std::vector<char> movable;
  if (curve.closed) {
    const double h = std::min(target_h, length / 3.0);
    if (keep.empty()) {
      std::vector<Vec2> path(v.begin(), v.end());
      path.push_back(v.front());
      sample_path(path, h, nv, movable, 0.5);
    } else {
      for (std::size_t k = 0; k < keep.size(); ++k) {
        const std::size_t a = keep[k];
        const std::size_t b = keep[(k + 1) % keep.size()];
        std::vector<Vec2> path{v[a]};
        std::size_t i = a;
        do {
          i = (i + 1) % n;
          path.push_back(v[i]);
        } while (i != b);
        sample_path(path, h, nv, movable);
      }
    }
    if (nv.size() < 3) {
      // Short loop: fall back to three points at thirds of the length.
      std::vector<Vec2> path(v.begin(), v.end());
      path.push_back(v.front());
      nv.clear();
      movable.clear();
      sample_path(path, length / 3.0, nv, movable);
      movable.assign(nv.size(), 1);
    }
  } else {
    for (std::size_t k = 0; k + 1 < keep.size(); ++k) {
      std::vector<Vec2> path(v.begin() + static_cast<long>(keep[k]), v.begin() + static_cast<long>(keep[k + 1]) + 1);
      sample_path(path, target_h, nv, movable);
    }
    nv.push_back(v.back());
    movable.push_back(0);
  }

  if (opts.preserve_length) restore_length(nv, movable, curve.closed, length);
  out.vertices = std::move(nv);
  return out;
}

}  // namespace brakke
