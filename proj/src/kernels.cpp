#include "brakke/kernels.hpp"

#include <cmath>

namespace brakke::kernels {

Vec2 curvature_at(const Vec2& prev, const Vec2& here, const Vec2& next) {
  const Vec2 ep = next - here;
  const Vec2 em = here - prev;
  const double lp = ep.norm();
  const double lm = em.norm();
  if (lp < kDegenerateEdge || lm < kDegenerateEdge) {
    throw DegenerateEdge("degenerate edge in curvature evaluation; resample the curve");
  }
  return 2.0 * (ep / lp - em / lm) / (lp + lm);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double dd = d.squaredNorm();
  double s = dd > 0.0 ? (p - a).dot(d) / dd : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (p - (a + s * d)).norm();
}

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& p0, const Vec2& p1, const Vec2& q0, const Vec2& q1) {
  const Vec2 r = p1 - p0;
  const Vec2 s = q1 - q0;
  const double denom = cross2(r, s);
  if (denom == 0.0) return false;  // parallel: distance via endpoints
  const double t = cross2(q0 - p0, s) / denom;
  const double u = cross2(q0 - p0, r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

std::size_t edges_of(std::size_t n, bool closed) {
  if (n < 2) return 0;
  return closed ? n : n - 1;
}

// Best configuration among multisets whose smallest index is `first`.
struct TrigPartial {
  double norm2 = std::numeric_limits<double>::infinity();
  std::vector<int> idx;
  std::size_t count = 0;
};

void trig_recurse(int depth, int k, int lo, int n, const std::vector<double>& c, const std::vector<double>& s,
                  double sx, double sy, std::vector<int>& cur, TrigPartial& best) {
  if (depth == k) {
    ++best.count;
    const double n2 = sx * sx + sy * sy;
    if (n2 < best.norm2) {
      best.norm2 = n2;
      best.idx = cur;
    }
    return;
  }
  for (int j = lo; j < n; ++j) {
    cur[depth] = j;
    trig_recurse(depth + 1, k, j, n, c, s, sx + c[j], sy + s[j], cur, best);
  }
}

TrigPartial trig_from(int first, int k, int n, const std::vector<double>& c, const std::vector<double>& s) {
  TrigPartial best;
  std::vector<int> cur(static_cast<std::size_t>(k));
  cur[0] = first;
  trig_recurse(1, k, first, n, c, s, c[first], s[first], cur, best);
  return best;
}

void trig_grid(int n, double theta, std::vector<double>& ang, std::vector<double>& c, std::vector<double>& s) {
  ang.resize(static_cast<std::size_t>(n));
  c.resize(ang.size());
  s.resize(ang.size());
  for (int j = 0; j < n; ++j) {
    ang[j] = n == 1 ? 0.0 : -theta + 2.0 * theta * j / (n - 1);
    c[j] = std::cos(ang[j]);
    s[j] = std::sin(ang[j]);
  }
}

TrigGridResult trig_combine(const std::vector<TrigPartial>& parts, const std::vector<double>& ang) {
  TrigGridResult r;
  double best = std::numeric_limits<double>::infinity();
  const TrigPartial* arg = nullptr;
  for (const auto& p : parts) {
    r.configurations += p.count;
    if (p.norm2 < best) {
      best = p.norm2;
      arg = &p;
    }
  }
  r.min_norm = std::sqrt(best);
  if (arg) {
    for (int j : arg->idx) r.argmin.push_back(ang[j]);
  }
  return r;
}

struct TriangleTerms {
  double value;
  std::array<Vec3, 3> grad;
};

TriangleTerms triangle_terms(const Vec3& a, const Vec3& b, const Vec3& c, double lambda) {
  const Vec3 n = (b - a).cross(c - a);
  const double nn = n.norm();
  const double area = 0.5 * nn;
  if (area <= 1e-14) throw GeometryError("degenerate triangle in weighted area");
  const Vec3 nhat = n / nn;
  const double zbar = (a.z() + b.z() + c.z()) / 3.0;
  const double w = std::exp(-lambda * zbar);
  const Vec3 ez(0.0, 0.0, 1.0);
  TriangleTerms t;
  t.value = area * w;
  t.grad[0] = w * (0.5 * nhat.cross(c - b) - (lambda * area / 3.0) * ez);
  t.grad[1] = w * (0.5 * nhat.cross(a - c) - (lambda * area / 3.0) * ez);
  t.grad[2] = w * (0.5 * nhat.cross(b - a) - (lambda * area / 3.0) * ez);
  return t;
}

WeightedAreaTerms gather(std::size_t nv, std::span<const std::array<int, 3>> tris, const std::vector<TriangleTerms>& per) {
  WeightedAreaTerms out;
  out.gradient.assign(nv, Vec3::Zero());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    out.value += per[t].value;
    for (int k = 0; k < 3; ++k) out.gradient[static_cast<std::size_t>(tris[t][k])] += per[t].grad[k];
  }
  return out;
}

}  // namespace

double segment_distance(const Vec2& p0, const Vec2& p1, const Vec2& q0, const Vec2& q1) {
  if (segments_intersect(p0, p1, q0, q1)) return 0.0;
  return std::min({point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                   point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)});
}

// ---------------------------------------------------------------------------

namespace serial {

void curvature(std::span<const Vec2> v, bool closed, std::span<Vec2> out) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!closed && (i == 0 || i + 1 == n)) {
      out[i] = Vec2::Zero();
      continue;
    }
    out[i] = curvature_at(v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
  }
}

TrigGridResult trig_grid_min(int k, double theta, int n) {
  std::vector<double> ang, c, s;
  trig_grid(n, theta, ang, c, s);
  std::vector<TrigPartial> parts(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) parts[f] = trig_from(f, k, n, c, s);
  return trig_combine(parts, ang);
}

double polyline_distance(std::span<const Vec2> a, bool a_closed, std::span<const Vec2> b, bool b_closed) {
  const std::size_t ea = edges_of(a.size(), a_closed);
  const std::size_t eb = edges_of(b.size(), b_closed);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ea; ++i) {
    for (std::size_t j = 0; j < eb; ++j) {
      best = std::min(best, segment_distance(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()]));
    }
  }
  return best;
}

WeightedAreaTerms weighted_area(std::span<const Vec3> v, std::span<const std::array<int, 3>> tris, double lambda) {
  std::vector<TriangleTerms> per(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    per[t] = triangle_terms(v[tris[t][0]], v[tris[t][1]], v[tris[t][2]], lambda);
  }
  return gather(v.size(), tris, per);
}

}  // namespace serial

// ---------------------------------------------------------------------------

namespace parallel {

void curvature(std::span<const Vec2> v, bool closed, std::span<Vec2> out) {
  const long n = static_cast<long>(v.size());
  bool degenerate = false;
#pragma omp parallel for schedule(static) reduction(|| : degenerate)
  for (long i = 0; i < n; ++i) {
    if (!closed && (i == 0 || i + 1 == n)) {
      out[i] = Vec2::Zero();
      continue;
    }
    const Vec2& prev = v[(i + n - 1) % n];
    const Vec2& next = v[(i + 1) % n];
    const Vec2 ep = next - v[i];
    const Vec2 em = v[i] - prev;
    const double lp = ep.norm();
    const double lm = em.norm();
    if (lp < kDegenerateEdge || lm < kDegenerateEdge) {
      degenerate = true;
      out[i] = Vec2::Zero();
      continue;
    }
    out[i] = 2.0 * (ep / lp - em / lm) / (lp + lm);
  }
  if (degenerate) throw DegenerateEdge("degenerate edge in curvature evaluation; resample the curve");
}

TrigGridResult trig_grid_min(int k, double theta, int n) {
  std::vector<double> ang, c, s;
  trig_grid(n, theta, ang, c, s);
  std::vector<TrigPartial> parts(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
  for (int f = 0; f < n; ++f) parts[f] = trig_from(f, k, n, c, s);
  return trig_combine(parts, ang);
}

double polyline_distance(std::span<const Vec2> a, bool a_closed, std::span<const Vec2> b, bool b_closed) {
  const std::size_t ea = edges_of(a.size(), a_closed);
  const std::size_t eb = edges_of(b.size(), b_closed);
  double best = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(min : best)
  for (long i = 0; i < static_cast<long>(ea); ++i) {
    const Vec2& p0 = a[i];
    const Vec2& p1 = a[(i + 1) % a.size()];
    for (std::size_t j = 0; j < eb; ++j) {
      best = std::min(best, segment_distance(p0, p1, b[j], b[(j + 1) % b.size()]));
    }
  }
  return best;
}

WeightedAreaTerms weighted_area(std::span<const Vec3> v, std::span<const std::array<int, 3>> tris, double lambda) {
  std::vector<TriangleTerms> per(tris.size());
  bool degenerate = false;
#pragma omp parallel for schedule(static) reduction(|| : degenerate)
  for (long t = 0; t < static_cast<long>(tris.size()); ++t) {
    try {
      per[t] = triangle_terms(v[tris[t][0]], v[tris[t][1]], v[tris[t][2]], lambda);
    } catch (const GeometryError&) {
      degenerate = true;
    }
  }
  if (degenerate) throw GeometryError("degenerate triangle in weighted area");
  return gather(v.size(), tris, per);
}

}  // namespace parallel

}  // namespace brakke::kernels
