#include "brakke/regularize.hpp"

#include "brakke/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace brakke {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double tri_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }

double tri_area(const TriMesh& m, const std::array<int, 3>& t) {
  return tri_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
}

double angle_at(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 u = a - p;
  const Vec3 v = b - p;
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

double min_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  return std::min({angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)});
}

double weighted_value(const TriMesh& m, double lambda) {
  double v = 0.0;
  for (const auto& t : m.triangles) {
    const Vec3& a = m.vertices[t[0]];
    const Vec3& b = m.vertices[t[1]];
    const Vec3& c = m.vertices[t[2]];
    v += tri_area(a, b, c) * std::exp(-lambda * (a.z() + b.z() + c.z()) / 3.0);
  }
  return v;
}

// Per-vertex pin lookup.
std::vector<const Pin*> pin_table(const TriMesh& m) {
  std::vector<const Pin*> t(m.vertices.size(), nullptr);
  for (const auto& [v, pin] : m.pinned) t[static_cast<std::size_t>(v)] = &pin;
  return t;
}

// Per-vertex quantities of the descent step. `raw` is minus the gradient over
// the lumped weighted area, with weights taken relative to the vertex so
// nothing underflows high up the mesh; the gradient itself is
// -scale * wsum * raw.
struct StepField {
  std::vector<Vec3> raw;        // -grad / wsum before projection
  std::vector<Vec3> direction;  // projected
  std::vector<Vec3> normal;
  std::vector<double> wsum;   // lumped weighted area relative to scale
  std::vector<double> scale;  // exp(-lambda z)
  std::vector<double> area;   // plain lumped area
  std::vector<double> h2;     // squared shortest incident edge
  std::vector<double> zbar, tri_area;
  std::vector<std::array<Vec3, 3>> g;
};

void step_field(const TriMesh& m, double lambda, StepField& f) {
  const std::size_t nv = m.vertices.size();
  const std::size_t nt = m.triangles.size();
  f.zbar.resize(nt);
  f.tri_area.resize(nt);
  f.g.resize(nt);
  f.normal.assign(nv, Vec3::Zero());
  f.h2.assign(nv, std::numeric_limits<double>::infinity());
  const Vec3 ez(0.0, 0.0, 1.0);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tr = m.triangles[t];
    const Vec3& a = m.vertices[tr[0]];
    const Vec3& b = m.vertices[tr[1]];
    const Vec3& c = m.vertices[tr[2]];
    const Vec3 cr = (b - a).cross(c - a);
    const double area = 0.5 * cr.norm();
    const Vec3 nhat = cr / (2.0 * area);
    f.tri_area[t] = area;
    f.zbar[t] = (a.z() + b.z() + c.z()) / 3.0;
    f.g[t][0] = 0.5 * nhat.cross(c - b) - (lambda * area / 3.0) * ez;
    f.g[t][1] = 0.5 * nhat.cross(a - c) - (lambda * area / 3.0) * ez;
    f.g[t][2] = 0.5 * nhat.cross(b - a) - (lambda * area / 3.0) * ez;
    const double e[3] = {(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()};
    for (int k = 0; k < 3; ++k) {
      f.normal[tr[k]] += cr;
      f.h2[tr[k]] = std::min({f.h2[tr[k]], e[k], e[(k + 2) % 3]});
    }
  }
  f.raw.assign(nv, Vec3::Zero());
  f.wsum.assign(nv, 0.0);
  f.area.assign(nv, 0.0);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tr = m.triangles[t];
    // Weights exp(-lambda (zbar - z_k)) relative to each corner, from two
    // exponentials of edge differences.
    const double za = m.vertices[tr[0]].z(), zb = m.vertices[tr[1]].z(), zc = m.vertices[tr[2]].z();
    const double A = std::exp(-lambda * (zb - za) / 3.0);
    const double B = std::exp(-lambda * (zc - za) / 3.0);
    const double w[3] = {A * B, B / (A * A), A / (B * B)};
    for (int k = 0; k < 3; ++k) {
      f.raw[tr[k]] -= w[k] * f.g[t][k];
      f.wsum[tr[k]] += w[k] * f.tri_area[t] / 3.0;
      f.area[tr[k]] += f.tri_area[t] / 3.0;
    }
  }
  f.scale.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    if (f.wsum[v] > 0.0) f.raw[v] /= f.wsum[v];
    const double n = f.normal[v].norm();
    f.normal[v] = n > 0.0 ? Vec3(f.normal[v] / n) : Vec3::Zero();
    f.scale[v] = std::exp(-lambda * m.vertices[v].z());
  }
}

// Normal part of the raw direction; pinned vertices keep only its free
// coordinates, since sliding along a ray or the top plane just reparametrizes
// the surface.
void project(const std::vector<const Pin*>& pins, StepField& f) {
  f.direction.resize(f.raw.size());
  for (std::size_t v = 0; v < f.raw.size(); ++v) {
    const Vec3& n = f.normal[v];
    const double vn = f.raw[v].dot(n);
    Vec3 d = vn * n;
    if (!pins[v]) {
      // On steep parts move horizontally with the same normal speed, so rings
      // keep their height instead of crowding upwards.
      const Vec3 nh(n.x(), n.y(), 0.0);
      const double s = nh.squaredNorm();
      if (s > 0.25) {
        const Vec3 h = (vn / s) * nh;
        if (f.raw[v].dot(h) >= 0.5 * vn * vn) d = h;
      }
    } else {
      switch (pins[v]->kind) {
        case PinKind::InitialCurve:
        case PinKind::Corner:
          d.setZero();
          break;
        case PinKind::BoundaryRay:
          d.x() = 0.0;
          d.y() = 0.0;
          break;
        case PinKind::TopPlane:
          d.z() = 0.0;
          break;
      }
    }
    f.direction[v] = d;
  }
}

double residual_of(const std::vector<const Pin*>& pins, const StepField& f) {
  double num = 0.0, den = 0.0;
  for (std::size_t v = 0; v < pins.size(); ++v) {
    if (pins[v]) continue;
    const double vn = f.direction[v].dot(f.normal[v]);
    num += f.area[v] * vn * vn;
    den += f.area[v];
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

void enforce_pins(const std::vector<const Pin*>& pins, std::vector<Vec3>& x, double z_max) {
  for (std::size_t v = 0; v < x.size(); ++v) {
    Vec3& p = x[v];
    if (!pins[v]) {
      p.z() = std::clamp(p.z(), 0.0, z_max);
      continue;
    }
    const Vec3& a = pins[v]->anchor;
    switch (pins[v]->kind) {
      case PinKind::InitialCurve:
      case PinKind::Corner:
        p = a;
        break;
      case PinKind::BoundaryRay:
        p.x() = a.x();
        p.y() = a.y();
        p.z() = std::clamp(p.z(), 0.0, z_max);
        break;
      case PinKind::TopPlane:
        p.z() = a.z();
        break;
    }
  }
}

// Weighted area of the triangles over the given positions; NaN if one of
// them is degenerate.
double trial_value(const std::vector<Vec3>& x, const std::vector<std::array<int, 3>>& tris, double lambda,
                   std::vector<double>& e) {
  e.resize(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) e[v] = std::exp(-lambda * x[v].z() / 3.0);
  double v = 0.0;
  for (const auto& t : tris) {
    const double area = tri_area(x[t[0]], x[t[1]], x[t[2]]);
    if (!(area > kDegenerateTriangle)) return std::numeric_limits<double>::quiet_NaN();
    v += area * e[t[0]] * e[t[1]] * e[t[2]];
  }
  return v;
}

using EdgeKey = std::pair<int, int>;
EdgeKey edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

// One pass of edge flips; returns the number of flips.
int flip_pass(TriMesh& m, double lambda) {
  std::map<EdgeKey, std::vector<std::pair<int, int>>> edges;  // edge -> (triangle, local index of first end)
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    for (int k = 0; k < 3; ++k) edges[edge_key(m.triangles[t][k], m.triangles[t][(k + 1) % 3])].push_back({t, k});
  }
  std::vector<char> touched(m.triangles.size(), 0);
  int flips = 0;
  const auto weighted = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
    return tri_area(a, b, c) * std::exp(-lambda * (a.z() + b.z() + c.z()) / 3.0);
  };
  for (const auto& [key, inc] : edges) {
    if (inc.size() != 2) continue;
    const auto [t1, k1] = inc[0];
    const auto [t2, k2] = inc[1];
    if (touched[t1] || touched[t2]) continue;
    const auto& T1 = m.triangles[t1];
    const auto& T2 = m.triangles[t2];
    const int a = T1[k1], b = T1[(k1 + 1) % 3], c = T1[(k1 + 2) % 3];
    // Consistent orientation means T2 runs b -> a.
    if (T2[k2] != b || T2[(k2 + 1) % 3] != a) continue;
    const int d = T2[(k2 + 2) % 3];
    if (c == d || edges.count(edge_key(c, d))) continue;
    const Vec3 &A = m.vertices[a], &B = m.vertices[b], &C = m.vertices[c], &D = m.vertices[d];
    if (angle_at(C, A, B) + angle_at(D, B, A) <= kPi + 1e-12) continue;
    if (!(tri_area(A, D, C) > kDegenerateTriangle && tri_area(D, B, C) > kDegenerateTriangle)) continue;
    // The new pair must not fold over the old one.
    if ((D - A).cross(C - A).dot((B - A).cross(C - A)) <= 0.0) continue;
    if ((B - D).cross(C - D).dot((B - A).cross(C - A)) <= 0.0) continue;
    const double old_q = std::min(min_angle(A, B, C), min_angle(B, A, D));
    const double new_q = std::min(min_angle(A, D, C), min_angle(D, B, C));
    if (new_q <= old_q) continue;
    if (weighted(A, D, C) + weighted(D, B, C) > weighted(A, B, C) + weighted(B, A, D)) continue;
    m.triangles[t1] = {a, d, c};
    m.triangles[t2] = {d, b, c};
    touched[t1] = touched[t2] = 1;
    ++flips;
  }
  return flips;
}

// Gauss-Seidel pass of tangential Laplacian smoothing over free vertices. A
// move is kept when it raises the smallest incident angle, keeps every
// incident triangle's orientation and does not raise the local weighted area.
int smooth_pass(TriMesh& m, const std::vector<const Pin*>& pins, double lambda) {
  std::vector<std::vector<int>> star(m.vertices.size());
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    for (int v : m.triangles[t]) star[v].push_back(t);
  }
  int moved = 0;
  std::vector<Vec3> old_cross;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (pins[v] || star[v].empty()) continue;
    const Vec3 p = m.vertices[v];
    Vec3 avg = Vec3::Zero(), normal = Vec3::Zero();
    int count = 0;
    old_cross.clear();
    double old_q = kPi, old_w = 0.0;
    for (int t : star[v]) {
      const auto& T = m.triangles[t];
      const Vec3 &a = m.vertices[T[0]], &b = m.vertices[T[1]], &c = m.vertices[T[2]];
      old_cross.push_back((b - a).cross(c - a));
      normal += old_cross.back();
      old_q = std::min(old_q, min_angle(a, b, c));
      old_w += tri_area(a, b, c) * std::exp(-lambda * ((a.z() + b.z() + c.z()) / 3.0 - p.z()));
      for (int u : T) {
        if (u == static_cast<int>(v)) continue;
        avg += m.vertices[u];
        ++count;
      }
    }
    if (normal.norm() == 0.0) continue;
    normal.normalize();
    Vec3 delta = avg / count - p;
    delta -= delta.dot(normal) * normal;
    Vec3 q = p + 0.5 * delta;
    q.z() = std::clamp(q.z(), 0.0, m.z_max);
    m.vertices[v] = q;
    bool ok = true;
    double new_q = kPi, new_w = 0.0;
    for (std::size_t i = 0; i < star[v].size() && ok; ++i) {
      const auto& T = m.triangles[star[v][i]];
      const Vec3 &a = m.vertices[T[0]], &b = m.vertices[T[1]], &c = m.vertices[T[2]];
      const Vec3 cr = (b - a).cross(c - a);
      ok = 0.5 * cr.norm() > kDegenerateTriangle && cr.dot(old_cross[i]) > 0.0;
      new_q = std::min(new_q, min_angle(a, b, c));
      new_w += tri_area(a, b, c) * std::exp(-lambda * ((a.z() + b.z() + c.z()) / 3.0 - p.z()));
    }
    if (ok && new_q > old_q && new_w <= old_w) {
      ++moved;
    } else {
      m.vertices[v] = p;
    }
  }
  return moved;
}

}  // namespace

std::string to_string(PinKind k) {
  switch (k) {
    case PinKind::InitialCurve:
      return "initial_curve";
    case PinKind::BoundaryRay:
      return "boundary_ray";
    case PinKind::TopPlane:
      return "top_plane";
    case PinKind::Corner:
      return "corner";
  }
  return "?";
}

PinKind pin_kind_from_string(const std::string& s) {
  if (s == "initial_curve") return PinKind::InitialCurve;
  if (s == "boundary_ray") return PinKind::BoundaryRay;
  if (s == "top_plane") return PinKind::TopPlane;
  if (s == "corner") return PinKind::Corner;
  throw RegularizeError("unknown pin kind '" + s + "'");
}

void TriMesh::validate() const {
  const int nv = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nv) throw RegularizeError("triangle index out of range");
    }
    if (!(tri_area(*this, t) > kDegenerateTriangle)) throw RegularizeError("degenerate triangle");
  }
  constexpr double eps = 1e-12;
  for (const auto& [v, pin] : pinned) {
    if (v < 0 || v >= nv) throw RegularizeError("pinned index out of range");
    const Vec3& x = vertices[v];
    const Vec3& a = pin.anchor;
    bool ok = true;
    switch (pin.kind) {
      case PinKind::InitialCurve:
        ok = (x - a).norm() <= eps && std::abs(x.z()) <= eps;
        break;
      case PinKind::Corner:
        ok = (x - a).norm() <= eps;
        break;
      case PinKind::BoundaryRay:
        ok = (x.head<2>() - a.head<2>()).norm() <= eps && x.z() >= -eps && x.z() <= z_max + eps;
        break;
      case PinKind::TopPlane:
        ok = std::abs(x.z() - a.z()) <= eps;
        break;
    }
    if (!ok) throw RegularizeError("vertex " + std::to_string(v) + " violates its " + to_string(pin.kind) + " pin");
  }
}

double TriMesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles) a += tri_area(*this, t);
  return a;
}

double TriMesh::min_angle_degrees() const {
  double m = 180.0;
  for (const auto& t : triangles) {
    m = std::min(m, min_angle(vertices[t[0]], vertices[t[1]], vertices[t[2]]) * 180.0 / kPi);
  }
  return m;
}

double TriMesh::max_height() const {
  double z = 0.0;
  for (const auto& v : vertices) z = std::max(z, v.z());
  return z;
}

kernels::WeightedAreaTerms weighted_area(const TriMesh& mesh, double lambda) {
  try {
    return kernels::parallel::weighted_area(mesh.vertices, mesh.triangles, lambda);
  } catch (const GeometryError& e) {
    throw RegularizeError(e.what());
  }
}

void RegularizationConfig::validate() const {
  if (!(lambda > 0.0)) throw RegularizeError("lambda must be positive");
  if (!(z_max >= 3.0 / lambda)) throw RegularizeError("z_max must be at least 3/lambda");
  if (max_iterations < 0) throw RegularizeError("max_iterations must be nonnegative");
  if (!(residual_tol > 0.0) || !(initial_step > 0.0) || !(cfl > 0.0)) {
    throw RegularizeError("residual_tol, initial_step and cfl must be positive");
  }
}

double translator_residual(const TriMesh& mesh, double lambda) {
  if (mesh.empty()) return 0.0;
  StepField f;
  step_field(mesh, lambda, f);
  const auto pins = pin_table(mesh);
  project(pins, f);
  return residual_of(pins, f);
}

MinimizeResult minimize(const TriMesh& initial, const RegularizationConfig& cfg) {
  cfg.validate();
  initial.validate();
  MinimizeResult r;
  r.mesh = initial;
  r.mesh.z_max = cfg.z_max;
  if (initial.max_height() > cfg.z_max + 1e-12) throw RegularizeError("initial mesh reaches above z_max");
  if (r.mesh.empty()) {
    r.converged = true;
    return r;
  }
  const double lambda = cfg.lambda;
  const auto pins = pin_table(r.mesh);
  double value = weighted_value(r.mesh, lambda);
  r.history.push_back(value);
  double step = cfg.initial_step;
  StepField f;
  std::vector<Vec3> trial(r.mesh.vertices.size());
  std::vector<double> ebuf;
  for (int it = 0;; ++it) {
    if (cfg.remesh_every > 0 && it > 0 && it % cfg.remesh_every == 0) {
      const int flips = flip_pass(r.mesh, lambda);
      r.flips += flips;
      if (flips + smooth_pass(r.mesh, pins, lambda) > 0) value = weighted_value(r.mesh, lambda);
    }
    step_field(r.mesh, lambda, f);
    project(pins, f);
    r.residual = residual_of(pins, f);
    r.iterations = it;
    if (r.residual < cfg.residual_tol) {
      r.converged = true;
      break;
    }
    if (it >= cfg.max_iterations) {
      r.warning = "no convergence after " + std::to_string(cfg.max_iterations) + " iterations (residual " +
                  std::to_string(r.residual) + ")";
      break;
    }
    // Each vertex moves at its own explicit-stability scale h_v^2, a positive
    // diagonal preconditioner, so this stays a descent direction. The slope
    // uses the gradient -scale * wsum * raw.
    double slope = 0.0;
    for (std::size_t v = 0; v < f.direction.size(); ++v) {
      f.direction[v] *= f.h2[v];
      slope -= f.scale[v] * f.wsum[v] * f.raw[v].dot(f.direction[v]);
    }
    step = std::min(2.0 * step, cfg.cfl);
    bool accepted = false;
    while (step > 1e-16) {
      for (std::size_t v = 0; v < trial.size(); ++v) trial[v] = r.mesh.vertices[v] + step * f.direction[v];
      enforce_pins(pins, trial, cfg.z_max);
      const double tv = trial_value(trial, r.mesh.triangles, lambda, ebuf);
      // Armijo with a round-off allowance: high up the mesh the weight
      // underflows relative to the total, and the step cap keeps that part stable.
      if (tv <= value + 1e-4 * step * std::min(slope, 0.0) + 64.0 * kEps * std::abs(value)) {
        std::swap(r.mesh.vertices, trial);
        value = tv;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      r.warning = "line search stalled (residual " + std::to_string(r.residual) + ")";
      break;
    }
    r.history.push_back(value);
  }
  r.value = value;
  return r;
}

// ---------------------------------------------------------------------------

Network slice(const TriMesh& mesh, double height) {
  Network net;
  std::set<std::string> ids;
  for (const auto& [v, pin] : mesh.pinned) {
    if (pin.gamma_id.empty() || ids.count(pin.gamma_id)) continue;
    ids.insert(pin.gamma_id);
    net.boundary_points.push_back({pin.gamma_id, Vec2(pin.anchor.head<2>())});
  }

  const auto above = [&](int v) { return mesh.vertices[v].z() >= height; };
  std::map<EdgeKey, std::vector<EdgeKey>> adj;
  for (const auto& t : mesh.triangles) {
    std::vector<EdgeKey> cut;
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (above(a) != above(b)) cut.push_back(edge_key(a, b));
    }
    if (cut.size() != 2) continue;
    adj[cut[0]].push_back(cut[1]);
    adj[cut[1]].push_back(cut[0]);
  }
  const auto point_of = [&](const EdgeKey& e) {
    const Vec3& a = mesh.vertices[e.first];
    const Vec3& b = mesh.vertices[e.second];
    const double s = (height - a.z()) / (b.z() - a.z());
    return Vec2((a + s * (b - a)).head<2>());
  };
  // Gamma id when both ends of the cut edge sit on the same ray.
  const auto ray_of = [&](const EdgeKey& e) -> const Pin* {
    const auto pa = mesh.pinned.find(e.first);
    const auto pb = mesh.pinned.find(e.second);
    if (pa == mesh.pinned.end() || pb == mesh.pinned.end()) return nullptr;
    if (pa->second.gamma_id.empty() || pa->second.gamma_id != pb->second.gamma_id) return nullptr;
    return &pa->second;
  };

  std::set<EdgeKey> visited;
  const auto walk = [&](EdgeKey start) {
    std::vector<EdgeKey> path{start};
    visited.insert(start);
    EdgeKey cur = start;
    for (;;) {
      const EdgeKey* next = nullptr;
      for (const auto& n : adj[cur]) {
        if (!visited.count(n)) {
          next = &n;
          break;
        }
      }
      if (!next) break;
      cur = *next;
      visited.insert(cur);
      path.push_back(cur);
    }
    return path;
  };
  const auto emit = [&](const std::vector<EdgeKey>& path, bool closed) {
    DiscreteCurve c;
    c.closed = closed;
    for (const auto& e : path) {
      const Vec2 p = point_of(e);
      if (!c.vertices.empty() && (p - c.vertices.back()).norm() < 1e-10) continue;
      c.vertices.push_back(p);
    }
    if (closed && c.vertices.size() > 1 && (c.vertices.front() - c.vertices.back()).norm() < 1e-10) {
      c.vertices.pop_back();
    }
    if (closed && c.vertices.size() < 3) return;
    if (!closed) {
      if (c.vertices.size() < 2) return;
      if (const Pin* p = ray_of(path.front())) {
        c.vertices.front() = p->anchor.head<2>();
        c.start = FixedBoundary{p->gamma_id};
      }
      if (const Pin* p = ray_of(path.back())) {
        c.vertices.back() = p->anchor.head<2>();
        c.end = FixedBoundary{p->gamma_id};
      }
    }
    net.curves.push_back(std::move(c));
  };
  for (const auto& [e, n] : adj) {
    if (n.size() == 1 && !visited.count(e)) emit(walk(e), false);
  }
  for (const auto& [e, n] : adj) {
    if (!visited.count(e)) emit(walk(e), true);
  }
  return net;
}

SliceFlowResult slice_flow(const TriMesh& mesh, double lambda, const std::vector<double>& times, double z0) {
  if (!(lambda > 0.0)) throw RegularizeError("lambda must be positive");
  SliceFlowResult r;
  r.z0 = z0 > 0.0 ? z0 : 1.0 / lambda;
  double hsum = 0.0;
  std::size_t hcount = 0;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      hsum += (mesh.vertices[t[k]] - mesh.vertices[t[(k + 1) % 3]]).head<2>().norm();
      ++hcount;
    }
  }
  r.trajectory.h = hcount ? hsum / static_cast<double>(hcount) : 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double z = r.z0 + lambda * times[i];
    if (z > mesh.z_max) {
      r.truncated = true;
      r.warning = "slice height " + std::to_string(z) + " exceeds z_max " + std::to_string(mesh.z_max) +
                  "; trajectory truncated at t = " + std::to_string(i ? times[i - 1] : times[i]);
      break;
    }
    r.trajectory.snapshots.push_back(make_snapshot(slice(mesh, z), times[i]));
    if (i > 0) r.trajectory.dt = std::max(r.trajectory.dt, times[i] - times[i - 1]);
  }
  return r;
}

double slab_mass(const TriMesh& mesh, double a, double b) {
  // Fraction of a triangle with z below c, z linear over the triangle.
  const auto below = [](std::array<double, 3> z, double c) {
    std::sort(z.begin(), z.end());
    if (c <= z[0]) return 0.0;
    if (c >= z[2]) return 1.0;
    if (c <= z[1]) return (c - z[0]) * (c - z[0]) / ((z[1] - z[0]) * (z[2] - z[0]));
    return 1.0 - (z[2] - c) * (z[2] - c) / ((z[2] - z[0]) * (z[2] - z[1]));
  };
  double m = 0.0;
  for (const auto& t : mesh.triangles) {
    const std::array<double, 3> z{mesh.vertices[t[0]].z(), mesh.vertices[t[1]].z(), mesh.vertices[t[2]].z()};
    m += tri_area(mesh, t) * (below(z, a + b) - below(z, a));
  }
  return m;
}

nlohmann::json SlabBoundReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& row : rows) rs.push_back({{"a", row.a}, {"b", row.b}, {"mass", row.mass}, {"bound", row.bound}});
  return {{"rows", rs}, {"worst_margin", worst_margin}, {"pass", pass}};
}

SlabBoundReport slab_bound_check(const TriMesh& mesh, double lambda, double length_m0, const std::vector<double>& as,
                                 const std::vector<double>& bs, double tol) {
  SlabBoundReport r;
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (double a : as) {
    for (double b : bs) {
      const double mass = slab_mass(mesh, a, b);
      const double bound = (b + 1.0 / lambda) * length_m0;
      r.rows.push_back({a, b, mass, bound});
      r.worst_margin = std::min(r.worst_margin, bound + tol - mass);
    }
  }
  r.pass = r.rows.empty() || r.worst_margin >= 0.0;
  return r;
}

double network_hausdorff(const Network& a, const Network& b, double spacing) {
  using Seg = std::pair<Vec2, Vec2>;
  const auto segments = [](const Network& n) {
    std::vector<Seg> s;
    for (const auto& c : n.curves) {
      for (std::size_t e = 0; e < c.edge_count(); ++e) s.push_back({c.edge_start(e), c.edge_end(e)});
    }
    return s;
  };
  const auto sa = segments(a);
  const auto sb = segments(b);
  if (sa.empty() && sb.empty()) return 0.0;
  if (sa.empty() || sb.empty()) return std::numeric_limits<double>::infinity();
  const auto one_sided = [&](const std::vector<Seg>& from, const std::vector<Seg>& to) {
    double h = 0.0;
    for (const auto& [p, q] : from) {
      const int n = std::max(1, static_cast<int>(std::ceil((q - p).norm() / spacing)));
      for (int i = 0; i <= n; ++i) {
        const Vec2 x = p + (q - p) * (static_cast<double>(i) / n);
        double d = std::numeric_limits<double>::infinity();
        for (const auto& [u, v] : to) d = std::min(d, kernels::point_segment_distance(x, u, v));
        h = std::max(h, d);
      }
    }
    return h;
  };
  return std::max(one_sided(sa, sb), one_sided(sb, sa));
}

nlohmann::json SliceComparison::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& row : rows) {
    rs.push_back({{"time", row.time}, {"hausdorff", row.hausdorff}, {"scale", row.scale}, {"relative", row.relative}});
  }
  return {{"rows", rs}, {"unmatched", unmatched}, {"max_relative", max_relative}};
}

SliceComparison compare_to_flow(const FlowTrajectory& slices, const FlowTrajectory& direct, double time_tol) {
  SliceComparison c;
  for (const auto& s : slices.snapshots) {
    const FlowSnapshot* best = nullptr;
    for (const auto& d : direct.snapshots) {
      if (!best || std::abs(d.time - s.time) < std::abs(best->time - s.time)) best = &d;
    }
    if (!best || std::abs(best->time - s.time) > time_tol) {
      ++c.unmatched;
      continue;
    }
    Vec2 centroid = Vec2::Zero();
    std::size_t n = 0;
    for (const auto& curve : best->network.curves) {
      for (const auto& v : curve.vertices) {
        centroid += v;
        ++n;
      }
    }
    if (n) centroid /= static_cast<double>(n);
    double scale = 0.0;
    for (const auto& curve : best->network.curves) {
      for (const auto& v : curve.vertices) scale = std::max(scale, (v - centroid).norm());
    }
    const double h = network_hausdorff(s.network, best->network);
    const double rel = scale > 0.0 ? h / scale : std::numeric_limits<double>::infinity();
    c.rows.push_back({s.time, h, scale, rel});
    c.max_relative = std::max(c.max_relative, rel);
  }
  return c;
}

// ---------------------------------------------------------------------------

TriMesh cap_mesh(const Vec2& center, double r0, double lambda, int rings, int sectors, double perturbation,
                 double z_cut) {
  if (r0 < 0.0 || !(lambda > 0.0) || !(std::abs(perturbation) < 0.5)) throw RegularizeError("invalid cap parameters");
  TriMesh m;
  m.z_max = std::max(lambda * r0 * r0, 4.0 / lambda);
  if (r0 == 0.0) return m;
  if (rings < 2 || sectors < 6 || sectors % 2 != 0) throw RegularizeError("invalid cap resolution");
  // Profile z = k (r0^2 - r^2), rings equally spaced in arc length.
  const double k = lambda / 2.0;
  const double z_top = k * r0 * r0;
  const bool truncated = z_cut > 0.0 && z_cut < z_top;
  const double r_end = truncated ? std::sqrt(r0 * r0 - z_cut / k) : 0.0;
  if (truncated) m.z_max = z_cut;
  const int fine = 4096;
  std::vector<double> rs(fine + 1), arc(fine + 1, 0.0);
  for (int i = 0; i <= fine; ++i) rs[i] = r0 + (r_end - r0) * static_cast<double>(i) / fine;
  for (int i = 1; i <= fine; ++i) {
    const double rm = 0.5 * (rs[i] + rs[i - 1]);
    arc[i] = arc[i - 1] + (rs[i - 1] - rs[i]) * std::sqrt(1.0 + 4.0 * k * k * rm * rm);
  }
  const double ds = arc.back() / rings;
  const auto radius_at = [&](double s) {
    const auto it = std::lower_bound(arc.begin(), arc.end(), s);
    const std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - arc.begin()), 1, fine);
    const double f = std::clamp((s - arc[i - 1]) / (arc[i] - arc[i - 1]), 0.0, 1.0);
    return rs[i - 1] + f * (rs[i] - rs[i - 1]);
  };

  struct Ring {
    int first, count;
  };
  std::vector<Ring> ring_list;
  int count = sectors;
  double offset = 0.0;  // angle of vertex 0
  const auto add_ring = [&](double r, double z, bool bottom, bool top) {
    ring_list.push_back({static_cast<int>(m.vertices.size()), count});
    for (int j = 0; j < count; ++j) {
      const double th = offset + 2.0 * kPi * j / count;
      const double rp = r * (1.0 + perturbation * std::sin(kPi * z / z_top));
      const Vec3 p(center.x() + rp * std::cos(th), center.y() + rp * std::sin(th), bottom ? 0.0 : z);
      const int v = static_cast<int>(m.vertices.size());
      if (bottom) m.pinned[v] = Pin{PinKind::InitialCurve, p, ""};
      if (top) m.pinned[v] = Pin{PinKind::TopPlane, p, ""};
      m.vertices.push_back(p);
    }
  };
  // Consecutive rings are staggered by half a sector, so every vertex away
  // from the halving bands has valence 6. Without truncation the spacing
  // shrinks geometrically near the apex so the top dome (radius about
  // 2/lambda) is resolved.
  const double r_stop = std::min(1.0 / lambda, 0.1 * r0);
  if (truncated) {
    for (int i = 0; i <= rings; ++i) {
      if (i > 0) offset += kPi / count;
      const double r = radius_at(i * ds);
      add_ring(r, k * (r0 * r0 - r * r), i == 0, i == rings);
    }
  } else {
    for (double s = 0.0;;) {
      const double r = radius_at(s);
      if (r < r_stop) break;
      const double step = std::min(ds, 0.5 * r);
      if (s > 0.0) {
        if (count % 2 == 0 && count >= 12 && 2.0 * kPi * r / count < 0.5 * step) {
          count /= 2;
        } else {
          offset += kPi / count;
        }
      }
      add_ring(r, k * (r0 * r0 - r * r), s == 0.0, false);
      s += step;
    }
  }

  for (std::size_t i = 0; i + 1 < ring_list.size(); ++i) {
    const Ring lo = ring_list[i];
    const Ring hi = ring_list[i + 1];
    const auto L = [&](int j) { return lo.first + (j % lo.count); };
    const auto U = [&](int j) { return hi.first + (j % hi.count); };
    if (hi.count == lo.count) {
      for (int j = 0; j < lo.count; ++j) {
        m.triangles.push_back({L(j), L(j + 1), U(j)});
        m.triangles.push_back({L(j + 1), U(j + 1), U(j)});
      }
    } else {
      for (int j = 0; j < hi.count; ++j) {
        m.triangles.push_back({L(2 * j), L(2 * j + 1), U(j)});
        m.triangles.push_back({L(2 * j + 1), L(2 * j + 2), U(j + 1)});
        m.triangles.push_back({L(2 * j + 1), U(j + 1), U(j)});
      }
    }
  }
  if (!truncated) {
    const int apex = static_cast<int>(m.vertices.size());
    m.vertices.emplace_back(center.x(), center.y(), z_top);
    const Ring top = ring_list.back();
    for (int j = 0; j < top.count; ++j) {
      m.triangles.push_back({top.first + j, top.first + (j + 1) % top.count, apex});
    }
  }
  return m;
}

TriMesh strip_mesh(const Vec2& p, const Vec2& q, double z_max, int nx, int nz, double bulge,
                   const std::string& gamma_p, const std::string& gamma_q) {
  if (nx < 1 || nz < 1 || !(z_max > 0.0)) throw RegularizeError("invalid strip parameters");
  if ((q - p).norm() <= 0.0) throw RegularizeError("strip over a degenerate segment");
  TriMesh m;
  m.z_max = z_max;
  const Vec2 dir = (q - p).normalized();
  const Vec2 side(-dir.y(), dir.x());
  const auto id = [&](int i, int k) { return k * (nx + 1) + i; };
  for (int k = 0; k <= nz; ++k) {
    const double z = z_max * k / nz;
    for (int i = 0; i <= nx; ++i) {
      const double s = static_cast<double>(i) / nx;
      const Vec2 xy = p + s * (q - p) + bulge * std::sin(kPi * s) * std::sin(kPi * z / z_max) * side;
      const Vec3 x(xy.x(), xy.y(), z);
      const int v = static_cast<int>(m.vertices.size());
      const bool end = i == 0 || i == nx;
      const std::string& g = i == 0 ? gamma_p : gamma_q;
      if (k == 0) {
        m.pinned[v] = Pin{PinKind::InitialCurve, x, ""};
      } else if (k == nz && end) {
        m.pinned[v] = Pin{PinKind::Corner, x, g};
      } else if (end) {
        m.pinned[v] = Pin{PinKind::BoundaryRay, x, g};
      } else if (k == nz) {
        m.pinned[v] = Pin{PinKind::TopPlane, x, ""};
      }
      m.vertices.push_back(x);
    }
  }
  for (int k = 0; k < nz; ++k) {
    for (int i = 0; i < nx; ++i) {
      if ((i + k) % 2 == 0) {
        m.triangles.push_back({id(i, k), id(i + 1, k), id(i + 1, k + 1)});
        m.triangles.push_back({id(i, k), id(i + 1, k + 1), id(i, k + 1)});
      } else {
        m.triangles.push_back({id(i, k), id(i + 1, k), id(i, k + 1)});
        m.triangles.push_back({id(i + 1, k), id(i + 1, k + 1), id(i, k + 1)});
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

void write_off(std::ostream& out, const TriMesh& mesh) {
  out.precision(17);
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "# z_max " << mesh.z_max << '\n';
  for (const auto& [v, pin] : mesh.pinned) {
    out << "# pin " << v << ' ' << to_string(pin.kind) << ' ' << pin.anchor.x() << ' ' << pin.anchor.y() << ' '
        << pin.anchor.z();
    if (!pin.gamma_id.empty()) out << ' ' << pin.gamma_id;
    out << '\n';
  }
}

TriMesh read_off(std::istream& in) {
  TriMesh m;
  std::vector<std::string> data;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '#') {
      std::string tag;
      if (first == "#") ls >> tag;
      else tag = first.substr(1);
      if (tag == "z_max") {
        ls >> m.z_max;
      } else if (tag == "pin") {
        int v;
        std::string kind;
        Pin p;
        if (!(ls >> v >> kind >> p.anchor.x() >> p.anchor.y() >> p.anchor.z())) throw RegularizeError("bad pin line");
        p.kind = pin_kind_from_string(kind);
        ls >> p.gamma_id;
        m.pinned[v] = p;
      }
      continue;
    }
    data.push_back(line);
  }
  std::istringstream body([&] {
    std::string all;
    for (const auto& l : data) all += l + '\n';
    return all;
  }());
  std::string magic;
  std::size_t nv = 0, nf = 0, ne = 0;
  if (!(body >> magic) || magic != "OFF") throw RegularizeError("missing OFF header");
  if (!(body >> nv >> nf >> ne)) throw RegularizeError("bad OFF counts");
  m.vertices.resize(nv);
  for (auto& v : m.vertices) {
    if (!(body >> v.x() >> v.y() >> v.z())) throw RegularizeError("bad OFF vertex");
  }
  m.triangles.resize(nf);
  for (auto& t : m.triangles) {
    int n = 0;
    if (!(body >> n >> t[0] >> t[1] >> t[2]) || n != 3) throw RegularizeError("only triangular OFF faces are supported");
  }
  m.validate();
  return m;
}

void save_off(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream f(path);
  if (!f) throw RegularizeError("cannot write " + path.string());
  write_off(f, mesh);
}

TriMesh load_off(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw RegularizeError("cannot read " + path.string());
  return read_off(f);
}

}  // namespace brakke
