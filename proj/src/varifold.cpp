#include "brakke/varifold.hpp"

#include "brakke/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>

namespace brakke {

double DiscreteVarifold::total_weight() const {
  double w = 0.0;
  for (const auto& s : samples) w += s.weight;
  return w;
}

DiscreteVarifold to_varifold(const Network& network) {
  DiscreteVarifold v;
  for (const auto& c : network.curves) {
    for (std::size_t e = 0; e < c.edge_count(); ++e) {
      const Vec2 a = c.edge_start(e);
      const Vec2 b = c.edge_end(e);
      const double len = (b - a).norm();
      if (len == 0.0) continue;
      v.samples.push_back({0.5 * (a + b), (b - a) / len, len * c.multiplicity});
    }
  }
  return v;
}

void check_vector_field(const VectorField& x, const VectorFieldGradient& grad_x, const Vec2& lo, const Vec2& hi,
                        int count, double rel_tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  for (int k = 0; k < count; ++k) {
    const Vec2 p(ux(rng), uy(rng));
    const double h = 1e-5 * std::max(1.0, p.norm());
    Mat2 fd;
    for (int j = 0; j < 2; ++j) {
      Vec2 dp = Vec2::Zero();
      dp[j] = h;
      fd.col(j) = (x(p + dp) - x(p - dp)) / (2.0 * h);
    }
    const Mat2 g = grad_x(p);
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((fd - g).cwiseAbs().maxCoeff() > rel_tol * scale) {
      throw VarifoldError("vector field gradient disagrees with finite differences");
    }
  }
}

double first_variation(const Network& network, const VectorField& x, const VectorFieldGradient& grad_x) {
  const DiscreteVarifold v = to_varifold(network);
  if (!v.samples.empty()) {
    Vec2 lo = v.samples.front().point, hi = lo;
    for (const auto& s : v.samples) {
      lo = lo.cwiseMin(s.point);
      hi = hi.cwiseMax(s.point);
    }
    check_vector_field(x, grad_x, lo - Vec2::Constant(0.5), hi + Vec2::Constant(0.5));
  }
  return kernels::parallel::sum(v.samples.size(), [&](std::size_t i) {
    const auto& s = v.samples[i];
    return s.weight * s.tangent.dot(grad_x(s.point) * s.tangent);
  });
}

namespace {

struct EndRecord {
  EndKind kind;
  std::string label;
  Vec2 position;
  Vec2 outward;
  int multiplicity;
};

std::vector<EndRecord> collect_ends(const Network& network) {
  std::vector<EndRecord> ends;
  for (const auto& c : network.curves) {
    if (c.closed || c.vertices.size() < 2) continue;
    auto add = [&](const EndpointConstraint& con, const Vec2& end, const Vec2& next) {
      const Vec2 d = end - next;
      const double l = d.norm();
      const Vec2 out = l > 0.0 ? Vec2(d / l) : Vec2::Zero();
      if (auto b = boundary_id(con)) {
        ends.push_back({EndKind::Boundary, *b, end, out, c.multiplicity});
      } else if (auto j = junction_id(con)) {
        ends.push_back({EndKind::Junction, *j, end, out, c.multiplicity});
      } else {
        ends.push_back({EndKind::Free, "", end, out, c.multiplicity});
      }
    };
    add(c.start, c.vertices.front(), c.vertices[1]);
    add(c.end, c.vertices.back(), c.vertices[c.vertices.size() - 2]);
  }
  return ends;
}

std::string free_label(const Vec2& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "free@(%.12g,%.12g)", p.x(), p.y());
  return buf;
}

// Groups ends into clusters: by id for boundary points and junctions, by
// position for free ends. Cluster order follows first appearance.
std::vector<EndVector> cluster_ends(const std::vector<EndRecord>& ends) {
  std::vector<EndVector> out;
  std::map<std::pair<int, std::string>, std::size_t> by_id;
  for (const auto& e : ends) {
    std::size_t slot = out.size();
    if (e.kind == EndKind::Free) {
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].kind == EndKind::Free && (out[i].position - e.position).norm() <= kCoincidenceTol) {
          slot = i;
          break;
        }
      }
    } else {
      auto key = std::make_pair(static_cast<int>(e.kind), e.label);
      auto it = by_id.find(key);
      if (it != by_id.end()) {
        slot = it->second;
      } else {
        by_id[key] = out.size();
      }
    }
    if (slot == out.size()) {
      EndVector v;
      v.kind = e.kind;
      v.at = e.kind == EndKind::Free ? free_label(e.position) : e.label;
      v.position = e.position;
      v.nu = Vec2::Zero();
      out.push_back(v);
    }
    out[slot].nu += e.multiplicity * e.outward;
    out[slot].incident += e.multiplicity;
  }
  return out;
}

}  // namespace

std::vector<EndVector> end_vectors(const Network& network) { return cluster_ends(collect_ends(network)); }

std::vector<BoundaryVector> boundary_vectors(const Network& network) {
  std::vector<BoundaryVector> out;
  const auto all = end_vectors(network);
  // Report every boundary point, including ones no curve currently reaches.
  for (const auto& b : network.boundary_points) {
    auto it = std::find_if(all.begin(), all.end(),
                           [&](const EndVector& e) { return e.kind == EndKind::Boundary && e.at == b.id; });
    if (it != all.end()) {
      out.push_back(static_cast<const BoundaryVector&>(*it));
    }
  }
  return out;
}

bool nu_admissible(const std::vector<BoundaryVector>& nus, double tol) {
  return std::all_of(nus.begin(), nus.end(), [&](const BoundaryVector& b) { return b.nu.norm() <= 1.0 + tol; });
}

double trig_bound(int k, double theta) {
  if (k < 1) throw VarifoldError("trig_bound needs k >= 1");
  if (!(theta >= 0.0 && theta < std::numbers::pi / 2)) throw VarifoldError("trig_bound needs theta in [0, pi/2)");
  const double c = std::cos(theta);
  if (k % 2 == 0) return k * c;
  return std::sqrt(1.0 + (static_cast<double>(k) * k - 1.0) * c * c);
}

Mod2Chain mod2_boundary(const Network& network) {
  Mod2Chain chain;
  for (const auto& e : end_vectors(network)) {
    if (e.incident % 2 == 1) {
      chain.odd_points.push_back(e.position);
      chain.labels.push_back(e.at);
    }
  }
  return chain;
}

Mod2Chain symmetric_difference(const Mod2Chain& a, const Mod2Chain& b) {
  Mod2Chain out;
  auto contains = [](const Mod2Chain& c, const Vec2& p) {
    return std::any_of(c.odd_points.begin(), c.odd_points.end(),
                       [&](const Vec2& q) { return (q - p).norm() <= kCoincidenceTol; });
  };
  for (std::size_t i = 0; i < a.odd_points.size(); ++i) {
    if (!contains(b, a.odd_points[i])) {
      out.odd_points.push_back(a.odd_points[i]);
      out.labels.push_back(a.labels[i]);
    }
  }
  for (std::size_t i = 0; i < b.odd_points.size(); ++i) {
    if (!contains(a, b.odd_points[i])) {
      out.odd_points.push_back(b.odd_points[i]);
      out.labels.push_back(b.labels[i]);
    }
  }
  return out;
}

bool same_points(const Mod2Chain& a, const Mod2Chain& b, double tol) {
  auto covered = [tol](const Mod2Chain& x, const Mod2Chain& y) {
    return std::all_of(x.odd_points.begin(), x.odd_points.end(), [&](const Vec2& p) {
      return std::any_of(y.odd_points.begin(), y.odd_points.end(), [&](const Vec2& q) { return (q - p).norm() <= tol; });
    });
  };
  return covered(a, b) && covered(b, a);
}

StandardnessReport is_standard_state(const Network& network, const std::set<std::string>& gamma_ids, double time) {
  const Mod2Chain chain = mod2_boundary(network);
  std::vector<std::pair<std::string, Vec2>> gamma;
  for (const auto& id : gamma_ids) {
    const BoundaryPoint* b = network.find_boundary(id);
    if (!b) throw VarifoldError("unknown boundary id '" + id + "' in gamma set");
    gamma.emplace_back(id, b->position(time));
  }
  constexpr double tol = 1e-9;
  StandardnessReport r;
  for (std::size_t i = 0; i < chain.odd_points.size(); ++i) {
    const bool in_gamma = std::any_of(gamma.begin(), gamma.end(), [&](const auto& g) {
      return (g.second - chain.odd_points[i]).norm() <= tol;
    });
    if (!in_gamma) r.violators.push_back(chain.labels[i]);
  }
  for (const auto& [id, p] : gamma) {
    const bool odd = std::any_of(chain.odd_points.begin(), chain.odd_points.end(),
                                 [&](const Vec2& q) { return (q - p).norm() <= tol; });
    if (!odd) r.missing_gamma.push_back(id);
  }
  r.standard = r.violators.empty() && r.missing_gamma.empty();
  return r;
}

}  // namespace brakke
