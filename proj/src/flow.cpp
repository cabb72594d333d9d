#include "brakke/flow.hpp"

#include "brakke/kernels.hpp"
#include "brakke/network_json.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>

namespace brakke {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::JunctionHitBoundary:
      return "junction_hit_boundary";
    case EventKind::CurveVanished:
      return "curve_vanished";
    case EventKind::CurvatureBlowup:
      return "curvature_blowup";
  }
  return "unknown";
}

bool FlowTrajectory::has_event(EventKind k) const { return first_event(k).has_value(); }

std::optional<FlowEvent> FlowTrajectory::first_event(EventKind k) const {
  for (const auto& e : events)
    if (e.kind == k) return e;
  return std::nullopt;
}

namespace {

std::vector<Vec2> curve_curvature(const DiscreteCurve& c) {
  std::vector<Vec2> h(c.vertices.size(), Vec2::Zero());
  if (c.vertices.size() >= 3) kernels::parallel::curvature(c.vertices, c.closed, h);
  return h;
}

double network_min_edge(const Network& n) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : n.curves) m = std::min(m, c.min_edge());
  return m;
}

double network_max_edge(const Network& n) {
  double m = 0.0;
  for (const auto& c : n.curves) m = std::max(m, c.max_edge());
  return m;
}

struct IncidentEnd {
  std::size_t curve;
  bool at_start;
};

std::vector<IncidentEnd> incident_ends(const Network& n, const std::string& id) {
  std::vector<IncidentEnd> out;
  for (std::size_t c = 0; c < n.curves.size(); ++c) {
    const auto& k = n.curves[c];
    if (k.closed) continue;
    if (junction_id(k.start) == id) out.push_back({c, true});
    if (junction_id(k.end) == id) out.push_back({c, false});
  }
  return out;
}

Vec2 neighbour_of(const Network& n, const IncidentEnd& e) {
  const auto& v = n.curves[e.curve].vertices;
  return e.at_start ? v[1] : v[v.size() - 2];
}

// Gradient of F(P) = sum m_i |P - q_i|, i.e. minus the sum of outward unit tangents.
Vec2 fermat_gradient(const Vec2& p, const std::vector<Vec2>& q, const std::vector<double>& w) {
  Vec2 g = Vec2::Zero();
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vec2 d = p - q[i];
    const double l = d.norm();
    if (l > 0.0) g += w[i] * d / l;
  }
  return g;
}

double fermat_value(const Vec2& p, const std::vector<Vec2>& q, const std::vector<double>& w) {
  double f = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) f += w[i] * (p - q[i]).norm();
  return f;
}

// Damped Newton for the weighted Fermat point, started at p.
std::optional<Vec2> fermat_point(Vec2 p, const std::vector<Vec2>& q, const std::vector<double>& w, double tol,
                                 int max_iter) {
  for (int it = 0; it <= max_iter; ++it) {
    const Vec2 g = fermat_gradient(p, q, w);
    if (g.norm() < tol) return p;
    if (it == max_iter) break;
    Mat2 hess = Mat2::Zero();
    bool at_vertex = false;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Vec2 d = p - q[i];
      const double l = d.norm();
      if (l < kDegenerateEdge) {
        at_vertex = true;
        continue;
      }
      const Vec2 u = d / l;
      hess += w[i] * (Mat2::Identity() - u * u.transpose()) / l;
    }
    if (at_vertex) return std::nullopt;
    Vec2 step;
    if (std::abs(hess.determinant()) > 1e-300) {
      step = -hess.ldlt().solve(g);
    } else {
      step = -g;
    }
    if (step.dot(g) >= 0.0) step = -g;
    // Near the minimum the decrease of F drops below rounding, so a step
    // that shrinks |g| is accepted as well.
    const double f0 = fermat_value(p, q, w);
    const double g0 = g.norm();
    auto accept = [&](double t) {
      const Vec2 x = p + t * step;
      return fermat_value(x, q, w) <= f0 + 1e-4 * t * step.dot(g) ||
             fermat_gradient(x, q, w).norm() <= (1.0 - 1e-4 * t) * g0;
    };
    double t = 1.0;
    while (t > 1e-12 && !accept(t)) t *= 0.5;
    if (t <= 1e-12) {
      // No decrease: the minimum sits at the current point up to rounding.
      return g.norm() < 1e3 * tol ? std::optional<Vec2>(p) : std::nullopt;
    }
    p += t * step;
  }
  return std::nullopt;
}

void set_junction(Network& n, const std::string& id, const Vec2& p) {
  for (const auto& e : incident_ends(n, id)) {
    auto& v = n.curves[e.curve].vertices;
    (e.at_start ? v.front() : v.back()) = p;
  }
  n.find_junction(id)->point = p;
}

std::optional<FlowEvent> junction_near_boundary(const Network& n, double time, double h) {
  for (const auto& j : n.junctions) {
    for (const auto& b : n.boundary_points) {
      const double d = (j.point - b.position(time)).norm();
      if (d < h) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "junction %s within %.3g of boundary point %s", j.id.c_str(), d, b.id.c_str());
        return FlowEvent{time, EventKind::JunctionHitBoundary, j.point, buf};
      }
    }
  }
  return std::nullopt;
}

// Smallest junction-to-boundary distance, with the pair it belongs to.
struct Approach {
  double d = std::numeric_limits<double>::infinity();
  std::string junction, boundary;
};

Approach closest_approach(const Network& n, double time) {
  Approach a;
  for (const auto& j : n.junctions) {
    for (const auto& b : n.boundary_points) {
      const double d = (j.point - b.position(time)).norm();
      if (d < a.d) a = {d, j.id, b.id};
    }
  }
  return a;
}

// Root of a quadratic least-squares fit d(t) through the samples, or the
// linear one when the quadratic has no root ahead of the last sample.
double extrapolate_contact(const std::vector<std::pair<double, double>>& samples) {
  const double t_last = samples.back().first;
  if (samples.size() < 3) return t_last;
  const auto n = static_cast<Eigen::Index>(samples.size());
  const double scale = std::max(t_last - samples.front().first, 1e-300);
  auto fit = [&](int degree) {
    Eigen::MatrixXd a(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = (samples[static_cast<std::size_t>(i)].first - t_last) / scale;
      for (int k = 0; k <= degree; ++k) a(i, k) = std::pow(s, k);
      b(i) = samples[static_cast<std::size_t>(i)].second;
    }
    return Eigen::VectorXd(a.colPivHouseholderQr().solve(b));
  };
  const Eigen::VectorXd q = fit(2);
  const double c0 = q(0), c1 = q(1), c2 = q(2);
  double root = std::numeric_limits<double>::infinity();
  if (std::abs(c2) > 1e-14) {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      for (double r : {(-c1 - std::sqrt(disc)) / (2.0 * c2), (-c1 + std::sqrt(disc)) / (2.0 * c2)})
        if (r >= 0.0) root = std::min(root, r);
    }
  }
  if (!std::isfinite(root)) {
    const Eigen::VectorXd l = fit(1);
    root = l(1) < 0.0 ? -l(0) / l(1) : 0.0;
  }
  return t_last + std::max(root, 0.0) * scale;
}

std::optional<FlowEvent> vanished_curve(const Network& n, double time, double h) {
  for (std::size_t c = 0; c < n.curves.size(); ++c) {
    const auto& k = n.curves[c];
    const double len = k.length();
    const bool gone = k.closed ? len < 3.0 * h : (junction_id(k.start) && junction_id(k.end) && len < 0.5 * h);
    if (gone) {
      Vec2 centre = Vec2::Zero();
      for (const auto& v : k.vertices) centre += v;
      centre /= static_cast<double>(k.vertices.size());
      return FlowEvent{time, EventKind::CurveVanished, centre, "curve " + std::to_string(c) + " shrank below resolution"};
    }
  }
  return std::nullopt;
}

// Explicit update of one curve; ends are handled by the caller.
void explicit_curve(DiscreteCurve& c, double dt) {
  if (c.vertices.size() < 3) return;
  const auto h = curve_curvature(c);
  const std::size_t n = c.vertices.size();
  const std::size_t lo = c.closed ? 0 : 1;
  const std::size_t hi = c.closed ? n : n - 1;
  for (std::size_t i = lo; i < hi; ++i) c.vertices[i] += dt * h[i];
}

// Linearized backward Euler with edge lengths frozen at the old state. End
// rows are Dirichlet at the current end positions.
void implicit_curve(DiscreteCurve& c, double dt) {
  const std::size_t n = c.vertices.size();
  if (n < 3) return;
  const auto& v = c.vertices;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<int>(i);
    rhs.row(ii) = v[i].transpose();
    if (!c.closed && (i == 0 || i + 1 == n)) {
      trip.emplace_back(ii, ii, 1.0);
      continue;
    }
    const std::size_t ip = (i + 1) % n, im = (i + n - 1) % n;
    const double lp = (v[ip] - v[i]).norm(), lm = (v[i] - v[im]).norm();
    if (lp < kDegenerateEdge || lm < kDegenerateEdge) throw DegenerateEdge("degenerate edge in implicit step");
    const double s = 2.0 * dt / (lp + lm);
    trip.emplace_back(ii, ii, 1.0 + s / lp + s / lm);
    trip.emplace_back(ii, static_cast<int>(ip), -s / lp);
    trip.emplace_back(ii, static_cast<int>(im), -s / lm);
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw GeometryError("semi-implicit system is singular");
  const Eigen::MatrixXd x = lu.solve(rhs);
  const std::size_t lo = c.closed ? 0 : 1;
  const std::size_t hi = c.closed ? n : n - 1;
  for (std::size_t i = lo; i < hi; ++i) c.vertices[i] = x.row(static_cast<Eigen::Index>(i)).transpose();
}

void move_boundary_ends(Network& n, double time) {
  for (auto& c : n.curves) {
    if (c.closed) continue;
    if (std::holds_alternative<MovingBoundary>(c.start))
      c.vertices.front() = n.find_boundary(std::get<MovingBoundary>(c.start).id)->position(time);
    if (std::holds_alternative<MovingBoundary>(c.end))
      c.vertices.back() = n.find_boundary(std::get<MovingBoundary>(c.end).id)->position(time);
  }
}

void resample_network(Network& n, double h) {
  for (auto& c : n.curves) c = resample(c, h);
}

}  // namespace

FlowSnapshot make_snapshot(Network network, double time) {
  FlowSnapshot s;
  s.time = time;
  s.network = std::move(network);
  s.curvature.reserve(s.network.curves.size());
  for (const auto& c : s.network.curves) s.curvature.push_back(curve_curvature(c));
  s.nu = boundary_vectors(s.network);
  s.total_mass = measure_of(s.network).total_mass();
  return s;
}

double junction_residual(const Network& n, const std::string& id) {
  const Junction* j = n.find_junction(id);
  if (!j) throw GeometryError("unknown junction '" + id + "'");
  std::vector<Vec2> q;
  std::vector<double> w;
  for (const auto& e : incident_ends(n, id)) {
    q.push_back(neighbour_of(n, e));
    w.push_back(n.curves[e.curve].multiplicity);
  }
  return fermat_gradient(j->point, q, w).norm();
}

std::optional<double> balance_junctions(Network& network, const FlowParams& params, std::string* failed_id) {
  double worst = 0.0;
  for (const auto& j : network.junctions) {
    std::vector<Vec2> q;
    std::vector<double> w;
    for (const auto& e : incident_ends(network, j.id)) {
      q.push_back(neighbour_of(network, e));
      w.push_back(network.curves[e.curve].multiplicity);
    }
    const auto p = fermat_point(j.point, q, w, params.junction_tol, params.junction_max_iter);
    if (!p) {
      if (failed_id) *failed_id = j.id;
      return std::nullopt;
    }
    const std::string id = j.id;
    set_junction(network, id, *p);
    worst = std::max(worst, fermat_gradient(*p, q, w).norm());
  }
  return worst;
}

StepResult step_network(const FlowSnapshot& snapshot, const FlowParams& params, double dt_cap) {
  StepResult r;
  Network n = snapshot.network;
  double dt = params.scheme == Scheme::Explicit
                  ? params.dt_safety * std::pow(network_min_edge(n), 2) / 2.0
                  : params.dt_safety * params.target_h * params.target_h;
  dt = std::min({dt, params.dt_max, dt_cap});
  if (!(dt > 0.0)) throw GeometryError("non-positive time step");
  const double t1 = snapshot.time + dt;
  r.dt = dt;

  try {
    for (auto& c : n.curves) {
      if (params.scheme == Scheme::Explicit) {
        explicit_curve(c, dt);
      } else {
        implicit_curve(c, dt);
      }
    }
  } catch (const DegenerateEdge& e) {
    r.event = FlowEvent{snapshot.time, EventKind::CurvatureBlowup, Vec2::Zero(), e.what()};
    r.snapshot = snapshot;
    return r;
  }
  move_boundary_ends(n, t1);

  std::string failed;
  if (!balance_junctions(n, params, &failed)) {
    if (auto hit = junction_near_boundary(n, t1, params.target_h)) {
      r.event = hit;
    } else {
      r.event = FlowEvent{t1, EventKind::CurvatureBlowup, n.find_junction(failed)->point,
                          "junction balance did not converge at " + failed};
    }
  }
  r.snapshot = make_snapshot(std::move(n), t1);
  return r;
}

FlowTrajectory run(const Network& network, const FlowParams& params) {
  network.validate(params.t_start);
  if (!(params.target_h > 0.0)) throw GeometryError("target_h must be positive");
  FlowTrajectory traj;
  traj.h = params.target_h;

  Network start = network;
  resample_network(start, params.target_h);
  std::string failed;
  const bool balanced = balance_junctions(start, params, &failed).has_value();
  FlowSnapshot cur = make_snapshot(std::move(start), params.t_start);
  traj.snapshots.push_back(cur);
  if (!balanced) {
    traj.events.push_back({params.t_start, EventKind::CurvatureBlowup, cur.network.find_junction(failed)->point,
                           "initial junction " + failed + " cannot be balanced", params.t_start});
    return traj;
  }

  std::vector<std::pair<double, double>> approach;  // (t, d) while d < 3 target_h
  std::string approach_pair;
  const double eps = 1e-12 * std::max(1.0, std::abs(params.t_end));
  double next_snap = params.snapshot_every > 0.0 ? params.t_start + params.snapshot_every : params.t_end;
  long step = 0;
  while (cur.time < params.t_end - eps) {
    const double target = std::min(params.t_end, next_snap);
    StepResult r = step_network(cur, params, target - cur.time);
    traj.dt = std::max(traj.dt, r.dt);
    ++step;
    FlowSnapshot next = std::move(r.snapshot);
    std::optional<FlowEvent> event = r.event;

    if (!event) {
      const bool scheduled = params.resample_every > 0 && step % params.resample_every == 0;
      if (scheduled || network_min_edge(next.network) < 0.25 * params.target_h ||
          network_max_edge(next.network) > 2.0 * params.target_h) {
        Network n = next.network;
        resample_network(n, params.target_h);
        std::string failed;
        if (!balance_junctions(n, params, &failed)) {
          event = junction_near_boundary(n, next.time, params.target_h);
          if (!event)
            event = FlowEvent{next.time, EventKind::CurvatureBlowup, n.find_junction(failed)->point,
                              "junction balance did not converge at " + failed};
        }
        if (!event && network_min_edge(n) < 1e-3 * params.target_h) {
          event = FlowEvent{next.time, EventKind::CurvatureBlowup, Vec2::Zero(), "edge collapsed after resampling"};
        }
        next = make_snapshot(std::move(n), next.time);
      }
    }
    if (!event) event = junction_near_boundary(next.network, next.time, params.target_h);
    if (!event) event = vanished_curve(next.network, next.time, params.target_h);

    const Approach a = closest_approach(next.network, next.time);
    if (a.d < 3.0 * params.target_h) {
      const std::string pair = a.junction + "|" + a.boundary;
      if (pair != approach_pair) approach.clear();
      approach_pair = pair;
      approach.emplace_back(next.time, a.d);
    } else {
      approach.clear();
      approach_pair.clear();
    }

    if (event) {
      event->singular_time = event->time;
      if (event->kind == EventKind::JunctionHitBoundary && !approach.empty())
        event->singular_time = extrapolate_contact(approach);
      traj.events.push_back(*event);
      if (next.time > traj.snapshots.back().time) traj.snapshots.push_back(std::move(next));
      break;
    }
    cur = std::move(next);
    const bool at_snap = params.snapshot_every <= 0.0 || cur.time >= next_snap - eps || cur.time >= params.t_end - eps;
    if (at_snap) {
      traj.snapshots.push_back(cur);
      if (params.snapshot_every > 0.0) {
        while (next_snap <= cur.time + eps) next_snap += params.snapshot_every;
      }
    }
  }
  return traj;
}

FlowTrajectory static_trajectory(const Network& network, const std::vector<double>& times) {
  FlowTrajectory traj;
  const FlowSnapshot s = make_snapshot(network, 0.0);
  for (double t : times) {
    FlowSnapshot c = s;
    c.time = t;
    traj.snapshots.push_back(std::move(c));
  }
  for (const auto& c : network.curves) traj.h = std::max(traj.h, c.max_edge());
  if (times.size() > 1) {
    for (std::size_t i = 1; i < times.size(); ++i) traj.dt = std::max(traj.dt, times[i] - times[i - 1]);
  }
  return traj;
}

void write_trajectory_csv(const std::filesystem::path& path, const FlowTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "time,total_mass,num_events";
  std::vector<std::string> ids;
  if (!traj.snapshots.empty()) {
    for (const auto& j : traj.snapshots.front().network.junctions) {
      ids.push_back(j.id);
      out << ",junction_" << j.id << "_x,junction_" << j.id << "_y";
    }
  }
  out << '\n' << std::setprecision(17);
  for (const auto& s : traj.snapshots) {
    const auto events = std::count_if(traj.events.begin(), traj.events.end(),
                                      [&](const FlowEvent& e) { return e.time <= s.time; });
    out << s.time << ',' << s.total_mass << ',' << events;
    for (const auto& id : ids) {
      const Junction* j = s.network.find_junction(id);
      out << ',' << j->point.x() << ',' << j->point.y();
    }
    out << '\n';
  }
}

void write_trajectory_snapshots(const std::filesystem::path& dir, const FlowTrajectory& traj, std::size_t stride) {
  std::filesystem::create_directories(dir);
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    if (i % stride != 0 && i + 1 != traj.snapshots.size()) continue;
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%05zu.json", i);
    nlohmann::json j = network_to_json(traj.snapshots[i].network);
    j["time"] = traj.snapshots[i].time;
    std::ofstream out(dir / name);
    out << j.dump() << '\n';
  }
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : traj.events) {
    ev.push_back({{"time", e.time},
                  {"kind", to_string(e.kind)},
                  {"location", {e.location.x(), e.location.y()}},
                  {"detail", e.detail}});
  }
  std::ofstream out(dir / "events.json");
  out << ev.dump(1) << '\n';
}

// ---------------------------------------------------------------------------

double GraphState::max_dt() const {
  const double h = dx();
  return mode == Mode::Radial ? h * h / (2.0 * std::max(1, m)) : h * h / 2.0;
}

GraphState make_interval_graph(double x0, double x1, std::size_t points, const std::function<double(double)>& f) {
  if (points < 3 || !(x1 > x0)) throw std::invalid_argument("interval graph needs x1 > x0 and >= 3 points");
  GraphState s;
  s.x0 = x0;
  s.x1 = x1;
  s.u.resize(points);
  for (std::size_t i = 0; i < points; ++i) s.u[i] = f(s.x(i));
  return s;
}

GraphState make_radial_graph(double radius, int m, std::size_t points, const std::function<double(double)>& f) {
  if (points < 3 || !(radius > 0.0) || m < 1) throw std::invalid_argument("radial graph needs radius > 0, m >= 1, >= 3 points");
  GraphState s;
  s.mode = GraphState::Mode::Radial;
  s.x0 = 0.0;
  s.x1 = radius;
  s.m = m;
  s.u.resize(points);
  for (std::size_t i = 0; i < points; ++i) s.u[i] = f(s.x(i));
  return s;
}

GraphState step_graph(const GraphState& state, double dt) {
  if (!(dt > 0.0) || dt > state.max_dt() * (1.0 + 1e-12)) throw std::invalid_argument("graph step dt outside the stable range");
  GraphState next = state;
  const std::size_t n = state.u.size();
  const double h = state.dx();
  const auto& u = state.u;
  // Flux a_i = arctan of the slope on cell [i, i+1].
  std::vector<double> a(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) a[i] = std::atan((u[i + 1] - u[i]) / h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double rate = (a[i] - a[i - 1]) / h;
    if (state.mode == GraphState::Mode::Radial && state.m > 1) {
      rate += (state.m - 1) * (u[i + 1] - u[i - 1]) / (2.0 * h) / state.x(i);
    }
    next.u[i] = u[i] + dt * rate;
  }
  const double t1 = state.time + dt;
  if (state.mode == GraphState::Mode::Radial) {
    // Symmetric ghost value u_{-1} = u_1 at the centre.
    next.u[0] = u[0] + dt * state.m * 2.0 * (u[1] - u[0]) / (h * h);
  } else if (state.left_value) {
    next.u[0] = state.left_value(t1);
  }
  if (state.right_value) next.u[n - 1] = state.right_value(t1);
  next.time = t1;
  return next;
}

double max_gradient(const GraphState& state) {
  double g = 0.0;
  const double h = state.dx();
  for (std::size_t i = 0; i + 1 < state.u.size(); ++i) g = std::max(g, std::abs(state.u[i + 1] - state.u[i]) / h);
  return g;
}

GradientReport gradient_bound_check(const std::vector<GraphState>& trajectory, double applicable_below) {
  GradientReport r;
  if (trajectory.empty()) return r;
  r.initial = max_gradient(trajectory.front());
  r.applicable = r.initial <= applicable_below;
  for (const auto& s : trajectory) {
    const double h = s.dx();
    const std::size_t n = s.u.size();
    r.boundary = std::max({r.boundary, std::abs(s.u[1] - s.u[0]) / h, std::abs(s.u[n - 1] - s.u[n - 2]) / h});
    r.max = std::max(r.max, max_gradient(s));
  }
  r.pass = r.applicable && r.max <= std::max(r.initial, r.boundary) * (1.0 + 1e-6);
  return r;
}

}  // namespace brakke
