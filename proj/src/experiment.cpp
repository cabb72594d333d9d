#include "brakke/experiment.hpp"

#include "brakke/brakke_check.hpp"
#include "brakke/config.hpp"
#include "brakke/flow.hpp"
#include "brakke/kernels.hpp"
#include "brakke/monotonicity.hpp"
#include "brakke/network_json.hpp"
#include "brakke/regularize.hpp"
#include "brakke/varifold.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#ifndef BRAKKE_VERSION
#define BRAKKE_VERSION "unknown"
#endif

namespace brakke {

const char* const kCodeVersion = BRAKKE_VERSION;

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kPi = std::numbers::pi;

// Check failure inside a pipeline that cannot produce its reports.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Typed access to one table of the config. Every value read, default or
// not, is copied into the resolved config.
class Section {
 public:
  Section(const json* src, json* out, std::string where) : src_(src), out_(out), where_(std::move(where)) {
    if (!out_->is_object()) *out_ = json::object();
  }

  bool has(const std::string& k) const { return src_ && src_->contains(k); }

  double num(const std::string& k, double def) { return has(k) ? num(k) : record(k, def); }
  double num(const std::string& k) {
    const json& v = need(k);
    if (!v.is_number()) fail(k, "expected a number");
    return record(k, v.get<double>());
  }
  int integer(const std::string& k, int def) { return has(k) ? integer(k) : static_cast<int>(record(k, def)); }
  int integer(const std::string& k) {
    const json& v = need(k);
    if (!v.is_number_integer()) fail(k, "expected an integer");
    return static_cast<int>(record(k, v.get<std::int64_t>()));
  }
  bool flag(const std::string& k, bool def) { return has(k) ? flag(k) : record(k, def); }
  bool flag(const std::string& k) {
    const json& v = need(k);
    if (!v.is_boolean()) fail(k, "expected true or false");
    return record(k, v.get<bool>());
  }
  std::string str(const std::string& k, const std::string& def) { return has(k) ? str(k) : record(k, def); }
  std::string str(const std::string& k) {
    const json& v = need(k);
    if (!v.is_string()) fail(k, "expected a string");
    return record(k, v.get<std::string>());
  }
  Vec2 vec2(const std::string& k, const Vec2& def) { return has(k) ? vec2(k) : (record(k, json{def.x(), def.y()}), def); }
  Vec2 vec2(const std::string& k) {
    const auto v = nums(k);
    if (v.size() != 2) fail(k, "expected [x, y]");
    return {v[0], v[1]};
  }
  std::vector<double> nums(const std::string& k) {
    const json& v = need(k);
    if (!v.is_array()) fail(k, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(k, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    record(k, out);
    return out;
  }
  std::vector<double> nums(const std::string& k, const std::vector<double>& def) { return has(k) ? nums(k) : record(k, def); }
  std::vector<int> ints(const std::string& k, const std::vector<int>& def) {
    if (!has(k)) return record(k, def);
    const json& v = need(k);
    std::vector<int> out;
    if (!v.is_array()) fail(k, "expected an array of integers");
    for (const auto& e : v) {
      if (!e.is_number_integer()) fail(k, "expected an array of integers");
      out.push_back(e.get<int>());
    }
    return record(k, out);
  }
  std::vector<Vec2> points(const std::string& k) {
    const json& v = need(k);
    std::vector<Vec2> out;
    if (!v.is_array()) fail(k, "expected an array of [x, y]");
    for (const auto& e : v) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) fail(k, "expected [x, y] entries");
      out.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    (*out_)[k] = v;
    return out;
  }
  std::vector<std::string> strs(const std::string& k, const std::vector<std::string>& def) {
    if (!has(k)) return record(k, def);
    const json& v = need(k);
    std::vector<std::string> out;
    if (!v.is_array()) fail(k, "expected an array of strings");
    for (const auto& e : v) {
      if (!e.is_string()) fail(k, "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return record(k, out);
  }

  Section sub(const std::string& k) {
    const json* s = has(k) ? &(*src_)[k] : nullptr;
    if (s && !s->is_object()) fail(k, "expected a table");
    return Section(s, &(*out_)[k], where_ + k + ".");
  }
  // Array of tables; a missing key gives an empty list.
  std::vector<Section> list(const std::string& k) {
    std::vector<Section> out;
    if (!has(k)) return out;
    const json& v = (*src_)[k];
    if (!v.is_array()) fail(k, "expected an array of tables");
    json& dst = (*out_)[k];
    dst = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_object()) fail(k, "expected an array of tables");
      dst.push_back(json::object());
    }
    for (std::size_t i = 0; i < v.size(); ++i)
      out.emplace_back(&v[i], &dst[i], where_ + k + "[" + std::to_string(i) + "].");
    return out;
  }

  [[noreturn]] void fail(const std::string& k, const std::string& what) const {
    throw ConfigError(where_ + k + ": " + what);
  }

 private:
  const json* src_;
  json* out_;
  std::string where_;

  const json& need(const std::string& k) const {
    if (!has(k)) throw ConfigError("missing required key " + where_ + k);
    return (*src_)[k];
  }
  template <class T>
  T record(const std::string& k, const T& v) {
    (*out_)[k] = v;
    return v;
  }
};

// Keys of the source that no pipeline read.
void unknown_keys(const json& src, const json& used, const std::string& where, std::vector<std::string>& out) {
  if (!src.is_object()) return;
  for (const auto& [k, v] : src.items()) {
    if (!used.is_object() || !used.contains(k)) {
      out.push_back(where + k);
      continue;
    }
    if (v.is_object()) unknown_keys(v, used[k], where + k + ".", out);
    if (v.is_array() && used[k].is_array() && v.size() == used[k].size()) {
      for (std::size_t i = 0; i < v.size(); ++i)
        unknown_keys(v[i], used[k][i], where + k + "[" + std::to_string(i) + "].", out);
    }
  }
}

struct Context {
  fs::path config_dir;
  fs::path out_dir;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  json data = json::object();  // kind-specific report content

  fs::path input(Section& s, const std::string& key) {
    const fs::path p = config_dir / s.str(key);
    if (!fs::exists(p)) throw ConfigError(key + ": no such file " + p.string());
    return p;
  }
  void check(std::string name, bool pass, double value, double limit, std::string detail = "") {
    checks.push_back({std::move(name), pass, value, limit, std::move(detail)});
  }
};

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// For messages.
std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void write_csv(const fs::path& p, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream s;
  for (std::size_t i = 0; i < header.size(); ++i) s << (i ? "," : "") << header[i];
  s << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << fmt(r[i]);
    s << "\n";
  }
  write_text(p, s.str());
}

// gnuplot stub plotting column `y` against column `x` of a CSV file.
void write_plot(const fs::path& dir, const std::string& csv, int x, int y, const std::string& title) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set title '" << title << "'\n"
    << "plot '" << csv << "' using " << x << ":" << y << " with lines\n";
  write_text(dir / "plot.gp", s.str());
}

// ---------------------------------------------------------------------------
// Shared config blocks

Scheme scheme_from(Section& s) {
  const std::string v = s.str("scheme", "explicit");
  if (v == "explicit") return Scheme::Explicit;
  if (v == "semi_implicit") return Scheme::SemiImplicit;
  s.fail("scheme", "expected \"explicit\" or \"semi_implicit\"");
}

FlowParams flow_params(Section s) {
  FlowParams p;
  p.dt_safety = s.num("dt_safety", p.dt_safety);
  p.target_h = s.num("target_h", p.target_h);
  p.scheme = scheme_from(s);
  p.t_start = s.num("t_start", p.t_start);
  p.t_end = s.num("t_end", p.t_end);
  p.resample_every = s.integer("resample_every", p.resample_every);
  p.snapshot_every = s.num("snapshot_every", p.snapshot_every);
  if (s.has("dt_max")) p.dt_max = s.num("dt_max");
  p.junction_tol = s.num("junction_tol", p.junction_tol);
  p.junction_max_iter = s.integer("junction_max_iter", p.junction_max_iter);
  if (!(p.target_h > 0.0) || !(p.dt_safety > 0.0) || !(p.t_end > p.t_start)) {
    throw ConfigError("flow: need target_h > 0, dt_safety > 0 and t_end > t_start");
  }
  return p;
}

KernelConfig kernel_config(Section s) {
  KernelConfig k;
  k.m = s.integer("m", k.m);
  k.cutoff_inner = s.num("cutoff_inner", k.cutoff_inner);
  k.cutoff_outer = s.num("cutoff_outer", k.cutoff_outer);
  k.cutoff_enabled = s.flag("cutoff_enabled", k.cutoff_enabled);
  k.A = s.num("A", k.A);
  try {
    k.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  return k;
}

ToleranceModel tolerance_model(Section s) { return {s.num("a"), s.num("b")}; }

Network load_geometry(Context& ctx, Section& s, const std::string& key = "geometry") {
  const fs::path p = ctx.input(s, key);
  try {
    return load_network(p);
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::optional<EventKind> event_kind(const std::string& s) {
  for (EventKind k : {EventKind::JunctionHitBoundary, EventKind::CurveVanished, EventKind::CurvatureBlowup})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::set<std::string> gamma_ids(const Network& n) {
  std::set<std::string> ids;
  for (const auto& b : n.boundary_points) ids.insert(b.id);
  return ids;
}

void write_trajectory(Context& ctx, const FlowTrajectory& traj, std::size_t stride) {
  write_trajectory_csv(ctx.out_dir / "trajectory.csv", traj);
  write_trajectory_snapshots(ctx.out_dir / "snapshots", traj, stride);
  write_plot(ctx.out_dir, "trajectory.csv", 1, 2, "total mass");
}

// Area bound over every (center, radius) pair.
void area_bound_checks(Context& ctx, Section s, const FlowTrajectory& traj, const std::string& label) {
  if (!s.has("centers")) return;
  const auto centers = s.points("centers");
  const auto radii = s.nums("radii");
  const double tol = s.num("tol");
  json rows = json::array();
  double worst = std::numeric_limits<double>::infinity();
  bool pass = true;
  for (const auto& c : centers) {
    for (double r : radii) {
      const auto rep = area_bound_check(traj, c, r, tol);
      pass = pass && rep.pass;
      worst = std::min(worst, rep.worst_margin);
      json j = rep.to_json();
      j["center"] = {c.x(), c.y()};
      j["radius"] = r;
      rows.push_back(j);
    }
  }
  ctx.data[label + "area_bound"] = rows;
  ctx.check(label + "area_bound", pass, worst, -tol, "worst margin of allowance - mass");
}

// ---------------------------------------------------------------------------
// network_flow

void run_network_flow(Section& root, Context& ctx) {
  const Network net = load_geometry(ctx, root);
  FlowParams p = flow_params(root.sub("flow"));
  Section out = root.sub("output");
  const int stride = out.integer("snapshot_stride", 10);
  Section checks = root.sub("checks");

  const FlowTrajectory traj = run(net, p);
  write_trajectory(ctx, traj, static_cast<std::size_t>(std::max(1, stride)));
  json events = json::array();
  for (const auto& e : traj.events) {
    events.push_back({{"time", e.time}, {"kind", to_string(e.kind)}, {"location", {e.location.x(), e.location.y()}},
                      {"singular_time", e.singular_time}, {"detail", e.detail}});
  }
  ctx.data["events"] = events;
  ctx.data["final_time"] = traj.end_time();
  ctx.data["final_mass"] = traj.snapshots.back().total_mass;

  if (checks.has("events")) {
    Section ev = checks.sub("events");
    for (const auto& name : ev.strs("expect", {})) {
      const auto k = event_kind(name);
      if (!k) ev.fail("expect", "unknown event " + name);
      const auto e = traj.first_event(*k);
      ctx.check("event " + name + " recorded", e.has_value(), e ? e->time : -1.0, 0.0, "event time");
    }
    for (const auto& name : ev.strs("forbid", {})) {
      const auto k = event_kind(name);
      if (!k) ev.fail("forbid", "unknown event " + name);
      const auto e = traj.first_event(*k);
      ctx.check("no " + name, !e.has_value(), e ? e->time : -1.0, 0.0, "event time");
    }
  }
  if (checks.has("final_length")) {
    Section c = checks.sub("final_length");
    const double v = c.num("value"), tol = c.num("tol");
    const double m = traj.snapshots.back().total_mass;
    ctx.check("final length", std::abs(m - v) <= tol, m, v, "tolerance " + brief(tol));
  }
  if (checks.has("junction")) {
    Section c = checks.sub("junction");
    const std::string id = c.str("id");
    const Vec2 target = c.vec2("point");
    const double tol = c.num("tol");
    const auto* j = traj.snapshots.back().network.find_junction(id);
    if (!j) c.fail("id", "no junction " + id + " in the final snapshot");
    const double d = (j->point - target).norm();
    ctx.check("junction " + id + " position", d <= tol, d, tol, "distance to target");
  }
  if (checks.has("circle")) {
    // Radius from the enclosed area, so a translation of the whole loop does
    // not count; the spread of vertex distances from the centroid is reported.
    Section c = checks.sub("circle");
    const double r0 = c.num("r0"), tol = c.num("tol");
    const double until = c.num("until", p.t_end);
    double worst = 0.0, spread = 0.0;
    for (const auto& s : traj.snapshots) {
      if (s.time > until + 1e-12) break;
      const double exact = std::sqrt(r0 * r0 - 2.0 * s.time);
      for (const auto& k : s.network.curves) {
        if (!k.closed) continue;
        const auto& v = k.vertices;
        double area = 0.0;
        Vec2 centroid = Vec2::Zero();
        for (std::size_t i = 0; i < v.size(); ++i) {
          const Vec2& a = v[i];
          const Vec2& b = v[(i + 1) % v.size()];
          area += 0.5 * (a.x() * b.y() - a.y() * b.x());
          centroid += a / static_cast<double>(v.size());
        }
        worst = std::max(worst, std::abs(std::sqrt(std::abs(area) / kPi) / exact - 1.0));
        for (const auto& x : v) spread = std::max(spread, std::abs((x - centroid).norm() / exact - 1.0));
      }
    }
    ctx.data["circle"] = {{"max_relative_radius_error", worst}, {"max_relative_vertex_spread", spread}};
    ctx.check("circle radius", worst <= tol, worst, tol, "max relative error of sqrt(area / pi)");
  }
  if (checks.has("extinction")) {
    Section c = checks.sub("extinction");
    const double expected = c.num("expected"), rel = c.num("rel_tol");
    const auto e = traj.first_event(EventKind::CurveVanished);
    const double t = e ? e->time : -1.0;
    ctx.check("extinction time", e && std::abs(t / expected - 1.0) <= rel, t, expected, "relative tolerance " + brief(rel));
  }
  if (checks.has("hit_stability")) {
    Section c = checks.sub("hit_stability");
    const double rel = c.num("rel_tol");
    FlowParams fine = p;
    fine.target_h *= 0.5;
    if (std::isfinite(fine.dt_max)) fine.dt_max *= 0.5;
    const auto coarse_e = traj.first_event(EventKind::JunctionHitBoundary);
    const auto fine_traj = run(net, fine);
    const auto fine_e = fine_traj.first_event(EventKind::JunctionHitBoundary);
    const double a = coarse_e ? coarse_e->singular_time : -1.0;
    const double b = fine_e ? fine_e->singular_time : -1.0;
    const double change = (coarse_e && fine_e) ? std::abs(b / a - 1.0) : 1.0;
    ctx.data["hit_stability"] = {{"coarse_h", p.target_h}, {"fine_h", fine.target_h}, {"coarse", a}, {"fine", b}};
    ctx.check("hit time stable under halving h", coarse_e && fine_e && change <= rel, change, rel,
              "relative change of the extrapolated contact time");
  }
  if (checks.has("standard")) {
    Section c = checks.sub("standard");
    const bool expect = c.flag("expect");
    const auto ids = gamma_ids(net);
    std::set<std::string> junctions;
    for (const auto& j : net.junctions) junctions.insert(j.id);
    int agree = 0;
    for (const auto& s : traj.snapshots) {
      const auto r = is_standard_state(s.network, ids, s.time);
      bool ok = r.standard == expect;
      if (!expect) ok = ok && std::set<std::string>(r.violators.begin(), r.violators.end()) == junctions;
      agree += ok;
    }
    const int n = static_cast<int>(traj.snapshots.size());
    ctx.check(expect ? "standard at every snapshot" : "non-standard at every snapshot (violators = junctions)",
              agree == n, agree, n, "snapshots agreeing");
  }
  area_bound_checks(ctx, checks.sub("area_bound"), traj, "");
}

// ---------------------------------------------------------------------------
// graph_flow

std::function<double(double)> profile(Section s, double a, double b) {
  const std::string type = s.str("type");
  const double amp = s.num("amplitude", 0.0);
  const double freq = s.num("frequency", 1.0);
  const double offset = s.num("offset", 0.0);
  const double len = b - a;
  if (type == "bump") {
    return [=](double x) {
      const double u = (2.0 * (x - a) / len) - 1.0;
      return offset + amp * (1 - u * u) * (1 - u * u);
    };
  }
  if (type == "sine") return [=](double x) { return offset + amp * std::sin(freq * kPi * (x - a) / len); };
  if (type == "cosine") return [=](double x) { return offset + amp * std::cos(freq * x); };
  s.fail("type", "expected bump, sine or cosine");
}

void run_graph_flow(Section& root, Context& ctx) {
  Section g = root.sub("graph");
  const std::string mode = g.str("mode", "interval");
  const int points = g.integer("points");
  if (points < 3) g.fail("points", "need at least 3 points");
  GraphState s;
  if (mode == "interval") {
    const double x0 = g.num("x0"), x1 = g.num("x1");
    s = make_interval_graph(x0, x1, static_cast<std::size_t>(points), profile(g.sub("profile"), x0, x1));
  } else if (mode == "radial") {
    const double radius = g.num("radius");
    const int m = g.integer("m");
    s = make_radial_graph(radius, m, static_cast<std::size_t>(points), profile(g.sub("profile"), -radius, radius));
  } else {
    g.fail("mode", "expected interval or radial");
  }
  const double t_end = g.num("t_end");
  const double frac = g.num("dt_fraction", 0.9);
  const int record_every = g.integer("record_every", 100);
  if (!(frac > 0.0 && frac <= 1.0)) g.fail("dt_fraction", "must be in (0, 1]");

  std::vector<GraphState> hist{s};
  std::vector<std::vector<double>> rows;
  const auto row = [](const GraphState& st) {
    double mu = 0.0;
    for (double v : st.u) mu = std::max(mu, std::abs(v));
    return std::vector<double>{st.time, mu, max_gradient(st)};
  };
  rows.push_back(row(s));
  for (long step = 1; s.time < t_end - 1e-12; ++step) {
    s = step_graph(s, std::min(frac * s.max_dt(), t_end - s.time));
    if (step % record_every == 0 || s.time >= t_end - 1e-12) {
      hist.push_back(s);
      rows.push_back(row(s));
    }
  }
  write_csv(ctx.out_dir / "series.csv", {"time", "max_abs_u", "max_gradient"}, rows);
  std::vector<std::vector<double>> prof;
  for (std::size_t i = 0; i < s.u.size(); ++i) prof.push_back({s.x(i), hist.front().u[i], s.u[i]});
  write_csv(ctx.out_dir / "profile.csv", {"x", "u_initial", "u_final"}, prof);
  write_plot(ctx.out_dir, "series.csv", 1, 3, "sup |u_x|");

  Section checks = root.sub("checks");
  if (checks.has("gradient_bound")) {
    Section c = checks.sub("gradient_bound");
    const auto rep = gradient_bound_check(hist, c.num("applicable_below"));
    ctx.data["gradient_bound"] = {{"applicable", rep.applicable}, {"initial", rep.initial},
                                  {"boundary", rep.boundary},     {"max", rep.max}, {"verdict", rep.pass ? "pass" : "fail"}};
    ctx.check("gradient maximum principle", rep.applicable && rep.pass, rep.max, rep.initial, "sup |u_x| over time");
  }
  if (checks.has("max_principle")) {
    Section c = checks.sub("max_principle");
    const double tol = c.num("tol");
    double worst = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) worst = std::max(worst, rows[i][1] - rows[i - 1][1]);
    ctx.check("sup |u| non-increasing", worst <= tol, worst, tol, "largest increase");
  }
}

// ---------------------------------------------------------------------------
// density

void run_density(Section& root, Context& ctx) {
  const Network net = load_geometry(ctx, root);
  Section d = root.sub("density");
  const SpacetimePoint center{d.vec2("center"), d.num("time")};
  DensityOptions o;
  o.t0 = d.num("t0", o.t0);
  o.levels = d.integer("levels", o.levels);
  o.moving = d.flag("moving", o.moving);
  const KernelConfig k = kernel_config(root.sub("kernel"));

  Section tr = root.sub("trajectory");
  const std::string mode = tr.str("mode");
  FlowTrajectory traj;
  if (mode == "static") {
    // Geometric times from center - span down to center - span * 1e-5, then the centre.
    const int n = tr.integer("samples");
    const double span = tr.num("span");
    if (n < 2 || !(span > 0.0)) tr.fail("samples", "need samples >= 2 and span > 0");
    std::vector<double> times;
    for (int i = 0; i < n; ++i) times.push_back(center.t - span * std::pow(10.0, -5.0 * i / (n - 1)));
    times.push_back(center.t);
    traj = static_trajectory(net, times);
  } else if (mode == "flow") {
    traj = run(net, flow_params(root.sub("flow")));
  } else {
    tr.fail("mode", "expected static or flow");
  }
  DensityResult r;
  try {
    r = gaussian_density(traj, center, k, o);
  } catch (const MonotonicityError& e) {
    throw CheckFailure(e.what());
  }
  r.series.write_csv(ctx.out_dir / "series.csv");
  write_plot(ctx.out_dir, "series.csv", 1, 2, "monotone quantity");
  ctx.data["density"] = r.density;
  ctx.data["K"] = r.K;
  ctx.data["C"] = r.C;
  ctx.data["sample_times"] = r.sample_times;
  ctx.data["sample_values"] = r.sample_values;

  Section checks = root.sub("checks");
  if (checks.has("density")) {
    Section c = checks.sub("density");
    const double expected = c.num("expected"), tol = c.num("tol");
    ctx.check("gaussian density", std::abs(r.density - expected) <= tol, r.density, expected, "tolerance " + brief(tol));
  }
  if (checks.has("monotone")) {
    Section c = checks.sub("monotone");
    const double tol = c.num("tol");
    const auto m = monotonicity_check(r.series, tol);
    ctx.check("monotone quantity non-increasing", m.pass, m.max_uptick, tol, "largest uptick");
  }
}

// ---------------------------------------------------------------------------
// brakke_audit

TestFunction test_function(Section s) {
  const std::string type = s.str("type");
  if (type == "bump") return bump(s.vec2("center"), s.num("radius"));
  if (type == "growing_bump") return growing_bump(s.vec2("center"), s.num("radius"), s.num("rate"));
  if (type == "plateau") return plateau(s.vec2("center"), s.num("r_in"), s.num("r_out"));
  if (type == "trace") return trace_function(s.vec2("center"), s.num("radius"));
  s.fail("type", "expected bump, growing_bump, plateau or trace");
}

void run_brakke_audit(Section& root, Context& ctx) {
  const Network net = load_geometry(ctx, root);
  const FlowParams base = flow_params(root.sub("flow"));
  Section audit = root.sub("audit");
  const auto hs = audit.nums("hs");
  const auto window = audit.nums("window");
  if (window.size() != 2) audit.fail("window", "expected [t_a, t_b]");
  const double a = window[0], b = window[1];
  const bool moving = audit.flag("moving", false);
  const double snap = audit.num("snapshot_fraction", 0.1);
  const int resample = audit.integer("resample_every", 0);
  if (hs.empty()) audit.fail("hs", "need at least one resolution");
  BrakkeOptions opts;
  opts.tol = tolerance_model(root.sub("tolerance"));

  std::vector<TestFunction> us;
  for (auto& s : root.list("test_functions")) {
    TestFunction u = test_function(s);
    try {
      u.validate(a, b, 5, 1e-4, ctx.seed);
    } catch (const TestFunctionError& e) {
      throw ConfigError(std::string("test function ") + u.name + ": " + e.what());
    }
    u.name = "u" + std::to_string(us.size()) + " " + u.name;
    us.push_back(std::move(u));
  }
  if (us.empty()) throw ConfigError("brakke_audit needs at least one [[test_functions]] entry");

  std::vector<FlowTrajectory> trajs;
  for (double h : hs) {
    FlowParams p = base;
    p.target_h = h;
    p.snapshot_every = snap * h;
    p.resample_every = resample;
    trajs.push_back(run(net, p));
  }
  std::vector<const FlowTrajectory*> ptrs;
  for (const auto& t : trajs) ptrs.push_back(&t);
  write_trajectory(ctx, trajs.back(), 100);

  Section checks = root.sub("checks");
  Section order = checks.sub("order");
  const bool want_order = order.has("min");
  const double min_order = want_order ? order.num("min") : 0.0;
  json reports = json::array();
  std::vector<std::vector<double>> rows;
  std::vector<InequalityReport> finest;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const auto r = brakke_refinement(ptrs, us[i], a, b, moving, opts);
    json j = r.to_json();
    j["test_function"] = us[i].name;
    reports.push_back(j);
    for (const auto& row : r.refinement) rows.push_back({static_cast<double>(i), row.h, row.dt, row.residual});
    ctx.check("inequality " + us[i].name, r.pass, r.residual, -r.tol, "residual lhs - rhs");
    if (want_order) {
      const double o = r.observed_order.value_or(0.0);
      ctx.check("order " + us[i].name, r.observed_order && o >= min_order, o, min_order, "observed order in h + dt");
    }
    finest.push_back(r);
  }
  ctx.data["inequality"] = reports;
  write_csv(ctx.out_dir / "residuals.csv", {"function", "h", "dt", "residual"}, rows);

  if (checks.has("positive")) {
    Section c = checks.sub("positive");
    const int idx = c.integer("function");
    if (idx < 0 || idx >= static_cast<int>(us.size())) c.fail("function", "index out of range");
    const double res = finest[idx].residual;
    ctx.check("strictly positive residual " + us[idx].name, res > 0.0, res, 0.0, "residual at the finest resolution");
  }
  if (checks.has("negative_control")) {
    Section c = checks.sub("negative_control");
    const auto idx = c.ints("functions", {});
    BrakkeOptions flipped = opts;
    flipped.flip_moving_sign = true;
    for (int i : idx) {
      if (i < 0 || i >= static_cast<int>(us.size())) c.fail("functions", "index out of range");
      const auto r = brakke_inequality_moving(trajs.back(), us[i], a, b, flipped);
      ctx.check("negative control fails " + us[i].name, !r.pass, r.residual, -r.tol,
                "residual with the moving-boundary term sign-flipped");
    }
  }
  if (checks.has("h_squared")) {
    Section c = checks.sub("h_squared");
    const int idx = c.integer("function");
    if (idx < 0 || idx >= static_cast<int>(us.size())) c.fail("function", "index out of range");
    const auto r = h_squared_bound(trajs.back(), us[idx], a, b, opts.tol);
    ctx.data["h_squared"] = r.to_json();
    ctx.check("H^2 bound " + us[idx].name, r.pass, r.margin, -r.tol, "rhs - lhs");
  }
  area_bound_checks(ctx, checks.sub("area_bound"), trajs.back(), "");
}

// ---------------------------------------------------------------------------
// regularization

// Length of the boundary edges with both ends on the initial curve.
double initial_curve_length(const TriMesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  const auto on_m0 = [&](int v) {
    const auto it = m.pinned.find(v);
    return it != m.pinned.end() && it->second.kind == PinKind::InitialCurve;
  };
  double len = 0.0;
  for (const auto& [e, c] : count)
    if (c == 1 && on_m0(e.first) && on_m0(e.second)) len += (m.vertices[e.first] - m.vertices[e.second]).norm();
  return len;
}

void run_regularization(Section& root, Context& ctx) {
  Section ms = root.sub("mesh");
  const std::string type = ms.str("type");
  Section rc = root.sub("regularization");
  RegularizationConfig cfg;
  cfg.lambda = rc.num("lambda");
  TriMesh mesh;
  try {
    if (type == "cap") {
      mesh = cap_mesh(ms.vec2("center", Vec2::Zero()), ms.num("r0"), cfg.lambda, ms.integer("rings"),
                      ms.integer("sectors"), ms.num("perturbation", 0.1), ms.num("z_cut", 0.0));
    } else if (type == "strip") {
      mesh = strip_mesh(ms.vec2("p"), ms.vec2("q"), ms.num("z_max"), ms.integer("nx"), ms.integer("nz"),
                        ms.num("bulge", 0.0), ms.str("gamma_p", "A"), ms.str("gamma_q", "B"));
    } else if (type == "file") {
      mesh = load_off(ctx.input(ms, "path"));
    } else {
      ms.fail("type", "expected cap, strip or file");
    }
  } catch (const RegularizeError& e) {
    throw ConfigError(std::string("mesh: ") + e.what());
  }
  cfg.z_max = rc.num("z_max", mesh.z_max);
  cfg.max_iterations = rc.integer("max_iterations", cfg.max_iterations);
  cfg.residual_tol = rc.num("residual_tol", cfg.residual_tol);
  cfg.initial_step = rc.num("initial_step", cfg.initial_step);
  cfg.cfl = rc.num("cfl", cfg.cfl);
  cfg.remesh_every = rc.integer("remesh_every", cfg.remesh_every);
  try {
    cfg.validate();
  } catch (const RegularizeError& e) {
    throw ConfigError(std::string("regularization: ") + e.what());
  }

  Section sl = root.sub("slices");
  const double t_end = sl.num("t_end");
  const int count = sl.integer("count");
  const double z0 = sl.num("z0", 1.0 / cfg.lambda);
  if (count < 1) sl.fail("count", "must be positive");
  std::vector<double> times;
  for (int i = 0; i <= count; ++i) times.push_back(t_end * i / count);

  const MinimizeResult r = minimize(mesh, cfg);
  save_off(ctx.out_dir / "mesh.off", r.mesh);
  const auto sf = slice_flow(r.mesh, cfg.lambda, times, z0);
  write_trajectory(ctx, sf.trajectory, 1);
  ctx.data["minimize"] = {{"converged", r.converged}, {"iterations", r.iterations}, {"value", r.value},
                          {"residual", r.residual},   {"flips", r.flips},           {"warning", r.warning},
                          {"vertices", r.mesh.vertices.size()}, {"triangles", r.mesh.triangles.size()},
                          {"min_angle_degrees", r.mesh.min_angle_degrees()}};
  ctx.data["slices"] = {{"count", sf.trajectory.snapshots.size()}, {"truncated", sf.truncated},
                        {"warning", sf.warning}, {"z0", sf.z0}};
  std::vector<std::vector<double>> hist;
  for (std::size_t i = 0; i < r.history.size(); ++i) hist.push_back({static_cast<double>(i), r.history[i]});
  write_csv(ctx.out_dir / "history.csv", {"iteration", "weighted_area"}, hist);

  Section checks = root.sub("checks");
  if (checks.has("converged")) {
    Section c = checks.sub("converged");
    const double max_res = c.num("max_residual");
    ctx.check("minimizer converged", r.converged && r.residual <= max_res, r.residual, max_res, r.warning);
  }
  if (checks.has("min_angle")) {
    Section c = checks.sub("min_angle");
    const double lim = c.num("degrees");
    const double a = r.mesh.min_angle_degrees();
    ctx.check("triangle quality", a > lim, a, lim, "smallest angle in degrees");
  }
  if (checks.has("monotone")) {
    Section c = checks.sub("monotone");
    const double rel = c.num("rel_tol");
    double worst = 0.0;
    for (std::size_t i = 1; i < r.history.size(); ++i)
      worst = std::max(worst, (r.history[i] - r.history[i - 1]) / std::abs(r.history[i - 1]));
    ctx.check("weighted area non-increasing", worst <= rel, worst, rel, "largest relative increase");
  }
  if (checks.has("slab_bound")) {
    Section c = checks.sub("slab_bound");
    const auto as = c.nums("a"), bs = c.nums("b");
    const double tol = c.num("tol");
    const double len = initial_curve_length(r.mesh);
    const auto rep = slab_bound_check(r.mesh, cfg.lambda, len, as, bs, tol);
    json j = rep.to_json();
    j["length_m0"] = len;
    ctx.data["slab_bound"] = j;
    ctx.check("slab bound", rep.pass, rep.worst_margin, -tol, "worst bound - mass");
  }
  if (checks.has("mod2")) {
    Section c = checks.sub("mod2");
    std::set<std::string> ids;
    for (const auto& [v, pin] : r.mesh.pinned)
      if (!pin.gamma_id.empty()) ids.insert(pin.gamma_id);
    const int min_slices = c.integer("min_slices", 1);
    int ok = 0;
    const int n = static_cast<int>(sf.trajectory.snapshots.size());
    for (const auto& s : sf.trajectory.snapshots) ok += is_standard_state(s.network, ids, s.time).standard;
    ctx.check("mod-2 boundary of every slice equals Gamma", ok == n && n >= min_slices, ok, n, "standard slices");
  }
  if (checks.has("compare_flow")) {
    Section c = checks.sub("compare_flow");
    const Network direct_net = load_geometry(ctx, c);
    FlowParams p = flow_params(c.sub("flow"));
    const double max_rel = c.num("max_relative");
    p.t_end = std::max(p.t_end, t_end);
    if (!(p.snapshot_every > 0.0)) c.fail("flow", "snapshot_every must divide the slice spacing");
    const auto direct = run(direct_net, p);
    const auto cmp = compare_to_flow(sf.trajectory, direct);
    ctx.data["compare_flow"] = cmp.to_json();
    std::vector<std::vector<double>> rows;
    for (const auto& row : cmp.rows) rows.push_back({row.time, row.hausdorff, row.scale, row.relative});
    write_csv(ctx.out_dir / "comparison.csv", {"time", "hausdorff", "scale", "relative"}, rows);
    ctx.check("slices match the direct flow", cmp.unmatched == 0 && !cmp.rows.empty() && cmp.max_relative <= max_rel,
              cmp.max_relative, max_rel, "max relative Hausdorff distance");
  }
}

// ---------------------------------------------------------------------------
// avoidance

void run_avoidance(Section& root, Context& ctx) {
  const Network flow_net = load_geometry(ctx, root);
  const Network barrier_net = load_geometry(ctx, root, "barrier");
  const bool barrier_static = root.flag("barrier_static", false);
  const FlowParams p = flow_params(root.sub("flow"));
  const ToleranceModel tol = tolerance_model(root.sub("tolerance"));
  const auto flow = run(flow_net, p);
  FlowTrajectory barrier;
  if (barrier_static) {
    std::vector<double> times;
    for (const auto& s : flow.snapshots) times.push_back(s.time);
    barrier = static_trajectory(barrier_net, times);
  } else {
    barrier = run(barrier_net, p);
  }
  AvoidanceReport rep;
  try {
    rep = avoidance_check(flow, barrier, tol);
  } catch (const AvoidanceError& e) {
    throw CheckFailure(e.what());
  }
  ctx.data["avoidance"] = rep.to_json();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.times.size(); ++i) rows.push_back({rep.times[i], rep.distance[i]});
  write_csv(ctx.out_dir / "distance.csv", {"time", "distance"}, rows);
  write_plot(ctx.out_dir, "distance.csv", 1, 2, "distance between supports");
  ctx.check("supports stay apart", rep.pass, rep.minimum, rep.initial - rep.tol, "minimum distance");

  Section checks = root.sub("checks");
  if (checks.has("concentric")) {
    Section c = checks.sub("concentric");
    const double r_in = c.num("r_inner"), r_out = c.num("r_outer"), t = c.num("tol");
    double worst = 0.0;
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      const double s = rep.times[i];
      if (2.0 * s >= r_in * r_in) break;
      const double exact = std::sqrt(r_out * r_out - 2.0 * s) - std::sqrt(r_in * r_in - 2.0 * s);
      worst = std::max(worst, std::abs(rep.distance[i] - exact));
    }
    ctx.check("gap matches the exact gap", worst <= t, worst, t, "max |d(t) - exact|");
  }
}

// ---------------------------------------------------------------------------
// wedge

void run_wedge(Section& root, Context& ctx) {
  const Network net = load_geometry(ctx, root);
  Section w = root.sub("wedge");
  const Vec2 edge = w.vec2("edge_point");
  const double limit = w.num("opening_limit", kPi);
  const double tol = w.num("tol");
  const double gap = w.num("cluster_gap", 1e-2);
  const auto r = wedge_test(to_varifold(net), edge, limit, tol, gap);
  json rays = json::array();
  if (r.decomposition)
    for (const auto& ray : *r.decomposition)
      rays.push_back({{"direction", {ray.direction.x(), ray.direction.y()}}, {"multiplicity", ray.multiplicity},
                      {"mass", ray.mass}});
  ctx.data["wedge"] = {{"contained", r.contained}, {"opening", r.opening}, {"nu", {r.nu.x(), r.nu.y()}},
                       {"nu_norm", r.nu.norm()},   {"standard", r.standard}, {"rays", rays}};

  Section e = root.sub("checks").sub("expect");
  const bool contained = e.flag("contained");
  ctx.check(contained ? "contained in a wedge" : "not wedge-contained", r.contained == contained, r.contained,
            contained);
  if (e.has("rays")) {
    const int n = e.integer("rays");
    const int got = r.decomposition ? static_cast<int>(r.decomposition->size()) : 0;
    ctx.check("ray count", got == n, got, n);
  }
  if (e.has("multiplicities")) {
    const auto want = e.ints("multiplicities", {});
    std::vector<int> got;
    if (r.decomposition)
      for (const auto& ray : *r.decomposition) got.push_back(ray.multiplicity);
    ctx.check("ray multiplicities", got == want, got.empty() ? 0 : got.front(), want.empty() ? 0 : want.front());
  }
  if (e.has("standard")) {
    const bool s = e.flag("standard");
    ctx.check(s ? "standard" : "flagged non-standard", r.standard == s, r.standard, s);
  }
  if (e.has("nu_norm")) {
    const double v = e.num("nu_norm"), t = e.num("nu_tol");
    ctx.check("|nu|", std::abs(r.nu.norm() - v) <= t, r.nu.norm(), v, "tolerance " + brief(t));
  }
}

// ---------------------------------------------------------------------------
// trig_table

void run_trig_table(Section& root, Context& ctx) {
  Section t = root.sub("trig");
  const auto ks = t.ints("ks", {1, 2, 3, 4, 5});
  const auto thetas = t.nums("thetas");
  // Grid points per angle, one entry per k.
  if (!t.has("grids")) t.fail("grids", "required, one grid size per k");
  const auto grids = t.ints("grids", {});
  if (grids.size() != ks.size()) t.fail("grids", "needs one entry per k");
  std::vector<std::vector<double>> rows;
  double worst_under = 0.0, worst_gap = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const int k = ks[i], n = grids[i];
    if (k < 1) t.fail("ks", "k must be positive");
    if (n < 2) t.fail("grids", "need at least 2 grid points");
    for (double th : thetas) {
      const auto g = kernels::parallel::trig_grid_min(k, th, n);
      const double bound = trig_bound(k, th);
      // Moving each angle to its nearest grid point changes the sum by at most k delta / 2.
      const double res = k * (2.0 * th / (n - 1)) / 2.0 + 1e-12;
      const double under = bound - g.min_norm;
      const double gap = g.min_norm - bound;
      worst_under = std::max(worst_under, under / res);
      worst_gap = std::max(worst_gap, gap / res);
      rows.push_back({static_cast<double>(k), th, bound, g.min_norm, res, static_cast<double>(g.configurations)});
    }
  }
  write_csv(ctx.out_dir / "table.csv", {"k", "theta", "trig_bound", "grid_min", "resolution", "configurations"}, rows);
  ctx.check("grid never undercuts the bound beyond resolution", worst_under <= 1.0, worst_under, 1.0,
            "worst (bound - grid min) / resolution");
  ctx.check("bound attained within resolution", worst_gap <= 1.0, worst_gap, 1.0,
            "worst (grid min - bound) / resolution");
}

const std::map<std::string, std::function<void(Section&, Context&)>>& pipelines() {
  static const std::map<std::string, std::function<void(Section&, Context&)>> m = {
      {"network_flow", run_network_flow}, {"graph_flow", run_graph_flow},
      {"density", run_density},           {"brakke_audit", run_brakke_audit},
      {"regularization", run_regularization}, {"avoidance", run_avoidance},
      {"wedge", run_wedge},               {"trig_table", run_trig_table}};
  return m;
}

std::string verdict(int code) { return code == kExitPass ? "pass" : code == kExitCheckFailed ? "fail" : "error"; }

}  // namespace

fs::path resolve_out_root(const RunOptions& opts) {
  if (!opts.out_root.empty()) return opts.out_root;
  if (const char* env = std::getenv("BRAKKE_LAB_OUT"); env && *env) return env;
  return "brakke_lab_out";
}

nlohmann::json CheckResult::to_json() const {
  return {{"name", name}, {"pass", pass}, {"value", value}, {"limit", limit}, {"detail", detail}};
}

nlohmann::json ExperimentResult::to_json() const {
  json checks_j = json::array();
  for (const auto& c : checks) checks_j.push_back(c.to_json());
  return {{"name", name},       {"kind", kind},   {"config", config.filename().string()},
          {"exit_code", exit_code}, {"verdict", verdict(exit_code)}, {"error", error}, {"checks", checks_j}};
}

ExperimentResult run_experiment(const fs::path& config, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.config = config;
  res.name = config.stem().string();
  json resolved = json::object();
  Context ctx;
  try {
    if (!fs::exists(config)) throw ConfigError("no such config " + config.string());
    const json src = load_toml(config);
    Section root(&src, &resolved, "");
    res.kind = root.str("kind");
    res.name = root.str("name", res.name);
    ctx.seed = opts.seed ? *opts.seed : static_cast<std::uint64_t>(root.integer("seed", 0));
    resolved["seed"] = ctx.seed;
    const auto it = pipelines().find(res.kind);
    if (it == pipelines().end()) root.fail("kind", "unknown experiment kind " + res.kind);
    ctx.config_dir = config.parent_path();
    res.out_dir = resolve_out_root(opts) / res.name;
    std::error_code ec;
    fs::create_directories(res.out_dir, ec);
    if (ec) throw ConfigError("output directory " + res.out_dir.string() + ": " + ec.message());
    ctx.out_dir = res.out_dir;
    try {
      it->second(root, ctx);
    } catch (const CheckFailure& e) {
      res.error = e.what();
      ctx.check("pipeline", false, 0.0, 0.0, e.what());
    }
    // Keys are read lazily, so misspellings only show up after the run.
    std::vector<std::string> unknown;
    unknown_keys(src, resolved, "", unknown);
    if (!unknown.empty()) {
      std::string msg = "unknown keys:";
      for (const auto& k : unknown) msg += " " + k;
      throw ConfigError(msg);
    }
    res.checks = ctx.checks;
    res.exit_code = kExitPass;
    for (const auto& c : res.checks)
      if (!c.pass) res.exit_code = kExitCheckFailed;
    write_json(res.out_dir / "manifest.json", {{"code_version", kCodeVersion},
                                               {"config", config.filename().string()},
                                               {"resolved", resolved}});
    json report = res.to_json();
    report["data"] = ctx.data;
    write_json(res.out_dir / "report.json", report);
  } catch (const ConfigError& e) {
    res.exit_code = kExitConfigError;
    res.error = e.what();
  } catch (const std::exception& e) {
    // Anything the pipeline could not handle; reports may be incomplete.
    res.exit_code = kExitCheckFailed;
    res.error = e.what();
    if (!res.out_dir.empty()) {
      std::error_code ec;
      if (fs::exists(res.out_dir, ec)) {
        json report = res.to_json();
        report["data"] = ctx.data;
        try {
          write_json(res.out_dir / "report.json", report);
        } catch (const std::exception&) {
        }
      }
    }
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

nlohmann::json SuiteResult::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) rows_j.push_back(r.to_json());
  return {{"exit_code", exit_code}, {"verdict", verdict(exit_code)}, {"experiments", rows_j}};
}

std::string SuiteResult::table() const {
  std::size_t wn = 10, wk = 4;
  for (const auto& r : rows) {
    wn = std::max(wn, r.name.size());
    wk = std::max(wk, r.kind.size());
  }
  std::ostringstream s;
  s << std::left << std::setw(static_cast<int>(wn)) << "experiment" << "  " << std::setw(static_cast<int>(wk)) << "kind"
    << "  verdict  checks  worst" << "\n";
  for (const auto& r : rows) {
    int passed = 0;
    std::string worst;
    for (const auto& c : r.checks) {
      if (c.pass) {
        ++passed;
      } else if (worst.empty()) {
        worst = c.name + " (" + brief(c.value) + " vs " + brief(c.limit) + ")";
      }
    }
    if (!r.error.empty() && worst.empty()) worst = r.error;
    s << std::left << std::setw(static_cast<int>(wn)) << r.name << "  " << std::setw(static_cast<int>(wk)) << r.kind
      << "  " << std::setw(7) << verdict(r.exit_code) << "  " << std::setw(6)
      << (std::to_string(passed) + "/" + std::to_string(r.checks.size())) << "  " << worst << "\n";
  }
  return s.str();
}

SuiteResult verify_all(const fs::path& suite, const RunOptions& opts, int workers) {
  SuiteResult out;
  std::vector<fs::path> configs;
  try {
    if (!fs::exists(suite)) throw ConfigError("no such suite " + suite.string());
    const json src = load_toml(suite);
    json resolved = json::object();
    Section root(&src, &resolved, "");
    for (const auto& c : root.strs("configs", {})) configs.push_back(suite.parent_path() / c);
    std::vector<std::string> unknown;
    unknown_keys(src, resolved, "", unknown);
    if (!unknown.empty()) throw ConfigError("unknown suite key " + unknown.front());
  } catch (const ConfigError& e) {
    ExperimentResult r;
    r.name = suite.stem().string();
    r.kind = "suite";
    r.config = suite;
    r.exit_code = kExitConfigError;
    r.error = e.what();
    out.rows.push_back(r);
    out.exit_code = kExitConfigError;
    return out;
  }

  out.rows.resize(configs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) out.rows[i] = run_experiment(configs[i], opts);
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::set<std::string> names;
  for (auto& r : out.rows) {
    if (!names.insert(r.name).second && r.exit_code != kExitConfigError) {
      r.exit_code = kExitConfigError;
      r.error = "duplicate experiment name " + r.name + " (outputs overwritten)";
    }
    out.exit_code = std::max(out.exit_code, r.exit_code);
  }
  const fs::path root = resolve_out_root(opts);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (!ec) {
    write_json(root / "summary.json", out.to_json());
    write_text(root / "summary.txt", out.table());
  }
  return out;
}

}  // namespace brakke
