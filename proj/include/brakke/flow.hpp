#pragma once

#include "brakke/geometry.hpp"
#include "brakke/varifold.hpp"

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace brakke {

enum class Scheme { Explicit, SemiImplicit };

struct FlowParams {
  double dt_safety = 0.5;
  double target_h = 0.05;
  Scheme scheme = Scheme::Explicit;
  double t_start = 0.0;
  double t_end = 1.0;
  // Resample every this many steps, and whenever an edge leaves
  // [target_h/4, 2 target_h]. 0 resamples only in the latter case.
  int resample_every = 10;
  // Spacing of stored snapshots; 0 stores every step.
  double snapshot_every = 0.0;
  // Upper bound on dt. For the semi-implicit scheme the step is
  // min(dt_max, dt_safety * target_h^2) when dt_max is infinite.
  double dt_max = std::numeric_limits<double>::infinity();
  double junction_tol = 1e-10;
  int junction_max_iter = 50;
};

enum class EventKind { JunctionHitBoundary, CurveVanished, CurvatureBlowup };

std::string to_string(EventKind k);

struct FlowEvent {
  double time = 0.0;  // time the event was detected
  EventKind kind = EventKind::CurvatureBlowup;
  Vec2 location = Vec2::Zero();
  std::string detail;
  // For junction_hit_boundary: contact time extrapolated from the junction's
  // approach (distance fitted over the last 3 target_h); equals `time` otherwise.
  double singular_time = 0.0;
};

struct FlowSnapshot {
  double time = 0.0;
  Network network;
  // curvature[c][i] = H at vertex i of curve c; zero at the ends of open curves.
  std::vector<std::vector<Vec2>> curvature;
  std::vector<BoundaryVector> nu;
  double total_mass = 0.0;
};

// Fills curvature, nu and total_mass from the network.
FlowSnapshot make_snapshot(Network network, double time);

struct FlowTrajectory {
  std::vector<FlowSnapshot> snapshots;
  std::vector<FlowEvent> events;
  // Resolution the trajectory was computed at (used by tolerance models).
  double h = 0.0;
  double dt = 0.0;

  double start_time() const { return snapshots.front().time; }
  double end_time() const { return snapshots.back().time; }
  bool has_event(EventKind k) const;
  std::optional<FlowEvent> first_event(EventKind k) const;
};

struct StepResult {
  FlowSnapshot snapshot;
  double dt = 0.0;
  std::optional<FlowEvent> event;
};

// One time step. Interior vertices move by H (explicit) or by a linearized
// backward Euler solve; fixed and free ends stay; moving ends follow their
// trajectory; junctions are relocated to balance incident unit tangents.
// dt is the CFL step, capped by dt_cap.
StepResult step_network(const FlowSnapshot& snapshot, const FlowParams& params,
                        double dt_cap = std::numeric_limits<double>::infinity());

// Places every junction at the point where the multiplicity-weighted unit
// tangents to its neighbouring vertices cancel. Returns the worst residual,
// or nullopt if Newton failed at some junction (its id goes to failed_id).
std::optional<double> balance_junctions(Network& network, const FlowParams& params, std::string* failed_id = nullptr);

// |sum of incident outward unit tangents| at junction id.
double junction_residual(const Network& network, const std::string& id);

FlowTrajectory run(const Network& network, const FlowParams& params);

// A trajectory whose snapshots all hold the same network.
FlowTrajectory static_trajectory(const Network& network, const std::vector<double>& times);

// Trajectory CSV: time, total_mass, num_events, then x,y of every junction.
void write_trajectory_csv(const std::filesystem::path& path, const FlowTrajectory& traj);
// Writes snapshot_NNNNN.json (every `stride`-th snapshot and the last) and events.json.
void write_trajectory_snapshots(const std::filesystem::path& dir, const FlowTrajectory& traj, std::size_t stride = 1);

// ---------------------------------------------------------------------------
// Nonparametric graph flow

struct GraphState {
  enum class Mode { Interval, Radial };
  Mode mode = Mode::Interval;
  // Interval: [x0, x1]. Radial: x0 = 0, x1 = ball radius, dimension m.
  double x0 = 0.0;
  double x1 = 1.0;
  int m = 1;
  std::vector<double> u;
  double time = 0.0;
  // Dirichlet data as functions of time; unset means "held at the initial value".
  std::function<double(double)> left_value;
  std::function<double(double)> right_value;

  double dx() const { return (x1 - x0) / static_cast<double>(u.size() - 1); }
  double x(std::size_t i) const { return x0 + dx() * static_cast<double>(i); }
  // Largest dt the explicit scheme accepts.
  double max_dt() const;
};

GraphState make_interval_graph(double x0, double x1, std::size_t points, const std::function<double(double)>& f);
GraphState make_radial_graph(double radius, int m, std::size_t points, const std::function<double(double)>& f);

// u_t = u_xx / (1 + u_x^2), discretized in flux form (arctan u_x)_x; radial
// mode adds (m-1) u_r / r and uses m u_rr at the centre. Throws if dt exceeds max_dt().
GraphState step_graph(const GraphState& state, double dt);

// sup |u_x| by one-sided differences.
double max_gradient(const GraphState& state);

struct GradientReport {
  bool applicable = false;  // initial sup |u_x| <= 0.1
  bool pass = false;
  double initial = 0.0;
  double boundary = 0.0;  // sup over time of |u_x| at the end cells
  double max = 0.0;       // sup over time and space
};

GradientReport gradient_bound_check(const std::vector<GraphState>& trajectory, double applicable_below = 0.1);

}  // namespace brakke
