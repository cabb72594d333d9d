#pragma once

#include "brakke/flow.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace brakke {

class TestFunctionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Nonnegative C^2 (or Lipschitz, with derivatives taken on {u > 0}) function
// of space and time with support in the closed ball B(center, radius).
struct TestFunction {
  std::string name;
  std::function<double(const Vec2&, double)> value;
  std::function<Vec2(const Vec2&, double)> gradient;
  std::function<Mat2(const Vec2&, double)> hessian;
  std::function<double(const Vec2&, double)> time_derivative;
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  bool time_independent = false;

  // Finite-difference check of the derivatives at `count` random points of
  // {u > 0} for t in [t0, t1]; throws TestFunctionError beyond rel_tol.
  void validate(double t0 = 0.0, double t1 = 0.0, int count = 5, double rel_tol = 1e-4,
                std::uint64_t seed = 0xb0b) const;
};

// (1 - |x-c|^2/R^2)^3 inside B(c, R).
TestFunction bump(const Vec2& center, double radius);
// bump(c, R) * (1 + rate * t).
TestFunction growing_bump(const Vec2& center, double radius, double rate);
// 1 on B(c, r_in), decaying with the quintic profile to 0 at r_out.
TestFunction plateau(const Vec2& center, double r_in, double r_out);
// (R^2 - |x-c|^2 - 4 m t)^+ with m = 1.
TestFunction trace_function(const Vec2& center, double radius);

// Tolerance a*h + b*dt. The constants were fitted once on the shrinking
// circle (see configs/tolerance.toml) and are not tuned per experiment.
struct ToleranceModel {
  double a = 0.5;
  double b = 10.0;
  double operator()(double h, double dt) const { return a * h + b * dt; }
};

struct RefinementRow {
  double h = 0.0;
  double dt = 0.0;
  double residual = 0.0;
};

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // lhs - rhs
  double tol = 0.0;
  bool pass = false;
  std::vector<RefinementRow> refinement;
  std::optional<double> observed_order;  // from the refinement table, if it has >= 2 rows

  nlohmann::json to_json() const;
};

struct BrakkeOptions {
  ToleranceModel tol;
  // Negative control: flip the sign of the moving-boundary term.
  bool flip_moving_sign = false;
};

// lhs = (Mu)(a) - (Mu)(b), rhs = int_a^b sum (u|H|^2 - H.grad u - du/dt) dM dt,
// H terms at vertices with dual-edge weights, the rest at edge midpoints,
// trapezoid rule over the snapshots in [a, b].
InequalityReport brakke_inequality(const FlowTrajectory& traj, const TestFunction& u, double a, double b,
                                   const BrakkeOptions& opts = {});

// As above with rhs reduced by int_a^b sum_boundary u nu . Gamma_dot dt.
InequalityReport brakke_inequality_moving(const FlowTrajectory& traj, const TestFunction& u, double a, double b,
                                          const BrakkeOptions& opts = {});

// Runs the check on each trajectory (coarse to fine) and returns the finest
// report with the refinement table and the observed order of |residual| in h + dt.
InequalityReport brakke_refinement(const std::vector<const FlowTrajectory*>& trajs, const TestFunction& u, double a,
                                   double b, bool moving = false, const BrakkeOptions& opts = {});

// Order p of |r| ~ C (h + dt)^p by least squares on the log-log table.
std::optional<double> observed_order(const std::vector<RefinementRow>& rows);

// ---------------------------------------------------------------------------

struct AreaBoundReport {
  std::vector<double> times;      // relative to the first snapshot
  std::vector<double> mass;       // (Mu)(t)
  std::vector<double> allowance;  // (Mu)(0) + t R #(Gamma in B)
  int boundary_count = 0;
  double worst_margin = 0.0;  // min over t of allowance - mass
  double tol = 1e-6;
  bool pass = false;

  nlohmann::json to_json() const;
};

// Exact integral of u = (R^2 - |x-c|^2 - 4t)^+ over the network.
double trace_mass(const Network& network, const Vec2& center, double radius, double t);

AreaBoundReport area_bound_check(const FlowTrajectory& traj, const Vec2& center, double radius, double tol = 1e-6);

struct HSquaredReport {
  double lhs = 0.0;  // 1/2 int int u |H|^2
  double rhs = 0.0;  // (Mu)(a) - (Mu)(b) + (b - a) max|D^2 u| K
  double hessian_bound = 0.0;
  double support_mass = 0.0;  // K_[a,b]
  double margin = 0.0;        // rhs - lhs
  double tol = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

HSquaredReport h_squared_bound(const FlowTrajectory& traj, const TestFunction& u, double a, double b,
                               const ToleranceModel& tol = {});

// ---------------------------------------------------------------------------

class AvoidanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AvoidanceReport {
  std::vector<double> times;
  std::vector<double> distance;
  double initial = 0.0;
  double minimum = 0.0;
  bool positive = false;  // d(t) > 0 throughout
  bool monotone = false;  // d(t) >= d(0) - tol throughout
  double tol = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

// Graph trajectory as networks of open polylines through (x_i, u_i).
FlowTrajectory graph_trajectory(const std::vector<GraphState>& states);

// Distance between the supports at the snapshot times the two trajectories
// share (within time_match). Throws AvoidanceError if the supports, or either
// boundary and the other support, touch at the first shared time.
AvoidanceReport avoidance_check(const FlowTrajectory& flow, const FlowTrajectory& barrier,
                                const ToleranceModel& tol = {}, double time_match = 1e-9);

}  // namespace brakke
