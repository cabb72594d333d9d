#pragma once

#include "brakke/flow.hpp"
#include "brakke/varifold.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace brakke {

class MonotonicityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KernelConfig {
  int m = 1;
  double cutoff_inner = 0.5;
  double cutoff_outer = 1.0;
  // With the cutoff disabled phi == 1 everywhere and K = 0.
  bool cutoff_enabled = true;
  // Bound on the ambient second fundamental form (0 in Euclidean space).
  double A = 0.0;

  void validate() const;
};

struct CutoffValue {
  double phi = 1.0;
  double d1 = 0.0;  // phi'
  double d2 = 0.0;  // phi''
};

// phi(s) = 1 - (10u^3 - 15u^4 + 6u^5), u = (s - inner)/(outer - inner), clamped.
CutoffValue cutoff(double s, const KernelConfig& cfg);

// Backward heat kernel (4 pi |t|)^{-m/2} exp(-|x|^2 / 4|t|), t < 0.
double rho(const Vec2& x, double t, int m = 1);

struct KernelValue {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
};

KernelValue rho_hat(const Vec2& x, double t, const KernelConfig& cfg);

// d rho_hat/dt + tau^T Hess(rho_hat) tau + |grad^perp rho|^2 / rho for a line
// with unit tangent tau through x (m = 1).
double k_integrand(const Vec2& x, const Vec2& tau, double t, const KernelConfig& cfg);

struct KGrid {
  int radial = 200;
  int angular = 64;
  int times = 60;
};

// Grid sup of |k_integrand| over inner <= |x| <= outer, tangent angles and
// t in [t_min, t_max] (log-spaced), times 1.05. Zero with the cutoff disabled.
double compute_K(const KernelConfig& cfg, double t_min, double t_max, const KGrid& grid = {});

struct SpacetimePoint {
  Vec2 x = Vec2::Zero();
  double t = 0.0;
};

struct MonotoneSeries {
  std::vector<double> times;  // relative to the centre, increasing, < 0
  std::vector<double> values;
  std::vector<double> mass_term;      // (M rho_hat)(t)
  std::vector<double> boundary_term;  // int_{T0}^t sum nu . grad rho_hat
  std::vector<double> moving_term;    // -int_{T0}^t sum rho_hat nu . Gamma_dot
  std::vector<double> ck_term;        // C K t (subtracted)

  std::size_t size() const { return times.size(); }
  void write_csv(const std::filesystem::path& path) const;
};

struct DensityOptions {
  // Samples at t_k = -4^{-k} t0, k = 0 .. levels-1 (relative times).
  double t0 = 1.0 / 16.0;
  int levels = 5;
  // Range used for K; defaults to the span of the series.
  std::optional<std::pair<double, double>> k_range;
  // Include the moving-boundary term -rho_hat nu . Gamma_dot.
  bool moving = false;
};

struct DensityResult {
  double density = 0.0;
  MonotoneSeries series;
  std::vector<double> sample_times;
  std::vector<double> sample_values;
  double K = 0.0;
  double C = 0.0;
};

// (M rho_hat)(t) of a network about `center`, by edge-midpoint quadrature.
double mass_rho_hat(const Network& network, const SpacetimePoint& center, double time, const KernelConfig& cfg);

// Monotone quantity along the snapshots before the centre time, and the
// Gaussian density by Richardson extrapolation of the last three samples.
DensityResult gaussian_density(const FlowTrajectory& traj, const SpacetimePoint& center, const KernelConfig& cfg,
                               const DensityOptions& opts = {});

struct MonotonicityReport {
  bool pass = false;
  double max_uptick = 0.0;
  std::size_t at = 0;  // index of the largest uptick
};

MonotonicityReport monotonicity_check(const MonotoneSeries& series, double tol);
MonotonicityReport monotonicity_check(const std::vector<double>& values, double tol);

// ---------------------------------------------------------------------------

enum class TangentClass { Plane, Halfplane, ShrinkerLike, Unresolved };

struct Ray {
  Vec2 direction;
  int multiplicity = 0;
  double mass = 0.0;
};

struct TangentFlowOptions {
  double view_radius = 2.0;
  double annulus_inner = 0.25;
  double converge_tol = 0.1;     // Hausdorff distance between successive scales
  double ray_tol = 0.05;         // allowed |y^perp| / |y| for ray membership
  double cluster_gap = 0.1;      // radians
  double time_match = 0.25;      // allowed |t_snap - t_target| relative to lambda^-2
};

struct TangentFlowResult {
  std::vector<double> scales;
  std::vector<double> snapshot_times;
  std::vector<std::vector<WeightedSegment>> rescaled;  // clipped to the view radius
  std::vector<double> hausdorff;                        // between successive scales
  TangentClass classification = TangentClass::Unresolved;
  int multiplicity = 0;  // for Halfplane
  std::vector<Ray> rays;
  double density_estimate = 0.0;
  std::string note;

  std::string label() const;
};

TangentFlowResult tangent_flow(const FlowTrajectory& traj, const SpacetimePoint& center, const std::vector<double>& scales,
                               const TangentFlowOptions& opts = {});

// ---------------------------------------------------------------------------

struct WedgeResult {
  bool contained = false;
  double opening = 0.0;  // angle of the smallest sector holding every sample
  Vec2 edge_a = Vec2::Zero();  // unit directions of the two bounding half-lines
  Vec2 edge_b = Vec2::Zero();
  std::optional<std::vector<Ray>> decomposition;
  Vec2 nu = Vec2::Zero();  // sum of multiplicity x (minus ray direction)
  bool standard = false;   // |nu| <= 1 + tol and odd total multiplicity
};

// Smallest sector with apex edge_point that contains all samples, found from
// the largest angular gap between sample directions. Contained iff its
// opening is below min(opening_limit, pi). Samples closer than tol to the
// apex are ignored.
WedgeResult wedge_test(const DiscreteVarifold& v, const Vec2& edge_point, double opening_limit, double tol = 1e-9,
                       double cluster_gap = 1e-2);

}  // namespace brakke
