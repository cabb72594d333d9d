#pragma once

// Elliptic regularization: minimize the e^{-lambda z} weighted area of a
// triangulated surface in R^2 x R whose boundary is M0 x {0} together with
// Gamma x [0, z_max], then translate down by lambda t and slice at a fixed
// height to get a curve flow.

#include "brakke/flow.hpp"
#include "brakke/kernels.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace brakke {

class RegularizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PinKind {
  InitialCurve,  // fully fixed, z = 0, on M0
  BoundaryRay,   // x, y fixed at a Gamma point, z free in [0, z_max]
  TopPlane,      // z fixed at z_max, x and y free
  Corner,        // Gamma point at z_max, fully fixed
};

std::string to_string(PinKind k);
PinKind pin_kind_from_string(const std::string& s);

struct Pin {
  PinKind kind = PinKind::InitialCurve;
  // Fixed coordinates: all of them for InitialCurve and Corner, x and y for
  // BoundaryRay, z for TopPlane.
  Vec3 anchor = Vec3::Zero();
  std::string gamma_id;  // BoundaryRay and Corner
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::map<int, Pin> pinned;
  double z_max = 0.0;

  // Index range, triangle area > 1e-14 and pins; throws RegularizeError.
  void validate() const;
  bool empty() const { return triangles.empty(); }
  double area() const;
  double min_angle_degrees() const;
  double max_height() const;
};

inline constexpr double kDegenerateTriangle = 1e-14;

// sum over triangles of area * exp(-lambda * centroid z), with its exact gradient.
kernels::WeightedAreaTerms weighted_area(const TriMesh& mesh, double lambda);

struct RegularizationConfig {
  double lambda = 10.0;
  double z_max = 1.0;
  int max_iterations = 20000;
  double residual_tol = 1e-2;  // on the normal part of the preconditioned gradient
  double initial_step = 1e-3;
  // Upper bound on the step relative to the squared shortest edge.
  double cfl = 0.2;
  int remesh_every = 50;

  void validate() const;
};

struct MinimizeResult {
  TriMesh mesh;
  bool converged = false;
  std::string warning;
  int iterations = 0;
  double value = 0.0;
  double residual = 0.0;
  int flips = 0;
  std::vector<double> history;  // weighted area after each accepted step
};

// Preconditioned gradient descent with Armijo backtracking. The gradient is
// divided by the lumped weighted vertex area, so it approximates
// -(H + lambda e_z^perp), and is projected onto the vertex normal (free
// vertices) or onto the pin's free coordinates. Edge flips every
// remesh_every iterations when they raise the smaller angle without raising the
// weighted area.
MinimizeResult minimize(const TriMesh& initial, const RegularizationConfig& cfg);

// Area-weighted RMS of the normal translator residual H + lambda e_z^perp
// over free vertices.
double translator_residual(const TriMesh& mesh, double lambda);

// ---------------------------------------------------------------------------

// Intersection with the plane z = height as polylines. Ends on BoundaryRay
// edges become fixed boundary points named by the Gamma id; every Gamma id of
// the mesh is listed in boundary_points.
Network slice(const TriMesh& mesh, double height);

struct SliceFlowResult {
  FlowTrajectory trajectory;
  bool truncated = false;
  std::string warning;
  double z0 = 0.0;
};

// Snapshot at t is the slice at height z0 + lambda t (z0 <= 0 means 1/lambda).
// Stops with a warning once z0 + lambda t exceeds z_max.
SliceFlowResult slice_flow(const TriMesh& mesh, double lambda, const std::vector<double>& times, double z0 = 0.0);

// Area of the part of the mesh with a < z < a + b.
double slab_mass(const TriMesh& mesh, double a, double b);

struct SlabBoundReport {
  struct Row {
    double a, b, mass, bound;
  };
  std::vector<Row> rows;
  double worst_margin = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

// mass{a < z < a + b} <= (b + 1/lambda) length(M0) + tol on every (a, b) pair.
SlabBoundReport slab_bound_check(const TriMesh& mesh, double lambda, double length_m0, const std::vector<double>& as,
                                 const std::vector<double>& bs, double tol = 1e-3);

// Symmetric Hausdorff distance between the supports, sampled at `spacing`.
double network_hausdorff(const Network& a, const Network& b, double spacing = 0.005);

struct SliceComparison {
  struct Row {
    double time, hausdorff, scale, relative;
  };
  std::vector<Row> rows;
  int unmatched = 0;  // slice times with no direct snapshot within the tolerance
  double max_relative = 0.0;

  nlohmann::json to_json() const;
};

// Hausdorff distance from each slice to the direct-flow snapshot at the same
// time, relative to the snapshot's largest distance from its centroid.
SliceComparison compare_to_flow(const FlowTrajectory& slices, const FlowTrajectory& direct, double time_tol = 1e-6);

// ---------------------------------------------------------------------------

// Surface of revolution over the circle of radius r0 at z = 0, closing at an
// apex: the leading-order translator profile z = lambda/2 (r0^2 - r^2) with
// the radius scaled by 1 + perturbation * sin(pi z / z_top), as a starting
// guess to relax. Rings are equally spaced in arc length and refine towards
// the apex; the sector count (even) halves as the rings shrink. r0 = 0 gives
// the empty mesh. With 0 < z_cut < lambda r0^2 / 2 the cap is cut at z_cut
// and its top ring is pinned to that plane; rings then counts the bands.
TriMesh cap_mesh(const Vec2& center, double r0, double lambda, int rings, int sectors, double perturbation = 0.1,
                 double z_cut = 0.0);

// Strip over the segment p q, from z = 0 to z_max, with the bottom row on M0,
// the side columns on the Gamma rays (ids gamma_p, gamma_q) and the top row on
// the plane z = z_max. bulge displaces the interior sideways by
// bulge * sin(pi s) * sin(pi z / z_max).
TriMesh strip_mesh(const Vec2& p, const Vec2& q, double z_max, int nx, int nz, double bulge = 0.0,
                   const std::string& gamma_p = "A", const std::string& gamma_q = "B");

// OFF text; pins and z_max are stored in comment lines.
void write_off(std::ostream& out, const TriMesh& mesh);
TriMesh read_off(std::istream& in);
void save_off(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh load_off(const std::filesystem::path& path);

}  // namespace brakke
