#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace brakke {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an edge is too short for curvature to be meaningful; the caller
// is expected to resample and retry.
class DegenerateEdge : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

inline constexpr double kDegenerateEdge = 1e-14;
inline constexpr double kCoincidenceTol = 1e-12;

// ---------------------------------------------------------------------------
// Endpoint constraints

struct FreeEnd {
  bool operator==(const FreeEnd&) const = default;
};
struct FixedBoundary {
  std::string id;
  bool operator==(const FixedBoundary&) const = default;
};
struct JunctionEnd {
  std::string id;
  bool operator==(const JunctionEnd&) const = default;
};
struct MovingBoundary {
  std::string id;
  bool operator==(const MovingBoundary&) const = default;
};

using EndpointConstraint = std::variant<FreeEnd, FixedBoundary, JunctionEnd, MovingBoundary>;

bool is_free(const EndpointConstraint& c);
// Boundary id for fixed or moving ends, empty otherwise.
std::optional<std::string> boundary_id(const EndpointConstraint& c);
std::optional<std::string> junction_id(const EndpointConstraint& c);

// ---------------------------------------------------------------------------

// Polyline with integer multiplicity. A closed curve lists each vertex once;
// the closing edge back to vertices.front() is implicit.
struct DiscreteCurve {
  std::vector<Vec2> vertices;
  int multiplicity = 1;
  EndpointConstraint start = FreeEnd{};
  EndpointConstraint end = FreeEnd{};
  bool closed = false;

  std::size_t edge_count() const;
  Vec2 edge_start(std::size_t e) const { return vertices[e]; }
  Vec2 edge_end(std::size_t e) const { return vertices[(e + 1) % vertices.size()]; }
  double length() const;
  double min_edge() const;
  double max_edge() const;
};

// Sampled boundary path t -> x(t), interpolated by cubic Hermite segments
// with finite-difference tangents (C^1). Outside the sampled range the path
// is extended linearly with the end velocity.
class BoundaryTrajectory {
 public:
  struct Sample {
    double t;
    Vec2 x;
  };

  BoundaryTrajectory() = default;
  explicit BoundaryTrajectory(std::vector<Sample> samples);

  Vec2 position(double t) const;
  Vec2 velocity(double t) const;
  const std::vector<Sample>& samples() const { return samples_; }

 private:
  std::size_t segment(double t) const;
  Vec2 tangent(std::size_t i) const;

  std::vector<Sample> samples_;
};

struct BoundaryPoint {
  std::string id;
  std::variant<Vec2, BoundaryTrajectory> where;

  bool moving() const { return std::holds_alternative<BoundaryTrajectory>(where); }
  Vec2 position(double t = 0.0) const;
  Vec2 velocity(double t = 0.0) const;
};

struct Junction {
  std::string id;
  Vec2 point;
};

struct Network {
  std::vector<DiscreteCurve> curves;
  std::vector<BoundaryPoint> boundary_points;
  std::vector<Junction> junctions;

  const BoundaryPoint* find_boundary(const std::string& id) const;
  const Junction* find_junction(const std::string& id) const;
  Junction* find_junction(const std::string& id);

  bool has_moving_boundary() const;

  // Checks the structural invariants: curve sizes and multiplicities,
  // referenced ids, and coincidence of constrained endpoints with their
  // boundary point (evaluated at `time`) or junction. Throws GeometryError.
  void validate(double time = 0.0) const;
};

// Disjoint union. Ids from `b` are prefixed to keep them distinct.
Network merge(const Network& a, const Network& b, const std::string& b_prefix = "b.");

// ---------------------------------------------------------------------------
// Measures

struct WeightedSegment {
  Vec2 a;
  Vec2 b;
  double weight;  // multiplicity
};

class MeasureView {
 public:
  explicit MeasureView(std::vector<WeightedSegment> segments);

  double total_mass() const { return total_; }
  // Mass of the part of the network inside the closed ball, with each edge
  // clipped exactly to the disk.
  double mass_in_ball(const Vec2& center, double radius) const;
  const std::vector<WeightedSegment>& segments() const { return segments_; }

 private:
  std::vector<WeightedSegment> segments_;
  double total_ = 0.0;
};

MeasureView measure_of(const Network& network);

// Length of the portion of segment [a,b] inside the closed disk.
double segment_length_in_ball(const Vec2& a, const Vec2& b, const Vec2& center, double radius);

// ---------------------------------------------------------------------------
// Differential primitives

// Discrete curvature vector 2(e+/|e+| - e-/|e-|)/(|e+| + |e-|) at each interior
// vertex (every vertex of a closed curve). It equals minus the length gradient
// divided by the dual edge length.
std::vector<std::pair<std::size_t, Vec2>> curvature_vectors(const DiscreteCurve& curve);

// Dual length (|e+| + |e-|)/2 times multiplicity at each vertex reported by
// curvature_vectors, in the same order.
std::vector<double> vertex_weights(const DiscreteCurve& curve);

struct ResampleOptions {
  // Interior vertices turning by more than this (radians) are kept in place.
  double feature_angle = 0.35;
  // Restore the input length after resampling by a small normal correction.
  bool preserve_length = true;
};

// Arc-length reparametrization with edges close to target_h (within
// [target_h/2, 2 target_h] for every stretch longer than target_h/2).
// Endpoints and corners are kept. When preserve_length is set the new
// vertices are pushed outward along -H by the amount that restores the input
// length, which undoes the chord shortening of inscribed resampling.
DiscreteCurve resample(const DiscreteCurve& curve, double target_h, const ResampleOptions& opts = {});

}  // namespace brakke
