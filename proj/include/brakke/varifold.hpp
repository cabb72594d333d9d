#pragma once

#include "brakke/geometry.hpp"

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace brakke {

class VarifoldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VarifoldSample {
  Vec2 point;
  Vec2 tangent;  // unit, defined up to sign
  double weight;
};

struct DiscreteVarifold {
  std::vector<VarifoldSample> samples;

  double total_weight() const;
};

// One sample per edge midpoint: tangent = edge direction, weight = length x multiplicity.
DiscreteVarifold to_varifold(const Network& network);

using VectorField = std::function<Vec2(const Vec2&)>;
// Jacobian J(i, j) = dX_i / dx_j.
using VectorFieldGradient = std::function<Mat2(const Vec2&)>;

// Compares grad_x against central differences of x at `count` pseudo-random
// points of the box [lo, hi]; throws VarifoldError if they disagree beyond
// rel_tol.
void check_vector_field(const VectorField& x, const VectorFieldGradient& grad_x, const Vec2& lo, const Vec2& hi,
                        int count = 3, double rel_tol = 1e-4, std::uint64_t seed = 0x5eed);

// Discrete  \int Div_M X dM  = sum_edges weight * (tau . gradX(mid) tau).
double first_variation(const Network& network, const VectorField& x, const VectorFieldGradient& grad_x);

// Sum of multiplicity x outward unit tangent over the curve ends meeting at a
// point. "Outward" points from the neighbouring vertex toward the endpoint.
struct BoundaryVector {
  std::string at;
  Vec2 position;
  Vec2 nu;
  int incident = 0;  // incident ends counted with multiplicity
};

std::vector<BoundaryVector> boundary_vectors(const Network& network);

enum class EndKind { Boundary, Junction, Free };

struct EndVector : BoundaryVector {
  EndKind kind = EndKind::Free;
};

// Same sum at every endpoint cluster: boundary points, junctions and free ends
// (free ends are clustered by position).
std::vector<EndVector> end_vectors(const Network& network);

// Flow-state diagnostic |nu| <= 1 + tol at every boundary point.
bool nu_admissible(const std::vector<BoundaryVector>& nus, double tol = 1e-6);

// Sharp lower bound for |sum_i nu_i| over k unit vectors whose angles to a
// fixed direction are at most theta: k cos(theta) for even k,
// sqrt(1 + (k^2 - 1) cos^2(theta)) for odd k.
double trig_bound(int k, double theta);

struct Mod2Chain {
  std::vector<Vec2> odd_points;
  std::vector<std::string> labels;  // parallel to odd_points
};

// Endpoints (boundary points, junctions, free ends) with odd total incident
// multiplicity. Closed curves contribute nothing.
Mod2Chain mod2_boundary(const Network& network);

// Symmetric difference of two chains, matching points within kCoincidenceTol.
Mod2Chain symmetric_difference(const Mod2Chain& a, const Mod2Chain& b);
bool same_points(const Mod2Chain& a, const Mod2Chain& b, double tol = 1e-9);

struct StandardnessReport {
  bool standard = false;
  std::vector<std::string> violators;      // odd points that are not in gamma
  std::vector<std::string> missing_gamma;  // gamma points that are not odd
};

// True iff the mod-2 boundary is exactly the listed boundary points.
StandardnessReport is_standard_state(const Network& network, const std::set<std::string>& gamma_ids,
                                     double time = 0.0);

}  // namespace brakke
