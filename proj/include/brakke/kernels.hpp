#pragma once

// Data-parallel inner loops. Every kernel has a plain serial version, kept as
// the reference the OpenMP version is tested and benchmarked against.
//
// Parallel reductions are chunked with a fixed chunk size and the chunk
// partials are added in order, so results do not depend on the thread count.

#include "brakke/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace brakke::kernels {

inline constexpr std::size_t kChunk = 256;

struct TrigGridResult {
  double min_norm = std::numeric_limits<double>::infinity();
  std::vector<double> argmin;  // angles attaining min_norm
  std::size_t configurations = 0;
};

// Result of the weighted-area evaluation on a triangle soup.
struct WeightedAreaTerms {
  double value = 0.0;
  std::vector<Vec3> gradient;  // d value / d vertex
};

namespace serial {

template <class F>
double sum(std::size_t n, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(i);
  return s;
}

template <class F>
double min(std::size_t n, F&& f) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::min(m, f(i));
  return m;
}

// out[i] = discrete curvature vector at vertex i; endpoints of open curves get 0.
void curvature(std::span<const Vec2> v, bool closed, std::span<Vec2> out);

// Exhaustive minimum of |sum_i (cos a_i, sin a_i)| over multisets of k angles
// drawn from the uniform grid of n points on [-theta, theta].
TrigGridResult trig_grid_min(int k, double theta, int n);

double polyline_distance(std::span<const Vec2> a, bool a_closed, std::span<const Vec2> b, bool b_closed);

WeightedAreaTerms weighted_area(std::span<const Vec3> v, std::span<const std::array<int, 3>> tris, double lambda);

}  // namespace serial

namespace parallel {

template <class F>
double sum(std::size_t n, F&& f) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (long c = 0; c < static_cast<long>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

template <class F>
double min(std::size_t n, F&& f) {
  double m = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(min : m)
  for (long i = 0; i < static_cast<long>(n); ++i) m = std::min(m, f(static_cast<std::size_t>(i)));
  return m;
}

void curvature(std::span<const Vec2> v, bool closed, std::span<Vec2> out);
TrigGridResult trig_grid_min(int k, double theta, int n);
double polyline_distance(std::span<const Vec2> a, bool a_closed, std::span<const Vec2> b, bool b_closed);
WeightedAreaTerms weighted_area(std::span<const Vec3> v, std::span<const std::array<int, 3>> tris, double lambda);

}  // namespace parallel

// Shared helpers.
Vec2 curvature_at(const Vec2& prev, const Vec2& here, const Vec2& next);
double segment_distance(const Vec2& p0, const Vec2& p1, const Vec2& q0, const Vec2& q1);
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace brakke::kernels
