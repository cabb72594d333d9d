// Serial reference kernels against their OpenMP versions.

#include "brakke/kernels.hpp"
#include "brakke/regularize.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace brakke;

namespace {

std::vector<Vec2> ring(int n, double r) {
  std::vector<Vec2> v;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    v.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return v;
}

template <bool Parallel>
void BM_Curvature(benchmark::State& state) {
  const auto v = ring(static_cast<int>(state.range(0)), 1.0);
  std::vector<Vec2> out(v.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::curvature(v, true, out);
    } else {
      kernels::serial::curvature(v, true, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_TrigGrid(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  for (auto _ : state) {
    const auto r = Parallel ? kernels::parallel::trig_grid_min(k, 0.7, n) : kernels::serial::trig_grid_min(k, 0.7, n);
    benchmark::DoNotOptimize(r.min_norm);
  }
}

template <bool Parallel>
void BM_PolylineDistance(benchmark::State& state) {
  const auto a = ring(static_cast<int>(state.range(0)), 1.0);
  const auto b = ring(static_cast<int>(state.range(0)), 2.0);
  for (auto _ : state) {
    const double d = Parallel ? kernels::parallel::polyline_distance(a, true, b, true)
                              : kernels::serial::polyline_distance(a, true, b, true);
    benchmark::DoNotOptimize(d);
  }
}

template <bool Parallel>
void BM_WeightedArea(benchmark::State& state) {
  const TriMesh m = cap_mesh(Vec2::Zero(), 1.0, 20.0, static_cast<int>(state.range(0)), 64);
  for (auto _ : state) {
    const auto t = Parallel ? kernels::parallel::weighted_area(m.vertices, m.triangles, 20.0)
                            : kernels::serial::weighted_area(m.vertices, m.triangles, 20.0);
    benchmark::DoNotOptimize(t);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(m.triangles.size()));
}

}  // namespace

BENCHMARK(BM_Curvature<false>)->Name("curvature/serial")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_Curvature<true>)->Name("curvature/parallel")->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_TrigGrid<false>)->Name("trig_grid/serial")->Args({3, 150})->Args({5, 36});
BENCHMARK(BM_TrigGrid<true>)->Name("trig_grid/parallel")->Args({3, 150})->Args({5, 36});
BENCHMARK(BM_PolylineDistance<false>)->Name("polyline_distance/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_PolylineDistance<true>)->Name("polyline_distance/parallel")->Arg(256)->Arg(1024);
BENCHMARK(BM_WeightedArea<false>)->Name("weighted_area/serial")->Arg(100)->Arg(400);
BENCHMARK(BM_WeightedArea<true>)->Name("weighted_area/parallel")->Arg(100)->Arg(400);

BENCHMARK_MAIN();
