// Serial reference vs OpenMP kernels on the bundled examples.
//
//   regkit_bench --benchmark_filter=Scan
//
// Arg 0 runs Exec::serial, arg 1 Exec::parallel.

#include <benchmark/benchmark.h>

#include "regkit/bilevel.hpp"
#include "regkit/cq.hpp"
#include "regkit/geom.hpp"
#include "regkit/parametric.hpp"
#include "regkit/problem_file.hpp"

using namespace regkit;

namespace {

AnalysisConfig config(const benchmark::State& state) {
  AnalysisConfig cfg;
  cfg.exec = state.range(0) == 0 ? Exec::serial : Exec::parallel;
  return cfg;
}

ProblemFile load(const char* name) { return parse_problem(find_bundled(name)->text); }

void BM_Scan(benchmark::State& state) {
  ParametricProblem prob = load("ex412_bilinear").lower_problem();
  GridSpec g = GridSpec::parse("-3:2:201");
  AnalysisConfig cfg = config(state);
  for (auto _ : state) benchmark::DoNotOptimize(scan(prob, g, cfg));
}

void BM_RRegularity(benchmark::State& state) {
  ParametricProblem prob = load("ex32_gamma").lower_problem();
  NeighborhoodSampler s;
  s.restriction = Restriction::dom;
  AnalysisConfig cfg = config(state);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_rregularity(prob.sys, Vec{0.0}, Vec{0.0}, s, cfg));
}

void BM_Rcpld(benchmark::State& state) {
  ParametricProblem prob = load("ex32_gamma").lower_problem();
  NeighborhoodSampler s;
  AnalysisConfig cfg = config(state);
  for (auto _ : state) benchmark::DoNotOptimize(check_rcpld(prob.sys, Vec{0.0}, Vec{0.0}, s, cfg));
}

void BM_SMapProbes(benchmark::State& state) {
  ParametricProblem prob = load("ex_jump").lower_problem();
  NeighborhoodSampler s;
  AnalysisConfig cfg = config(state);
  for (auto _ : state) benchmark::DoNotOptimize(s_map_probes(prob, Vec{0.0}, Vec{0.0}, s, cfg));
}

void BM_Calmness(benchmark::State& state) {
  BilevelProblem b = load("ex42_bilevel").bilevel();
  NeighborhoodSampler s;
  AnalysisConfig cfg = config(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_partial_calmness(b, Vec{1.375}, Vec{0.625}, s, default_kappa_grid(), cfg));
  }
}

}  // namespace

BENCHMARK(BM_Scan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RRegularity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rcpld)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SMapProbes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Calmness)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
