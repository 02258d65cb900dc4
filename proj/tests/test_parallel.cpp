#include <doctest.h>

#include <atomic>
#include <stdexcept>

#include "regkit/bilevel.hpp"
#include "regkit/cq.hpp"
#include "regkit/parallel.hpp"
#include "regkit/report.hpp"
#include "support.hpp"

using namespace regkit;
using testing_support::bundled;

namespace {

AnalysisConfig mode(Exec e) {
  AnalysisConfig cfg;
  cfg.exec = e;
  return cfg;
}

}  // namespace

TEST_CASE("parallel_for visits every index once") {
  for (Exec e : {Exec::serial, Exec::parallel}) {
    std::vector<int> hits(500, 0);
    parallel_for(hits.size(), e, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 500);
  }
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  set_thread_limit(4);
  try {
    parallel_for(100, Exec::parallel, [](std::size_t i) {
      if (i == 30 || i == 70) throw std::runtime_error(std::to_string(i));
    });
    FAIL("no exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "30");
  }
  CHECK(thread_limit() == 4);
  set_thread_limit(0);
}

TEST_CASE("serial and parallel kernels produce identical reports") {
  NeighborhoodSampler s;
  s.samples_per_radius = 80;

  SUBCASE("scan with Lipschitz bisection") {
    ParametricProblem prob = bundled("ex412_bilinear").lower_problem();
    GridSpec g = GridSpec::parse("-2:1:31");
    auto run = [&](Exec e) {
      GridScan sc = scan(prob, g, mode(e));
      LipschitzReport lr = lipschitz_scan(prob, sc, Window{Vec{-2.0}, Vec{1.0}}, mode(e));
      return canonical_dump(to_json(sc, &lr));
    };
    CHECK(run(Exec::serial) == run(Exec::parallel));
  }
  SUBCASE("RCPLD and R-regularity") {
    ParametricProblem prob = bundled("ex32_gamma").lower_problem();
    auto run = [&](Exec e) {
      json j;
      j["cq"] = to_json(check_rcpld(prob.sys, Vec{0.0}, Vec{0.0}, s, mode(e)));
      j["rreg"] = to_json(estimate_rregularity(prob.sys, Vec{0.0}, Vec{1.0}, s, mode(e)));
      j["isc"] = to_json(inner_semicontinuity_probe(prob.sys, Vec{0.0}, Vec{0.0}, s, mode(e)));
      return canonical_dump(j);
    };
    CHECK(run(Exec::serial) == run(Exec::parallel));
  }
  SUBCASE("solution-map probes") {
    ParametricProblem prob = bundled("ex_jump").lower_problem();
    auto run = [&](Exec e) { return canonical_dump(to_json(s_map_probes(prob, Vec{0.0}, Vec{0.0}, s, mode(e)))); };
    CHECK(run(Exec::serial) == run(Exec::parallel));
  }
  SUBCASE("calmness") {
    BilevelProblem b = bundled("ex42_bilevel").bilevel();
    auto run = [&](Exec e) {
      return canonical_dump(
          to_json(check_partial_calmness(b, Vec{1.375}, Vec{0.625}, s, default_kappa_grid(), mode(e))));
    };
    CHECK(run(Exec::serial) == run(Exec::parallel));
  }
}
