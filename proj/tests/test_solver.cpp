#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "regkit/geom.hpp"
#include "regkit/parametric.hpp"
#include "oracles.hpp"

using namespace regkit;
using namespace testing_support;

TEST_CASE("oracles agree with the closed forms they encode") {
  auto qp = qp_oracle();
  GridMin g = grid_min(qp, 1.3, [&](const Vec& y) { return qp.f(1.3, y); });
  CHECK(g.value == doctest::Approx(1.0).epsilon(1e-6));
  auto bl = bilinear_oracle();
  GridMin h = grid_min(bl, -2.0, [&](const Vec& y) { return bl.f(-2.0, y); });
  CHECK(h.value == doctest::Approx(-0.5));
}

TEST_CASE("every convex bundled problem is covered") {
  int convex = 0;
  for (const auto& b : bundled_problems()) {
    if (parse_problem(b.text).flags.convex_in_y) ++convex;
  }
  CHECK(convex == static_cast<int>(convex_cases().size()));
}

TEST_CASE("project and solve_lower match dense-grid oracles") {
  for (const OracleDeviation& d : solver_oracle_suite(20, AnalysisConfig{})) {
    MESSAGE(d.name << ": dist " << d.dist << " y* " << d.y_star << " phi " << d.phi << " reps " << d.reps);
    CHECK(d.params == 20);
    CHECK(d.empty_mismatch == 0);
    CHECK(d.dist <= kOracleTol);
    CHECK(d.y_star <= kOracleTol);
    CHECK(d.phi <= kOracleTol);
    CHECK(d.reps <= kOracleTol);
  }
}

TEST_CASE("polish reaches a KKT point of a small QP") {
  ParametricProblem prob = bundled("ex_qp").lower_problem();
  ExprObjective obj(prob.f, 2, Vec{-1.0});
  SolverConfig cfg;
  LocalSolution s = polish(prob.sys, Vec{-1.0}, prob.sys.shifts(Vec{-1.0}), obj, Vec{1.0, 1.0}, cfg);
  CHECK(s.y[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(s.y[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(s.residual <= 1e-7);
  REQUIRE(s.multipliers.size() == 2);
  CHECK(s.multipliers[0] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(s.multipliers[1] == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("projection onto an empty image") {
  ParametricProblem prob = bundled("ex41_box").lower_problem();
  Projection p = project(prob.sys, Vec{-0.5}, Vec{0.0}, SolverConfig{});
  CHECK(p.empty);
  CHECK(std::isinf(distance_to_image(prob.sys, Vec{-0.5}, Vec{0.0}, SolverConfig{})));
  Projection q = project(prob.sys, Vec{1.0}, Vec{0.5}, SolverConfig{});
  CHECK_FALSE(q.empty);
  CHECK(q.distance <= 1e-6);
}
