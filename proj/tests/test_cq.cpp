#include <doctest.h>

#include <random>

#include "regkit/cq.hpp"
#include "regkit/errors.hpp"
#include "regkit/geom.hpp"
#include "regkit/parametric.hpp"
#include "oracles.hpp"

using namespace regkit;
using namespace testing_support;

TEST_CASE("CQ implication chain on 50 graph points per bundled problem") {
  ChainCount c = chain_suite(50, AnalysisConfig{});
  MESSAGE("points " << c.points << ": LICQ " << c.licq_holds << ", MFCQ " << c.mfcq_holds << ", RCRCQ "
                    << c.rcrcq_holds << ", RCPLD fails " << c.rcpld_fails);
  for (const auto& m : c.messages) MESSAGE(m);
  CHECK(c.points >= 300);
  CHECK(c.violations == 0);
  // Both sides of the LICQ test occur in the corpus.
  CHECK(c.licq_holds > 0);
  CHECK(c.licq_holds < c.points);
}

TEST_CASE("MFCQ fails on every solution-map system at solutions") {
  InstanceCount fj = fritz_john_suite(20, AnalysisConfig{});
  CHECK(fj.instances >= 100);
  CHECK(fj.failures == 0);
}

TEST_CASE("worked CQ examples") {
  AnalysisConfig cfg;
  NeighborhoodSampler sampler;
  SUBCASE("ex32: RCPLD holds at both reference points, LICQ fails at the origin") {
    ParametricProblem prob = bundled("ex32_gamma").lower_problem();
    for (Vec y : {Vec{0.0}, Vec{1.0}}) {
      CQReport r = check_rcpld(prob.sys, Vec{0.0}, y, sampler, cfg);
      CHECK(r.verdict == CQVerdict::holds_on_samples);
    }
    CQReport l = check_licq(prob.sys, Vec{0.0}, Vec{0.0}, cfg);
    CHECK(l.verdict == CQVerdict::fails);
    CHECK(l.active == std::vector<int>{1, 2});
    CQReport m = check_mfcq(prob.sys, Vec{0.0}, Vec{0.0}, cfg);
    CHECK(m.verdict == CQVerdict::fails);
    REQUIRE(m.pld.has_value());
    CHECK(m.pld->residual <= 1e-9);
  }
  SUBCASE("ex_qp: RCPLD_S and the multiplier set") {
    ParametricProblem prob = bundled("ex_qp").lower_problem();
    CQReport pos = check_rcpld_S_via_multipliers(prob, Vec{1.0}, Vec{0.0, 1.0}, sampler, cfg);
    CHECK(pos.verdict == CQVerdict::fails);
    CQReport neg = check_rcpld_S_via_multipliers(prob, Vec{-1.0}, Vec{0.0, 0.0}, sampler, cfg);
    CHECK(neg.verdict == CQVerdict::holds_on_samples);
    REQUIRE(pos.multiplier.has_value());
    REQUIRE(neg.multiplier.has_value());
    CHECK((*pos.multiplier)[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(std::abs((*pos.multiplier)[1]) <= 1e-6);
    CHECK((*neg.multiplier)[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK((*neg.multiplier)[1] == doctest::Approx(2.0).epsilon(1e-6));
  }
  SUBCASE("RCPLD_S needs a finite phi") {
    ParametricProblem prob = bundled("ex41_box").lower_problem();
    CHECK_THROWS_AS(check_rcpld_S_via_multipliers(prob, Vec{-1.0}, Vec{0.0}, sampler, cfg),
                    LowerLevelUnsolved);
  }
}

TEST_CASE("subset cap") {
  // Thirteen copies of y1 <= 0 are all active at the origin.
  std::vector<Expr> ineq(13, parse_expr("y1", 1, 1));
  ParametricSystem sys(1, 1, ineq, {});
  AnalysisConfig cfg;
  CHECK_THROWS_AS(check_rcrcq(sys, Vec{0.0}, Vec{0.0}, NeighborhoodSampler{}, cfg), SubsetCapExceeded);
  cfg.tol.subset_cap = 13;
  NeighborhoodSampler small;
  small.samples_per_radius = 2;
  CHECK_NOTHROW(check_rcrcq(sys, Vec{0.0}, Vec{0.0}, small, cfg));
}

TEST_CASE("constraint labels") {
  ParametricProblem prob = bundled("ex412_bilinear").lower_problem();
  CHECK(constraint_label(prob.sys, 0) == 1);
  CHECK(constraint_label(prob.sys, 4) == 5);
  ParametricSystem s = build_solution_system(prob, -1.0, H0Mode::h0_as_ineq);
  CHECK(constraint_label(s, static_cast<std::size_t>(s.value_function_position())) == 0);
}
