#include <doctest.h>

#include <cstdlib>
#include <numeric>
#include <random>

#include "regkit/errors.hpp"
#include "regkit/kernel.hpp"
#include "regkit/rng.hpp"
#include "oracles.hpp"

using namespace regkit;
using namespace testing_support;

TEST_CASE("rational oracle sanity") {
  CHECK(pld_oracle({{1}, {-1}}, {}, 1));
  CHECK_FALSE(pld_oracle({{1}, {2}}, {}, 1));
  CHECK(pld_oracle({{1, 0}}, {{2, 0}}, 2));
  CHECK_FALSE(pld_oracle({{1, 0}, {0, 1}, {1, 1}}, {}, 2));
  CHECK(pld_oracle({{1, 0}, {0, 1}, {-1, -1}}, {}, 2));
  CHECK(pld_oracle({}, {{1, 1}, {2, 2}}, 2));
  CHECK(pld_oracle({{0, 0}}, {}, 2));
}

TEST_CASE("PLD agrees with the exact oracle on the exhaustive small corpus") {
  PldTally t = pld_corpus();
  MESSAGE("cases " << t.cases << ", dependent " << t.dependent);
  CHECK(t.cases >= 10000);
  CHECK(t.mismatches == 0);
  CHECK(t.bad_certificates == 0);
  CHECK(t.dependent > 0);
  CHECK(t.dependent < t.cases);
}

TEST_CASE("PLD basics") {
  SUBCASE("empty pair is independent") {
    CHECK_FALSE(positive_linear_dependent(VecFamily(2), VecFamily(2)).dependent);
  }
  SUBCASE("free dependence decides without LP") {
    auto r = positive_linear_dependent(VecFamily(2), family({{1, 2}, {-2, -4}}, 2, 0));
    CHECK(r.dependent);
    CHECK(r.lp_optimum == 0.0);
  }
  SUBCASE("positive cone pointed") {
    CHECK_FALSE(positive_linear_dependent(family({{1, 0}, {1, 1}, {0, 1}}, 2, 0), VecFamily(2)).dependent);
  }
  SUBCASE("dimension mismatch") {
    VecFamily f(2);
    CHECK_THROWS_AS(f.add(0, Vec{1, 2, 3}), DimensionMismatch);
    f.add(0, Vec{1, 2});
    CHECK_THROWS_AS(f.add(0, Vec{1, 2}), PreconditionViolation);
  }
}

TEST_CASE("Caratheodory reduction invariants on 1000 instances") {
  InstanceCount c = caratheodory_suite(1000);
  CHECK(c.instances == 1000);
  CHECK(c.failures == 0);
}

TEST_CASE("Caratheodory rejects bad input") {
  VecFamily indep(2), pos(2);
  pos.add(1, Vec{1, 0});
  CHECK_THROWS_AS(caratheodory_reduce(Vec{0, 0}, indep, pos, {{1, 0.0}}), PreconditionViolation);
  CHECK_THROWS_AS(caratheodory_reduce(Vec{1, 0}, indep, pos, {{1, -1.0}}), PreconditionViolation);
  CHECK_THROWS_AS(caratheodory_reduce(Vec{2, 0}, indep, pos, {{1, 1.0}}), PreconditionViolation);
  CHECK_THROWS_AS(caratheodory_reduce(Vec{1, 0, 0}, indep, pos, {{1, 1.0}}), DimensionMismatch);
}

TEST_CASE("rank is monotone under enlargement on 1000 families") {
  InstanceCount c = rank_suite(1000);
  CHECK(c.instances == 1000);
  CHECK(c.failures == 0);
}

TEST_CASE("rank threshold") {
  Eigen::MatrixXd M(2, 2);
  M << 1, 1, 1, 1 + 1e-12;
  CHECK(num_rank(M) == 1);
  M << 1, 1, 1, 1 + 1e-4;
  CHECK(num_rank(M) == 2);
  CHECK(num_rank(Eigen::MatrixXd::Zero(3, 2)) == 0);
}

TEST_CASE("phase-1 feasibility") {
  Eigen::MatrixXd A(2, 3);
  A << 1, 1, 1, 1, -1, 0;
  Eigen::VectorXd b(2);
  b << 1, 0;
  auto r = phase1_feasibility(A, b);
  CHECK(r.feasible);
  CHECK((A * r.z - b).norm() < 1e-10);
  CHECK(r.z.minCoeff() >= -1e-12);

  Eigen::MatrixXd A2(1, 2);
  A2 << 1, 1;
  Eigen::VectorXd b2(1);
  b2 << -1;
  auto r2 = phase1_feasibility(A2, b2);
  CHECK_FALSE(r2.feasible);
  CHECK(r2.infeasibility == doctest::Approx(1.0));
}
