#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ltlplan;

TEST_CASE("lower-bounded single variable") {
  LpProblem p;
  const int x = p.add_var(1.0);
  LpProblem::Row r;
  r.coeffs.emplace_back(x, 1.0);
  r.rhs = 3.0;
  p.ge_rows.push_back(r);
  LpSolution sol = solve(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  REQUIRE(sol.x[0] == Catch::Approx(3.0));
  REQUIRE(sol.objective == Catch::Approx(3.0));
  REQUIRE(sol.max_residual <= 1e-8);
}

TEST_CASE("degenerate optimum returns a deterministic vertex") {
  LpProblem p;
  p.add_var(-1.0);
  p.add_var(-1.0);
  LpProblem::Row r;
  r.coeffs = {{0, 1.0}, {1, 1.0}};
  r.rhs = 1.0;
  p.eq_rows.push_back(r);
  LpSolution a = solve(p);
  REQUIRE(a.status == LpStatus::Optimal);
  REQUIRE(a.objective == Catch::Approx(-1.0));
  // vertex: exactly one variable carries the mass
  REQUIRE(((a.x[0] == Catch::Approx(1.0) && a.x[1] == Catch::Approx(0.0)) ||
           (a.x[1] == Catch::Approx(1.0) && a.x[0] == Catch::Approx(0.0))));
  LpSolution b = solve(p);
  REQUIRE(a.x == b.x);  // identical input, identical vertex
}

TEST_CASE("infeasible and unbounded detection") {
  LpProblem p;
  p.add_var(0.0);
  LpProblem::Row r1, r2;
  r1.coeffs = {{0, 1.0}};
  r1.rhs = 2.0;
  r2.coeffs = {{0, -1.0}};
  r2.rhs = -1.0;  // x <= 1 and x = 2
  p.eq_rows.push_back(r1);
  p.ge_rows.push_back(r2);
  REQUIRE(solve(p).status == LpStatus::Infeasible);

  LpProblem q;
  q.add_var(-1.0);
  LpProblem::Row r3;
  r3.coeffs = {{0, 1.0}};
  r3.rhs = 0.0;
  q.ge_rows.push_back(r3);
  REQUIRE(solve(q).status == LpStatus::Unbounded);
}

TEST_CASE("variable lower bounds shift the solution") {
  LpProblem p;
  p.add_var(1.0);
  p.add_var(1.0);
  p.lower = {2.0, -1.0};
  LpProblem::Row r;
  r.coeffs = {{0, 1.0}, {1, 1.0}};
  r.rhs = 0.5;
  p.ge_rows.push_back(r);
  LpSolution sol = solve(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  REQUIRE(sol.x[0] == Catch::Approx(2.0));
  REQUIRE(sol.x[1] == Catch::Approx(-1.0));
  REQUIRE(sol.objective == Catch::Approx(1.0));
}

TEST_CASE("redundant equality rows are tolerated") {
  LpProblem p;
  p.add_var(1.0);
  p.add_var(2.0);
  LpProblem::Row r1, r2;
  r1.coeffs = {{0, 1.0}, {1, 1.0}};
  r1.rhs = 1.0;
  r2 = r1;  // duplicated row
  p.eq_rows.push_back(r1);
  p.eq_rows.push_back(r2);
  LpSolution sol = solve(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  REQUIRE(sol.objective == Catch::Approx(1.0));
}

namespace {

LpProblem random_lp(Rng& rng, int m, int n) {
  // feasible by construction: pick x*, set b = A x* and relax some rows
  LpProblem p;
  std::vector<double> xstar(n);
  for (int j = 0; j < n; ++j) {
    p.add_var(-2.0 + 4.0 * rng.uniform01());
    xstar[j] = rng.uniform01() * 2.0;
  }
  for (int i = 0; i < m; ++i) {
    LpProblem::Row row;
    double rhs = 0.0;
    for (int j = 0; j < n; ++j) {
      if (rng.uniform01() < 0.4) continue;
      const double v = -1.0 + 2.0 * rng.uniform01();
      row.coeffs.emplace_back(j, v);
      rhs += v * xstar[j];
    }
    row.rhs = rhs;
    if (rng.uniform01() < 0.5) {
      row.rhs -= rng.uniform01();  // slack for >= rows
      p.ge_rows.push_back(row);
    } else {
      p.eq_rows.push_back(row);
    }
  }
  // keep the problem bounded: objective floor via sum constraint
  LpProblem::Row cap;
  for (int j = 0; j < n; ++j) cap.coeffs.emplace_back(j, -1.0);
  cap.rhs = -100.0;
  p.ge_rows.push_back(cap);
  return p;
}

}  // namespace

TEST_CASE("random LPs agree with the textbook oracle") {
  Rng rng(73);
  int solved = 0;
  for (int t = 0; t < 40; ++t) {
    LpProblem p = random_lp(rng, 20, 40);
    LpSolution mine = solve(p);
    testutil::OracleResult want = testutil::oracle_solve(testutil::to_oracle(p));
    if (!want.feasible) {
      REQUIRE(mine.status == LpStatus::Infeasible);
      continue;
    }
    if (!want.bounded) {
      REQUIRE((mine.status == LpStatus::Unbounded ||
               mine.status == LpStatus::Optimal));
      continue;
    }
    REQUIRE(mine.status == LpStatus::Optimal);
    REQUIRE(mine.objective ==
            Catch::Approx(want.objective).margin(1e-6).epsilon(1e-6));
    REQUIRE(mine.max_residual <= 1e-8);
    // duality gap against the oracle's multipliers
    REQUIRE(std::abs(mine.objective - want.dual_objective) <=
            1e-7 * (1.0 + std::abs(mine.objective)) + 1e-7);
    ++solved;
  }
  REQUIRE(solved >= 30);
}

TEST_CASE("positive objective scaling keeps the argmin support") {
  Rng rng(99);
  for (int t = 0; t < 10; ++t) {
    LpProblem p = random_lp(rng, 12, 24);
    LpSolution a = solve(p);
    if (a.status != LpStatus::Optimal) continue;
    LpProblem q = p;
    for (double& c : q.objective) c *= 7.5;
    LpSolution b = solve(q);
    REQUIRE(b.status == LpStatus::Optimal);
    for (int j = 0; j < p.num_vars; ++j)
      REQUIRE((a.x[j] > 1e-9) == (b.x[j] > 1e-9));
  }
}
