#include "doctest.h"

#include <stdexcept>

#include <cmath>

#include "meshfair/solver.hpp"
#include "test_support.hpp"

using namespace meshfair::solver;
namespace frozen = meshfair::test::frozen;

namespace {

// maximize t subject to t <= x/X(x), prod(1+x) <= p_bar: the single-station
// boundary rate in log coordinates.
LogProgram single_station_program(double a, double p_bar) {
  LogProgram prog;
  int t = prog.add_var("t", std::log(1e-9), std::log(4.0));
  int y = prog.add_var("y", std::log(1e-9), std::log(10.0));
  {
    Constraint c;
    c.label = "rate";
    c.affine.add(t, 1.0);
    c.affine.add(y, -1.0);
    DenomBlock d;
    d.base = a;
    d.y_var = {y};
    d.eta_var = {-1};
    c.denom.push_back(d);
    prog.constraints.push_back(c);
  }
  {
    Constraint c;
    c.label = "pidle";
    c.affine.constant = -std::log(p_bar);
    SoftplusBlock sp;
    Affine term;
    term.add(y, 1.0);
    sp.exponents.push_back(term);
    c.softplus.push_back(sp);
    prog.constraints.push_back(c);
  }
  prog.objective = t;
  return prog;
}

}  // namespace

TEST_CASE("identity objective") {
  // maximize t s.t. t <= log s for fixed s
  LogProgram prog;
  int t = prog.add_var("t", -20.0, 5.0);
  Constraint c;
  c.affine.constant = -std::log(0.37);
  c.affine.add(t, 1.0);
  prog.constraints.push_back(c);
  prog.objective = t;
  Solution sol = solve(prog);
  REQUIRE(sol.ok());
  CHECK(std::exp(sol.values[t]) == doctest::Approx(0.37).epsilon(1e-6));
  CHECK(!sol.active_set.empty());
}

TEST_CASE("single-station boundary rate") {
  LogProgram prog = single_station_program(0.01, frozen::pbar_001);
  Solution sol = solve(prog);
  REQUIRE(sol.ok());
  CHECK(std::exp(sol.objective) == doctest::Approx(frozen::s1_star).epsilon(1e-4));
}

TEST_CASE("infeasible program yields a certificate") {
  // t >= log 1 against the single-station cap (rates stay below l/t_c)
  LogProgram prog = single_station_program(0.01, frozen::pbar_001);
  Constraint floor;
  floor.label = "rate-floor";
  floor.affine.constant = 0.0;  // log 1
  floor.affine.add(0, -1.0);    // -t <= -log 1
  prog.constraints.push_back(floor);
  Solution sol = solve(prog);
  CHECK(sol.status == SolveStatus::infeasible);
  CHECK(!sol.certificate.empty());
}

TEST_CASE("feasibility phase") {
  SUBCASE("no constraints: box center") {
    LogProgram prog;
    prog.add_var("v", -1.0, 3.0);
    Solution sol = feasibility(prog);
    REQUIRE(sol.ok());
    CHECK(sol.values[0] == doctest::Approx(1.0));
  }
  SUBCASE("contradictory affine constraints") {
    LogProgram prog;
    int v = prog.add_var("v", -10.0, 10.0);
    Constraint lo;  // v <= -1
    lo.affine.add(v, 1.0);
    lo.affine.constant = 1.0;
    Constraint hi;  // v >= 1
    hi.affine.add(v, -1.0);
    hi.affine.constant = 1.0;
    prog.constraints.push_back(lo);
    prog.constraints.push_back(hi);
    Solution sol = feasibility(prog);
    CHECK(sol.status == SolveStatus::infeasible);
  }
  SUBCASE("strictly feasible point for a real program") {
    LogProgram prog = single_station_program(0.01, frozen::pbar_001);
    Solution sol = feasibility(prog);
    REQUIRE(sol.ok());
    for (const auto& c : prog.constraints) CHECK(c.eval(sol.values) < 0.0);
  }
}

TEST_CASE("determinism") {
  LogProgram prog = single_station_program(0.015, 1.2);
  Solution a = solve(prog);
  Solution b = solve(prog);
  REQUIRE(a.ok());
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t j = 0; j < a.values.size(); ++j) CHECK(a.values[j] == b.values[j]);
}

TEST_CASE("grid-search oracle equivalence on small programs") {
  // two variables: maximize t s.t. t <= y - log X(y), softplus cap
  for (double a : {0.005, 0.02}) {
    double p_bar = 1.0 / (1.0 + a - std::sqrt(2.0 * a));
    LogProgram prog = single_station_program(a, p_bar);
    Solution sol = solve(prog);
    REQUIRE(sol.ok());
    // dense scan over x with one refinement
    auto objective = [&](double x) {
      if (1.0 + x > p_bar) return -1e300;
      return x / (a + x);
    };
    double best_x = 0.0, best = -1e300;
    for (double x = 0.0; x <= p_bar - 1.0 + 1e-9; x += 1e-3) {
      double v = objective(x);
      if (v > best) {
        best = v;
        best_x = x;
      }
    }
    for (double x = std::max(0.0, best_x - 1e-3); x <= best_x + 1e-3; x += 1e-5) {
      double v = objective(x);
      if (v > best) best = v;
    }
    CHECK(std::exp(sol.objective) == doctest::Approx(best).epsilon(5e-3));
  }
}

TEST_CASE("convexity audit accepts well-formed programs") {
  LogProgram prog = single_station_program(0.01, frozen::pbar_001);
  CHECK_NOTHROW(audit_convexity(prog, 100));

  SUBCASE("non-finite constants are rejected") {
    LogProgram bad = prog;
    bad.constraints[0].affine.constant = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(audit_convexity(bad, 10), std::invalid_argument);
  }
}

TEST_CASE("denominator block folds pinned stations") {
  // X with one pinned station (x=0.1, N=1) equals the two-station X.
  DenomBlock folded = DenomBlock::fold(0.01, {0.1}, {1.0});
  LogProgram prog;
  int y = prog.add_var("y", std::log(1e-6), std::log(5.0));
  folded.y_var = {y};
  folded.eta_var = {-1};
  Constraint c;
  c.denom.push_back(folded);
  prog.constraints.push_back(c);  // just to host eval
  std::vector<double> v{std::log(0.3)};
  double expect = 0.01 + (1.0 + 0.3) * 1.1 - 1.0;
  CHECK(prog.constraints[0].eval(v) == doctest::Approx(std::log(expect)).epsilon(1e-12));
}
