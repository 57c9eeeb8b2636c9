#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "gridshed/rng.hpp"
#include "gridshed/simplex.hpp"

using namespace gridshed;

namespace {

LpRow row(std::vector<double> c, RowType t, double rhs) { return LpRow{std::move(c), t, rhs}; }

}  // namespace

TEST_CASE("box-constrained maximum") {
  LpProblem p;
  p.n_vars = 2;
  p.objective = {1.0, 1.0};
  p.rows.push_back(row({1, 0}, RowType::LE, 2));
  p.rows.push_back(row({0, 1}, RowType::LE, 3));
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(sol.x[0] == doctest::Approx(2.0));
  CHECK(sol.x[1] == doctest::Approx(3.0));
}

TEST_CASE("equality and inequality mix") {
  // max x st x + y = 4, x <= 1  ->  x = 1, y = 3.
  LpProblem p;
  p.n_vars = 2;
  p.objective = {1.0, 0.0};
  p.rows.push_back(row({1, 1}, RowType::EQ, 4));
  p.rows.push_back(row({1, 0}, RowType::LE, 1));
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.x[1] == doctest::Approx(3.0));
}

TEST_CASE("greater-equal rows need phase one") {
  // max -x st x >= 3  ->  x = 3.
  LpProblem p;
  p.n_vars = 1;
  p.objective = {-1.0};
  p.rows.push_back(row({1}, RowType::GE, 3));
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(3.0));
  CHECK(sol.objective == doctest::Approx(-3.0));
}

TEST_CASE("negative right-hand sides are normalized") {
  // -x <= -2 is x >= 2; maximize -x gives x = 2.
  LpProblem p;
  p.n_vars = 1;
  p.objective = {-1.0};
  p.rows.push_back(row({-1}, RowType::LE, -2));
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(2.0));
}

TEST_CASE("infeasible and unbounded problems are reported") {
  LpProblem inf;
  inf.n_vars = 1;
  inf.objective = {1.0};
  inf.rows.push_back(row({1}, RowType::LE, 1));
  inf.rows.push_back(row({1}, RowType::GE, 2));
  CHECK(solve_lp(inf).status == LpStatus::Infeasible);

  LpProblem unb;
  unb.n_vars = 1;
  unb.objective = {1.0};
  CHECK(solve_lp(unb).status == LpStatus::Unbounded);
}

TEST_CASE("redundant equalities do not break phase one") {
  LpProblem p;
  p.n_vars = 2;
  p.objective = {1.0, 1.0};
  p.rows.push_back(row({1, 1}, RowType::EQ, 1));
  p.rows.push_back(row({2, 2}, RowType::EQ, 2));
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0));
}

TEST_CASE("zero right-hand-side degeneracy") {
  // Forces degenerate pivots: x <= 0 pins x, objective moves on y.
  LpProblem p;
  p.n_vars = 2;
  p.objective = {5.0, 1.0};
  p.rows.push_back(row({1, 0}, RowType::LE, 0));
  p.rows.push_back(row({1, 1}, RowType::LE, 2));
  p.rows.push_back(row({-1, 1}, RowType::LE, 2));
  auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(0.0));
  CHECK(sol.x[1] == doctest::Approx(2.0));
}

namespace {

// Exhaustive vertex enumeration for 2-variable LPs: intersect every pair of
// constraint boundaries (including the axes), keep feasible points, maximize.
double brute_max_2d(const LpProblem& p) {
  std::vector<std::array<double, 3>> bounds;  // a x + b y <= c after normalization
  for (const LpRow& r : p.rows) {
    if (r.type == RowType::LE || r.type == RowType::EQ)
      bounds.push_back({r.coeffs[0], r.coeffs[1], r.rhs});
    if (r.type == RowType::GE || r.type == RowType::EQ)
      bounds.push_back({-r.coeffs[0], -r.coeffs[1], -r.rhs});
  }
  bounds.push_back({-1, 0, 0});  // x >= 0
  bounds.push_back({0, -1, 0});  // y >= 0
  double best = -1e300;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    for (std::size_t j = i + 1; j < bounds.size(); ++j) {
      const double det = bounds[i][0] * bounds[j][1] - bounds[i][1] * bounds[j][0];
      if (std::abs(det) < 1e-12) continue;
      const double x = (bounds[i][2] * bounds[j][1] - bounds[i][1] * bounds[j][2]) / det;
      const double y = (bounds[i][0] * bounds[j][2] - bounds[i][2] * bounds[j][0]) / det;
      bool ok = x >= -1e-9 && y >= -1e-9;
      for (const auto& b : bounds) ok = ok && b[0] * x + b[1] * y <= b[2] + 1e-9;
      if (ok) best = std::max(best, p.objective[0] * x + p.objective[1] * y);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("random bounded 2-variable problems match vertex enumeration") {
  Rng rng(2024);
  int solved = 0;
  for (int trial = 0; trial < 80; ++trial) {
    LpProblem p;
    p.n_vars = 2;
    p.objective = {rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)};
    // Caps keep it bounded; a couple of random LE/GE/EQ rows on top.
    p.rows.push_back(row({1, 0}, RowType::LE, rng.uniform(0.5, 3.0)));
    p.rows.push_back(row({0, 1}, RowType::LE, rng.uniform(0.5, 3.0)));
    const int extra = static_cast<int>(rng.below(3));
    for (int k = 0; k < extra; ++k) {
      const double a = rng.uniform(-1.0, 2.0), b = rng.uniform(-1.0, 2.0);
      p.rows.push_back(row({a, b}, rng.bernoulli(0.7) ? RowType::LE : RowType::GE,
                           rng.uniform(0.2, 2.0)));
    }
    auto sol = solve_lp(p);
    if (sol.status != LpStatus::Optimal) continue;  // GE rows can cut everything off
    ++solved;
    CHECK(sol.objective == doctest::Approx(brute_max_2d(p)).epsilon(1e-6));
  }
  CHECK(solved > 40);
}
