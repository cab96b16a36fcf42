#include <cmath>

#include "doctest.h"
#include "saalab/equilibrium.hpp"
#include "saalab/errors.hpp"

using namespace saalab;

namespace {

EquilibriumModel uniform_model(double alpha, double lo = 0.0, double hi = 1.0) {
  EquilibriumModel m;
  m.alpha = alpha;
  m.f_small = ValueDistribution::uniform(lo, hi);
  m.f_large = m.f_small;
  return m;
}

// alpha = 0 uniform(0,1) closed form: b(v) = v + (1-v)/3, so c(p) = (3p-1)/2
double closed_c_alpha0(double p) { return (3.0 * p - 1.0) / 2.0; }

}  // namespace

TEST_CASE("expected profits evaluate the stated expressions") {
  const auto m = uniform_model(0.5);
  const CostFn ident = [](double p) { return p; };
  CHECK(expected_profit_small(0.6, 0.2, m, ident, ident) == doctest::Approx(0.112));
  CHECK(expected_profit_large(0.6, 0.3, m, ident) == doctest::Approx(0.024));

  SUBCASE("zero margin gives zero profit") {
    CHECK(expected_profit_small(0.6, 0.6, m, ident, ident) == doctest::Approx(0.0));
  }
  SUBCASE("full set-aside drops the large-bidder factor and zeroes large profit") {
    const auto full = uniform_model(1.0);
    const CostFn other = [](double p) { return 0.99 * p; };
    CHECK(expected_profit_small(0.6, 0.2, full, ident, ident) ==
          doctest::Approx(expected_profit_small(0.6, 0.2, full, ident, other)));
    CHECK(expected_profit_large(0.6, 0.3, full, ident) == doctest::Approx(0.0));
  }
  SUBCASE("losing for sure gives zero large profit") {
    const CostFn top = [](double) { return 1.0; };
    CHECK(expected_profit_large(0.6, 0.3, m, top) == doctest::Approx(0.0));
  }
  SUBCASE("out-of-support price is clamped and flagged") {
    bool clamped = false;
    expected_profit_small(1.4, 0.2, m, ident, ident, &clamped);
    CHECK(clamped);
  }
}

TEST_CASE("FOC residuals") {
  const auto m = uniform_model(0.0);
  SUBCASE("closed-form symmetric solution zeroes both residuals") {
    for (double p : {0.4, 0.5, 0.7, 0.9}) {
      const double c = closed_c_alpha0(p);
      const auto [rs, rl] = foc_residual(p, m, c, c, 1.5, 1.5);
      CHECK(std::abs(rs) < 1e-8);
      CHECK(std::abs(rl) < 1e-8);
    }
  }
  SUBCASE("constant inverse bids leave the survival product as the residual") {
    const auto half = uniform_model(0.5);
    const double c = 0.3;
    const auto [rs, rl] = foc_residual(0.6, half, c, c, 0.0, 0.0);
    CHECK(rs == doctest::Approx((1.0 - 0.3) * (1.0 - 0.5 * 0.3)));
    CHECK(rs > 0.0);
  }
  SUBCASE("alpha = 1 with the 2-bidder closed form zeroes the small residual") {
    const auto full = uniform_model(1.0);
    for (double p : {0.55, 0.7, 0.9}) {
      const double c = 2.0 * p - 1.0;  // inverse of b(v) = (1+v)/2
      const auto [rs, rl] = foc_residual(p, full, c, c, 2.0, 2.0);
      CHECK(std::abs(rs) < 1e-8);
    }
  }
}

TEST_CASE("symmetric strategy closed forms") {
  const auto f = ValueDistribution::uniform(0.0, 1.0);
  const auto b2 = solve_symmetric(f, 2);
  CHECK(b2(0.5) == doctest::Approx(0.75).epsilon(1e-9));
  const auto b3 = solve_symmetric(f, 3);
  CHECK(b3(0.4) == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(b3(1.0) == doctest::Approx(1.0));

  const auto tn = ValueDistribution::truncated_normal(0.5, 0.3, 0.0, 1.0);
  CHECK(solve_symmetric(tn, 2)(1.0) == doctest::Approx(1.0));
}

TEST_CASE("alpha = 1 equilibrium matches b(v) = (1+v)/2") {
  const auto sol = solve_equilibrium(uniform_model(1.0), 501);
  CHECK(sol.b_low == doctest::Approx(0.5).epsilon(1e-6));
  double sup = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double v = k / 40.0;
    sup = std::max(sup, std::abs(sol.bid_small(v) - (1.0 + v) / 2.0));
  }
  CHECK(sup < 1e-3);
}

TEST_CASE("alpha = 0 equilibrium matches b(v) = v + (1-v)/3") {
  const auto sol = solve_equilibrium(uniform_model(0.0), 1001);
  CHECK(sol.b_low == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
  double sup = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double v = k / 40.0;
    const double b = v + (1.0 - v) / 3.0;
    sup = std::max(sup, std::abs(sol.bid_small(v) - b));
    sup = std::max(sup, std::abs(sol.bid_large(v) - b));
  }
  CHECK(sup < 1e-3);
}

TEST_CASE("alpha = 0.5 solution is self-consistent") {
  const auto m = uniform_model(0.5);
  const auto sol = solve_equilibrium(m, 2001);

  CHECK(sol.diagnostics.max_foc_residual <= 1e-6);

  SUBCASE("monotone, individually rational, correct boundaries") {
    for (std::size_t i = 0; i < sol.price_grid.size(); ++i) {
      CHECK(sol.c1[i] <= sol.price_grid[i] + 1e-12);
      CHECK(sol.c2[i] <= sol.price_grid[i] + 1e-12);
      if (i > 0) {
        CHECK(sol.c1[i] > sol.c1[i - 1]);
        CHECK(sol.c2[i] > sol.c2[i - 1]);
      }
    }
    CHECK(sol.c1.front() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sol.c2.front() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sol.c1.back() == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(sol.c2.back() == doctest::Approx(1.0).epsilon(1e-4));
  }

  SUBCASE("best-response gaps small at 20 quantiles per type") {
    for (int q = 1; q <= 20; ++q) {
      const double u = q / 21.0;
      CHECK(best_response_gap(m, sol, m.f_small.quantile(u), SizeClass::Small) <= 0.005);
      CHECK(best_response_gap(m, sol, m.f_large.quantile(u), SizeClass::Large) <= 0.005);
    }
  }

  SUBCASE("perturbed solution fails the gap test") {
    EquilibriumSolution bad = sol;
    for (auto& c : bad.c1) c = std::min(1.0, c + 0.05);
    double worst = 0.0;
    for (int q = 1; q <= 20; ++q) {
      worst = std::max(worst, best_response_gap(m, bad, m.f_small.quantile(q / 21.0),
                                                SizeClass::Small));
    }
    CHECK(worst > 0.01);
  }
}

TEST_CASE("large-bidder markup identity holds on the interior grid") {
  const auto m = uniform_model(0.5);
  const auto sol = solve_equilibrium(m, 2001);
  const std::size_t n = sol.price_grid.size();
  for (std::size_t i = n / 10; i < n - n / 10; i += n / 50) {
    const double p = sol.price_grid[i];
    CHECK(std::abs(markup_large(p, m, sol) - (p - sol.c2_at(p))) <= 1e-6);
  }
}

TEST_CASE("alpha = 0 markup example") {
  const auto m = uniform_model(0.0);
  const auto sol = solve_equilibrium(m, 1001);
  CHECK(sol.c2_at(0.6) == doctest::Approx(0.4).epsilon(1e-3));
  CHECK(markup_large(0.6, m, sol) == doctest::Approx(0.2).epsilon(1e-2));
}

TEST_CASE("best-response gap is zero at the top type") {
  const auto m = uniform_model(0.0);
  const auto sol = solve_equilibrium(m, 501);
  CHECK(best_response_gap(m, sol, 1.0, SizeClass::Small) == doctest::Approx(0.0));
}

TEST_CASE("equilibrium works on a non-unit support") {
  const auto m = uniform_model(0.5, 1.0, 3.0);
  const auto sol = solve_equilibrium(m, 1001);
  CHECK(sol.diagnostics.max_foc_residual <= 1e-6);
  CHECK(sol.c1.front() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.c1.back() == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(sol.bid_small(1.0) == doctest::Approx(sol.b_low));
}

TEST_CASE("asymmetric type distributions solve cleanly") {
  EquilibriumModel m;
  m.alpha = 0.5;
  m.f_small = ValueDistribution::truncated_normal(0.4, 0.4, 0.0, 1.0);
  m.f_large = ValueDistribution::uniform(0.0, 1.0);
  const auto sol = solve_equilibrium(m, 1001);
  CHECK(sol.diagnostics.max_foc_residual <= 1e-6);
  for (int q = 1; q <= 10; ++q) {
    const double u = q / 11.0;
    CHECK(best_response_gap(m, sol, m.f_small.quantile(u), SizeClass::Small) <= 0.005);
    CHECK(best_response_gap(m, sol, m.f_large.quantile(u), SizeClass::Large) <= 0.005);
  }
}

TEST_CASE("unsupported configurations raise explicit errors") {
  EquilibriumModel m = uniform_model(0.5);
  SUBCASE("mismatched supports") {
    m.f_large = ValueDistribution::uniform(0.0, 2.0);
    CHECK_THROWS_AS(solve_equilibrium(m), ValidationError);
  }
  SUBCASE("alpha out of range") {
    m.alpha = 1.5;
    CHECK_THROWS_AS(solve_equilibrium(m), ValidationError);
  }
  SUBCASE("degenerate grid") { CHECK_THROWS_AS(solve_equilibrium(m, 4), ValidationError); }
}
