#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "saalab/distribution.hpp"
#include "saalab/domain.hpp"

namespace saalab {

// Homogeneous-item market with 2 small bidders and 1 large bidder; the large
// bidder can win at most the (1-alpha) share of items.
struct EquilibriumModel {
  int item_count = 1;
  double alpha = 0.0;
  ValueDistribution f_small = ValueDistribution::uniform(0.0, 1.0);
  ValueDistribution f_large = ValueDistribution::uniform(0.0, 1.0);
  static constexpr int n_small = 2;
  static constexpr int n_large = 1;
};

struct EquilibriumDiagnostics {
  double max_foc_residual = 0.0;  // sup over interior grid, finite-difference slopes
  double boundary_mismatch = 0.0;
  int shooting_iterations = 0;
};

// Inverse bid functions on an ascending price grid [b_low, v_hi].
struct EquilibriumSolution {
  std::vector<double> price_grid;
  std::vector<double> c1;  // small bidders' inverse bid
  std::vector<double> c2;  // large bidder's inverse bid
  double b_low = 0.0;
  double alpha = 0.0;
  EquilibriumDiagnostics diagnostics;

  double c1_at(double p) const;
  double c2_at(double p) const;
  double bid_small(double v) const;  // inverse of c1
  double bid_large(double v) const;
};

using CostFn = std::function<double(double)>;

// pi_1 = M (p - v1) [1 - F1(c1(p))] [1 - (1-a) F2(c2(p))]
double expected_profit_small(double p, double v1, const EquilibriumModel& model,
                             const CostFn& c1, const CostFn& c2, bool* clamped = nullptr);

// pi_2 = (1-a) M (p - v2) [1 - F1(c1(p))]^2
double expected_profit_large(double p, double v2, const EquilibriumModel& model,
                             const CostFn& c1, bool* clamped = nullptr);

// Residuals of the first-order conditions at an interior price, given inverse
// bids and their slopes.
std::pair<double, double> foc_residual(double p, const EquilibriumModel& model, double c1,
                                       double c2, double c1_prime, double c2_prime);

// Symmetric n-bidder procurement strategy b(v) = v + int_v^hi [1-F]^{n-1} / [1-F(v)]^{n-1}.
class SymmetricStrategy {
 public:
  SymmetricStrategy(ValueDistribution f, int n_bidders);
  double operator()(double v) const;
  double b_low() const { return bid_at_lowest_; }
  const ValueDistribution& dist() const { return f_; }
  int n_bidders() const { return n_; }

 private:
  ValueDistribution f_;
  int n_;
  double bid_at_lowest_;
};

SymmetricStrategy solve_symmetric(const ValueDistribution& f, int n_bidders);

// Forward-shooting solver for the coupled inverse-bid ODE system; alpha = 1
// degenerates to the symmetric two-small-bidder case and is dispatched there.
EquilibriumSolution solve_equilibrium(const EquilibriumModel& model, int grid_size = 2001,
                                      double tolerance = 1e-8);

// Relative profit left on the table at value v when opponents play the solved
// strategies; the oracle is independent of the FOC derivation.
double best_response_gap(const EquilibriumModel& model, const EquilibriumSolution& solution,
                         double v, SizeClass bidder_type, int price_grid_size = 4000);

// [1 - F1(c1)] / (2 f1(c1) c1') evaluated on the solved grid; must agree with p - c2(p).
double markup_large(double p, const EquilibriumModel& model,
                    const EquilibriumSolution& solution);

}  // namespace saalab
