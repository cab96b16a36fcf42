#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "saalab/domain.hpp"

namespace saalab {

struct AllocationProblem {
  Solicitation solicitation;
  std::vector<Bid> bids;
  std::vector<Vendor> vendors;
  std::vector<CapacityConstraint> capacities;
  // optional per-product ceiling; bids strictly above it are dropped pre-solve
  std::map<std::string, Price> price_ceiling;
};

struct Award {
  std::string vendor_id;
  Price price_per_lb;
};

struct QuotaReport {
  std::string product_code;
  double quota_lbs = 0.0;
  Lbs awarded_lbs = 0;  // small lbs (set-aside report) or SDVOSB lbs (sub-quota report)
  bool quota_met = false;
  bool relaxed = false;  // true only when the quota was infeasible at the phase-1 optimum
};

// Objective value reached at each lexicographic phase, per product.
struct PhaseTrace {
  std::string product_code;
  Lbs awarded_lbs = 0;          // phase 1
  double small_capped = 0.0;    // phase 2: min(quota, small awarded lbs)
  double sdvosb_capped = 0.0;   // phase 3
  std::int64_t cost_ticklbs = 0;  // phase 4 (price ticks x lbs)

  friend bool operator==(const PhaseTrace&, const PhaseTrace&) = default;
};

struct AllocationResult {
  std::map<std::string, Award> awards;  // item_id -> award
  std::vector<std::string> unawarded;
  std::int64_t total_cost_ticklbs = 0;
  std::vector<QuotaReport> per_product_quota;
  std::vector<QuotaReport> sdvosb_quota;
  std::vector<PhaseTrace> lexicographic_trace;  // sorted by product_code

  double total_cost_dollars() const { return static_cast<double>(total_cost_ticklbs) * 1e-4; }
};

struct ProductFeasibility {
  std::string product_code;
  Lbs max_awardable_lbs = 0;
  Lbs max_small_lbs = 0;  // S*: at the phase-1 optimum
  double quota_lbs = 0.0;
  bool quota_attainable = false;
  Lbs max_sdvosb_lbs = 0;
  double sdvosb_quota_lbs = 0.0;
  bool sdvosb_attainable = false;
};

// Exact branch-and-bound solver; decomposes by product (capacity constraints
// are keyed by product, so products are always independent).
AllocationResult solve_allocation(const AllocationProblem& problem);

// Exhaustive oracle; hard-bounded to <= 8 items and <= 5 bidding vendors per product.
AllocationResult brute_force_allocation(const AllocationProblem& problem);

std::vector<ProductFeasibility> check_feasibility(const AllocationProblem& problem);

}  // namespace saalab
