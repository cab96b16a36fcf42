#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "saalab/allocation.hpp"
#include "saalab/domain.hpp"
#include "saalab/equilibrium.hpp"

namespace saalab {

enum class StrategyMode { EquilibriumModel, MarkupRule, ShadedRule };

struct ProductConfig {
  std::string code;
  std::string package_class;
  double alpha = 0.0;
  std::vector<double> alpha_schedule;  // if nonempty, cycles per auction
  double sdvosb_fraction = 0.0;
  Lbs truckload_lbs = 40000;
  int items_min = 1;
  int items_max = 1;
  double usda_ref_price = 2.5;

  double alpha_at(int auction_index) const {
    if (alpha_schedule.empty()) return alpha;
    return alpha_schedule[static_cast<std::size_t>(auction_index) % alpha_schedule.size()];
  }
};

struct VendorClassConfig {
  int count = 0;
  double cost_lo = 1.0;
  double cost_hi = 3.0;
  double participation = 1.0;
  double markup = 0.1;  // MARKUP_RULE: bid = cost * (1 + markup)
  double shade = 0.3;   // SHADED_RULE:  bid = cost + shade * (cost_hi - cost)
  int capacity_trucks = 0;  // per (product, window); 0 = unbounded
};

struct WholesaleConfig {
  double base = 2.5;
  double monthly_drift = 0.0;      // relative drift per month
  double seasonal_amplitude = 0.0;  // additive sinusoid over a 12-month cycle
};

struct SimConfig {
  std::uint64_t seed = 1;
  int n_auctions = 10;
  Date start_date{2015, 1, 7};
  std::vector<ProductConfig> products;
  VendorClassConfig small_vendors;
  VendorClassConfig large_vendors;
  int n_sdvosb_small = 0;  // first k small vendors carry the SDVOSB flag
  StrategyMode strategy_mode = StrategyMode::MarkupRule;
  WholesaleConfig wholesale;
};

// One row per (item, bid): the flat analysis table every downstream consumer reads.
struct BidRecord {
  std::string auction_id;
  Date date;
  std::string solicitation_id;
  std::string product_code;
  std::string package_class;
  std::string item_id;
  Lbs quantity_lbs = 0;
  std::string destination_state;
  Date window_start;
  Date window_end;
  std::string vendor_id;
  SizeClass vendor_type = SizeClass::Small;
  bool sdvosb = false;  // SDVOSB sub-quota applies to this item's product
  Price price_per_lb;
  bool won = false;
  double set_aside = 0.0;
  double demand_mlbs = 0.0;
  int n_bidders_item = 0;
  double wholesale_price = 0.0;
  double usda_ref_price = 0.0;
};

double wholesale_price_at(const WholesaleConfig& w, int months_since_start);

std::vector<BidRecord> simulate_campaign(const SimConfig& config);

// One column of the Table-1-style summary, per set-aside level.
struct GroupSummary {
  double set_aside = 0.0;
  int n_auctions = 0;
  int n_items = 0;
  int n_bids = 0;
  int small_pool = 0;
  int large_pool = 0;
  double avg_small = 0.0, sd_small = 0.0;
  double avg_large = 0.0, sd_large = 0.0;
  double mean_offer = 0.0, sd_offer = 0.0;
  double mean_win = 0.0, sd_win = 0.0;
  double mean_qty = 0.0, sd_qty = 0.0;
  bool exist_all_years = false;
};

std::vector<GroupSummary> summary_statistics(std::span<const BidRecord> records);

// Exact row labels of the summary table, in order.
extern const std::vector<std::string> kSummaryRowLabels;

struct TimelinePoint {
  Date date;
  int small_active = 0;
  int large_active = 0;
};

// Vendors counted active from their first to last observed participation.
std::vector<TimelinePoint> bidder_pool_timeline(std::span<const BidRecord> records);

struct WinShareCell {
  std::string auction_id;
  std::string product_code;
  double set_aside = 0.0;
  Lbs total_lbs = 0;
  double small_share = 0.0;
  double large_share = 0.0;
  double unawarded_share = 0.0;
};

struct WinShareAggregate {
  double set_aside = 0.0;
  double small_share = 0.0;
  double large_share = 0.0;
  double unawarded_share = 0.0;
};

struct WinShareReport {
  std::vector<WinShareCell> cells;
  std::vector<WinShareAggregate> by_set_aside;
};

WinShareReport win_share_report(std::span<const BidRecord> records);

}  // namespace saalab
