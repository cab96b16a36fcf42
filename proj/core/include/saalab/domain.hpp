#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "saalab/errors.hpp"

namespace saalab {

using Lbs = std::int64_t;

// Per-pound price with exactly 4 fractional digits, stored as integer ticks
// of 1e-4 USD so that objective values are exact and reproducible.
class Price {
 public:
  Price() = default;
  static Price from_ticks(std::int64_t t) {
    Price p;
    p.ticks_ = t;
    return p;
  }
  static Price from_dollars(double d);
  static std::optional<Price> parse(std::string_view s);

  std::int64_t ticks() const { return ticks_; }
  double dollars() const { return static_cast<double>(ticks_) * 1e-4; }
  std::string str() const;  // fixed 4 decimals

  friend auto operator<=>(const Price&, const Price&) = default;

 private:
  std::int64_t ticks_ = 0;
};

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  friend auto operator<=>(const Date&, const Date&) = default;

  std::string str() const;  // ISO-8601
  static std::optional<Date> parse(std::string_view s);

  Date plus_days(int n) const;
  // civil day serial number (days since 1970-01-01)
  std::int64_t serial() const;
  int month_index() const { return year * 12 + (month - 1); }
};

enum class SizeClass { Small, Large };

std::string_view size_class_str(SizeClass c);
std::optional<SizeClass> parse_size_class(std::string_view s);

struct Product {
  std::string product_code;
  std::string description;
  std::string package_size_class;
  Price reference_price_usda;
  Lbs truckload_lbs = 0;
};

struct SetAsidePolicy {
  double alpha = 0.0;
  double sdvosb_fraction = 0.0;
  std::string applies_to;  // product_code
};

struct Item {
  std::string item_id;
  std::string solicitation_id;
  std::string product_code;
  Lbs quantity_lbs = 0;
  std::string dest_city;
  std::string dest_state;
  std::string dest_zip;
  Date window_start;
  Date window_end;
};

struct Solicitation {
  std::string solicitation_id;
  Date auction_date;
  std::vector<Item> items;
  std::vector<SetAsidePolicy> policies;  // one per product present

  const SetAsidePolicy* policy_for(std::string_view product_code) const;
};

struct Vendor {
  std::string vendor_id;
  SizeClass size_class = SizeClass::Small;
  bool sdvosb = false;
};

struct Bid {
  std::string vendor_id;
  std::string item_id;
  Price price_per_lb;
};

struct CapacityConstraint {
  std::string vendor_id;
  std::string product_code;
  Date window_start;  // window_key = exact (start, end) pair
  Date window_end;
  Lbs max_quantity_lbs = 0;
};

// alpha_p x total solicited quantity of the product, exact in lbs.
double compute_setaside_quota(const Solicitation& s, std::string_view product_code);

// total product quantity / 1e6 (regression covariate)
double demand_level(const Solicitation& s, std::string_view product_code);

// Reported demand range; values outside are a data-quality warning, not an error.
inline constexpr double kDemandRangeLo = 0.038;
inline constexpr double kDemandRangeHi = 13.272;
std::optional<std::string> demand_range_warning(double demand_mlbs);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_solicitation(const Solicitation& s);

// Products differing only in package size share a group key for fixed effects;
// the package class token is stripped from the code.
std::string analysis_group(std::string_view product_code, std::string_view package_class);

}  // namespace saalab
