#pragma once

#include <string>
#include <vector>

#include "saalab/allocation.hpp"
#include "saalab/domain.hpp"
#include "saalab/rng.hpp"

namespace saalab::testing {

inline Item make_item(const std::string& id, const std::string& product, Lbs qty,
                      Date start = {2015, 7, 1}, Date end = {2015, 7, 31}) {
  Item it;
  it.item_id = id;
  it.solicitation_id = "SOL";
  it.product_code = product;
  it.quantity_lbs = qty;
  it.dest_state = "TX";
  it.window_start = start;
  it.window_end = end;
  return it;
}

inline Solicitation make_solicitation(std::vector<Item> items,
                                      std::vector<SetAsidePolicy> policies) {
  Solicitation s;
  s.solicitation_id = "SOL";
  s.auction_date = {2015, 6, 1};
  s.items = std::move(items);
  s.policies = std::move(policies);
  return s;
}

// random instance inside the brute-force bounds: <= 6 items, <= 4 vendors
inline AllocationProblem random_problem(Rng& rng) {
  AllocationProblem p;
  const int n_items = static_cast<int>(rng.uniform_int(1, 6));
  const int n_vendors = static_cast<int>(rng.uniform_int(1, 4));
  const double alphas[] = {0.0, 0.5, 1.0};
  const double alpha = alphas[rng.uniform_int(0, 2)];
  const double sdq = rng.bernoulli(0.5) ? 0.25 : 0.0;

  std::vector<Item> items;
  for (int i = 0; i < n_items; ++i) {
    items.push_back(make_item("I" + std::to_string(i), "P",
                              40000 * rng.uniform_int(1, 3)));
  }
  p.solicitation = make_solicitation(std::move(items), {{alpha, sdq, "P"}});

  for (int v = 0; v < n_vendors; ++v) {
    Vendor ven;
    ven.vendor_id = "V" + std::to_string(v);
    ven.size_class = rng.bernoulli(0.5) ? SizeClass::Small : SizeClass::Large;
    ven.sdvosb = ven.size_class == SizeClass::Small && rng.bernoulli(0.4);
    p.vendors.push_back(ven);
    for (int i = 0; i < n_items; ++i) {
      if (rng.bernoulli(0.75)) {
        // coarse tick grid on purpose so price ties exercise the tie-break
        const Price price = Price::from_ticks(10000 + 2500 * rng.uniform_int(0, 8));
        p.bids.push_back({ven.vendor_id, "I" + std::to_string(i), price});
      }
    }
    if (rng.bernoulli(0.5)) {
      p.capacities.push_back({ven.vendor_id, "P", {2015, 7, 1}, {2015, 7, 31},
                              40000 * rng.uniform_int(1, 4)});
    }
  }
  return p;
}

inline bool same_result(const AllocationResult& a, const AllocationResult& b) {
  if (a.total_cost_ticklbs != b.total_cost_ticklbs) return false;
  if (a.lexicographic_trace != b.lexicographic_trace) return false;
  if (a.unawarded != b.unawarded) return false;
  if (a.awards.size() != b.awards.size()) return false;
  for (const auto& [item, award] : a.awards) {
    const auto it = b.awards.find(item);
    if (it == b.awards.end() || it->second.vendor_id != award.vendor_id ||
        it->second.price_per_lb != award.price_per_lb) {
      return false;
    }
  }
  return true;
}

}  // namespace saalab::testing
