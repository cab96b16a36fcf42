#include "saalab/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "saalab/errors.hpp"
#include "saalab/rng.hpp"

namespace saalab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string padded_id(const char* prefix, int n, int width = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, n);
  return buf;
}

struct SimVendor {
  Vendor vendor;
  const VendorClassConfig* cls;
};

void validate_config(const SimConfig& cfg) {
  if (cfg.n_auctions <= 0) throw ValidationError("n_auctions must be positive");
  if (cfg.products.empty()) throw ValidationError("config lists no products");
  for (const auto& p : cfg.products) {
    if (p.truckload_lbs <= 0) {
      throw ValidationError("truckload_lbs must be positive for product " + p.code);
    }
    if (p.items_min < 1 || p.items_max < p.items_min) {
      throw ValidationError("bad items-per-auction range for product " + p.code);
    }
    for (double a : {p.alpha}) {
      if (a < 0.0 || a > 1.0) throw ValidationError("alpha outside [0,1] for " + p.code);
    }
    for (double a : p.alpha_schedule) {
      if (a < 0.0 || a > 1.0) throw ValidationError("alpha outside [0,1] for " + p.code);
    }
  }
  for (const auto* c : {&cfg.small_vendors, &cfg.large_vendors}) {
    if (c->participation < 0.0 || c->participation > 1.0) {
      throw ValidationError("participation probability outside [0,1]");
    }
    if (!(c->cost_hi >= c->cost_lo)) throw ValidationError("cost_hi < cost_lo");
  }
  if (cfg.strategy_mode == StrategyMode::EquilibriumModel) {
    if (cfg.small_vendors.count != 2 || cfg.large_vendors.count != 1) {
      throw ValidationError(
          "unsupported configuration: equilibrium strategies require exactly 2 small "
          "vendors and 1 large vendor per item-market");
    }
    if (cfg.small_vendors.participation != 1.0 || cfg.large_vendors.participation != 1.0) {
      throw ValidationError(
          "unsupported configuration: equilibrium strategies require participation 1.0");
    }
    if (cfg.small_vendors.capacity_trucks != 0 || cfg.large_vendors.capacity_trucks != 0) {
      throw ValidationError(
          "unsupported configuration: equilibrium strategies assume no capacity "
          "constraints");
    }
    if (cfg.small_vendors.cost_lo != cfg.large_vendors.cost_lo ||
        cfg.small_vendors.cost_hi != cfg.large_vendors.cost_hi) {
      throw ValidationError(
          "unsupported configuration: equilibrium strategies require a common cost "
          "support for small and large vendors");
    }
    if (!(cfg.small_vendors.cost_hi > cfg.small_vendors.cost_lo)) {
      throw ValidationError("equilibrium strategies require a non-degenerate cost support");
    }
  }
}

}  // namespace

double wholesale_price_at(const WholesaleConfig& w, int months_since_start) {
  const double t = static_cast<double>(months_since_start);
  return w.base * (1.0 + w.monthly_drift * t) +
         w.seasonal_amplitude * std::sin(2.0 * kPi * t / 12.0);
}

std::vector<BidRecord> simulate_campaign(const SimConfig& config) {
  validate_config(config);

  std::vector<SimVendor> vendors;
  for (int i = 0; i < config.small_vendors.count; ++i) {
    vendors.push_back({Vendor{padded_id("S", i + 1, 2), SizeClass::Small,
                              i < config.n_sdvosb_small},
                       &config.small_vendors});
  }
  for (int i = 0; i < config.large_vendors.count; ++i) {
    vendors.push_back(
        {Vendor{padded_id("L", i + 1, 2), SizeClass::Large, false}, &config.large_vendors});
  }

  // equilibrium strategies are expensive; solve once per distinct alpha
  std::map<double, EquilibriumSolution> eq_cache;
  EquilibriumModel eq_model;
  if (config.strategy_mode == StrategyMode::EquilibriumModel) {
    eq_model.f_small =
        ValueDistribution::uniform(config.small_vendors.cost_lo, config.small_vendors.cost_hi);
    eq_model.f_large =
        ValueDistribution::uniform(config.large_vendors.cost_lo, config.large_vendors.cost_hi);
    std::set<double> alphas;
    for (const auto& p : config.products) {
      if (p.alpha_schedule.empty()) {
        alphas.insert(p.alpha);
      } else {
        alphas.insert(p.alpha_schedule.begin(), p.alpha_schedule.end());
      }
    }
    for (double a : alphas) {
      EquilibriumModel m = eq_model;
      m.alpha = a;
      eq_cache.emplace(a, solve_equilibrium(m));
    }
  }

  static const char* kStates[] = {"IL", "TX", "CA", "GA", "NY", "OH"};
  std::vector<BidRecord> records;

  for (int a = 0; a < config.n_auctions; ++a) {
    const Date date = config.start_date.plus_days(7 * a);
    const std::string auction_id = padded_id("A", a + 1);
    const int month_idx = date.month_index() - config.start_date.month_index();
    const double wholesale = wholesale_price_at(config.wholesale, month_idx);

    Solicitation sol;
    sol.solicitation_id = padded_id("SOL", a + 1);
    sol.auction_date = date;
    AllocationProblem problem;
    std::vector<Bid> bids;
    std::vector<CapacityConstraint> caps;
    std::set<std::string> active_vendor_ids;

    struct ItemMeta {
      const ProductConfig* product;
      double alpha;
    };
    std::map<std::string, ItemMeta> item_meta;
    std::map<std::string, std::vector<std::pair<std::string, Price>>> item_bids;

    for (std::size_t ip = 0; ip < config.products.size(); ++ip) {
      const ProductConfig& prod = config.products[ip];
      const double alpha = prod.alpha_at(a);

      Rng rng_items(substream_key(config.seed, {static_cast<std::uint64_t>(a), ip, 0}));
      Rng rng_part(substream_key(config.seed, {static_cast<std::uint64_t>(a), ip, 1}));
      Rng rng_cost(substream_key(config.seed, {static_cast<std::uint64_t>(a), ip, 2}));

      const int n_items =
          static_cast<int>(rng_items.uniform_int(prod.items_min, prod.items_max));
      const Date window_start = date.plus_days(14);
      const Date window_end = date.plus_days(27);
      std::vector<std::string> item_ids;
      for (int k = 0; k < n_items; ++k) {
        Item it;
        it.item_id = auction_id + "-" + prod.code + "-" + padded_id("I", k + 1, 2);
        it.solicitation_id = sol.solicitation_id;
        it.product_code = prod.code;
        it.quantity_lbs = prod.truckload_lbs;
        it.dest_state = kStates[k % 6];
        it.dest_city = "CITY";
        it.dest_zip = "00000";
        it.window_start = window_start;
        it.window_end = window_end;
        item_ids.push_back(it.item_id);
        sol.items.push_back(std::move(it));
        item_meta[item_ids.back()] = ItemMeta{&prod, alpha};
      }
      sol.policies.push_back(SetAsidePolicy{alpha, prod.sdvosb_fraction, prod.code});

      for (const auto& sv : vendors) {
        // large vendors stay out of full set-asides (they cannot win them
        // unless the quota is relaxed)
        const bool skip_large =
            sv.vendor.size_class == SizeClass::Large && alpha >= 1.0 - 1e-12;
        const bool participates = rng_part.bernoulli(sv.cls->participation);
        const double cost = rng_cost.uniform(sv.cls->cost_lo, sv.cls->cost_hi);
        if (skip_large || !participates) continue;
        active_vendor_ids.insert(sv.vendor.vendor_id);

        double bid_price = 0.0;
        switch (config.strategy_mode) {
          case StrategyMode::MarkupRule:
            bid_price = cost * (1.0 + sv.cls->markup);
            break;
          case StrategyMode::ShadedRule:
            bid_price = cost + sv.cls->shade * (sv.cls->cost_hi - cost);
            break;
          case StrategyMode::EquilibriumModel: {
            const EquilibriumSolution& eq = eq_cache.at(alpha);
            bid_price = sv.vendor.size_class == SizeClass::Small ? eq.bid_small(cost)
                                                                 : eq.bid_large(cost);
            break;
          }
        }
        const Price price = Price::from_dollars(bid_price);
        for (const auto& iid : item_ids) {
          bids.push_back(Bid{sv.vendor.vendor_id, iid, price});
          item_bids[iid].emplace_back(sv.vendor.vendor_id, price);
        }
        if (sv.cls->capacity_trucks > 0) {
          caps.push_back(CapacityConstraint{
              sv.vendor.vendor_id, prod.code, window_start, window_end,
              static_cast<Lbs>(sv.cls->capacity_trucks) * prod.truckload_lbs});
        }
      }
    }

    problem.solicitation = sol;
    problem.bids = bids;
    problem.capacities = caps;
    for (const auto& sv : vendors) {
      if (active_vendor_ids.count(sv.vendor.vendor_id) != 0) {
        problem.vendors.push_back(sv.vendor);
      }
    }
    const AllocationResult alloc = solve_allocation(problem);

    std::map<std::string, double> demand_by_product;
    for (const auto& pol : sol.policies) {
      demand_by_product[pol.applies_to] = demand_level(sol, pol.applies_to);
    }
    std::map<std::string, const Vendor*> vendor_by_id;
    for (const auto& sv : vendors) vendor_by_id[sv.vendor.vendor_id] = &sv.vendor;

    for (const auto& it : sol.items) {
      const auto& meta = item_meta.at(it.item_id);
      const auto bids_it = item_bids.find(it.item_id);
      if (bids_it == item_bids.end()) continue;
      const int n_bidders = static_cast<int>(bids_it->second.size());
      const auto award_it = alloc.awards.find(it.item_id);
      for (const auto& [vid, price] : bids_it->second) {
        BidRecord r;
        r.auction_id = auction_id;
        r.date = date;
        r.solicitation_id = sol.solicitation_id;
        r.product_code = it.product_code;
        r.package_class = meta.product->package_class;
        r.item_id = it.item_id;
        r.quantity_lbs = it.quantity_lbs;
        r.destination_state = it.dest_state;
        r.window_start = it.window_start;
        r.window_end = it.window_end;
        r.vendor_id = vid;
        r.vendor_type = vendor_by_id.at(vid)->size_class;
        r.sdvosb = meta.product->sdvosb_fraction > 0.0;
        r.price_per_lb = price;
        r.won = award_it != alloc.awards.end() && award_it->second.vendor_id == vid;
        r.set_aside = meta.alpha;
        r.demand_mlbs = demand_by_product.at(it.product_code);
        r.n_bidders_item = n_bidders;
        r.wholesale_price = wholesale;
        r.usda_ref_price = meta.product->usda_ref_price;
        records.push_back(std::move(r));
      }
    }
  }

  std::sort(records.begin(), records.end(), [](const BidRecord& a, const BidRecord& b) {
    return std::tie(a.auction_id, a.item_id, a.vendor_id) <
           std::tie(b.auction_id, b.item_id, b.vendor_id);
  });
  return records;
}

const std::vector<std::string> kSummaryRowLabels = {
    "number of auctions",
    "number of items",
    "number of bids",
    "Small bidder pool",
    "Large bidder pool",
    "Average number of small bidders",
    "Average number of large bidders",
    "Mean Offer price",
    "Mean Winning price",
    "Mean Item Quantity",
    "Exist in all years",
};

namespace {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  // population SD so a single observation reports 0
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

}  // namespace

std::vector<GroupSummary> summary_statistics(std::span<const BidRecord> records) {
  if (records.empty()) throw ValidationError("summary_statistics: no records");

  std::set<int> all_years;
  for (const auto& r : records) all_years.insert(r.date.year);

  std::map<double, std::vector<const BidRecord*>> groups;
  for (const auto& r : records) groups[r.set_aside].push_back(&r);

  std::vector<GroupSummary> out;
  for (const auto& [sa, rows] : groups) {
    GroupSummary g;
    g.set_aside = sa;
    g.n_bids = static_cast<int>(rows.size());

    std::set<std::string> auctions, small_pool, large_pool;
    std::map<std::string, std::pair<int, int>> item_counts;  // item -> (n_small, n_large)
    std::map<std::string, Lbs> item_qty;
    std::set<int> years;
    std::vector<double> offers, wins;
    for (const auto* r : rows) {
      auctions.insert(r->auction_id);
      years.insert(r->date.year);
      auto& counts = item_counts[r->item_id];
      if (r->vendor_type == SizeClass::Small) {
        small_pool.insert(r->vendor_id);
        ++counts.first;
      } else {
        large_pool.insert(r->vendor_id);
        ++counts.second;
      }
      item_qty[r->item_id] = r->quantity_lbs;
      offers.push_back(r->price_per_lb.dollars());
      if (r->won) wins.push_back(r->price_per_lb.dollars());
    }
    g.n_auctions = static_cast<int>(auctions.size());
    g.n_items = static_cast<int>(item_counts.size());
    g.small_pool = static_cast<int>(small_pool.size());
    g.large_pool = static_cast<int>(large_pool.size());

    std::vector<double> n_small, n_large, qtys;
    for (const auto& [iid, counts] : item_counts) {
      n_small.push_back(counts.first);
      n_large.push_back(counts.second);
      qtys.push_back(static_cast<double>(item_qty[iid]));
    }
    const MeanSd ms = mean_sd(n_small), ml = mean_sd(n_large), mo = mean_sd(offers),
                 mw = mean_sd(wins), mq = mean_sd(qtys);
    g.avg_small = ms.mean;
    g.sd_small = ms.sd;
    g.avg_large = ml.mean;
    g.sd_large = ml.sd;
    g.mean_offer = mo.mean;
    g.sd_offer = mo.sd;
    g.mean_win = mw.mean;
    g.sd_win = mw.sd;
    g.mean_qty = mq.mean;
    g.sd_qty = mq.sd;
    g.exist_all_years = years == all_years;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<TimelinePoint> bidder_pool_timeline(std::span<const BidRecord> records) {
  if (records.empty()) throw ValidationError("bidder_pool_timeline: no records");
  std::map<std::string, std::pair<Date, Date>> span_by_vendor;
  std::map<std::string, SizeClass> type_by_vendor;
  std::set<Date> dates;
  for (const auto& r : records) {
    dates.insert(r.date);
    type_by_vendor[r.vendor_id] = r.vendor_type;
    auto it = span_by_vendor.find(r.vendor_id);
    if (it == span_by_vendor.end()) {
      span_by_vendor.emplace(r.vendor_id, std::make_pair(r.date, r.date));
    } else {
      it->second.first = std::min(it->second.first, r.date);
      it->second.second = std::max(it->second.second, r.date);
    }
  }
  std::vector<TimelinePoint> out;
  for (const Date& d : dates) {
    TimelinePoint pt;
    pt.date = d;
    for (const auto& [vid, span] : span_by_vendor) {
      if (span.first <= d && d <= span.second) {
        if (type_by_vendor[vid] == SizeClass::Small) {
          ++pt.small_active;
        } else {
          ++pt.large_active;
        }
      }
    }
    out.push_back(pt);
  }
  return out;
}

WinShareReport win_share_report(std::span<const BidRecord> records) {
  if (records.empty()) throw ValidationError("win_share_report: no records");

  struct CellAcc {
    double set_aside = 0.0;
    std::map<std::string, Lbs> item_qty;
    std::map<std::string, SizeClass> item_winner;  // only for awarded items
  };
  std::map<std::pair<std::string, std::string>, CellAcc> cells;
  for (const auto& r : records) {
    auto& cell = cells[{r.auction_id, r.product_code}];
    cell.set_aside = r.set_aside;
    cell.item_qty[r.item_id] = r.quantity_lbs;
    if (r.won) cell.item_winner[r.item_id] = r.vendor_type;
  }

  WinShareReport report;
  std::map<double, std::array<double, 3>> agg;  // set_aside -> {small, large, total}
  for (const auto& [key, cell] : cells) {
    Lbs total = 0, small = 0, large = 0;
    for (const auto& [iid, qty] : cell.item_qty) {
      total += qty;
      const auto w = cell.item_winner.find(iid);
      if (w != cell.item_winner.end()) {
        (w->second == SizeClass::Small ? small : large) += qty;
      }
    }
    WinShareCell c;
    c.auction_id = key.first;
    c.product_code = key.second;
    c.set_aside = cell.set_aside;
    c.total_lbs = total;
    c.small_share = static_cast<double>(small) / static_cast<double>(total);
    c.large_share = static_cast<double>(large) / static_cast<double>(total);
    c.unawarded_share = 1.0 - c.small_share - c.large_share;
    report.cells.push_back(std::move(c));
    auto& acc = agg[cell.set_aside];
    acc[0] += static_cast<double>(small);
    acc[1] += static_cast<double>(large);
    acc[2] += static_cast<double>(total);
  }
  for (const auto& [sa, acc] : agg) {
    WinShareAggregate w;
    w.set_aside = sa;
    w.small_share = acc[0] / acc[2];
    w.large_share = acc[1] / acc[2];
    w.unawarded_share = 1.0 - w.small_share - w.large_share;
    report.by_set_aside.push_back(w);
  }
  return report;
}

}  // namespace saalab
