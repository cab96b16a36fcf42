#include "saalab/allocation.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>

#include "saalab/errors.hpp"

namespace saalab {

namespace {

constexpr double kQtyEps = 1e-6;

struct Cand {
  int vendor = -1;  // index into Sub::vendors
  std::int64_t price_ticks = 0;
};

struct SubItem {
  std::string item_id;
  Lbs qty = 0;
  int window = -1;
  std::vector<Cand> cands;  // sorted by (price, vendor_id)
};

struct SubVendor {
  std::string id;
  bool small = false;
  bool sdvosb = false;
};

// One product's independent subproblem.
struct Sub {
  std::string product;
  double quota = 0.0;
  double sdvosb_quota = 0.0;
  Lbs total_qty = 0;
  std::vector<SubItem> items;      // sorted by item_id
  std::vector<SubVendor> vendors;  // sorted by vendor_id; only vendors bidding here
  std::vector<std::vector<Lbs>> cap;  // [vendor][window], -1 = unbounded
  int n_windows = 0;
};

// Canonical tie key: awarded (vendor, item) pairs sorted ascending; the
// lexicographically smallest sequence wins among cost ties.
using CanonKey = std::vector<std::pair<int, int>>;

CanonKey canon_key(const Sub& sub, const std::vector<int>& choice) {
  CanonKey key;
  for (std::size_t i = 0; i < choice.size(); ++i) {
    if (choice[i] >= 0) key.emplace_back(choice[i], static_cast<int>(i));
  }
  std::sort(key.begin(), key.end());
  return key;
}

struct SubSolution {
  std::vector<int> choice;
  Lbs awarded = 0;
  Lbs small = 0;
  Lbs sdvosb = 0;
  std::int64_t cost = 0;
};

struct SubOutcome {
  SubSolution best;
  Lbs q_star = 0;
  Lbs s_star = 0;
  Lbs d_star = 0;
  double target_small = 0.0;
  double target_sdvosb = 0.0;
};

class SubSolver {
 public:
  explicit SubSolver(const Sub& sub, std::int64_t node_budget)
      : sub_(sub), node_budget_(node_budget) {
    const int n = static_cast<int>(sub.items.size());
    choice_.assign(n, -1);
    used_.assign(sub.vendors.size(), std::vector<Lbs>(sub.n_windows, 0));
    suffix_award_.assign(n + 1, 0);
    suffix_small_.assign(n + 1, 0);
    suffix_sdv_.assign(n + 1, 0);
    suffix_mincost_.assign(n + 1, 0);
    for (int i = n - 1; i >= 0; --i) {
      const auto& it = sub.items[i];
      suffix_award_[i] = suffix_award_[i + 1];
      suffix_small_[i] = suffix_small_[i + 1];
      suffix_sdv_[i] = suffix_sdv_[i + 1];
      suffix_mincost_[i] = suffix_mincost_[i + 1];
      if (!it.cands.empty()) {
        suffix_award_[i] += it.qty;
        suffix_mincost_[i] += it.cands.front().price_ticks * it.qty;
        bool any_small = false, any_sdv = false;
        for (const auto& c : it.cands) {
          any_small |= sub.vendors[c.vendor].small;
          any_sdv |= sub.vendors[c.vendor].sdvosb;
        }
        if (any_small) suffix_small_[i] += it.qty;
        if (any_sdv) suffix_sdv_[i] += it.qty;
      }
    }
  }

  SubOutcome run() {
    SubOutcome out;

    phase_ = Phase::MaxAward;
    best_val_ = -1;
    dfs(0);
    q_star_ = best_val_;
    out.q_star = q_star_;

    phase_ = Phase::MaxSmall;
    best_val_ = -1;
    dfs(0);
    out.s_star = best_val_;
    target_small_ = std::min(sub_.quota, static_cast<double>(out.s_star));
    out.target_small = target_small_;

    if (sub_.sdvosb_quota > kQtyEps) {
      phase_ = Phase::MaxSdvosb;
      best_val_ = -1;
      dfs(0);
      out.d_star = best_val_;
      target_sdv_ = std::min(sub_.sdvosb_quota, static_cast<double>(out.d_star));
    } else {
      out.d_star = 0;
      target_sdv_ = 0.0;
    }
    out.target_sdvosb = target_sdv_;

    phase_ = Phase::MinCost;
    best_cost_ = std::numeric_limits<std::int64_t>::max();
    have_best_ = false;
    dfs(0);
    out.best = best_sol_;
    return out;
  }

 private:
  enum class Phase { MaxAward, MaxSmall, MaxSdvosb, MinCost };

  void spend_node() {
    if (--node_budget_ < 0) {
      throw SolverError(
          "allocation instance too large for the exact solver on product '" + sub_.product +
          "' (node budget exhausted; supported scale is roughly <=25 items and <=20 "
          "vendors per product)");
    }
  }

  bool feasible_suffix(int idx) const {
    // optimistic completion checks against phase constraints fixed so far
    if (cur_award_ + suffix_award_[idx] < q_star_) return false;
    if (phase_ >= Phase::MaxSdvosb &&
        static_cast<double>(cur_small_ + suffix_small_[idx]) + kQtyEps < target_small_) {
      return false;
    }
    if (phase_ == Phase::MinCost &&
        static_cast<double>(cur_sdv_ + suffix_sdv_[idx]) + kQtyEps < target_sdv_) {
      return false;
    }
    return true;
  }

  void dfs(int idx) {
    spend_node();
    const int n = static_cast<int>(sub_.items.size());

    switch (phase_) {
      case Phase::MaxAward:
        if (cur_award_ + suffix_award_[idx] <= best_val_) return;
        break;
      case Phase::MaxSmall:
        if (cur_award_ + suffix_award_[idx] < q_star_) return;
        if (cur_small_ + suffix_small_[idx] <= best_val_) return;
        break;
      case Phase::MaxSdvosb:
        if (!feasible_suffix(idx)) return;
        if (cur_sdv_ + suffix_sdv_[idx] <= best_val_) return;
        break;
      case Phase::MinCost: {
        if (!feasible_suffix(idx)) return;
        // cost bound is tight when the phase-1 optimum forces every awardable
        // item to be awarded, which is the common case
        const std::int64_t bound =
            cur_cost_ + (q_star_ == suffix_award_[0] ? suffix_mincost_[idx] : 0);
        if (have_best_ && bound > best_cost_) return;
        break;
      }
    }

    if (idx == n) {
      at_leaf();
      return;
    }

    const auto& it = sub_.items[idx];
    for (const auto& c : it.cands) {
      auto& used = used_[c.vendor][it.window];
      const Lbs cap = sub_.cap[c.vendor][it.window];
      if (cap >= 0 && used + it.qty > cap) continue;
      const auto& v = sub_.vendors[c.vendor];
      used += it.qty;
      cur_award_ += it.qty;
      if (v.small) cur_small_ += it.qty;
      if (v.sdvosb) cur_sdv_ += it.qty;
      cur_cost_ += c.price_ticks * it.qty;
      choice_[idx] = c.vendor;

      dfs(idx + 1);

      choice_[idx] = -1;
      cur_cost_ -= c.price_ticks * it.qty;
      if (v.sdvosb) cur_sdv_ -= it.qty;
      if (v.small) cur_small_ -= it.qty;
      cur_award_ -= it.qty;
      used -= it.qty;
    }
    dfs(idx + 1);  // leave unawarded
  }

  void at_leaf() {
    switch (phase_) {
      case Phase::MaxAward:
        best_val_ = std::max(best_val_, cur_award_);
        return;
      case Phase::MaxSmall:
        if (cur_award_ == q_star_) best_val_ = std::max(best_val_, cur_small_);
        return;
      case Phase::MaxSdvosb:
        if (cur_award_ == q_star_ &&
            static_cast<double>(cur_small_) + kQtyEps >= target_small_) {
          best_val_ = std::max(best_val_, cur_sdv_);
        }
        return;
      case Phase::MinCost:
        break;
    }
    if (cur_award_ != q_star_) return;
    if (static_cast<double>(cur_small_) + kQtyEps < target_small_) return;
    if (static_cast<double>(cur_sdv_) + kQtyEps < target_sdv_) return;
    if (!have_best_ || cur_cost_ < best_cost_ ||
        (cur_cost_ == best_cost_ && canon_key(sub_, choice_) < best_canon_)) {
      have_best_ = true;
      best_cost_ = cur_cost_;
      best_canon_ = canon_key(sub_, choice_);
      best_sol_ = SubSolution{choice_, cur_award_, cur_small_, cur_sdv_, cur_cost_};
    }
  }

  const Sub& sub_;
  std::int64_t node_budget_;
  Phase phase_ = Phase::MaxAward;

  std::vector<int> choice_;
  std::vector<std::vector<Lbs>> used_;
  Lbs cur_award_ = 0, cur_small_ = 0, cur_sdv_ = 0;
  std::int64_t cur_cost_ = 0;

  std::vector<Lbs> suffix_award_, suffix_small_, suffix_sdv_;
  std::vector<std::int64_t> suffix_mincost_;

  Lbs q_star_ = 0;
  double target_small_ = 0.0, target_sdv_ = 0.0;
  Lbs best_val_ = -1;
  std::int64_t best_cost_ = 0;
  bool have_best_ = false;
  CanonKey best_canon_;
  SubSolution best_sol_;
};

// Exhaustive enumeration with the identical lexicographic key:
// (awarded, min(quota, small), min(sdvosb_quota, sdvosb), -cost, canon).
struct BruteState {
  const Sub& sub;
  std::vector<int> choice;
  std::vector<std::vector<Lbs>> used;
  Lbs awarded = 0, small = 0, sdv = 0;
  std::int64_t cost = 0;

  bool have_best = false;
  Lbs b_awarded = 0;
  double b_k2 = 0.0, b_k3 = 0.0;
  std::int64_t b_cost = 0;
  CanonKey b_canon;
  SubSolution best;
};

void brute_dfs(BruteState& st, int idx) {
  const int n = static_cast<int>(st.sub.items.size());
  if (idx == n) {
    const double k2 = std::min(st.sub.quota, static_cast<double>(st.small));
    const double k3 = std::min(st.sub.sdvosb_quota, static_cast<double>(st.sdv));
    bool better = false;
    if (!st.have_best) {
      better = true;
    } else if (st.awarded != st.b_awarded) {
      better = st.awarded > st.b_awarded;
    } else if (std::abs(k2 - st.b_k2) > kQtyEps) {
      better = k2 > st.b_k2;
    } else if (std::abs(k3 - st.b_k3) > kQtyEps) {
      better = k3 > st.b_k3;
    } else if (st.cost != st.b_cost) {
      better = st.cost < st.b_cost;
    } else {
      better = canon_key(st.sub, st.choice) < st.b_canon;
    }
    if (better) {
      st.have_best = true;
      st.b_awarded = st.awarded;
      st.b_k2 = k2;
      st.b_k3 = k3;
      st.b_cost = st.cost;
      st.b_canon = canon_key(st.sub, st.choice);
      st.best = SubSolution{st.choice, st.awarded, st.small, st.sdv, st.cost};
    }
    return;
  }
  const auto& it = st.sub.items[idx];
  for (const auto& c : it.cands) {
    auto& used = st.used[c.vendor][it.window];
    const Lbs cap = st.sub.cap[c.vendor][it.window];
    if (cap >= 0 && used + it.qty > cap) continue;
    const auto& v = st.sub.vendors[c.vendor];
    used += it.qty;
    st.awarded += it.qty;
    if (v.small) st.small += it.qty;
    if (v.sdvosb) st.sdv += it.qty;
    st.cost += c.price_ticks * it.qty;
    st.choice[idx] = c.vendor;
    brute_dfs(st, idx + 1);
    st.choice[idx] = -1;
    st.cost -= c.price_ticks * it.qty;
    if (v.sdvosb) st.sdv -= it.qty;
    if (v.small) st.small -= it.qty;
    st.awarded -= it.qty;
    used -= it.qty;
  }
  brute_dfs(st, idx + 1);
}

void validate_problem(const AllocationProblem& problem) {
  const auto report = validate_solicitation(problem.solicitation);
  if (!report.ok()) {
    throw ValidationError("invalid solicitation: " + report.violations.front());
  }
  std::set<std::string> item_ids, vendor_ids;
  for (const auto& it : problem.solicitation.items) item_ids.insert(it.item_id);
  for (const auto& v : problem.vendors) {
    if (!vendor_ids.insert(v.vendor_id).second) {
      throw ValidationError("duplicate vendor_id: " + v.vendor_id);
    }
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& b : problem.bids) {
    if (item_ids.find(b.item_id) == item_ids.end()) {
      throw ValidationError("bid references unknown item: " + b.item_id);
    }
    if (vendor_ids.find(b.vendor_id) == vendor_ids.end()) {
      throw ValidationError("bid references unknown vendor: " + b.vendor_id);
    }
    if (b.price_per_lb.ticks() <= 0) {
      throw ValidationError("nonpositive bid price from vendor " + b.vendor_id +
                            " on item " + b.item_id);
    }
    if (!seen.insert({b.vendor_id, b.item_id}).second) {
      throw ValidationError("duplicate bid for (vendor, item): (" + b.vendor_id + ", " +
                            b.item_id + ")");
    }
  }
}

std::vector<Sub> build_subproblems(const AllocationProblem& problem) {
  validate_problem(problem);
  const auto& sol = problem.solicitation;

  std::map<std::string, const Vendor*> vendor_by_id;
  for (const auto& v : problem.vendors) vendor_by_id[v.vendor_id] = &v;

  std::set<std::string> product_codes;
  for (const auto& it : sol.items) product_codes.insert(it.product_code);

  std::vector<Sub> subs;
  for (const auto& pc : product_codes) {
    Sub sub;
    sub.product = pc;
    sub.quota = compute_setaside_quota(sol, pc);
    const SetAsidePolicy* pol = sol.policy_for(pc);
    Lbs total = 0;
    for (const auto& it : sol.items) {
      if (it.product_code == pc) total += it.quantity_lbs;
    }
    sub.total_qty = total;
    sub.sdvosb_quota = pol->sdvosb_fraction * static_cast<double>(total);

    std::map<std::pair<Date, Date>, int> window_index;
    std::map<std::string, int> item_index;
    for (const auto& it : sol.items) {
      if (it.product_code != pc) continue;
      const auto wkey = std::make_pair(it.window_start, it.window_end);
      auto [wit, inserted] = window_index.try_emplace(
          wkey, static_cast<int>(window_index.size()));
      SubItem si;
      si.item_id = it.item_id;
      si.qty = it.quantity_lbs;
      si.window = wit->second;
      sub.items.push_back(std::move(si));
    }
    std::sort(sub.items.begin(), sub.items.end(),
              [](const SubItem& a, const SubItem& b) { return a.item_id < b.item_id; });
    for (std::size_t i = 0; i < sub.items.size(); ++i) item_index[sub.items[i].item_id] = i;
    sub.n_windows = static_cast<int>(window_index.size());

    // ceiling pre-filter, then collect the vendors who actually bid here
    const auto ceil_it = problem.price_ceiling.find(pc);
    std::vector<const Bid*> bids;
    std::set<std::string> bidding_vendors;
    for (const auto& b : problem.bids) {
      const auto ii = item_index.find(b.item_id);
      if (ii == item_index.end()) continue;
      if (ceil_it != problem.price_ceiling.end() && b.price_per_lb > ceil_it->second) {
        continue;
      }
      bids.push_back(&b);
      bidding_vendors.insert(b.vendor_id);
    }
    std::map<std::string, int> vendor_pos;
    for (const auto& vid : bidding_vendors) {
      const Vendor* v = vendor_by_id.at(vid);
      vendor_pos[vid] = static_cast<int>(sub.vendors.size());
      sub.vendors.push_back(
          SubVendor{vid, v->size_class == SizeClass::Small, v->sdvosb});
    }
    for (const Bid* b : bids) {
      sub.items[item_index[b->item_id]].cands.push_back(
          Cand{vendor_pos[b->vendor_id], b->price_per_lb.ticks()});
    }
    for (auto& it : sub.items) {
      std::sort(it.cands.begin(), it.cands.end(), [&](const Cand& a, const Cand& b) {
        if (a.price_ticks != b.price_ticks) return a.price_ticks < b.price_ticks;
        return sub.vendors[a.vendor].id < sub.vendors[b.vendor].id;
      });
    }

    sub.cap.assign(sub.vendors.size(), std::vector<Lbs>(std::max(sub.n_windows, 1), -1));
    for (const auto& cc : problem.capacities) {
      if (cc.product_code != pc) continue;
      const auto vp = vendor_pos.find(cc.vendor_id);
      if (vp == vendor_pos.end()) continue;
      const auto wi = window_index.find({cc.window_start, cc.window_end});
      if (wi == window_index.end()) continue;
      Lbs& slot = sub.cap[vp->second][wi->second];
      slot = slot < 0 ? cc.max_quantity_lbs : std::min(slot, cc.max_quantity_lbs);
    }
    subs.push_back(std::move(sub));
  }
  return subs;
}

AllocationResult assemble(const AllocationProblem& problem,
                          const std::vector<Sub>& subs,
                          const std::vector<SubOutcome>& outcomes) {
  AllocationResult result;
  std::map<std::string, Price> bid_price;
  for (const auto& b : problem.bids) bid_price[b.vendor_id + "\x1f" + b.item_id] = b.price_per_lb;

  for (std::size_t s = 0; s < subs.size(); ++s) {
    const Sub& sub = subs[s];
    const SubOutcome& out = outcomes[s];
    const SubSolution& best = out.best;
    for (std::size_t i = 0; i < sub.items.size(); ++i) {
      const int v = best.choice[i];
      if (v < 0) {
        result.unawarded.push_back(sub.items[i].item_id);
      } else {
        const std::string& vid = sub.vendors[v].id;
        result.awards[sub.items[i].item_id] =
            Award{vid, bid_price.at(vid + "\x1f" + sub.items[i].item_id)};
      }
    }
    result.total_cost_ticklbs += best.cost;

    const double k2 = std::min(sub.quota, static_cast<double>(best.small));
    const double k3 = std::min(sub.sdvosb_quota, static_cast<double>(best.sdvosb));
    QuotaReport qr;
    qr.product_code = sub.product;
    qr.quota_lbs = sub.quota;
    qr.awarded_lbs = best.small;
    qr.quota_met = static_cast<double>(best.small) + kQtyEps >= sub.quota;
    qr.relaxed = sub.quota > kQtyEps && k2 + kQtyEps < sub.quota;
    result.per_product_quota.push_back(qr);

    QuotaReport sr;
    sr.product_code = sub.product;
    sr.quota_lbs = sub.sdvosb_quota;
    sr.awarded_lbs = best.sdvosb;
    sr.quota_met = static_cast<double>(best.sdvosb) + kQtyEps >= sub.sdvosb_quota;
    sr.relaxed = sub.sdvosb_quota > kQtyEps && k3 + kQtyEps < sub.sdvosb_quota;
    result.sdvosb_quota.push_back(sr);

    result.lexicographic_trace.push_back(
        PhaseTrace{sub.product, best.awarded, k2, k3, best.cost});
  }
  std::sort(result.unawarded.begin(), result.unawarded.end());
  return result;
}

}  // namespace

AllocationResult solve_allocation(const AllocationProblem& problem) {
  auto subs = build_subproblems(problem);
  std::vector<SubOutcome> outcomes;
  for (const auto& sub : subs) {
    if (sub.items.size() > 32 || sub.vendors.size() > 64) {
      throw SolverError("allocation instance too large for the exact solver on product '" +
                        sub.product + "': " + std::to_string(sub.items.size()) +
                        " items, " + std::to_string(sub.vendors.size()) +
                        " vendors (bounds: 32 items, 64 vendors per product)");
    }
    SubSolver solver(sub, 50'000'000);
    outcomes.push_back(solver.run());
  }
  return assemble(problem, subs, outcomes);
}

AllocationResult brute_force_allocation(const AllocationProblem& problem) {
  auto subs = build_subproblems(problem);
  std::vector<SubOutcome> outcomes;
  for (const auto& sub : subs) {
    if (sub.items.size() > 8 || sub.vendors.size() > 5) {
      throw SolverError("brute-force oracle bound exceeded on product '" + sub.product +
                        "': " + std::to_string(sub.items.size()) + " items, " +
                        std::to_string(sub.vendors.size()) +
                        " vendors (hard bound: 8 items, 5 vendors per product)");
    }
    BruteState st{sub,
                  std::vector<int>(sub.items.size(), -1),
                  std::vector<std::vector<Lbs>>(sub.vendors.size(),
                                                std::vector<Lbs>(std::max(sub.n_windows, 1), 0))};
    brute_dfs(st, 0);
    SubOutcome out;
    out.best = st.best;
    out.q_star = st.b_awarded;
    outcomes.push_back(std::move(out));
  }
  return assemble(problem, subs, outcomes);
}

std::vector<ProductFeasibility> check_feasibility(const AllocationProblem& problem) {
  auto subs = build_subproblems(problem);
  std::vector<ProductFeasibility> reports;
  for (const auto& sub : subs) {
    SubSolver solver(sub, 50'000'000);
    const SubOutcome out = solver.run();
    ProductFeasibility pf;
    pf.product_code = sub.product;
    pf.max_awardable_lbs = out.q_star;
    pf.max_small_lbs = out.s_star;
    pf.quota_lbs = sub.quota;
    pf.quota_attainable = static_cast<double>(out.s_star) + kQtyEps >= sub.quota;
    pf.max_sdvosb_lbs = out.d_star;
    pf.sdvosb_quota_lbs = sub.sdvosb_quota;
    pf.sdvosb_attainable = static_cast<double>(out.d_star) + kQtyEps >= sub.sdvosb_quota;
    reports.push_back(std::move(pf));
  }
  return reports;
}

}  // namespace saalab
