#include <benchmark/benchmark.h>

#include "saalab/allocation.hpp"
#include "saalab/econometrics.hpp"
#include "saalab/equilibrium.hpp"
#include "saalab/rng.hpp"
#include "saalab/simulation.hpp"

namespace {

using namespace saalab;

AllocationProblem make_problem(int items, int vendors, std::uint64_t seed) {
  Rng rng(seed);
  AllocationProblem p;
  p.solicitation.solicitation_id = "BENCH";
  p.solicitation.auction_date = {2015, 6, 1};
  p.solicitation.policies.push_back({0.5, 0.25, "BEEF"});
  for (int i = 0; i < items; ++i) {
    Item it;
    it.item_id = "I" + std::to_string(i);
    it.solicitation_id = "BENCH";
    it.product_code = "BEEF";
    it.quantity_lbs = 40000;
    it.window_start = {2015, 7, 1};
    it.window_end = {2015, 7, 31};
    p.solicitation.items.push_back(std::move(it));
  }
  for (int v = 0; v < vendors; ++v) {
    Vendor ven;
    ven.vendor_id = "V" + std::to_string(v);
    ven.size_class = v % 2 == 0 ? SizeClass::Small : SizeClass::Large;
    ven.sdvosb = v % 4 == 0;
    p.vendors.push_back(ven);
    for (int i = 0; i < items; ++i) {
      p.bids.push_back({"V" + std::to_string(v), "I" + std::to_string(i),
                        Price::from_dollars(rng.uniform(1.5, 3.0))});
    }
    CapacityConstraint cap;
    cap.vendor_id = "V" + std::to_string(v);
    cap.product_code = "BEEF";
    cap.window_start = {2015, 7, 1};
    cap.window_end = {2015, 7, 31};
    cap.max_quantity_lbs = 40000 * rng.uniform_int(1, items);
    p.capacities.push_back(cap);
  }
  return p;
}

void BM_Allocation(benchmark::State& state) {
  const auto p = make_problem(static_cast<int>(state.range(0)),
                              static_cast<int>(state.range(1)), 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_allocation(p));
  }
}
BENCHMARK(BM_Allocation)->Args({6, 4})->Args({12, 8})->Args({20, 12});

void BM_Equilibrium(benchmark::State& state) {
  EquilibriumModel model;
  model.alpha = 0.5;
  model.f_small = ValueDistribution::uniform(1.0, 3.0);
  model.f_large = model.f_small;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_equilibrium(model, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_Equilibrium)->Arg(501)->Arg(2001)->Unit(benchmark::kMillisecond);

void BM_WlsFit(benchmark::State& state) {
  SimConfig cfg;
  cfg.seed = 7;
  cfg.n_auctions = static_cast<int>(state.range(0));
  ProductConfig prod;
  prod.code = "BEEF-COARSE";
  prod.package_class = "COARSE";
  prod.alpha_schedule = {0.0, 0.5};
  prod.items_min = 2;
  prod.items_max = 4;
  cfg.products = {prod};
  cfg.small_vendors = {4, 1.0, 3.0, 0.8, 0.1, 0.3, 0};
  cfg.large_vendors = {2, 1.0, 3.0, 0.8, 0.1, 0.3, 0};
  cfg.wholesale.seasonal_amplitude = 0.2;
  const auto records = simulate_campaign(cfg);
  const auto spec = RegressionSpec::log_price(Response::LogOffer, Weighting::Quantity);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_regression(records, spec));
  }
}
BENCHMARK(BM_WlsFit)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
