#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "saalab/csv.hpp"
#include "saalab/errors.hpp"
#include "saalab/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace saalab;

namespace {

struct GlobalOpts {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir = "out";
  bool lax = false;
  std::string format = "csv";
};

Date require_date(const json& j, const char* key) {
  const auto d = Date::parse(j.at(key).get<std::string>());
  if (!d) throw ValidationError(std::string(key) + ": bad date");
  return *d;
}

Price require_price(const json& j, const char* key) {
  if (j.at(key).is_number()) return Price::from_dollars(j.at(key).get<double>());
  const auto p = Price::parse(j.at(key).get<std::string>());
  if (!p) throw ValidationError(std::string(key) + ": bad price");
  return *p;
}

AllocationProblem load_problem_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open problem file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("problem file is not valid JSON: ") + e.what());
  }

  AllocationProblem prob;
  const json& s = j.at("solicitation");
  prob.solicitation.solicitation_id = s.at("id").get<std::string>();
  prob.solicitation.auction_date = require_date(s, "date");
  for (const auto& it : s.at("items")) {
    Item item;
    item.item_id = it.at("item_id").get<std::string>();
    item.solicitation_id = prob.solicitation.solicitation_id;
    item.product_code = it.at("product_code").get<std::string>();
    item.quantity_lbs = it.at("quantity_lbs").get<Lbs>();
    item.dest_state = it.value("dest_state", std::string{});
    item.window_start = require_date(it, "window_start");
    item.window_end = require_date(it, "window_end");
    prob.solicitation.items.push_back(std::move(item));
  }
  for (const auto& p : s.at("policies")) {
    SetAsidePolicy pol;
    pol.applies_to = p.at("product_code").get<std::string>();
    pol.alpha = p.at("alpha").get<double>();
    pol.sdvosb_fraction = p.value("sdvosb_fraction", 0.0);
    prob.solicitation.policies.push_back(std::move(pol));
  }
  for (const auto& v : j.at("vendors")) {
    Vendor vendor;
    vendor.vendor_id = v.at("vendor_id").get<std::string>();
    const auto sc = parse_size_class(v.at("size_class").get<std::string>());
    if (!sc) throw ValidationError("bad size_class for vendor " + vendor.vendor_id);
    vendor.size_class = *sc;
    vendor.sdvosb = v.value("sdvosb", false);
    prob.vendors.push_back(std::move(vendor));
  }
  for (const auto& b : j.at("bids")) {
    Bid bid;
    bid.vendor_id = b.at("vendor_id").get<std::string>();
    bid.item_id = b.at("item_id").get<std::string>();
    bid.price_per_lb = require_price(b, "price_per_lb");
    prob.bids.push_back(std::move(bid));
  }
  if (j.contains("capacities")) {
    for (const auto& c : j.at("capacities")) {
      CapacityConstraint cap;
      cap.vendor_id = c.at("vendor_id").get<std::string>();
      cap.product_code = c.at("product_code").get<std::string>();
      cap.window_start = require_date(c, "window_start");
      cap.window_end = require_date(c, "window_end");
      cap.max_quantity_lbs = c.at("max_quantity_lbs").get<Lbs>();
      prob.capacities.push_back(std::move(cap));
    }
  }
  if (j.contains("price_ceiling")) {
    for (const auto& [code, price] : j.at("price_ceiling").items()) {
      json wrap;
      wrap["p"] = price;
      prob.price_ceiling[code] = require_price(wrap, "p");
    }
  }
  return prob;
}

PipelineConfig load_config_or_default(const GlobalOpts& g) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = load_pipeline_config(g.config_path);
  if (g.seed) cfg.sim.seed = *g.seed;
  cfg.out_dir = g.out_dir;
  return cfg;
}

EquilibriumModel model_from(const PipelineConfig& cfg, double alpha) {
  EquilibriumModel m;
  m.alpha = alpha;
  m.f_small = ValueDistribution::uniform(cfg.equilibrium.cost_lo, cfg.equilibrium.cost_hi);
  m.f_large = m.f_small;
  return m;
}

int run(int argc, char** argv) {
  CLI::App app{"procurement set-aside auction laboratory"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "override the simulation seed");
  app.add_option("--config", g.config_path, "pipeline config JSON");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_flag("--lax,!--strict", g.lax, "tolerate unknown CSV columns and bad rows");
  app.add_option("--format", g.format, "csv or text")
      ->check(CLI::IsMember({"csv", "text"}));

  // equilibrium solve|verify
  auto* eq = app.add_subcommand("equilibrium", "solve or verify the bidding equilibrium");
  eq->require_subcommand(1);
  double alpha = 0.5;
  int grid_size = 2001;
  double gap_tol = 0.005;
  auto* eq_solve = eq->add_subcommand("solve", "solve and write the inverse bid grid");
  eq_solve->add_option("--alpha", alpha, "set-aside share");
  eq_solve->add_option("--grid-size", grid_size, "price grid points");
  auto* eq_verify = eq->add_subcommand("verify", "solve and check best-response gaps");
  eq_verify->add_option("--alpha", alpha, "set-aside share");
  eq_verify->add_option("--grid-size", grid_size, "price grid points");
  eq_verify->add_option("--gap-tol", gap_tol, "max relative best-response gap");

  // allocate
  auto* alloc = app.add_subcommand("allocate", "winner determination for one solicitation");
  std::string problem_path;
  alloc->add_option("--problem", problem_path, "problem JSON file")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo campaign");

  // regress
  auto* reg = app.add_subcommand("regress", "fit a regression on a bids CSV");
  std::string bids_path, response = "log_offer", weighting = "quantity", hc = "HC1";
  reg->add_option("--bids", bids_path, "bids CSV")->required();
  reg->add_option("--response", response, "counts, log_offer, or log_win")
      ->check(CLI::IsMember({"counts", "log_offer", "log_win"}));
  reg->add_option("--weighting", weighting, "quantity, product_equalized, or unit")
      ->check(CLI::IsMember({"quantity", "product_equalized", "unit"}));
  reg->add_option("--hc", hc, "HC0 or HC1")->check(CLI::IsMember({"HC0", "HC1"}));

  // report
  auto* rep = app.add_subcommand("report", "summary tables and plot data from a bids CSV");
  std::string report_bids;
  rep->add_option("--bids", report_bids, "bids CSV")->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "simulate, report, and regress end to end");

  CLI11_PARSE(app, argc, argv);

  const fs::path out_dir = g.out_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());

  if (eq_solve->parsed() || eq_verify->parsed()) {
    const PipelineConfig cfg = load_config_or_default(g);
    const EquilibriumModel model = model_from(cfg, alpha);
    const EquilibriumSolution sol = solve_equilibrium(model, grid_size);
    if (eq_solve->parsed()) {
      const fs::path out = out_dir / "equilibrium.csv";
      write_equilibrium_csv(out, sol);
      if (g.format == "text") {
        std::cout << equilibrium_diagnostics_text(sol);
      }
      std::cout << "wrote " << out.string() << "\n";
      return 0;
    }
    double worst = 0.0;
    for (int q = 1; q <= 20; ++q) {
      const double u = q / 21.0;
      worst = std::max(worst, best_response_gap(model, sol, model.f_small.quantile(u),
                                                SizeClass::Small));
      if (alpha < 1.0 - 1e-12) {
        worst = std::max(worst, best_response_gap(model, sol, model.f_large.quantile(u),
                                                  SizeClass::Large));
      }
    }
    std::printf("max best-response gap: %.3e (tolerance %.3e)\n", worst, gap_tol);
    if (worst > gap_tol) throw SolverError("best-response gap exceeds tolerance");
    return 0;
  }

  if (alloc->parsed()) {
    const AllocationProblem problem = load_problem_json(problem_path);
    const AllocationResult result = solve_allocation(problem);
    write_awards_csv(out_dir / "awards.csv", problem, result);
    write_quota_report_csv(out_dir / "quota_report.csv", result);
    std::printf("awarded %zu of %zu items, total cost %.4f\n", result.awards.size(),
                problem.solicitation.items.size(), result.total_cost_dollars());
    return 0;
  }

  if (sim->parsed()) {
    const PipelineConfig cfg = load_config_or_default(g);
    const std::vector<BidRecord> records = simulate_campaign(cfg.sim);
    const fs::path out = out_dir / "bids.csv";
    write_bids_csv(out, records);
    std::printf("wrote %zu bid records to %s\n", records.size(), out.string().c_str());
    return 0;
  }

  if (reg->parsed()) {
    LoadReport load_rep;
    const std::vector<BidRecord> records = load_bids_csv(bids_path, !g.lax, &load_rep);
    for (const auto& e : load_rep.errors) {
      std::fprintf(stderr, "%s:%d: %s\n", bids_path.c_str(), e.line, e.message.c_str());
    }
    Response r = response == "counts"    ? Response::NBidders
                 : response == "log_win" ? Response::LogWin
                                         : Response::LogOffer;
    Weighting w = weighting == "product_equalized" ? Weighting::ProductEqualized
                  : weighting == "unit"            ? Weighting::Unit
                                                   : Weighting::Quantity;
    const RegressionSpec spec =
        r == Response::NBidders ? RegressionSpec::counts(w) : RegressionSpec::log_price(r, w);
    const FitResult f =
        fit_regression(records, spec, hc == "HC0" ? HcFlavor::HC0 : HcFlavor::HC1);
    const fs::path out = out_dir / "fit.csv";
    write_fit_csv(out, f);
    if (g.format == "text") {
      const FitResult fits[] = {f};
      std::cout << fit_table_text(fits);
    }
    std::cout << "wrote " << out.string() << "\n";
    return 0;
  }

  if (rep->parsed()) {
    LoadReport load_rep;
    const std::vector<BidRecord> records = load_bids_csv(report_bids, !g.lax, &load_rep);
    for (const auto& e : load_rep.errors) {
      std::fprintf(stderr, "%s:%d: %s\n", report_bids.c_str(), e.line, e.message.c_str());
    }
    const auto groups = summary_statistics(records);
    write_summary_csv(out_dir / "summary.csv", groups);
    write_timeline_csv(out_dir / "timeline.csv", bidder_pool_timeline(records));
    write_win_share_csv(out_dir / "win_share.csv", win_share_report(records));
    if (g.format == "text") std::cout << summary_table_text(groups);
    std::cout << "wrote summary.csv, timeline.csv, win_share.csv to " << out_dir.string()
              << "\n";
    return 0;
  }

  if (pipe->parsed()) {
    const PipelineConfig cfg = load_config_or_default(g);
    const PipelineResult result = run_pipeline(cfg);
    std::printf("wrote %zu artifacts; manifest %s\n", result.artifacts.size(),
                result.manifest_path.string().c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
