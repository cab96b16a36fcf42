#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "saalab/csv.hpp"
#include "saalab/errors.hpp"
#include "saalab/pipeline.hpp"
#include "saalab/rng.hpp"

using namespace saalab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("saalab-test-" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const char* kGoldenCsv =
    "auction_id,date,solicitation_id,product_code,package_class,item_id,quantity_lbs,"
    "destination_state,window_start,window_end,vendor_id,vendor_type,sdvosb,price_per_lb,"
    "won,set_aside,demand_mlbs,n_bidders_item,wholesale_price,usda_ref_price\n"
    "A1,2015-01-07,SOL1,BEEF-CTN,CTN,I1,40000,TX,2015-01-21,2015-02-03,S01,small,1,"
    "2.1050,1,0.5,0.16,3,2.5,2.6\n"
    "A1,2015-01-07,SOL1,BEEF-CTN,CTN,I1,40000,TX,2015-01-21,2015-02-03,L01,large,0,"
    "1.9975,0,0.5,0.16,3,2.5,2.6\n";

std::vector<BidRecord> sample_records(int n) {
  Rng rng(7);
  std::vector<BidRecord> records;
  for (int i = 0; i < n; ++i) {
    BidRecord r;
    r.auction_id = "A" + std::to_string(i / 4);
    r.date = Date{2015, 1, 7}.plus_days(7 * (i / 4));
    r.solicitation_id = "SOL" + std::to_string(i / 4);
    r.product_code = i % 2 == 0 ? "BEEF-CTN" : "PORK-PKG";
    r.package_class = i % 2 == 0 ? "CTN" : "PKG";
    r.item_id = "I" + std::to_string(i);
    r.quantity_lbs = rng.uniform_int(10000, 90000);
    r.destination_state = "TX";
    r.window_start = r.date.plus_days(14);
    r.window_end = r.date.plus_days(27);
    r.vendor_id = i % 3 == 0 ? "L01" : "S0" + std::to_string(i % 3);
    r.vendor_type = i % 3 == 0 ? SizeClass::Large : SizeClass::Small;
    r.sdvosb = i % 2 == 1;
    r.price_per_lb = Price::from_ticks(rng.uniform_int(15000, 35000));
    r.won = i % 3 == 1;
    r.set_aside = i % 2 == 0 ? 0.5 : 0.0;
    r.demand_mlbs = rng.uniform(0.04, 2.0);
    r.n_bidders_item = static_cast<int>(rng.uniform_int(1, 9));
    r.wholesale_price = rng.uniform(2.0, 3.0);
    r.usda_ref_price = rng.uniform(2.0, 3.0);
    records.push_back(r);
  }
  return records;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("golden two-row fixture loads field-exact") {
  TempDir tmp;
  const fs::path p = tmp.path / "bids.csv";
  write_text(p, kGoldenCsv);
  const auto records = load_bids_csv(p, true);
  REQUIRE(records.size() == 2);
  CHECK(records[0].auction_id == "A1");
  CHECK(records[0].date == Date{2015, 1, 7});
  CHECK(records[0].product_code == "BEEF-CTN");
  CHECK(records[0].quantity_lbs == 40000);
  CHECK(records[0].window_end == Date{2015, 2, 3});
  CHECK(records[0].vendor_type == SizeClass::Small);
  CHECK(records[0].sdvosb);
  CHECK(records[0].price_per_lb.ticks() == 21050);
  CHECK(records[0].won);
  CHECK(records[0].set_aside == 0.5);
  CHECK(records[0].demand_mlbs == 0.16);
  CHECK(records[0].n_bidders_item == 3);
  CHECK(records[1].vendor_type == SizeClass::Large);
  CHECK(!records[1].won);
  CHECK(records[1].price_per_lb.str() == "1.9975");
}

TEST_CASE("write then load is the identity") {
  TempDir tmp;
  const auto records = sample_records(60);
  const fs::path p = tmp.path / "bids.csv";
  write_bids_csv(p, records);
  const auto loaded = load_bids_csv(p, true);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].auction_id == records[i].auction_id);
    CHECK(loaded[i].date == records[i].date);
    CHECK(loaded[i].item_id == records[i].item_id);
    CHECK(loaded[i].quantity_lbs == records[i].quantity_lbs);
    CHECK(loaded[i].vendor_id == records[i].vendor_id);
    CHECK(loaded[i].vendor_type == records[i].vendor_type);
    CHECK(loaded[i].sdvosb == records[i].sdvosb);
    CHECK(loaded[i].price_per_lb == records[i].price_per_lb);
    CHECK(loaded[i].won == records[i].won);
    CHECK(loaded[i].set_aside == records[i].set_aside);
    CHECK(loaded[i].demand_mlbs == records[i].demand_mlbs);
    CHECK(loaded[i].n_bidders_item == records[i].n_bidders_item);
    CHECK(loaded[i].wholesale_price == records[i].wholesale_price);
    CHECK(loaded[i].usda_ref_price == records[i].usda_ref_price);
  }
}

TEST_CASE("malformed rows are reported with line numbers") {
  TempDir tmp;
  const fs::path p = tmp.path / "bids.csv";
  std::string text = kGoldenCsv;
  text +=
      "A1,2015-01-07,SOL1,BEEF-CTN,CTN,I2,40000,TX,2015-01-21,2015-02-03,S01,small,0,"
      "-2.00,0,0.5,0.16,3,2.5,2.6\n";
  write_text(p, text);

  SUBCASE("lax mode collects the error and keeps good rows") {
    LoadReport rep;
    const auto records = load_bids_csv(p, false, &rep);
    CHECK(records.size() == 2);
    REQUIRE(rep.errors.size() == 1);
    CHECK(rep.errors[0].line == 4);
    CHECK(rep.errors[0].message.find("price") != std::string::npos);
  }
  SUBCASE("strict mode aborts naming the line") {
    CHECK_THROWS_WITH_AS(load_bids_csv(p, true), doctest::Contains(":4:"),
                         ValidationError);
  }
}

TEST_CASE("unknown columns: rejected under strict, ignored under lax") {
  TempDir tmp;
  const fs::path p = tmp.path / "bids.csv";
  std::istringstream in(kGoldenCsv);
  std::string text, line;
  bool header = true;
  while (std::getline(in, line)) {
    text += line + (header ? ",mystery" : ",42") + "\n";
    header = false;
  }
  write_text(p, text);
  CHECK_THROWS_WITH_AS(load_bids_csv(p, true), doctest::Contains("mystery"),
                       ValidationError);
  CHECK(load_bids_csv(p, false).size() == 2);
}

TEST_CASE("missing required column is named") {
  TempDir tmp;
  const fs::path p = tmp.path / "bids.csv";
  std::string text = kGoldenCsv;
  // strip the trailing usda_ref_price column everywhere
  std::string out;
  for (std::size_t start = 0; start < text.size();) {
    auto end = text.find('\n', start);
    std::string line = text.substr(start, end - start);
    out += line.substr(0, line.rfind(','));
    out += '\n';
    start = end + 1;
  }
  write_text(p, out);
  CHECK_THROWS_WITH_AS(load_bids_csv(p, true), doctest::Contains("usda_ref_price"),
                       ValidationError);
}

TEST_CASE("auxiliary price tables join by their stated keys") {
  TempDir tmp;
  write_text(tmp.path / "wholesale.csv",
             "year,month,price_per_lb\n2015,1,2.41\n2015,2,2.52\n");
  write_text(tmp.path / "usda_prices.csv",
             "product_code,year,price_per_lb\nBEEF-CTN,2015,2.80\n");
  const auto wholesale = load_wholesale_csv(tmp.path / "wholesale.csv");
  const auto usda = load_usda_prices_csv(tmp.path / "usda_prices.csv");
  CHECK(wholesale.at({2015, 2}) == 2.52);

  std::vector<BidRecord> records = sample_records(2);
  records[0].product_code = records[1].product_code = "BEEF-CTN";
  records[0].date = {2015, 1, 7};
  records[1].date = {2015, 2, 14};
  join_price_covariates(records, wholesale, usda);
  CHECK(records[0].wholesale_price == 2.41);
  CHECK(records[1].wholesale_price == 2.52);
  CHECK(records[0].usda_ref_price == 2.80);

  records[1].date = {2016, 7, 1};
  CHECK_THROWS_AS(join_price_covariates(records, wholesale, usda), ValidationError);
}

TEST_CASE("fit report CSV has a header plus one row per term") {
  TempDir tmp;
  FitResult f;
  f.names = {"Constant", "Small", "Demand"};
  f.coefficients.resize(3);
  f.coefficients << 1.0, -0.25, 0.125;
  f.robust_se.resize(3);
  f.robust_se << 0.1, 0.02, 0.5;
  const fs::path p = tmp.path / "fit.csv";
  write_fit_csv(p, f);
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "term,coefficient,robust_se");
  CHECK(lines[2] == "Small,-0.25,0.02");
}

TEST_CASE("manifest round trip and hashing") {
  TempDir tmp;
  write_text(tmp.path / "a.csv", "hello\n");
  write_text(tmp.path / "b.csv", "world\n");
  const std::string hello = "hello\n";
  CHECK(hash_file(tmp.path / "a.csv") == fnv1a64({hello.data(), hello.size()}));

  std::vector<ManifestEntry> entries = {
      {"b.csv", hash_file(tmp.path / "b.csv"), 6},
      {"a.csv", hash_file(tmp.path / "a.csv"), 6},
  };
  write_manifest(tmp.path / "manifest.csv", entries);
  const auto loaded = load_manifest(tmp.path / "manifest.csv");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "a.csv");  // sorted
  CHECK(loaded[0].hash == entries[1].hash);
  CHECK(loaded[1].bytes == 6);
}

TEST_CASE("pipeline config parsing") {
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_WITH_AS(parse_pipeline_config(R"({"schema_version":1,"bogus":2})"),
                         doctest::Contains("bogus"), ValidationError);
    CHECK_THROWS_AS(
        parse_pipeline_config(R"({"schema_version":1,"sim":{"n_auctions":1,"oops":true}})"),
        ValidationError);
  }
  SUBCASE("schema_version is required and checked") {
    CHECK_THROWS_AS(parse_pipeline_config(R"({"out_dir":"x"})"), ValidationError);
    CHECK_THROWS_AS(parse_pipeline_config(R"({"schema_version":2})"), ValidationError);
  }
  SUBCASE("values land in the config") {
    const auto cfg = parse_pipeline_config(
        R"({"schema_version":1,"sim":{"seed":42,"n_auctions":7,
            "strategy_mode":"shaded"},"hc":"HC0","weightings":["unit"]})");
    CHECK(cfg.sim.seed == 42);
    CHECK(cfg.sim.n_auctions == 7);
    CHECK(cfg.sim.strategy_mode == StrategyMode::ShadedRule);
    CHECK(cfg.hc == HcFlavor::HC0);
    REQUIRE(cfg.weightings.size() == 1);
    CHECK(cfg.weightings[0] == Weighting::Unit);
  }
  SUBCASE("invalid JSON is a validation error") {
    CHECK_THROWS_AS(parse_pipeline_config("{nope"), ValidationError);
  }
}

namespace {

PipelineConfig small_pipeline_config(const fs::path& out_dir) {
  PipelineConfig cfg;
  cfg.out_dir = out_dir;
  cfg.sim.seed = 99;
  cfg.sim.n_auctions = 24;
  ProductConfig a;
  a.code = "BEEF-CTN";
  a.package_class = "CTN";
  a.alpha_schedule = {0.0, 0.5, 1.0};
  a.sdvosb_fraction = 0.25;
  a.items_min = 1;
  a.items_max = 3;
  ProductConfig b;
  b.code = "BEEF-PKG";
  b.package_class = "PKG";
  b.alpha = 0.5;
  b.items_min = 1;
  b.items_max = 2;
  ProductConfig c;
  c.code = "PORK-CTN";
  c.package_class = "CTN";
  c.alpha = 0.0;
  c.items_min = 1;
  c.items_max = 2;
  ProductConfig d;
  d.code = "PORK-PKG";
  d.package_class = "PKG";
  d.alpha_schedule = {0.5, 0.0};
  d.sdvosb_fraction = 0.3;
  d.items_min = 1;
  d.items_max = 2;
  cfg.sim.products = {a, b, c, d};
  cfg.sim.small_vendors = {4, 1.0, 3.0, 0.8, 0.1, 0.3, 0};
  cfg.sim.large_vendors = {3, 1.0, 3.0, 0.8, 0.1, 0.3, 0};
  cfg.sim.n_sdvosb_small = 1;
  cfg.sim.wholesale = {2.5, 0.002, 0.15};
  cfg.equilibrium.alpha_grid = {0.0, 0.5, 1.0};
  cfg.equilibrium.grid_size = 201;
  cfg.equilibrium.cost_lo = 0.0;
  cfg.equilibrium.cost_hi = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("pipeline emits one equilibrium CSV per alpha and a stable manifest") {
  TempDir tmp;
  auto cfg = small_pipeline_config(tmp.path / "run1");
  const auto r1 = run_pipeline(cfg);
  CHECK(fs::exists(cfg.out_dir / "equilibrium_alpha_0.csv"));
  CHECK(fs::exists(cfg.out_dir / "equilibrium_alpha_0.5.csv"));
  CHECK(fs::exists(cfg.out_dir / "equilibrium_alpha_1.csv"));
  CHECK(r1.artifacts.back() == "manifest.csv");

  cfg.out_dir = tmp.path / "run2";
  run_pipeline(cfg);
  std::ifstream m1(tmp.path / "run1" / "manifest.csv"), m2(tmp.path / "run2" / "manifest.csv");
  const std::string s1((std::istreambuf_iterator<char>(m1)), {});
  const std::string s2((std::istreambuf_iterator<char>(m2)), {});
  CHECK(s1 == s2);
  CHECK(!s1.empty());
}

TEST_CASE("summary text table carries the published row labels") {
  const auto records = sample_records(40);
  const auto text = summary_table_text(summary_statistics(records));
  for (const auto& label : kSummaryRowLabels) {
    CHECK(text.find(label) != std::string::npos);
  }
}

TEST_CASE("win-share CSV emits one row per (auction, product, class) share") {
  TempDir tmp;
  const auto records = sample_records(40);
  const auto rep = win_share_report(records);
  const fs::path p = tmp.path / "win_share.csv";
  write_win_share_csv(p, rep);
  std::ifstream in(p);
  std::string line;
  int rows = -1;  // skip header
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(rep.cells.size()) * 3);
}

TEST_CASE("equilibrium CSV has the documented columns") {
  TempDir tmp;
  EquilibriumModel m;
  m.alpha = 1.0;
  const auto sol = solve_equilibrium(m, 101);
  const fs::path p = tmp.path / "eq.csv";
  write_equilibrium_csv(p, sol);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == "p,c1,c2,b1_of_c1_grid,b2_of_c2_grid");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 101);
}
