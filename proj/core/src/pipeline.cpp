#include "saalab/pipeline.hpp"

#include <fstream>

#include "json.hpp"
#include "saalab/csv.hpp"
#include "saalab/errors.hpp"

namespace saalab {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

Date get_date(const json& j, const char* key, Date fallback) {
  if (!j.contains(key)) return fallback;
  const auto d = Date::parse(j.at(key).get<std::string>());
  if (!d) throw ValidationError(std::string(key) + ": bad date");
  return *d;
}

StrategyMode parse_mode(const std::string& s) {
  if (s == "markup") return StrategyMode::MarkupRule;
  if (s == "shaded") return StrategyMode::ShadedRule;
  if (s == "equilibrium") return StrategyMode::EquilibriumModel;
  throw ValidationError("strategy_mode must be markup, shaded, or equilibrium");
}

VendorClassConfig parse_vendor_class(const json& j, const std::string& where) {
  check_keys(j,
             {"count", "cost_lo", "cost_hi", "participation", "markup", "shade",
              "capacity_trucks"},
             where);
  VendorClassConfig v;
  v.count = j.value("count", v.count);
  v.cost_lo = j.value("cost_lo", v.cost_lo);
  v.cost_hi = j.value("cost_hi", v.cost_hi);
  v.participation = j.value("participation", v.participation);
  v.markup = j.value("markup", v.markup);
  v.shade = j.value("shade", v.shade);
  v.capacity_trucks = j.value("capacity_trucks", v.capacity_trucks);
  return v;
}

ProductConfig parse_product(const json& j, const std::string& where) {
  check_keys(j,
             {"code", "package_class", "alpha", "alpha_schedule", "sdvosb_fraction",
              "truckload_lbs", "items_min", "items_max", "usda_ref_price"},
             where);
  ProductConfig p;
  if (!j.contains("code")) throw ValidationError(where + ": product needs a code");
  p.code = j.at("code").get<std::string>();
  p.package_class = j.value("package_class", p.package_class);
  p.alpha = j.value("alpha", p.alpha);
  if (j.contains("alpha_schedule")) {
    p.alpha_schedule = j.at("alpha_schedule").get<std::vector<double>>();
  }
  p.sdvosb_fraction = j.value("sdvosb_fraction", p.sdvosb_fraction);
  p.truckload_lbs = j.value("truckload_lbs", p.truckload_lbs);
  p.items_min = j.value("items_min", p.items_min);
  p.items_max = j.value("items_max", p.items_max);
  p.usda_ref_price = j.value("usda_ref_price", p.usda_ref_price);
  return p;
}

Response parse_response(const std::string& s) {
  if (s == "counts") return Response::NBidders;
  if (s == "log_offer") return Response::LogOffer;
  if (s == "log_win") return Response::LogWin;
  throw ValidationError("regressions entries must be counts, log_offer, or log_win");
}

Weighting parse_weighting(const std::string& s) {
  if (s == "quantity") return Weighting::Quantity;
  if (s == "product_equalized") return Weighting::ProductEqualized;
  if (s == "unit") return Weighting::Unit;
  throw ValidationError("weightings entries must be quantity, product_equalized, or unit");
}

std::string alpha_label(double a) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", a);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == ' ') c = '_';
  }
  return s;
}

// removes everything written so far if a stage throws
class ArtifactSink {
 public:
  explicit ArtifactSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path reserve(const std::string& name) {
    names_.push_back(name);
    return dir_ / name;
  }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream out(reserve(name), std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + (dir_ / name).string());
    out << text;
    if (!out) throw IoError("write failed: " + (dir_ / name).string());
  }

  void rollback() {
    std::error_code ec;
    for (const auto& n : names_) std::filesystem::remove(dir_ / n, ec);
  }

  const std::vector<std::string>& names() const { return names_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"schema_version", "out_dir", "sim", "equilibrium", "regressions",
              "weightings", "hc", "emit_text_tables"},
             "config");
  if (!j.contains("schema_version")) throw ValidationError("config: schema_version required");
  PipelineConfig c;
  c.schema_version = j.at("schema_version").get<int>();
  if (c.schema_version != 1) {
    throw ValidationError("unsupported schema_version " + std::to_string(c.schema_version));
  }
  c.out_dir = j.value("out_dir", c.out_dir.string());

  if (j.contains("sim")) {
    const json& s = j.at("sim");
    check_keys(s,
               {"seed", "n_auctions", "start_date", "products", "small_vendors",
                "large_vendors", "n_sdvosb_small", "strategy_mode", "wholesale"},
               "sim");
    c.sim.seed = s.value("seed", c.sim.seed);
    c.sim.n_auctions = s.value("n_auctions", c.sim.n_auctions);
    c.sim.start_date = get_date(s, "start_date", c.sim.start_date);
    if (s.contains("products")) {
      c.sim.products.clear();
      for (const auto& p : s.at("products")) {
        c.sim.products.push_back(parse_product(p, "sim.products"));
      }
    }
    if (s.contains("small_vendors")) {
      c.sim.small_vendors = parse_vendor_class(s.at("small_vendors"), "sim.small_vendors");
    }
    if (s.contains("large_vendors")) {
      c.sim.large_vendors = parse_vendor_class(s.at("large_vendors"), "sim.large_vendors");
    }
    c.sim.n_sdvosb_small = s.value("n_sdvosb_small", c.sim.n_sdvosb_small);
    if (s.contains("strategy_mode")) {
      c.sim.strategy_mode = parse_mode(s.at("strategy_mode").get<std::string>());
    }
    if (s.contains("wholesale")) {
      const json& w = s.at("wholesale");
      check_keys(w, {"base", "monthly_drift", "seasonal_amplitude"}, "sim.wholesale");
      c.sim.wholesale.base = w.value("base", c.sim.wholesale.base);
      c.sim.wholesale.monthly_drift =
          w.value("monthly_drift", c.sim.wholesale.monthly_drift);
      c.sim.wholesale.seasonal_amplitude =
          w.value("seasonal_amplitude", c.sim.wholesale.seasonal_amplitude);
    }
  }

  if (j.contains("equilibrium")) {
    const json& e = j.at("equilibrium");
    check_keys(e, {"alpha_grid", "grid_size", "cost_lo", "cost_hi"}, "equilibrium");
    if (e.contains("alpha_grid")) {
      c.equilibrium.alpha_grid = e.at("alpha_grid").get<std::vector<double>>();
    }
    c.equilibrium.grid_size = e.value("grid_size", c.equilibrium.grid_size);
    c.equilibrium.cost_lo = e.value("cost_lo", c.equilibrium.cost_lo);
    c.equilibrium.cost_hi = e.value("cost_hi", c.equilibrium.cost_hi);
  }

  if (j.contains("regressions")) {
    c.regressions.clear();
    for (const auto& r : j.at("regressions")) {
      c.regressions.push_back(parse_response(r.get<std::string>()));
    }
  }
  if (j.contains("weightings")) {
    c.weightings.clear();
    for (const auto& w : j.at("weightings")) {
      c.weightings.push_back(parse_weighting(w.get<std::string>()));
    }
  }
  if (j.contains("hc")) {
    const std::string hc = j.at("hc").get<std::string>();
    if (hc == "HC0") {
      c.hc = HcFlavor::HC0;
    } else if (hc == "HC1") {
      c.hc = HcFlavor::HC1;
    } else {
      throw ValidationError("hc must be HC0 or HC1");
    }
  }
  c.emit_text_tables = j.value("emit_text_tables", c.emit_text_tables);
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_pipeline_config(text);
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + config.out_dir.string());
  ArtifactSink sink(config.out_dir);

  // rethrow with the stage name, preserving the error category for exit codes
  auto stage = [&](const char* name, auto&& body) {
    const auto prefix = [&](const char* what) { return std::string(name) + ": " + what; };
    try {
      body();
    } catch (const ValidationError& e) {
      sink.rollback();
      throw ValidationError(prefix(e.what()));
    } catch (const SolverError& e) {
      sink.rollback();
      throw SolverError(prefix(e.what()));
    } catch (const IoError& e) {
      sink.rollback();
      throw IoError(prefix(e.what()));
    } catch (const std::exception& e) {
      sink.rollback();
      throw SolverError(prefix(e.what()));
    }
  };

  std::vector<BidRecord> records;
  stage("simulate", [&] {
    records = simulate_campaign(config.sim);
    write_bids_csv(sink.reserve("bids.csv"), records);
  });

  stage("equilibrium", [&] {
    for (const double a : config.equilibrium.alpha_grid) {
      EquilibriumModel model;
      model.alpha = a;
      model.f_small = ValueDistribution::uniform(config.equilibrium.cost_lo,
                                                 config.equilibrium.cost_hi);
      model.f_large = model.f_small;
      const EquilibriumSolution sol = solve_equilibrium(model, config.equilibrium.grid_size);
      const std::string label = alpha_label(a);
      write_equilibrium_csv(sink.reserve("equilibrium_alpha_" + label + ".csv"), sol);
      if (config.emit_text_tables) {
        sink.write_text("equilibrium_alpha_" + label + ".txt",
                        equilibrium_diagnostics_text(sol));
      }
    }
  });

  stage("report", [&] {
    const auto groups = summary_statistics(records);
    write_summary_csv(sink.reserve("summary.csv"), groups);
    if (config.emit_text_tables) sink.write_text("summary.txt", summary_table_text(groups));
    write_timeline_csv(sink.reserve("timeline.csv"), bidder_pool_timeline(records));
    write_win_share_csv(sink.reserve("win_share.csv"), win_share_report(records));
  });

  std::vector<FitResult> fits;
  stage("regress", [&] {
    for (const Response r : config.regressions) {
      for (const Weighting w : config.weightings) {
        const RegressionSpec spec = r == Response::NBidders
                                        ? RegressionSpec::counts(w)
                                        : RegressionSpec::log_price(r, w);
        const FitResult f = fit_regression(records, spec, config.hc);
        write_fit_csv(sink.reserve("fit_" + sanitize(f.spec_tag) + ".csv"), f);
        fits.push_back(f);
      }
    }
    if (config.emit_text_tables && !fits.empty()) {
      sink.write_text("fits.txt", fit_table_text(fits));
    }
  });

  PipelineResult result;
  stage("manifest", [&] {
    std::vector<ManifestEntry> entries;
    for (const auto& name : sink.names()) {
      const std::filesystem::path p = sink.dir() / name;
      entries.push_back({name, hash_file(p), std::filesystem::file_size(p)});
    }
    result.manifest_path = sink.reserve("manifest.csv");
    write_manifest(result.manifest_path, entries);
  });

  result.artifacts = sink.names();
  return result;
}

}  // namespace saalab
