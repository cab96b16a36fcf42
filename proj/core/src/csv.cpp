#include "saalab/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "saalab/errors.hpp"

namespace saalab {

namespace {

constexpr const char* kBidsHeader[] = {
    "auction_id",   "date",          "solicitation_id", "product_code",
    "package_class", "item_id",      "quantity_lbs",    "destination_state",
    "window_start", "window_end",    "vendor_id",       "vendor_type",
    "sdvosb",       "price_per_lb",  "won",             "set_aside",
    "demand_mlbs",  "n_bidders_item", "wholesale_price", "usda_ref_price"};
constexpr int kBidsCols = 20;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// shortest decimal that round-trips the double exactly
std::string fmt_double(double x) {
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

double parse_double(const std::string& s, const char* what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw ValidationError(std::string(what) + ": bad number '" + s + "'");
  }
  return v;
}

std::int64_t parse_i64(const std::string& s, const char* what) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw ValidationError(std::string(what) + ": bad integer '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s, const char* what) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ValidationError(std::string(what) + ": bad flag '" + s + "'");
}

Date parse_date_field(const std::string& s, const char* what) {
  const auto d = Date::parse(s);
  if (!d) throw ValidationError(std::string(what) + ": bad date '" + s + "'");
  return *d;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

}  // namespace

std::vector<BidRecord> load_bids_csv(const std::filesystem::path& path, bool strict,
                                     LoadReport* report) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path.string());

  const std::vector<std::string> header = split_csv_line(line);
  std::vector<int> col_of(kBidsCols, -1);
  for (std::size_t h = 0; h < header.size(); ++h) {
    bool known = false;
    for (int j = 0; j < kBidsCols; ++j) {
      if (header[h] == kBidsHeader[j]) {
        if (col_of[j] != -1) throw ValidationError("duplicate column: " + header[h]);
        col_of[j] = static_cast<int>(h);
        known = true;
        break;
      }
    }
    if (!known && strict) throw ValidationError("unknown column: " + header[h]);
  }
  for (int j = 0; j < kBidsCols; ++j) {
    if (col_of[j] == -1) {
      throw ValidationError(std::string("missing required column: ") + kBidsHeader[j]);
    }
  }

  std::vector<BidRecord> records;
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line);
    try {
      if (f.size() < header.size()) throw ValidationError("too few fields");
      auto at = [&](int j) -> const std::string& {
        return f[static_cast<std::size_t>(col_of[j])];
      };
      BidRecord r;
      r.auction_id = at(0);
      r.date = parse_date_field(at(1), "date");
      r.solicitation_id = at(2);
      r.product_code = at(3);
      r.package_class = at(4);
      r.item_id = at(5);
      r.quantity_lbs = parse_i64(at(6), "quantity_lbs");
      if (r.quantity_lbs <= 0) throw ValidationError("quantity_lbs must be positive");
      r.destination_state = at(7);
      r.window_start = parse_date_field(at(8), "window_start");
      r.window_end = parse_date_field(at(9), "window_end");
      r.vendor_id = at(10);
      const auto sc = parse_size_class(at(11));
      if (!sc) throw ValidationError("vendor_type: bad value '" + at(11) + "'");
      r.vendor_type = *sc;
      r.sdvosb = parse_bool(at(12), "sdvosb");
      const auto price = Price::parse(at(13));
      if (!price) throw ValidationError("price_per_lb: bad value '" + at(13) + "'");
      if (price->ticks() < 0) throw ValidationError("price_per_lb must be nonnegative");
      r.price_per_lb = *price;
      r.won = parse_bool(at(14), "won");
      r.set_aside = parse_double(at(15), "set_aside");
      r.demand_mlbs = parse_double(at(16), "demand_mlbs");
      r.n_bidders_item = static_cast<int>(parse_i64(at(17), "n_bidders_item"));
      r.wholesale_price = parse_double(at(18), "wholesale_price");
      r.usda_ref_price = parse_double(at(19), "usda_ref_price");
      records.push_back(std::move(r));
      ++rep.rows_ok;
    } catch (const ValidationError& e) {
      rep.errors.push_back({lineno, e.what()});
      if (strict) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " +
                              e.what());
      }
    }
  }
  return records;
}

void write_bids_csv(const std::filesystem::path& path, std::span<const BidRecord> records) {
  std::ofstream out = open_out(path);
  for (int j = 0; j < kBidsCols; ++j) out << (j ? "," : "") << kBidsHeader[j];
  out << '\n';
  for (const auto& r : records) {
    out << csv_escape(r.auction_id) << ',' << r.date.str() << ','
        << csv_escape(r.solicitation_id) << ',' << csv_escape(r.product_code) << ','
        << csv_escape(r.package_class) << ',' << csv_escape(r.item_id) << ','
        << r.quantity_lbs << ',' << csv_escape(r.destination_state) << ','
        << r.window_start.str() << ',' << r.window_end.str() << ','
        << csv_escape(r.vendor_id) << ',' << size_class_str(r.vendor_type) << ','
        << (r.sdvosb ? 1 : 0) << ',' << r.price_per_lb.str() << ',' << (r.won ? 1 : 0)
        << ',' << fmt_double(r.set_aside) << ',' << fmt_double(r.demand_mlbs) << ','
        << r.n_bidders_item << ',' << fmt_double(r.wholesale_price) << ','
        << fmt_double(r.usda_ref_price) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::map<std::pair<int, int>, double> load_wholesale_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path.string());
  if (split_csv_line(line) != std::vector<std::string>{"year", "month", "price_per_lb"}) {
    throw ValidationError("wholesale header must be year,month,price_per_lb");
  }
  std::map<std::pair<int, int>, double> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad row");
    }
    const int y = static_cast<int>(parse_i64(f[0], "year"));
    const int m = static_cast<int>(parse_i64(f[1], "month"));
    if (m < 1 || m > 12) throw ValidationError("month out of range");
    out[{y, m}] = parse_double(f[2], "price_per_lb");
  }
  return out;
}

std::map<std::pair<std::string, int>, double> load_usda_prices_csv(
    const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path.string());
  if (split_csv_line(line) !=
      std::vector<std::string>{"product_code", "year", "price_per_lb"}) {
    throw ValidationError("usda prices header must be product_code,year,price_per_lb");
  }
  std::map<std::pair<std::string, int>, double> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad row");
    }
    out[{f[0], static_cast<int>(parse_i64(f[1], "year"))}] =
        parse_double(f[2], "price_per_lb");
  }
  return out;
}

void join_price_covariates(std::vector<BidRecord>& records,
                           const std::map<std::pair<int, int>, double>& wholesale,
                           const std::map<std::pair<std::string, int>, double>& usda) {
  for (auto& r : records) {
    const auto w = wholesale.find({r.date.year, r.date.month});
    if (w == wholesale.end()) {
      throw ValidationError("no wholesale price for " + std::to_string(r.date.year) + "-" +
                            std::to_string(r.date.month));
    }
    const auto u = usda.find({r.product_code, r.date.year});
    if (u == usda.end()) {
      throw ValidationError("no USDA reference price for " + r.product_code + " in " +
                            std::to_string(r.date.year));
    }
    r.wholesale_price = w->second;
    r.usda_ref_price = u->second;
  }
}

void write_equilibrium_csv(const std::filesystem::path& path,
                           const EquilibriumSolution& sol) {
  std::ofstream out = open_out(path);
  out << "p,c1,c2,b1_of_c1_grid,b2_of_c2_grid\n";
  for (std::size_t i = 0; i < sol.price_grid.size(); ++i) {
    out << fmt_double(sol.price_grid[i]) << ',' << fmt_double(sol.c1[i]) << ','
        << fmt_double(sol.c2[i]) << ',' << fmt_double(sol.bid_small(sol.c1[i])) << ','
        << fmt_double(sol.bid_large(sol.c2[i])) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::string equilibrium_diagnostics_text(const EquilibriumSolution& sol) {
  std::ostringstream os;
  os << "equilibrium diagnostics\n"
     << "  alpha:               " << fmt_double(sol.alpha) << '\n'
     << "  b_low:               " << fmt_double(sol.b_low) << '\n'
     << "  grid points:         " << sol.price_grid.size() << '\n'
     << "  max FOC residual:    " << fmt_double(sol.diagnostics.max_foc_residual) << '\n'
     << "  boundary mismatch:   " << fmt_double(sol.diagnostics.boundary_mismatch) << '\n'
     << "  shooting iterations: " << sol.diagnostics.shooting_iterations << '\n';
  return os.str();
}

void write_awards_csv(const std::filesystem::path& path, const AllocationProblem& problem,
                      const AllocationResult& result) {
  std::map<std::string, Lbs> qty;
  for (const auto& it : problem.solicitation.items) qty[it.item_id] = it.quantity_lbs;
  std::ofstream out = open_out(path);
  out << "item_id,vendor_id,price_per_lb,quantity_lbs\n";
  for (const auto& [item_id, award] : result.awards) {
    out << csv_escape(item_id) << ',' << csv_escape(award.vendor_id) << ','
        << award.price_per_lb.str() << ',' << qty.at(item_id) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_quota_report_csv(const std::filesystem::path& path,
                            const AllocationResult& result) {
  std::ofstream out = open_out(path);
  out << "kind,product_code,quota_lbs,awarded_lbs,quota_met,relaxed\n";
  auto emit = [&](const char* kind, const QuotaReport& q) {
    out << kind << ',' << csv_escape(q.product_code) << ',' << fmt_double(q.quota_lbs)
        << ',' << q.awarded_lbs << ',' << (q.quota_met ? 1 : 0) << ','
        << (q.relaxed ? 1 : 0) << '\n';
  };
  for (const auto& q : result.per_product_quota) emit("set_aside", q);
  for (const auto& q : result.sdvosb_quota) emit("sdvosb", q);
  if (!out) throw IoError("write failed: " + path.string());
}

void write_summary_csv(const std::filesystem::path& path,
                       std::span<const GroupSummary> groups) {
  std::ofstream out = open_out(path);
  out << "statistic";
  for (const auto& g : groups) out << ",set_aside_" << fmt_double(g.set_aside);
  out << '\n';
  auto row = [&](const std::string& label, auto getter) {
    out << csv_escape(label);
    for (const auto& g : groups) out << ',' << getter(g);
    out << '\n';
  };
  row(kSummaryRowLabels[0], [](const GroupSummary& g) { return std::to_string(g.n_auctions); });
  row(kSummaryRowLabels[1], [](const GroupSummary& g) { return std::to_string(g.n_items); });
  row(kSummaryRowLabels[2], [](const GroupSummary& g) { return std::to_string(g.n_bids); });
  row(kSummaryRowLabels[3],
      [](const GroupSummary& g) { return std::to_string(g.small_pool); });
  row(kSummaryRowLabels[4],
      [](const GroupSummary& g) { return std::to_string(g.large_pool); });
  row(kSummaryRowLabels[5], [](const GroupSummary& g) { return fmt_double(g.avg_small); });
  row(kSummaryRowLabels[6], [](const GroupSummary& g) { return fmt_double(g.avg_large); });
  row(kSummaryRowLabels[7], [](const GroupSummary& g) { return fmt_double(g.mean_offer); });
  row(kSummaryRowLabels[8], [](const GroupSummary& g) { return fmt_double(g.mean_win); });
  row(kSummaryRowLabels[9], [](const GroupSummary& g) { return fmt_double(g.mean_qty); });
  row(kSummaryRowLabels[10],
      [](const GroupSummary& g) { return std::string(g.exist_all_years ? "yes" : "no"); });
  if (!out) throw IoError("write failed: " + path.string());
}

std::string summary_table_text(std::span<const GroupSummary> groups) {
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.3f", x);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> cols;
  for (const auto& g : groups) {
    std::vector<std::string> c;
    c.push_back("SA " + num(g.set_aside * 100.0).substr(0, num(g.set_aside * 100.0).find('.')) +
                "%");
    c.push_back(std::to_string(g.n_auctions));
    c.push_back(std::to_string(g.n_items));
    c.push_back(std::to_string(g.n_bids));
    c.push_back(std::to_string(g.small_pool));
    c.push_back(std::to_string(g.large_pool));
    c.push_back(num(g.avg_small) + " (" + num(g.sd_small) + ")");
    c.push_back(num(g.avg_large) + " (" + num(g.sd_large) + ")");
    c.push_back(num(g.mean_offer) + " (" + num(g.sd_offer) + ")");
    c.push_back(num(g.mean_win) + " (" + num(g.sd_win) + ")");
    c.push_back(num(g.mean_qty) + " (" + num(g.sd_qty) + ")");
    c.push_back(g.exist_all_years ? "yes" : "no");
    cols.push_back(std::move(c));
  }
  std::size_t label_w = 0;
  for (const auto& l : kSummaryRowLabels) label_w = std::max(label_w, l.size());
  std::vector<std::size_t> col_w(cols.size(), 0);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (const auto& cell : cols[j]) col_w[j] = std::max(col_w[j], cell.size());
  }
  std::ostringstream os;
  os << std::string(label_w, ' ');
  for (std::size_t j = 0; j < cols.size(); ++j) {
    os << "  " << std::string(col_w[j] - cols[j][0].size(), ' ') << cols[j][0];
  }
  os << '\n';
  for (std::size_t i = 0; i < kSummaryRowLabels.size(); ++i) {
    os << kSummaryRowLabels[i]
       << std::string(label_w - kSummaryRowLabels[i].size(), ' ');
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const std::string& cell = cols[j][i + 1];
      os << "  " << std::string(col_w[j] - cell.size(), ' ') << cell;
    }
    os << '\n';
  }
  return os.str();
}

void write_timeline_csv(const std::filesystem::path& path,
                        std::span<const TimelinePoint> points) {
  std::ofstream out = open_out(path);
  out << "x,y,group\n";
  for (const auto& p : points) out << p.date.str() << ',' << p.small_active << ",small\n";
  for (const auto& p : points) out << p.date.str() << ',' << p.large_active << ",large\n";
  if (!out) throw IoError("write failed: " + path.string());
}

void write_win_share_csv(const std::filesystem::path& path, const WinShareReport& report) {
  std::ofstream out = open_out(path);
  out << "auction_id,product_code,set_aside,total_lbs,size_class,share\n";
  for (const auto& c : report.cells) {
    auto emit = [&](const char* cls, double share) {
      out << csv_escape(c.auction_id) << ',' << csv_escape(c.product_code) << ','
          << fmt_double(c.set_aside) << ',' << c.total_lbs << ',' << cls << ','
          << fmt_double(share) << '\n';
    };
    emit("small", c.small_share);
    emit("large", c.large_share);
    emit("unawarded", c.unawarded_share);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_fit_csv(const std::filesystem::path& path, const FitResult& fit) {
  std::ofstream out = open_out(path);
  out << "term,coefficient,robust_se\n";
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    out << csv_escape(fit.names[i]) << ','
        << fmt_double(fit.coefficients[static_cast<Eigen::Index>(i)]) << ','
        << fmt_double(fit.robust_se[static_cast<Eigen::Index>(i)]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::string fit_table_text(std::span<const FitResult> fits) {
  if (fits.empty()) return {};
  // union of term names, first-seen order
  std::vector<std::string> terms;
  for (const auto& f : fits) {
    for (const auto& n : f.names) {
      if (std::find(terms.begin(), terms.end(), n) == terms.end()) terms.push_back(n);
    }
  }
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.4f", x);
    return std::string(buf);
  };
  std::size_t label_w = 4;
  for (const auto& t : terms) label_w = std::max(label_w, t.size());
  std::ostringstream os;
  os << std::string(label_w, ' ');
  for (const auto& f : fits) {
    std::snprintf(buf, sizeof(buf), "  %22s", f.spec_tag.c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& t : terms) {
    os << t << std::string(label_w - t.size(), ' ');
    for (const auto& f : fits) {
      std::string cell =
          f.has(t) ? num(f.coefficient(t)) + " (" + num(f.se(t)) + ")" : "--";
      std::snprintf(buf, sizeof(buf), "  %22s", cell.c_str());
      os << buf;
    }
    os << '\n';
  }
  os << "n_obs" << std::string(label_w - 5, ' ');
  for (const auto& f : fits) {
    std::snprintf(buf, sizeof(buf), "  %22d", f.n_obs);
    os << buf;
  }
  os << '\n';
  os << "R^2" << std::string(label_w - 3, ' ');
  for (const auto& f : fits) {
    std::snprintf(buf, sizeof(buf), "  %22s", num(f.weighted_r2).c_str());
    os << buf;
  }
  os << '\n';
  return os.str();
}

std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void write_manifest(const std::filesystem::path& path,
                    std::span<const ManifestEntry> entries) {
  std::vector<ManifestEntry> sorted(entries.begin(), entries.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.name < b.name; });
  std::ofstream out = open_out(path);
  out << "name,bytes,fnv1a64\n";
  char buf[32];
  for (const auto& e : sorted) {
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(e.hash));
    out << csv_escape(e.name) << ',' << e.bytes << ',' << buf << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty manifest: " + path.string());
  if (split_csv_line(line) != std::vector<std::string>{"name", "bytes", "fnv1a64"}) {
    throw ValidationError("manifest header must be name,bytes,fnv1a64");
  }
  std::vector<ManifestEntry> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw ValidationError("bad manifest row: " + line);
    ManifestEntry e;
    e.name = f[0];
    e.bytes = static_cast<std::uintmax_t>(parse_i64(f[1], "bytes"));
    e.hash = std::strtoull(f[2].c_str(), nullptr, 16);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace saalab
