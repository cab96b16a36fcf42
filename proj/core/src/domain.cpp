#include "saalab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace saalab {

Price Price::from_dollars(double d) {
  return from_ticks(static_cast<std::int64_t>(std::llround(d * 1e4)));
}

std::optional<Price> Price::parse(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-') {
    neg = true;
    i = 1;
  }
  std::int64_t whole = 0, frac = 0;
  int frac_digits = 0;
  bool seen_dot = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '.') {
      if (seen_dot) return std::nullopt;
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      seen_digit = true;
      if (!seen_dot) {
        whole = whole * 10 + (c - '0');
      } else if (frac_digits < 4) {
        frac = frac * 10 + (c - '0');
        ++frac_digits;
      } else {
        return std::nullopt;  // more than 4 fractional digits
      }
    } else {
      return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  while (frac_digits < 4) {
    frac *= 10;
    ++frac_digits;
  }
  std::int64_t t = whole * 10000 + frac;
  return from_ticks(neg ? -t : t);
}

std::string Price::str() const {
  const std::int64_t t = ticks_ < 0 ? -ticks_ : ticks_;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%lld.%04lld", ticks_ < 0 ? "-" : "",
                static_cast<long long>(t / 10000), static_cast<long long>(t % 10000));
  return buf;
}

std::string Date::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::optional<Date> Date::parse(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t off, std::size_t n, int& out) {
    out = 0;
    for (std::size_t i = off; i < off + n; ++i) {
      if (s[i] < '0' || s[i] > '9') return false;
      out = out * 10 + (s[i] - '0');
    }
    return true;
  };
  Date d;
  if (!digits(0, 4, d.year) || !digits(5, 2, d.month) || !digits(8, 2, d.day)) {
    return std::nullopt;
  }
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) return std::nullopt;
  return d;
}

// days-from-civil / civil-from-days (Howard Hinnant's algorithms)
std::int64_t Date::serial() const {
  const int y = year - (month <= 2);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

static Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

Date Date::plus_days(int n) const { return civil_from_days(serial() + n); }

std::string_view size_class_str(SizeClass c) {
  return c == SizeClass::Small ? "small" : "large";
}

std::optional<SizeClass> parse_size_class(std::string_view s) {
  if (s == "small" || s == "SMALL" || s == "Small") return SizeClass::Small;
  if (s == "large" || s == "LARGE" || s == "Large") return SizeClass::Large;
  return std::nullopt;
}

const SetAsidePolicy* Solicitation::policy_for(std::string_view product_code) const {
  for (const auto& p : policies) {
    if (p.applies_to == product_code) return &p;
  }
  return nullptr;
}

static Lbs product_total_lbs(const Solicitation& s, std::string_view product_code,
                             bool* found) {
  Lbs total = 0;
  *found = false;
  for (const auto& it : s.items) {
    if (it.product_code == product_code) {
      total += it.quantity_lbs;
      *found = true;
    }
  }
  return total;
}

double compute_setaside_quota(const Solicitation& s, std::string_view product_code) {
  bool found = false;
  const Lbs total = product_total_lbs(s, product_code, &found);
  if (!found) {
    throw ValidationError("unknown product in solicitation " + s.solicitation_id + ": " +
                          std::string(product_code));
  }
  const SetAsidePolicy* pol = s.policy_for(product_code);
  if (pol == nullptr) {
    throw ValidationError("no set-aside policy for product: " + std::string(product_code));
  }
  return pol->alpha * static_cast<double>(total);
}

double demand_level(const Solicitation& s, std::string_view product_code) {
  bool found = false;
  const Lbs total = product_total_lbs(s, product_code, &found);
  if (!found) {
    throw ValidationError("unknown product in solicitation " + s.solicitation_id + ": " +
                          std::string(product_code));
  }
  return static_cast<double>(total) / 1e6;
}

std::optional<std::string> demand_range_warning(double demand_mlbs) {
  if (demand_mlbs < kDemandRangeLo || demand_mlbs > kDemandRangeHi) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "demand %.6f mlbs outside observed range [%.3f, %.3f]", demand_mlbs,
                  kDemandRangeLo, kDemandRangeHi);
    return std::string(buf);
  }
  return std::nullopt;
}

ValidationReport validate_solicitation(const Solicitation& s) {
  ValidationReport report;
  std::set<std::string> seen_ids;
  std::set<std::string> products;
  for (const auto& it : s.items) {
    if (!seen_ids.insert(it.item_id).second) {
      report.violations.push_back("duplicate item_id: " + it.item_id);
    }
    if (it.quantity_lbs <= 0) {
      report.violations.push_back("nonpositive quantity on item: " + it.item_id);
    }
    if (it.window_end < it.window_start) {
      report.violations.push_back("window_end before window_start on item: " + it.item_id);
    }
    products.insert(it.product_code);
  }
  for (const auto& pc : products) {
    int n_policies = 0;
    for (const auto& pol : s.policies) {
      if (pol.applies_to == pc) ++n_policies;
    }
    if (n_policies == 0) {
      report.violations.push_back("missing set-aside policy for product: " + pc);
    } else if (n_policies > 1) {
      report.violations.push_back("multiple set-aside policies for product: " + pc);
    }
  }
  for (const auto& pol : s.policies) {
    if (pol.alpha < 0.0 || pol.alpha > 1.0) {
      report.violations.push_back("alpha outside [0,1] for product: " + pol.applies_to);
    }
    if (pol.sdvosb_fraction < 0.0 || pol.sdvosb_fraction > 1.0) {
      report.violations.push_back("sdvosb_fraction outside [0,1] for product: " +
                                  pol.applies_to);
    }
  }
  return report;
}

std::string analysis_group(std::string_view product_code, std::string_view package_class) {
  std::string code(product_code);
  if (!package_class.empty()) {
    const auto pos = code.find(package_class);
    if (pos != std::string::npos) {
      code.erase(pos, package_class.size());
      // tidy a doubled separator left by the erase
      while (pos < code.size() && pos > 0 &&
             (code[pos] == ' ' || code[pos] == '-' || code[pos] == '/') &&
             (code[pos - 1] == ' ' || code[pos - 1] == '-' || code[pos - 1] == '/')) {
        code.erase(pos, 1);
      }
    }
  }
  while (!code.empty() &&
         (code.back() == ' ' || code.back() == '-' || code.back() == '/')) {
    code.pop_back();
  }
  return code;
}

}  // namespace saalab
