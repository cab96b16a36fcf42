#include "saalab/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "saalab/errors.hpp"

namespace saalab {

RegressionSpec RegressionSpec::counts(Weighting w) {
  RegressionSpec s;
  s.response = Response::NBidders;
  s.terms = {Term::SetAsideBidderDummies, Term::Demand, Term::Demand2,
             Term::ProductFE, Term::YearFE, Term::Sdvosb};
  s.weighting = w;
  return s;
}

RegressionSpec RegressionSpec::log_price(Response r, Weighting w) {
  if (r == Response::NBidders) throw ValidationError("log_price spec needs a price response");
  RegressionSpec s;
  s.response = r;
  s.terms = {Term::SetAsideBidderDummies,
             Term::Demand,
             Term::Demand2,
             Term::NBid,
             Term::NBid2,
             Term::LogWholesale,
             Term::LogUsdaRef,
             Term::ProductFE,
             Term::VendorFE,
             Term::Package,
             Term::Sdvosb};
  s.weighting = w;
  return s;
}

std::string RegressionSpec::tag() const {
  std::string t;
  switch (response) {
    case Response::NBidders:
      t = "counts";
      break;
    case Response::LogOffer:
      t = "log_offer";
      break;
    case Response::LogWin:
      t = "log_win";
      break;
  }
  switch (weighting) {
    case Weighting::Quantity:
      return t + "/wls-quantity";
    case Weighting::ProductEqualized:
      return t + "/wls-product-equalized";
    case Weighting::Unit:
      return t + "/ols";
  }
  return t;
}

namespace {

// flattened observation shared by all three responses
struct Obs {
  double y = 0.0;
  double qty = 0.0;
  std::string product_code;  // weighting key
  std::string group;         // product FE key (package stripped)
  std::string package;
  std::string vendor;
  int year = 0;
  double demand = 0.0;
  double nbid = 0.0;
  double set_aside = 0.0;
  bool small = false;
  bool sdvosb = false;
  double wholesale = 0.0;
  double usda_ref = 0.0;
};

enum class SaCell { Baseline, SmallOnly, Sa50Large, Sa50Small, Sa100Small };

SaCell sa_cell(double sa, bool small) {
  const auto near = [&](double x) { return std::abs(sa - x) < 1e-9; };
  if (near(0.0)) return small ? SaCell::SmallOnly : SaCell::Baseline;
  if (near(0.5)) return small ? SaCell::Sa50Small : SaCell::Sa50Large;
  if (near(1.0)) {
    if (!small) {
      throw ValidationError(
          "observed a large-bidder observation under a 100% set-aside; this cell has no "
          "dummy in the replication coding");
    }
    return SaCell::Sa100Small;
  }
  throw ValidationError("set-aside level " + std::to_string(sa) +
                        " is not in {0, 0.5, 1}; replication dummy coding is undefined");
}

std::vector<Obs> flatten(std::span<const BidRecord> records, Response response) {
  if (records.empty()) throw ValidationError("no records to regress on");
  std::vector<Obs> obs;
  if (response == Response::NBidders) {
    struct ItemAcc {
      const BidRecord* any = nullptr;
      int n_small = 0;
      int n_large = 0;
    };
    std::map<std::string, ItemAcc> items;
    for (const auto& r : records) {
      auto& acc = items[r.item_id];
      acc.any = &r;
      (r.vendor_type == SizeClass::Small ? acc.n_small : acc.n_large)++;
    }
    for (const auto& [iid, acc] : items) {
      const BidRecord& r = *acc.any;
      for (const bool small : {false, true}) {
        // full set-asides bar large bidders outright; no count to explain
        if (!small && r.set_aside >= 1.0 - 1e-9) continue;
        Obs o;
        o.y = small ? acc.n_small : acc.n_large;
        o.qty = static_cast<double>(r.quantity_lbs);
        o.product_code = r.product_code;
        o.group = analysis_group(r.product_code, r.package_class);
        o.package = r.package_class;
        o.year = r.date.year;
        o.demand = r.demand_mlbs;
        o.set_aside = r.set_aside;
        o.small = small;
        o.sdvosb = r.sdvosb;
        obs.push_back(std::move(o));
      }
    }
    return obs;
  }
  for (const auto& r : records) {
    if (response == Response::LogWin && !r.won) continue;
    Obs o;
    o.y = std::log(r.price_per_lb.dollars());
    o.qty = static_cast<double>(r.quantity_lbs);
    o.product_code = r.product_code;
    o.group = analysis_group(r.product_code, r.package_class);
    o.package = r.package_class;
    o.vendor = r.vendor_id;
    o.year = r.date.year;
    o.demand = r.demand_mlbs;
    o.nbid = r.n_bidders_item;
    o.set_aside = r.set_aside;
    o.small = r.vendor_type == SizeClass::Small;
    o.sdvosb = r.sdvosb;
    o.wholesale = r.wholesale_price;
    o.usda_ref = r.usda_ref_price;
    obs.push_back(std::move(o));
  }
  if (obs.empty()) throw ValidationError("no observations after filtering (winners only?)");
  return obs;
}

// categorical expansion with the lexicographically smallest level as baseline
template <typename Key>
std::vector<std::pair<Key, int>> fe_levels(const std::set<Key>& levels) {
  std::vector<std::pair<Key, int>> cols;
  int j = 0;
  bool first = true;
  for (const auto& lvl : levels) {
    if (first) {
      first = false;
      continue;  // baseline dropped
    }
    cols.emplace_back(lvl, j++);
  }
  return cols;
}

}  // namespace

DesignMatrix build_design_matrix(std::span<const BidRecord> records,
                                 const RegressionSpec& spec) {
  const std::vector<Obs> obs = flatten(records, spec.response);
  const auto n = static_cast<Eigen::Index>(obs.size());

  // column planning pass
  std::set<SaCell> cells;
  std::set<std::string> groups, vendors, packages;
  std::set<int> years;
  for (const auto& o : obs) {
    cells.insert(sa_cell(o.set_aside, o.small));
    groups.insert(o.group);
    vendors.insert(o.vendor);
    packages.insert(o.package);
    years.insert(o.year);
  }

  std::vector<std::string> names{"Constant"};
  std::vector<std::function<double(const Obs&)>> cols{[](const Obs&) { return 1.0; }};
  auto add = [&](std::string name, std::function<double(const Obs&)> f) {
    names.push_back(std::move(name));
    cols.push_back(std::move(f));
  };

  for (const Term term : spec.terms) {
    switch (term) {
      case Term::SetAsideBidderDummies: {
        const auto cell_of = [](const Obs& o) { return sa_cell(o.set_aside, o.small); };
        const bool any_small = std::any_of(obs.begin(), obs.end(),
                                           [](const Obs& o) { return o.small; });
        const bool any_large = std::any_of(obs.begin(), obs.end(),
                                           [](const Obs& o) { return !o.small; });
        if (any_small && any_large) {
          add("Small", [](const Obs& o) { return o.small ? 1.0 : 0.0; });
        }
        if (cells.count(SaCell::Sa50Large) != 0) {
          add("SA50%, Large",
              [=](const Obs& o) { return cell_of(o) == SaCell::Sa50Large ? 1.0 : 0.0; });
        }
        if (cells.count(SaCell::Sa50Small) != 0) {
          add("SA50%, Small",
              [=](const Obs& o) { return cell_of(o) == SaCell::Sa50Small ? 1.0 : 0.0; });
        }
        if (cells.count(SaCell::Sa100Small) != 0) {
          add("SA100%, Small",
              [=](const Obs& o) { return cell_of(o) == SaCell::Sa100Small ? 1.0 : 0.0; });
        }
        break;
      }
      case Term::Demand:
        add("Demand", [](const Obs& o) { return o.demand; });
        break;
      case Term::Demand2:
        add("Demand^2", [](const Obs& o) { return o.demand * o.demand; });
        break;
      case Term::NBid:
        add("Number of bidders", [](const Obs& o) { return o.nbid; });
        break;
      case Term::NBid2:
        add("Number of bidders^2", [](const Obs& o) { return o.nbid * o.nbid; });
        break;
      case Term::LogWholesale:
        add("log(wholesale price)", [](const Obs& o) { return std::log(o.wholesale); });
        break;
      case Term::LogUsdaRef:
        add("log(USDA price)", [](const Obs& o) { return std::log(o.usda_ref); });
        break;
      case Term::ProductFE:
        for (const auto& [lvl, idx] : fe_levels(groups)) {
          add("product=" + lvl, [lvl = lvl](const Obs& o) { return o.group == lvl ? 1.0 : 0.0; });
        }
        break;
      case Term::YearFE:
        for (const auto& [lvl, idx] : fe_levels(years)) {
          add("year=" + std::to_string(lvl),
              [lvl = lvl](const Obs& o) { return o.year == lvl ? 1.0 : 0.0; });
        }
        break;
      case Term::VendorFE: {
        // one baseline per size class; a single shared baseline would make
        // the vendor dummies span the Small indicator exactly
        std::set<std::string> small_ids, large_ids;
        for (const auto& o : obs) (o.small ? small_ids : large_ids).insert(o.vendor);
        for (const auto* ids : {&small_ids, &large_ids}) {
          for (const auto& [lvl, idx] : fe_levels(*ids)) {
            add("vendor=" + lvl,
                [lvl = lvl](const Obs& o) { return o.vendor == lvl ? 1.0 : 0.0; });
          }
        }
        break;
      }
      case Term::Package:
        for (const auto& [lvl, idx] : fe_levels(packages)) {
          add("package=" + lvl,
              [lvl = lvl](const Obs& o) { return o.package == lvl ? 1.0 : 0.0; });
        }
        break;
      case Term::Sdvosb: {
        const bool any_on = std::any_of(obs.begin(), obs.end(),
                                        [](const Obs& o) { return o.sdvosb; });
        const bool any_off = std::any_of(obs.begin(), obs.end(),
                                         [](const Obs& o) { return !o.sdvosb; });
        if (any_on && any_off) {
          add("SDVOSB", [](const Obs& o) { return o.sdvosb ? 1.0 : 0.0; });
        }
        break;
      }
    }
  }

  DesignMatrix d;
  d.names = names;
  d.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  d.y.resize(n);
  d.w.resize(n);

  std::map<std::string, double> product_totals;
  if (spec.weighting == Weighting::ProductEqualized) {
    for (const auto& o : obs) product_totals[o.product_code] += o.qty;
    for (const auto& [pc, total] : product_totals) {
      if (total <= 0.0) {
        throw ValidationError("product " + pc + " has zero total quantity");
      }
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const Obs& o = obs[static_cast<std::size_t>(i)];
    d.y[i] = o.y;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      d.X(i, static_cast<Eigen::Index>(j)) = cols[j](o);
    }
    switch (spec.weighting) {
      case Weighting::Quantity:
        d.w[i] = o.qty;
        break;
      case Weighting::ProductEqualized:
        d.w[i] = o.qty / product_totals.at(o.product_code);
        break;
      case Weighting::Unit:
        d.w[i] = 1.0;
        break;
    }
  }

  // constant covariates carry no information beyond the intercept; drop them
  // so degenerate designs (e.g. a fixed bidder count) stay estimable
  std::vector<Eigen::Index> keep{0};
  for (Eigen::Index j = 1; j < d.X.cols(); ++j) {
    if (d.X.col(j).maxCoeff() > d.X.col(j).minCoeff()) keep.push_back(j);
  }
  if (keep.size() != static_cast<std::size_t>(d.X.cols())) {
    Eigen::MatrixXd pruned(n, static_cast<Eigen::Index>(keep.size()));
    std::vector<std::string> kept_names;
    for (std::size_t j = 0; j < keep.size(); ++j) {
      pruned.col(static_cast<Eigen::Index>(j)) = d.X.col(keep[j]);
      kept_names.push_back(d.names[static_cast<std::size_t>(keep[j])]);
    }
    d.X = std::move(pruned);
    d.names = std::move(kept_names);
  }
  return d;
}

Eigen::VectorXd fit_wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, const std::vector<std::string>& names) {
  if (X.rows() != y.size() || X.rows() != w.size()) {
    throw ValidationError("dimension mismatch in fit_wls");
  }
  if ((w.array() <= 0.0).any()) throw ValidationError("weights must be positive");

  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  const Eigen::VectorXd yw = sw.asDiagonal() * y;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  if (qr.rank() < X.cols()) {
    // non-pivot columns form the exactly-collinear group
    const auto perm = qr.colsPermutation().indices();
    std::string msg = "design matrix is rank deficient; collinear columns:";
    for (Eigen::Index j = qr.rank(); j < X.cols(); ++j) {
      const Eigen::Index col = perm[j];
      msg += " ";
      msg += (static_cast<std::size_t>(col) < names.size()
                  ? names[static_cast<std::size_t>(col)]
                  : "#" + std::to_string(col));
    }
    throw ValidationError(msg);
  }
  return qr.solve(yw);
}

Eigen::MatrixXd robust_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& residuals, HcFlavor flavor) {
  const Eigen::Index n = X.rows(), k = X.cols();
  const Eigen::MatrixXd xtwx = X.transpose() * w.asDiagonal() * X;
  const Eigen::MatrixXd bread = xtwx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::ArrayXd we2 = (w.array() * residuals.array()).square();
  const Eigen::MatrixXd meat = X.transpose() * we2.matrix().asDiagonal() * X;
  Eigen::MatrixXd cov = bread * meat * bread;
  if (flavor == HcFlavor::HC1) {
    if (n <= k) throw ValidationError("HC1 correction needs n > k");
    cov *= static_cast<double>(n) / static_cast<double>(n - k);
  }
  // exact symmetry for the downstream PSD checks
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

double weighted_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted,
                   const Eigen::VectorXd& w) {
  if (y.size() != fitted.size() || y.size() != w.size()) {
    throw ValidationError("dimension mismatch in weighted_r2");
  }
  const double wsum = w.sum();
  const double ybar = (w.array() * y.array()).sum() / wsum;
  const double tss = (w.array() * (y.array() - ybar).square()).sum();
  if (tss <= 0.0) {
    throw ValidationError("weighted_r2 undefined: response has zero weighted variance");
  }
  const double rss = (w.array() * (y.array() - fitted.array()).square()).sum();
  return 1.0 - rss / tss;
}

std::vector<double> product_equalized_weights(std::span<const BidRecord> records) {
  std::map<std::string, double> totals;
  for (const auto& r : records) totals[r.product_code] += static_cast<double>(r.quantity_lbs);
  for (const auto& [pc, total] : totals) {
    if (total <= 0.0) throw ValidationError("product " + pc + " has zero total quantity");
  }
  std::vector<double> w;
  w.reserve(records.size());
  for (const auto& r : records) {
    w.push_back(static_cast<double>(r.quantity_lbs) / totals.at(r.product_code));
  }
  return w;
}

double interpret_log_coefficient(double beta) { return std::expm1(beta); }

double marginal_effect_nbid(const FitResult& fit, double n) {
  if (!fit.has("Number of bidders") || !fit.has("Number of bidders^2")) {
    throw ValidationError("fit lacks the bidder-count terms");
  }
  const double b1 = fit.coefficient("Number of bidders");
  const double b2 = fit.coefficient("Number of bidders^2");
  return std::expm1(b1 + b2 * (2.0 * n + 1.0));
}

double FitResult::coefficient(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return coefficients[static_cast<Eigen::Index>(i)];
  }
  throw ValidationError("no coefficient named '" + name + "'");
}

double FitResult::se(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return robust_se[static_cast<Eigen::Index>(i)];
  }
  throw ValidationError("no coefficient named '" + name + "'");
}

bool FitResult::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

FitResult fit(const DesignMatrix& design, HcFlavor flavor, const std::string& tag) {
  FitResult r;
  r.names = design.names;
  r.spec_tag = tag;
  r.n_obs = static_cast<int>(design.X.rows());
  r.coefficients = fit_wls(design.X, design.y, design.w, design.names);
  const Eigen::VectorXd fitted = design.X * r.coefficients;
  const Eigen::VectorXd residuals = design.y - fitted;
  r.covariance = robust_covariance(design.X, design.w, residuals, flavor);
  r.robust_se = r.covariance.diagonal().array().max(0.0).sqrt();
  r.weighted_r2 = weighted_r2(design.y, fitted, design.w);
  return r;
}

FitResult fit_regression(std::span<const BidRecord> records, const RegressionSpec& spec,
                         HcFlavor flavor) {
  return fit(build_design_matrix(records, spec), flavor, spec.tag());
}

}  // namespace saalab
