#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "saalab/econometrics.hpp"
#include "saalab/errors.hpp"
#include "saalab/rng.hpp"

using namespace saalab;

namespace {

BidRecord base_record() {
  BidRecord r;
  r.auction_id = "A1";
  r.date = {2016, 5, 1};
  r.solicitation_id = "SOL";
  r.product_code = "BEEF-CTN";
  r.package_class = "CTN";
  r.item_id = "I1";
  r.quantity_lbs = 40000;
  r.vendor_id = "S01";
  r.vendor_type = SizeClass::Small;
  r.sdvosb = false;
  r.price_per_lb = Price::from_dollars(2.0);
  r.won = true;
  r.set_aside = 0.0;
  r.demand_mlbs = 0.16;
  r.n_bidders_item = 3;
  r.wholesale_price = 2.5;
  r.usda_ref_price = 2.6;
  return r;
}

int col_index(const DesignMatrix& d, const std::string& name) {
  const auto it = std::find(d.names.begin(), d.names.end(), name);
  REQUIRE(it != d.names.end());
  return static_cast<int>(it - d.names.begin());
}

}  // namespace

TEST_CASE("dummy coding of the set-aside x bidder-type cells") {
  std::vector<BidRecord> records;
  // one record per observable cell so all dummies materialize
  const struct {
    double sa;
    SizeClass cls;
  } cells[] = {{0.0, SizeClass::Large}, {0.0, SizeClass::Small}, {0.5, SizeClass::Large},
               {0.5, SizeClass::Small}, {1.0, SizeClass::Small}};
  int k = 0;
  for (const auto& c : cells) {
    BidRecord r = base_record();
    r.item_id = "I" + std::to_string(k);
    r.vendor_id = c.cls == SizeClass::Small ? "S0" + std::to_string(k) : "L0" + std::to_string(k);
    r.vendor_type = c.cls;
    r.set_aside = c.sa;
    r.demand_mlbs = 0.1 + 0.02 * k;
    ++k;
    records.push_back(r);
  }
  RegressionSpec spec;
  spec.response = Response::LogOffer;
  spec.terms = {Term::SetAsideBidderDummies, Term::Demand};
  spec.weighting = Weighting::Unit;
  const auto d = build_design_matrix(records, spec);

  const int small = col_index(d, "Small");
  const int sa50l = col_index(d, "SA50%, Large");
  const int sa50s = col_index(d, "SA50%, Small");
  const int sa100s = col_index(d, "SA100%, Small");

  // row order follows record order
  CHECK(d.X(0, small) == 0.0);  // (SA0, Large): baseline, all dummies 0
  CHECK(d.X(0, sa50l) == 0.0);
  CHECK(d.X(0, sa50s) == 0.0);
  CHECK(d.X(0, sa100s) == 0.0);
  CHECK(d.X(1, small) == 1.0);  // (SA0, Small)
  CHECK(d.X(1, sa50s) == 0.0);
  CHECK(d.X(2, sa50l) == 1.0);  // (SA50, Large)
  CHECK(d.X(2, small) == 0.0);
  CHECK(d.X(3, small) == 1.0);  // (SA50, Small)
  CHECK(d.X(3, sa50s) == 1.0);
  CHECK(d.X(3, sa50l) == 0.0);
  CHECK(d.X(4, sa100s) == 1.0);  // (SA100, Small)
  CHECK(d.X(4, small) == 1.0);
}

TEST_CASE("a large-bidder observation under a full set-aside is rejected") {
  BidRecord r = base_record();
  r.vendor_type = SizeClass::Large;
  r.vendor_id = "L01";
  r.set_aside = 1.0;
  const std::vector<BidRecord> records = {r, base_record()};
  RegressionSpec spec;
  spec.response = Response::LogOffer;
  spec.terms = {Term::SetAsideBidderDummies};
  CHECK_THROWS_AS(build_design_matrix(records, spec), ValidationError);
}

TEST_CASE("log response takes the natural log of price") {
  BidRecord r = base_record();
  r.price_per_lb = Price::from_dollars(2.7183);  // price ticks are 1e-4
  RegressionSpec spec;
  spec.response = Response::LogOffer;
  spec.terms = {Term::Demand};
  const auto d = build_design_matrix({&r, 1}, spec);
  CHECK(d.y[0] == doctest::Approx(std::log(2.7183)).epsilon(1e-9));
}

TEST_CASE("counts response emits two rows per item") {
  std::vector<BidRecord> records;
  for (int v = 0; v < 3; ++v) {
    BidRecord r = base_record();
    r.vendor_id = v < 2 ? "S0" + std::to_string(v) : "L01";
    r.vendor_type = v < 2 ? SizeClass::Small : SizeClass::Large;
    records.push_back(r);
  }
  BidRecord other = base_record();
  other.item_id = "I2";
  records.push_back(other);

  const auto spec = RegressionSpec::counts(Weighting::Unit);
  const auto d = build_design_matrix(records, spec);
  REQUIRE(d.X.rows() == 4);  // 2 items x 2 size classes
  // rows come in (large, small) pairs per item
  CHECK(d.y[0] == 1.0);  // I1 large count
  CHECK(d.y[1] == 2.0);  // I1 small count
  CHECK(d.y[2] == 0.0);  // I2 large count
  CHECK(d.y[3] == 1.0);  // I2 small count
}

TEST_CASE("winners-only filter for the log-win response") {
  std::vector<BidRecord> records = {base_record(), base_record()};
  records[1].vendor_id = "S02";
  records[1].won = false;
  records[1].price_per_lb = Price::from_dollars(3.0);
  RegressionSpec spec;
  spec.response = Response::LogWin;
  spec.terms = {Term::Demand};
  const auto d = build_design_matrix(records, spec);
  CHECK(d.X.rows() == 1);
  CHECK(d.y[0] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("fit_wls") {
  SUBCASE("exact line through three points") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 0, 1, 1, 1, 2;
    Eigen::VectorXd y(3);
    y << 0, 1, 2;
    Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
    const auto beta = fit_wls(X, y, w);
    CHECK(beta[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(beta[1] == doctest::Approx(1.0).epsilon(1e-12));

    // exactly linear data makes weights irrelevant
    w << 1, 1, 10;
    const auto beta2 = fit_wls(X, y, w);
    CHECK(beta2[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(beta2[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("hand-solved weighted 3-point fixture") {
    // X = [1 0; 1 1; 1 2], y = (1, 1, 3), w = (1, 2, 1)
    // X'WX = [[4, 4], [4, 6]]; X'Wy = (6, 8)
    // beta = (X'WX)^-1 X'Wy = ([6*6-4*8]/8, [4*8-4*6]/8) = (0.5, 1.0)
    Eigen::MatrixXd X(3, 2);
    X << 1, 0, 1, 1, 1, 2;
    Eigen::VectorXd y(3);
    y << 1, 1, 3;
    Eigen::VectorXd w(3);
    w << 1, 2, 1;
    const auto beta = fit_wls(X, y, w);
    CHECK(beta[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(beta[1] == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("rank deficiency names the collinear column") {
    Eigen::MatrixXd X(4, 3);
    X << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8;
    Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    CHECK_THROWS_WITH_AS(fit_wls(X, y, w, {"Constant", "x", "2x"}),
                         doctest::Contains("rank deficient"), ValidationError);
  }
  SUBCASE("nonpositive weights rejected") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd w(2);
    w << 1, 0;
    CHECK_THROWS_AS(fit_wls(X, y, w), ValidationError);
  }
}

TEST_CASE("robust covariance") {
  SUBCASE("zero residuals give a zero matrix") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 0, 1, 1, 1, 2;
    Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
    CHECK(robust_covariance(X, w, e, HcFlavor::HC1).norm() == doctest::Approx(0.0));
  }
  SUBCASE("single-column hand computation") {
    // X = column of ones, w = 1: bread = 1/n, meat = sum e_i^2
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
    Eigen::VectorXd e(3);
    e << 1, -2, 1;
    const double hc0 = robust_covariance(X, w, e, HcFlavor::HC0)(0, 0);
    CHECK(hc0 == doctest::Approx(6.0 / 9.0).epsilon(1e-12));
    const double hc1 = robust_covariance(X, w, e, HcFlavor::HC1)(0, 0);
    CHECK(hc1 == doctest::Approx(hc0 * 3.0 / 2.0).epsilon(1e-12));
  }
  SUBCASE("weighted hand computation") {
    // one regressor x = (1, 2), w = (2, 1), e = (0.5, -1)
    // bread = 1/(2*1 + 1*4) = 1/6; meat = (2*0.5)^2*1 + (1*1)^2*4 = 5
    Eigen::MatrixXd X(2, 1);
    X << 1, 2;
    Eigen::VectorXd w(2);
    w << 2, 1;
    Eigen::VectorXd e(2);
    e << 0.5, -1;
    const double hc0 = robust_covariance(X, w, e, HcFlavor::HC0)(0, 0);
    CHECK(hc0 == doctest::Approx(5.0 / 36.0).epsilon(1e-12));
  }
}

TEST_CASE("weighted R^2") {
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  Eigen::VectorXd w(3);
  w << 1, 1, 2;
  SUBCASE("perfect fit gives 1") { CHECK(weighted_r2(y, y, w) == doctest::Approx(1.0)); }
  SUBCASE("weighted-mean fit gives 0") {
    const double ybar = (1.0 + 2.0 + 2.0 * 3.0) / 4.0;
    Eigen::VectorXd fitted = Eigen::VectorXd::Constant(3, ybar);
    CHECK(weighted_r2(y, fitted, w) == doctest::Approx(0.0));
  }
  SUBCASE("hand fixture") {
    // fitted = (1, 2, 2): rss = 2*(1)^2 = 2; ybar = 2.25,
    // tss = 1*1.5625 + 1*0.0625 + 2*0.5625 = 2.75
    Eigen::VectorXd fitted(3);
    fitted << 1, 2, 2;
    CHECK(weighted_r2(y, fitted, w) == doctest::Approx(1.0 - 2.0 / 2.75).epsilon(1e-12));
  }
  SUBCASE("constant response is an explicit error") {
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 2.0);
    CHECK_THROWS_AS(weighted_r2(flat, flat, w), ValidationError);
  }
}

TEST_CASE("product-equalized weights") {
  auto rec = [](const std::string& product, Lbs qty) {
    BidRecord r;
    r.product_code = product;
    r.quantity_lbs = qty;
    return r;
  };
  SUBCASE("one record per product gets weight 1") {
    const std::vector<BidRecord> records = {rec("A", 40000), rec("B", 80000)};
    const auto w = product_equalized_weights(records);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w[1] == doctest::Approx(1.0));
  }
  SUBCASE("splits are quantity shares") {
    const std::vector<BidRecord> records = {rec("A", 40000), rec("A", 40000),
                                            rec("B", 80000)};
    const auto w = product_equalized_weights(records);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
    CHECK(w[2] == doctest::Approx(1.0));
  }
  SUBCASE("per-product sums are 1.0 on arbitrary inputs") {
    Rng rng(404);
    std::vector<BidRecord> records;
    for (int i = 0; i < 500; ++i) {
      records.push_back(
          rec("P" + std::to_string(rng.uniform_int(0, 7)), rng.uniform_int(1, 90000)));
    }
    const auto w = product_equalized_weights(records);
    std::map<std::string, double> sums;
    for (std::size_t i = 0; i < records.size(); ++i) sums[records[i].product_code] += w[i];
    for (const auto& [p, s] : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("log-coefficient interpretation") {
  CHECK(interpret_log_coefficient(-0.2443) == doctest::Approx(-0.2167).epsilon(5e-4));
  CHECK(interpret_log_coefficient(0.0318) == doctest::Approx(0.0323).epsilon(5e-4));
  CHECK(interpret_log_coefficient(0.0) == 0.0);
  SUBCASE("exp-log round trip") {
    for (double x : {-0.5, -0.1, 0.0, 0.25, 2.0}) {
      CHECK(interpret_log_coefficient(std::log1p(x)) == doctest::Approx(x).epsilon(1e-12));
    }
  }
}

TEST_CASE("marginal bidder effect") {
  FitResult f;
  f.names = {"Number of bidders", "Number of bidders^2"};
  f.coefficients.resize(2);
  f.coefficients << -0.0310, 0.0013;
  CHECK(marginal_effect_nbid(f, 7) ==
        doctest::Approx(std::exp(-0.0310 + 0.0013 * 15.0) - 1.0).epsilon(1e-12));
  CHECK(marginal_effect_nbid(f, 7) == doctest::Approx(-0.0114).epsilon(0.01));

  SUBCASE("quadratic term zero makes the effect n-independent") {
    f.coefficients << -0.0310, 0.0;
    CHECK(marginal_effect_nbid(f, 2) == doctest::Approx(marginal_effect_nbid(f, 9)));
  }
  SUBCASE("zero coefficients give zero effect") {
    f.coefficients << 0.0, 0.0;
    CHECK(marginal_effect_nbid(f, 5) == doctest::Approx(0.0));
  }
  SUBCASE("missing terms error") {
    FitResult empty;
    empty.names = {"Constant"};
    empty.coefficients = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(marginal_effect_nbid(empty, 5), ValidationError);
  }
}

namespace {

std::vector<BidRecord> synthetic_records(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<BidRecord> records;
  for (int i = 0; i < n; ++i) {
    BidRecord r = base_record();
    r.item_id = "I" + std::to_string(i / 3);
    r.auction_id = "A" + std::to_string(i / 9);
    const bool small = rng.bernoulli(0.6);
    r.vendor_type = small ? SizeClass::Small : SizeClass::Large;
    r.vendor_id = (small ? "S0" : "L0") + std::to_string(rng.uniform_int(1, 4));
    const double alphas[] = {0.0, 0.5, 1.0};
    r.set_aside = alphas[rng.uniform_int(0, small ? 2 : 1)];
    r.demand_mlbs = rng.uniform(0.05, 2.0);
    r.quantity_lbs = rng.uniform_int(10000, 90000);
    r.n_bidders_item = static_cast<int>(rng.uniform_int(2, 9));
    // four codes over two groups x two packages; SDVOSB is on one code per
    // group so it is not spanned by the group and package dummies
    static const char* codes[] = {"BEEF-CTN", "BEEF-PKG", "PORK-CTN", "PORK-PKG"};
    static const char* packages[] = {"CTN", "PKG", "CTN", "PKG"};
    const int pc = static_cast<int>(rng.uniform_int(0, 3));
    r.product_code = codes[pc];
    r.package_class = packages[pc];
    r.sdvosb = pc == 0 || pc == 3;
    r.wholesale_price = rng.uniform(2.0, 3.0);
    r.usda_ref_price = rng.uniform(2.0, 3.0);
    r.price_per_lb = Price::from_dollars(rng.uniform(1.5, 3.5));
    r.won = rng.bernoulli(0.3);
    records.push_back(r);
  }
  return records;
}

}  // namespace

TEST_CASE("unit weighting reproduces OLS and weights are scale invariant") {
  const auto records = synthetic_records(2025, 600);
  const auto spec = RegressionSpec::log_price(Response::LogOffer, Weighting::Quantity);
  const auto d = build_design_matrix(records, spec);

  // scale invariance
  const auto beta = fit_wls(d.X, d.y, d.w, d.names);
  const auto beta_scaled = fit_wls(d.X, d.y, (7.5 * d.w).eval(), d.names);
  CHECK((beta - beta_scaled).norm() < 1e-9);

  Eigen::VectorXd resid = d.y - d.X * beta;
  const auto cov = robust_covariance(d.X, d.w, resid, HcFlavor::HC1);
  Eigen::VectorXd w_scaled = 7.5 * d.w;
  const auto cov_scaled = robust_covariance(d.X, w_scaled, resid, HcFlavor::HC1);
  CHECK((cov - cov_scaled).norm() < 1e-9 * cov.norm() + 1e-15);

  // unit weights equal plain OLS via the normal equations
  const auto spec_u = RegressionSpec::log_price(Response::LogOffer, Weighting::Unit);
  const auto du = build_design_matrix(records, spec_u);
  const Eigen::VectorXd ols =
      (du.X.transpose() * du.X).ldlt().solve(du.X.transpose() * du.y);
  const auto wls = fit_wls(du.X, du.y, du.w, du.names);
  CHECK((ols - wls).norm() < 1e-8);
}

TEST_CASE("record order does not change the fit") {
  auto records = synthetic_records(88, 400);
  const auto spec = RegressionSpec::log_price(Response::LogOffer, Weighting::Quantity);
  const auto f1 = fit_regression(records, spec);
  std::mt19937 g(3);
  std::shuffle(records.begin(), records.end(), g);
  const auto f2 = fit_regression(records, spec);
  REQUIRE(f1.names == f2.names);
  CHECK((f1.coefficients - f2.coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit result invariants") {
  const auto records = synthetic_records(19, 500);
  const auto f =
      fit_regression(records, RegressionSpec::log_price(Response::LogOffer, Weighting::Quantity));
  CHECK(f.n_obs == 500);
  CHECK((f.covariance - f.covariance.transpose()).norm() == doctest::Approx(0.0));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.covariance);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
  for (Eigen::Index j = 0; j < f.robust_se.size(); ++j) {
    CHECK(f.robust_se[j] == doctest::Approx(std::sqrt(f.covariance(j, j))));
  }
  CHECK(f.spec_tag == "log_offer/wls-quantity");
}
