#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "saalab/simulation.hpp"

namespace saalab {

enum class Response { NBidders, LogOffer, LogWin };
enum class Weighting { Quantity, ProductEqualized, Unit };
enum class HcFlavor { HC0, HC1 };

enum class Term {
  SetAsideBidderDummies,  // Small, SA50xLarge, SA50xSmall, SA100xSmall
  Demand,
  Demand2,
  NBid,
  NBid2,
  LogWholesale,
  LogUsdaRef,
  ProductFE,
  YearFE,
  VendorFE,
  Package,
  Sdvosb,
};

struct RegressionSpec {
  Response response = Response::NBidders;
  std::vector<Term> terms;
  Weighting weighting = Weighting::Quantity;

  // bidder counts ~ dummies + demand + demand^2 + product FE + year FE + SDVOSB
  static RegressionSpec counts(Weighting w = Weighting::Quantity);
  // log price ~ dummies + demand(^2) + nbid(^2) + log wholesale + log ref price
  //             + product FE + vendor FE + package + SDVOSB
  static RegressionSpec log_price(Response r, Weighting w = Weighting::Quantity);

  std::string tag() const;
};

struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  std::vector<std::string> names;
};

DesignMatrix build_design_matrix(std::span<const BidRecord> records,
                                 const RegressionSpec& spec);

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd robust_se;
  Eigen::MatrixXd covariance;
  int n_obs = 0;
  double weighted_r2 = 0.0;
  std::string spec_tag;

  double coefficient(const std::string& name) const;
  double se(const std::string& name) const;
  bool has(const std::string& name) const;
};

// beta solving (X' W X) beta = X' W y via QR of sqrt(W) X; errors on rank
// deficiency naming the collinear columns.
Eigen::VectorXd fit_wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w,
                        const std::vector<std::string>& names = {});

// sandwich (X'WX)^-1 X'W diag(e^2) WX (X'WX)^-1, HC1 scaled by n/(n-k)
Eigen::MatrixXd robust_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& residuals,
                                  HcFlavor flavor = HcFlavor::HC1);

double weighted_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted,
                   const Eigen::VectorXd& w);

// within each product weights are quantity shares, so each product's weights
// sum to exactly 1
std::vector<double> product_equalized_weights(std::span<const BidRecord> records);

// exp(beta) - 1: percent change implied by a log-response coefficient
double interpret_log_coefficient(double beta);

// discrete +1-bidder effect on a log response: exp(b_n + b_n2 (2n+1)) - 1
double marginal_effect_nbid(const FitResult& fit, double n);

FitResult fit(const DesignMatrix& design, HcFlavor flavor = HcFlavor::HC1,
              const std::string& tag = "");

FitResult fit_regression(std::span<const BidRecord> records, const RegressionSpec& spec,
                         HcFlavor flavor = HcFlavor::HC1);

}  // namespace saalab
