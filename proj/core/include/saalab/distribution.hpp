#pragma once

#include <utility>
#include <vector>

namespace saalab {

// Private-value distribution with evaluable cdf/density on a bounded support.
// f must be strictly positive on the open support and F strictly increasing.
class ValueDistribution {
 public:
  enum class Kind { Uniform, TruncatedNormal, PiecewiseLinearCdf };

  static ValueDistribution uniform(double lo, double hi);
  static ValueDistribution truncated_normal(double mu, double sigma, double lo, double hi);
  // knots: (value, cdf) pairs, strictly increasing in both coordinates,
  // first cdf 0 and last cdf 1
  static ValueDistribution piecewise_linear_cdf(std::vector<std::pair<double, double>> knots);

  double cdf(double v) const;
  double pdf(double v) const;
  double quantile(double u) const;

  double lower() const { return lo_; }
  double upper() const { return hi_; }
  Kind kind() const { return kind_; }

 private:
  ValueDistribution() = default;

  Kind kind_ = Kind::Uniform;
  double lo_ = 0.0, hi_ = 1.0;
  double mu_ = 0.0, sigma_ = 1.0;
  double z_lo_ = 0.0, z_span_ = 1.0;  // truncation normalizers
  std::vector<std::pair<double, double>> knots_;
};

}  // namespace saalab
