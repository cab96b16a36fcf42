#include "saalab/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "saalab/errors.hpp"

namespace saalab {

namespace {
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}
}  // namespace

ValueDistribution ValueDistribution::uniform(double lo, double hi) {
  if (!(hi > lo)) throw ValidationError("uniform distribution requires hi > lo");
  ValueDistribution d;
  d.kind_ = Kind::Uniform;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

ValueDistribution ValueDistribution::truncated_normal(double mu, double sigma, double lo,
                                                      double hi) {
  if (!(hi > lo) || !(sigma > 0.0)) {
    throw ValidationError("truncated normal requires hi > lo and sigma > 0");
  }
  ValueDistribution d;
  d.kind_ = Kind::TruncatedNormal;
  d.lo_ = lo;
  d.hi_ = hi;
  d.mu_ = mu;
  d.sigma_ = sigma;
  d.z_lo_ = std_normal_cdf((lo - mu) / sigma);
  d.z_span_ = std_normal_cdf((hi - mu) / sigma) - d.z_lo_;
  if (!(d.z_span_ > 0.0)) throw ValidationError("degenerate truncation window");
  return d;
}

ValueDistribution ValueDistribution::piecewise_linear_cdf(
    std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw ValidationError("piecewise cdf needs at least 2 knots");
  if (knots.front().second != 0.0 || knots.back().second != 1.0) {
    throw ValidationError("piecewise cdf must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].first > knots[i - 1].first) ||
        !(knots[i].second > knots[i - 1].second)) {
      throw ValidationError("piecewise cdf knots must be strictly increasing");
    }
  }
  ValueDistribution d;
  d.kind_ = Kind::PiecewiseLinearCdf;
  d.lo_ = knots.front().first;
  d.hi_ = knots.back().first;
  d.knots_ = std::move(knots);
  return d;
}

double ValueDistribution::cdf(double v) const {
  if (v <= lo_) return 0.0;
  if (v >= hi_) return 1.0;
  switch (kind_) {
    case Kind::Uniform:
      return (v - lo_) / (hi_ - lo_);
    case Kind::TruncatedNormal:
      return (std_normal_cdf((v - mu_) / sigma_) - z_lo_) / z_span_;
    case Kind::PiecewiseLinearCdf: {
      const auto it = std::upper_bound(
          knots_.begin(), knots_.end(), v,
          [](double x, const std::pair<double, double>& k) { return x < k.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double t = (v - lo.first) / (hi.first - lo.first);
      return lo.second + t * (hi.second - lo.second);
    }
  }
  return 0.0;
}

double ValueDistribution::pdf(double v) const {
  if (v < lo_ || v > hi_) return 0.0;
  switch (kind_) {
    case Kind::Uniform:
      return 1.0 / (hi_ - lo_);
    case Kind::TruncatedNormal:
      return std_normal_pdf((v - mu_) / sigma_) / (sigma_ * z_span_);
    case Kind::PiecewiseLinearCdf: {
      const double vv = std::min(std::max(v, lo_), hi_);
      auto it = std::upper_bound(
          knots_.begin(), knots_.end(), vv,
          [](double x, const std::pair<double, double>& k) { return x < k.first; });
      if (it == knots_.end()) --it;
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      return (hi.second - lo.second) / (hi.first - lo.first);
    }
  }
  return 0.0;
}

double ValueDistribution::quantile(double u) const {
  if (u <= 0.0) return lo_;
  if (u >= 1.0) return hi_;
  switch (kind_) {
    case Kind::Uniform:
      return lo_ + u * (hi_ - lo_);
    case Kind::PiecewiseLinearCdf: {
      const auto it = std::upper_bound(
          knots_.begin(), knots_.end(), u,
          [](double x, const std::pair<double, double>& k) { return x < k.second; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double t = (u - lo.second) / (hi.second - lo.second);
      return lo.first + t * (hi.first - lo.first);
    }
    case Kind::TruncatedNormal:
      break;
  }
  // bisection on the cdf; 80 iterations is ample for double precision
  double a = lo_, b = hi_;
  for (int i = 0; i < 80; ++i) {
    const double m = 0.5 * (a + b);
    (cdf(m) < u ? a : b) = m;
  }
  return 0.5 * (a + b);
}

}  // namespace saalab
