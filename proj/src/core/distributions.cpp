#include "distributions.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

namespace lm {

cost_distribution::cost_distribution(dist_family fam, double lo, double hi,
                                     double a, double b)
    : family_(fam), c_min_(lo), c_max_(hi), a_(a), b_(b) {
  // The market-level contract additionally requires c_min > 0; the bare
  // distribution accepts c_min = 0 so textbook supports like [0, 1] remain
  // usable in isolation.
  require(lo >= 0.0 && hi > lo, errc::config,
          "cost distribution requires 0 <= c_min < c_max");
  switch (family_) {
    case dist_family::uniform:
      break;
    case dist_family::truncated_exponential:
      require(a_ > 0.0, errc::config, "truncated-exponential rate must be > 0");
      expo_z_ = -std::expm1(-a_ * width());
      break;
    case dist_family::beta_on_interval:
      require(a_ > 0.0 && b_ > 0.0, errc::config,
              "beta-on-interval shape parameters must be > 0");
      beta_ln_ = std::lgamma(a_) + std::lgamma(b_) - std::lgamma(a_ + b_);
      break;
  }
}

cost_distribution cost_distribution::uniform(double c_min, double c_max) {
  return {dist_family::uniform, c_min, c_max, 0.0, 0.0};
}

cost_distribution cost_distribution::truncated_exponential(double c_min,
                                                           double c_max,
                                                           double lambda) {
  return {dist_family::truncated_exponential, c_min, c_max, lambda, 0.0};
}

cost_distribution cost_distribution::beta_on_interval(double c_min, double c_max,
                                                      double alpha, double beta) {
  return {dist_family::beta_on_interval, c_min, c_max, alpha, beta};
}

double cost_distribution::pdf(double c) const {
  if (c < c_min_ || c > c_max_) return 0.0;
  switch (family_) {
    case dist_family::uniform:
      return 1.0 / width();
    case dist_family::truncated_exponential:
      return a_ * std::exp(-a_ * (c - c_min_)) / expo_z_;
    case dist_family::beta_on_interval: {
      const double x = (c - c_min_) / width();
      // pow handles the endpoint singularities (alpha or beta < 1 -> inf).
      return std::pow(x, a_ - 1.0) * std::pow(1.0 - x, b_ - 1.0) *
             std::exp(-beta_ln_) / width();
    }
  }
  return 0.0;
}

double cost_distribution::cdf(double c) const {
  if (c <= c_min_) return 0.0;
  if (c >= c_max_) return 1.0;
  switch (family_) {
    case dist_family::uniform:
      return (c - c_min_) / width();
    case dist_family::truncated_exponential:
      return -std::expm1(-a_ * (c - c_min_)) / expo_z_;
    case dist_family::beta_on_interval:
      return boost::math::ibeta(a_, b_, (c - c_min_) / width());
  }
  return 0.0;
}

double cost_distribution::quantile(double u) const {
  require(u >= 0.0 && u <= 1.0, errc::argument, "quantile argument outside [0, 1]");
  if (u <= 0.0) return c_min_;
  if (u >= 1.0) return c_max_;
  switch (family_) {
    case dist_family::uniform:
      return c_min_ + u * width();
    case dist_family::truncated_exponential:
      return c_min_ - std::log1p(-u * expo_z_) / a_;
    case dist_family::beta_on_interval:
      return c_min_ + width() * boost::math::ibeta_inv(a_, b_, u);
  }
  return c_min_;
}

double cost_distribution::pdf_derivative(double c) const {
  if (c < c_min_ || c > c_max_) return 0.0;
  switch (family_) {
    case dist_family::uniform:
      return 0.0;
    case dist_family::truncated_exponential:
      return -a_ * pdf(c);
    case dist_family::beta_on_interval: {
      const double x = (c - c_min_) / width();
      if (x <= 0.0 || x >= 1.0) return 0.0;
      return pdf(c) * ((a_ - 1.0) / x - (b_ - 1.0) / (1.0 - x)) / width();
    }
  }
  return 0.0;
}

std::string cost_distribution::family_name() const {
  switch (family_) {
    case dist_family::uniform:
      return "uniform";
    case dist_family::truncated_exponential:
      return "truncated_exponential";
    case dist_family::beta_on_interval:
      return "beta";
  }
  return "?";
}

}  // namespace lm
