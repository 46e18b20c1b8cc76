// Cost distribution families on a bounded interval: uniform,
// truncated-exponential and beta-on-interval. Each exposes pdf, cdf, quantile
// and an analytic pdf derivative (the regularity check needs f' exactly, not
// a finite difference).
#pragma once

#include <string>

#include "error.hpp"

namespace lm {

enum class dist_family { uniform, truncated_exponential, beta_on_interval };

class cost_distribution {
 public:
  static cost_distribution uniform(double c_min, double c_max);
  static cost_distribution truncated_exponential(double c_min, double c_max,
                                                 double lambda);
  static cost_distribution beta_on_interval(double c_min, double c_max,
                                            double alpha, double beta);

  double pdf(double c) const;
  double cdf(double c) const;
  double quantile(double u) const;  // u in [0, 1]
  double pdf_derivative(double c) const;

  double c_min() const { return c_min_; }
  double c_max() const { return c_max_; }
  double width() const { return c_max_ - c_min_; }
  dist_family family() const { return family_; }
  double param_a() const { return a_; }  // lambda, or beta alpha
  double param_b() const { return b_; }  // beta beta
  std::string family_name() const;

 private:
  cost_distribution(dist_family fam, double lo, double hi, double a, double b);

  dist_family family_;
  double c_min_, c_max_;
  double a_ = 0.0, b_ = 0.0;
  double expo_z_ = 1.0;   // 1 - exp(-lambda * width), truncated-exponential only
  double beta_ln_ = 0.0;  // log Beta(alpha, beta), beta-on-interval only
};

}  // namespace lm
