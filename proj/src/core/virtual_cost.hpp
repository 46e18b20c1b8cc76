// Leakage-adjusted virtual cost and its induced density.
//
// For group i under leakage coefficient b the virtual cost is
//   phi_i(c) = c - h_i(c) + (1 - b) F_i(c)/f_i(c) = (1 - b)(c + F_i(c)/f_i(c)).
// The solver works in phi-space; pushing each group's cost law through phi_i
// and mixing with the group masses yields the virtual-cost density
// omega(x) = sum_i q_i f_i(u_i(x)) / phi_i'(u_i(x)) over participants, whose
// total mass is theta_bar.
#pragma once

#include <functional>
#include <vector>

#include "market_model.hpp"

namespace lm {

// Threshold type tau_i = F_i^{-1}(theta*): the equilibrium cost cutoff.
inline double cost_threshold(const cost_distribution& dist, double theta) {
  return dist.quantile(theta);
}

class virtual_cost_curve {
 public:
  virtual_cost_curve(const cost_distribution& dist, double b);

  double phi(double c) const;
  // Central difference with step 1e-5 * support width (one-sided at the ends).
  double phi_prime(double c) const;
  // Inverse of phi restricted to [c_min, hi]; requires regularity. Bisection
  // to 1e-10 absolute in c; values of x outside the range clamp to the ends.
  double inverse(double x, double hi) const;

  double c_min() const { return dist_->c_min(); }
  double c_max() const { return dist_->c_max(); }
  double b() const { return b_; }
  const cost_distribution& dist() const { return *dist_; }

 private:
  const cost_distribution* dist_;
  double b_;
};

struct regularity_report {
  bool pass = true;
  bool monotone = true;       // phi non-decreasing on the 500-point grid
  bool density_ok = true;     // F f' <= 2 f^2 on the same grid
  double first_violation_c = 0.0;
  std::string detail;
};

// Checks both regularity conditions on a 500-point interior grid of the
// support, using the analytic pdf derivative.
regularity_report regularity_check(const cost_distribution& dist, double b);

// Cumulative integral table: int_{a}^{c} fn on a uniform grid with a 16-node
// Gauss-Legendre panel per cell, partial cells integrated on the fly.
class cumulative_integral {
 public:
  cumulative_integral() = default;
  cumulative_integral(std::function<double(double)> fn, double a, double b,
                      int cells = 1024);
  double eval(double c) const;  // int_a^{min(c, b)} fn
  double total() const { return cum_.empty() ? 0.0 : cum_.back(); }

 private:
  std::function<double(double)> fn_;
  double a_ = 0.0, b_ = 0.0, dx_ = 0.0;
  std::vector<double> cum_;  // cum_[j] = integral up to a + j*dx
};

// Everything the optimizer needs, derived once per (config, profile):
// leakage coefficients, thresholds, virtual-cost curves, the leakage floor l
// and per-capita residual B/s - l, plus phi-space partial integrals.
struct market_view {
  market_config cfg;
  participation_profile prof;

  std::vector<double> b;       // leakage coefficient per group
  std::vector<double> delta;   // Delta_i = h_i(tau_i) - g_i(tau_i)
  double w = 0.0;              // participation benefit at theta_bar
  double leakage_floor = 0.0;  // l = sum_i q_i theta_i (Delta_i - w)
  double pc_budget = 0.0;      // B/s
  double residual = 0.0;       // B/s - l

  std::vector<virtual_cost_curve> phi;
  double phi_min = 0.0;  // min_i phi_i(c_min_i)
  double phi_max = 0.0;  // max_i phi_i(tau_i)

  // Group-local endpoints of phi on the participant interval [c_min, tau_i].
  std::vector<double> phi_lo, phi_hi;

  market_view(market_config c, participation_profile p);

  size_t n_groups() const { return cfg.groups.size(); }
  double q(size_t i) const { return cfg.groups[i].mass; }
  double gamma() const { return cfg.gamma; }
  double s() const { return static_cast<double>(cfg.population_size); }
  double theta_bar() const { return prof.theta_bar; }

  // Cost where group i's virtual cost reaches x, clamped to [c_min, tau_i].
  double knee_cost(size_t i, double x) const;

  // Partial mixture integrals over participants, split at virtual cost x:
  //   int_phi_below(x)  = sum_i q_i int_{c_min}^{u_i(x)} phi_i f_i dc
  //   int_sqrt_above(x) = sum_i q_i int_{u_i(x)}^{tau_i} sqrt(phi_i) f_i dc
  //   mass_above(x)     = sum_i q_i (theta_i - F_i(u_i(x)))
  double int_phi_below(double x) const;
  double int_sqrt_above(double x) const;
  double mass_above(double x) const;
  double int_phi_total() const;   // sum_i q_i int phi_i f_i over participants
  double int_sqrt_total() const;  // sum_i q_i int sqrt(phi_i) f_i

  // Mixture virtual-cost density omega at x and its total mass.
  double omega(double x) const;
  double omega_mass() const;

 private:
  std::vector<cumulative_integral> cum_phi_, cum_sqrt_;
};

// Convenience: build the view from config + explicit rates (or the config's
// default rates when empty: 0.5 clamped into [theta_min, 1]).
market_view make_view(const market_config& cfg, std::vector<double> rates = {});

}  // namespace lm
