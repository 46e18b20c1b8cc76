// Market primitives: group specifications, the privacy-cost model
// (participant leakage h, outsider leakage g, participation benefit w), the
// participation profile, and the structural assumption validator.
//
// Leakage model: group i facing profile theta has coefficient
//   b_i = min(b_cap, alpha_intra_i * theta_i + alpha_inter_i * theta_{-i}),
// where theta_{-i} is the mass-weighted participation rate of the other
// groups. A participant with cost c suffers h_i(c) = c * b_i; an outsider
// suffers g_i(c), either rho * h_i(c) (default family) or
// max(h_i(c) - kappa * c, 0) (offset family). Everyone who participates also
// enjoys w(theta_bar) = w0 + w1 * theta_bar.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distributions.hpp"

namespace lm {

struct correlation_strength {
  double intra = 0.0;
  double inter = 0.0;
};

// Probability that an agent with cost c holds the data bit:
// p(c) = clamp(p0 + slope * (c - c_min)/(c_max - c_min), 0, 1).
struct data_link {
  double p0 = 0.0;
  double slope = 0.0;
};

enum class g_family { rho_scaled, offset };

struct privacy_cost_model {
  double b_cap = 0.9;
  double rho = 0.0;    // rho_scaled family: g = rho * h
  g_family family = g_family::rho_scaled;
  double kappa = 0.0;  // offset family: g = max(h - kappa * c, 0)
  double w0 = 0.0;
  double w1 = 0.0;
};

struct group_spec {
  double mass = 0.0;
  cost_distribution cost;
  correlation_strength correlation;
  data_link link;

  double data_prob(double c) const;
};

struct market_config {
  long long population_size = 0;  // s
  double budget = 0.0;            // B
  double gamma = 0.0;             // variance weight in the objective
  double theta_min = 0.0;         // lower bound for admissible rates
  double epsilon = 0.0;           // allocation granted to out-of-range reports
  privacy_cost_model privacy;
  std::vector<group_spec> groups;
  std::vector<double> default_rates;  // optional; empty means 0.5 per group

  size_t n_groups() const { return groups.size(); }
};

// Hard invariants; throws errc::config naming the offending field.
void validate_config(const market_config& cfg);

struct participation_profile {
  std::vector<double> rates;  // theta*_i, one per group
  std::vector<double> tau;    // cost threshold quantile_i(theta*_i)
  double theta_bar = 0.0;     // mass-weighted mean rate
};

// Builds the profile (thresholds, mean rate) and checks rates against
// [theta_min, 1].
participation_profile make_profile(const market_config& cfg,
                                   std::vector<double> rates);

// Mass-weighted participation rate of the groups other than i (0 when the
// market has a single group: nobody else leaks into it).
double theta_minus(const market_config& cfg, const std::vector<double>& rates,
                   size_t i);

// Leakage coefficient b_i under the given profile.
double leakage_coefficient(const market_config& cfg,
                           const std::vector<double>& rates, size_t i);

double privacy_cost_participant(const market_config& cfg,
                                const std::vector<double>& rates, size_t i,
                                double c);  // h_i(c)
double privacy_cost_outsider(const market_config& cfg,
                             const std::vector<double>& rates, size_t i,
                             double c);  // g_i(c)
double participation_benefit(const privacy_cost_model& m, double theta_bar);

struct assumption_violation {
  std::string path;        // e.g. "groups[1].data_link.slope"
  std::string assumption;  // short name of the violated assumption
  std::string message;
  double value = 0.0;
};

struct assumption_report {
  bool pass = true;
  std::vector<assumption_violation> items;
};

// Structural checks over a 200-point cost grid per group and a 20x20
// participation-rate grid (random profiles when the market has more than two
// groups). Collects every violation; never throws.
assumption_report validate_assumptions(const market_config& cfg);

}  // namespace lm
