// Bias-variance tradeoff evaluation. For a presence curve p_i(c) (the chance
// an agent of cost c holds usable data) and a selection rule A, the inverse
// propensity estimator has
//   V = (1/(s thetabar)) [ E_part[p/A] - E_part[p]^2 ],
//   Bias = (1 - thetabar)(1 - E_part[p]),
// where E_part averages over participants (cost below tau_i, group by mass).
// The worst case over monotone adversaries is computed by lifting the
// discrete saddle at a fine panelization back to cost space.
#pragma once

#include <functional>

#include "allocation.hpp"
#include "discrete.hpp"

namespace lm {

struct presence_curve {
  std::function<double(double)> prob;
  std::vector<double> cuts;  // interior breakpoints for piecewise integration
};

struct presence {
  std::vector<presence_curve> by_group;
  double at(size_t i, double c) const { return by_group[i].prob(c); }
};

// The configured data link p_i(c) (piecewise linear with clamp corners).
presence presence_from_links(const market_view& view);
// A constant presence level for every group.
presence presence_constant(const market_view& view, double level);

// Monotone step adversary, stored per group as sorted segment upper edges and
// values; evaluation clamps outside the covered range (so costs above tau_i
// inherit the last segment's level).
struct step_adversary {
  struct group_steps {
    std::vector<double> edge;  // ascending segment upper edges
    std::vector<double> value;
  };
  std::vector<group_steps> by_group;

  double at(size_t i, double c) const;
  presence to_presence() const;
  // Shift the level of the segment containing cost c by dp (clamped to [0,1]).
  void perturb_at(size_t i, double c, double dp);
};

struct tradeoff_values {
  double variance = 0.0;
  double bias = 0.0;
  double objective = 0.0;       // gamma V + (1-gamma) Bias
  double presence_mean = 0.0;   // E_part[p]
  double spend_above_floor = 0.0;  // sum_i q_i int phi_i A_i f_i
};

tradeoff_values evaluate_tradeoff(const allocation_rule& rule,
                                  const presence& p);

// Worst-case adversary: solve the lifted discrete game and map the saddle
// adversary back to cost space.
struct worst_case_report {
  tradeoff_values values;       // continuous evaluation at the lifted saddle
  step_adversary adversary;
  std::string case_tag;
  double discrete_value = 0.0;  // game value of the lifted instance
  // True when the discrete saddle certificate verified; the reported value is
  // then the minimax value of the lifted game, an upper bound over fixed
  // monotone adversaries up to panelization error.
  bool upper_bound_certified = false;
};

step_adversary adversary_best_response(const allocation_rule& rule,
                                       int panels = 1000);
worst_case_report worst_case_tradeoff(const allocation_rule& rule,
                                      int panels = 1000);

// Max tradeoff over a family of monotone step adversaries built from `levels`
// evenly spaced levels and `knots` evenly spaced switch points (constants,
// ramps from zero, ramps up to one, and general two-level steps).
double grid_search_adversary(const allocation_rule& rule, int levels = 20,
                             int knots = 20);

// Closed-form objective in the low-budget regime (case 1):
//   T* = (gamma/s) (r / (thetabar^2 (B/s - l)) - 1/thetabar),
// with r = (sum_i q_i int sqrt(phi_i) f_i)^2. errc::regime outside it.
struct reduced_objective_result {
  double t_star = 0.0;
  double r = 0.0;            // squared selection mass
  double residual = 0.0;     // B/s - l
  double theta_bar = 0.0;
};
reduced_objective_result reduced_objective(const market_view& view);

// Full-participation scan: over a rate grid, tests the marginal-value bound
// that makes T* nonincreasing in every theta_i (so theta = 1 is optimal).
// Two equivalent forms are evaluated independently: the data-value slope
// bound w1 >= D_i and the leakage-slope bound Delta_i' <= delta_i.
struct fp_point {
  std::vector<double> rates;
  double theta_bar = 0.0;
  bool feasible = false;    // residual > 0
  bool regular = false;     // virtual costs regular at this profile
  bool low_budget = false;  // closed-form regime test
  bool applicable = false;  // all three above
  std::vector<double> d_bound;      // D_i
  std::vector<double> delta_bound;  // delta_i
  std::vector<double> delta_prime;  // dDelta_i/dtheta_i
  std::vector<double> grad;         // dT*/dtheta_i (central difference)
  bool prop1 = false;   // w1 >= D_i for all i
  bool prop2 = false;   // Delta_i' <= delta_i for all i
  bool grad_ok = false; // dT*/dtheta_i <= tol for all i
  double t_star = 0.0;
};

struct fp_report {
  std::vector<fp_point> points;
  int applicable_points = 0;
  bool conditions_hold = false;  // prop1 at every applicable point
  bool optimal_on_grid = false;  // gradient nonpositive wherever applicable
};

fp_report full_participation_check(const market_config& cfg, int steps = 5);

}  // namespace lm
