// Continuous allocation optimizer implementation.
#include "allocation.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "numeric.hpp"

namespace lm {

budget_breakdown budget_residual(const market_view& view) {
  budget_breakdown out;
  out.per_capita_budget = view.cfg.budget / double(view.cfg.population_size);
  out.leakage_floor = view.leakage_floor;
  out.group_addend.resize(view.cfg.groups.size());
  for (size_t i = 0; i < view.cfg.groups.size(); ++i) {
    out.group_addend[i] = view.cfg.groups[i].mass * view.prof.rates[i] *
                          (view.delta[i] - view.w);
  }
  out.residual = out.per_capita_budget - out.leakage_floor;
  out.feasible = out.residual > 0.0;
  return out;
}

double q_cont(const market_view& view, double x) {
  return view.int_phi_below(x) + std::sqrt(x) * view.int_sqrt_above(x);
}

double r_cont(const market_view& view, double x) {
  const double tb = view.prof.theta_bar;
  const double c0 = tb * tb * (1.0 - tb) * (1.0 - view.cfg.gamma) *
                    double(view.cfg.population_size);
  return 2.0 * view.cfg.gamma *
             (view.int_phi_below(x) / x + view.mass_above(x)) +
         c0;
}

bool check_low_budget(const market_view& view) {
  const auto bb = budget_residual(view);
  if (!bb.feasible) return false;
  const double tb = view.prof.theta_bar;
  const double gamma = view.cfg.gamma;
  const double lhs =
      bb.residual * (2.0 * gamma + tb * (1.0 - tb) * (1.0 - gamma) *
                                       double(view.cfg.population_size));
  const double rhs =
      gamma * std::sqrt(view.phi_min) * view.int_sqrt_total();
  return lhs < rhs;
}

double allocation_rule::at_phi(double x) const {
  double a;
  if (structure == rule_shape::flat) {
    a = chi;
  } else if (x <= phi_hat) {
    a = chi;
  } else {
    a = tail_scale / std::sqrt(x);
  }
  return std::clamp(a, 0.0, 1.0);
}

double allocation_rule::at(size_t group, double c) const {
  const auto& g = view->cfg.groups[group];
  const double tau = view->prof.tau[group];
  const double width = g.cost.c_max() - g.cost.c_min();
  if (c > tau + 1e-12 * width) return epsilon;
  const double cc = std::clamp(c, g.cost.c_min(), tau);
  return at_phi(view->phi[group].phi(cc));
}

double allocation_rule::knee_c(size_t group) const {
  const double tau = view->prof.tau[group];
  if (structure == rule_shape::flat) return tau;
  if (structure == rule_shape::sd) return view->cfg.groups[group].cost.c_min();
  return view->knee_cost(group, phi_hat);
}

allocation_rule solve_allocation(std::shared_ptr<const market_view> view) {
  const market_view& v = *view;
  // The 1/sqrt tail shape is only optimal when every group's virtual cost is
  // increasing on the participant interval.
  for (size_t i = 0; i < v.cfg.groups.size(); ++i) {
    auto reg = regularity_check(v.cfg.groups[i].cost, v.b[i]);
    if (!reg.pass)
      fail(errc::regime, "groups[" + std::to_string(i) +
                             "]: virtual cost is not regular: " + reg.detail);
  }

  const auto bb = budget_residual(v);
  require(bb.feasible, errc::infeasible,
          "per-capita budget does not cover the leakage floor (B/s = " +
              std::to_string(bb.per_capita_budget) +
              ", floor = " + std::to_string(bb.leakage_floor) + ")");
  const double res = bb.residual;
  const double phi_total = v.int_phi_total();
  require(res < phi_total, errc::regime,
          "residual budget covers full selection of every participant; the "
          "scarcity tradeoff is vacuous");

  const double tb = v.prof.theta_bar;
  const double gamma = v.cfg.gamma;

  allocation_rule rule;
  rule.view = view;
  rule.epsilon = v.cfg.epsilon;

  // Membership test at level x, cross-multiplied so gamma = 0 degrades
  // gracefully: "below" means the knee lies above x.
  auto below = [&](double x) {
    return res * r_cont(v, x) < gamma * tb * q_cont(v, x);
  };

  if (below(v.phi_min)) {
    // Case 1: knee below the support, pure 1/sqrt(phi). Budget pins eta.
    rule.structure = rule_shape::sd;
    rule.case_tag = "1";
    rule.phi_hat = v.phi_min;
    rule.tail_scale = res / v.int_sqrt_total();
    rule.chi = rule.tail_scale / std::sqrt(v.phi_min);
    require(rule.chi <= 1.0 + 1e-9, errc::internal,
            "case-1 allocation exceeds one");
    rule.chi = std::min(rule.chi, 1.0);
    return rule;
  }
  if (!below(v.phi_max)) {
    // Case 3: knee above the support, flat rule sized by the budget.
    rule.structure = rule_shape::flat;
    rule.case_tag = "3";
    rule.phi_hat = v.phi_max;
    rule.chi = res / phi_total;  // < 1 by the scarcity guard above
    rule.tail_scale = rule.chi * std::sqrt(v.phi_max);
    return rule;
  }

  // Case 2: the knee gap gamma tb Q_c - res R_c changes sign inside the
  // support. It is negative at phi_min and positive at phi_max here.
  auto knee_gap = [&](double x) {
    return gamma * tb * q_cont(v, x) - res * r_cont(v, x);
  };
  const double span = v.phi_max - v.phi_min;
  const double phi_prime =
      bisect(knee_gap, v.phi_min, v.phi_max, 1e-12 * std::max(span, 1.0));
  const double chi_cand = res / q_cont(v, phi_prime);

  if (chi_cand <= 1.0) {
    // Case 2a: interior plateau below one; the tail joins continuously.
    rule.structure = rule_shape::ftd;
    rule.case_tag = "2a";
    rule.phi_hat = phi_prime;
    rule.chi = chi_cand;
    rule.tail_scale = chi_cand * std::sqrt(phi_prime);
    return rule;
  }

  // Case 2b: plateau saturates at one and the knee moves right until the
  // budget identity Q_c(phi_hat) = res holds. Q_c is nondecreasing, with
  // Q_c(phi_prime) = res/chi_cand < res and Q_c(phi_max) = phi_total > res,
  // so a root exists in (phi_prime, phi_max). Where the mixture density
  // vanishes Q_c can be locally constant; take the smallest root.
  auto q_gap = [&](double x) { return q_cont(v, x) - res; };
  double hat = bisect(q_gap, phi_prime, v.phi_max, 1e-12 * std::max(span, 1.0));
  {
    // Walk to the left edge of the root interval.
    double lo = phi_prime, hi = hat;
    const double tol = 1e-12 * std::max(res, 1.0);
    for (int it = 0; it < 100 && hi - lo > 1e-13 * std::max(span, 1.0); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (q_cont(v, mid) >= res - tol)
        hi = mid;
      else
        lo = mid;
    }
    hat = hi;
  }
  rule.structure = rule_shape::ftd;
  rule.case_tag = "2b";
  rule.phi_hat = hat;
  rule.chi = 1.0;
  // Spend whatever the plateau leaves on the tail. Q_c(hat) = res makes this
  // sqrt(hat), i.e. the rule stays continuous at the knee.
  const double tail_mass = v.int_sqrt_above(hat);
  rule.tail_scale = tail_mass > 1e-300
                        ? (res - v.int_phi_below(hat)) / tail_mass
                        : std::sqrt(hat);
  return rule;
}

}  // namespace lm
