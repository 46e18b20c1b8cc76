// Payment engine: truthful payments supporting the solved allocation rule,
// plus the audits that certify them. For a report ctilde in the menu
// [c_min, tau_i] the selected payment is
//   P_i(ctilde) = (1-b_i) ctilde + [ (1-b_i) S_i(ctilde) + Delta_i - w ] / A_i(ctilde)
// with S_i(c) = int_c^tau_i A_i(z) dz. The engine pins the constant so the
// marginal type tau_i is exactly indifferent (U_i(tau_i) = -g_i(tau_i)), which
// is what sustains the threshold participation profile. Interim utility obeys
// the envelope identity dU/dc = -(1-b_i) A_i(c) - b_i.
#pragma once

#include <memory>
#include <optional>

#include "allocation.hpp"

namespace lm {

struct mechanism {
  std::shared_ptr<const market_view> view;
  allocation_rule rule;
  std::vector<double> kappa;  // pinned payment constants, one per group

  // Selected payment for a menu report (clamped to [c_min_i, tau_i]).
  double payment(size_t group, double c_report) const;
  // S_i(c) = int_c^tau_i A_i(z) dz via knee-aligned cumulative tables.
  double alloc_integral_above(size_t group, double c) const;
  // Interim utility of reporting c_report with true cost c_true:
  //   U = A(ct) (ct - h(ct) - c + h(c)) + (1-b) Sfull(ct) + kappa - h(c) + w,
  // with Sfull(ct) = int_ct^{c_max} A the full continuation integral (the
  // epsilon stub above tau_i included). Reports above tau_i are meaningful
  // only when epsilon > 0.
  double utility(size_t group, double c_report, double c_true) const;
  // Utility of the truthful report: U_i(c) = U(c; c).
  double truthful_utility(size_t group, double c) const;
  // Knee cost of group i's allocation (c_max when the rule never flattens).
  double knee(size_t group) const { return knee_[group]; }

 private:
  friend mechanism build_mechanism(std::shared_ptr<const market_view>);
  friend mechanism attach_payments(const allocation_rule&,
                                   const std::vector<double>*);
  std::vector<cumulative_integral> s_low_;   // int over [c_min, knee]
  std::vector<cumulative_integral> s_high_;  // int over [knee, tau]
  std::vector<double> knee_;                 // knee cost per group
};

// Solve the allocation and pin the payment constants.
mechanism build_mechanism(std::shared_ptr<const market_view> view);

// Attach payments to an already-solved rule. kappa_override (when non-null)
// replaces the pinned constants; the audits use it to show that a tampered
// constant is caught.
mechanism attach_payments(const allocation_rule& rule,
                          const std::vector<double>* kappa_override = nullptr);

struct payment_total {
  double direct = 0.0;       // s sum_i q_i int A_i P_i f_i over participants
  double via_virtual = 0.0;  // s (sum_i q_i int phi_i A_i f_i + l)
  double budget = 0.0;       // B
  std::vector<double> per_group;  // direct route, group by group
};

// Expected spend, computed two ways; the direct and virtual-cost routes must
// agree, and both must stay within budget.
payment_total expected_total_payment(const mechanism& m);

struct truthfulness_report {
  bool pass = false;
  long long samples = 0;
  long long violations = 0;          // argmax farther than one grid step
  long long offplateau_ties = 0;     // ties outside a plateau (SD must be strict)
  double max_gain = 0.0;             // max over samples of U(best) - U(truth)
  double max_envelope_gap = 0.0;     // relative envelope-identity error
  double max_boundary_gap = 0.0;     // max |U(tau;tau) + g(tau)|
  std::string detail;
};

// Samples participant (group, cost) pairs and checks that the truthful report
// maximizes utility over a report grid; also checks the envelope identity and
// the pinned boundary condition.
truthfulness_report truthfulness_audit(const mechanism& m, int samples = 200,
                                       uint64_t seed = 1,
                                       int report_grid = 1000);

struct participation_report {
  bool pass = false;
  std::vector<double> theta_hat;      // mass of costs that prefer to join
  std::vector<double> boundary_cost;  // empirical join/stay-out boundary
  double max_theta_gap = 0.0;         // max_i |theta_hat_i - theta_i|
  bool threshold_shape = false;       // join set is a lower interval
  std::string detail;
};

// Grid-checks that joining is optimal exactly below tau_i: the decision
// boundary must sit within one grid step of tau_i and integrate back to
// theta_i within tol.
participation_report participation_audit(const mechanism& m,
                                         int grid = 4001,
                                         double tol = 1e-3);

struct underpayment_report {
  bool regime_met = true;   // sufficient condition holds for every group
  bool holds = true;        // pointwise P_b <= P_0 on the sampled grid
  double max_excess = 0.0;  // max over grid of P_b - P_0
  std::string detail;
};

// Compares the leakage-aware payment against the payment the same rule would
// pin with b = 0: leakage must not raise pay. P_b - P_0 is nonpositive over
// the whole menu iff A_i(tau_i) >= 1 - g_i(tau_i)/h_i(tau_i) (the condition
// binds at tau_i, where the continuation integral vanishes); that is the
// regime gate, evaluated per group.
underpayment_report underpayment_check(const mechanism& m, int grid = 512);

}  // namespace lm
