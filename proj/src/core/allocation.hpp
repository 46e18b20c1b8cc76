// Continuous allocation optimizer. Mirrors the discrete saddle in
// virtual-cost space with
//   Q_c(x) = int_{phi<=x} phi w + sqrt(x) int_{phi>x} sqrt(phi) w,
//   R_c(x) = 2 gamma (int_{phi<=x} phi w / x + int_{phi>x} w) + c0,
// where w is the mixture virtual-cost density and
// c0 = thetabar^2 (1-thetabar)(1-gamma) s. The optimal rule is one of
//   case 1  (SD):   A = eta/sqrt(phi), strictly decreasing;
//   case 2a (FtD):  plateau chi < 1 up to the knee phi_hat, then chi
//                   sqrt(phi_hat/phi);
//   case 2b (FtD):  plateau at 1 up to phi_hat solving Q_c(phi_hat) = B/s - l
//                   (smallest root), then a continuous 1/sqrt(phi) tail;
//   case 3  (FLAT): constant chi = (B/s - l)/int phi w.
#pragma once

#include <memory>

#include "virtual_cost.hpp"

namespace lm {

struct budget_breakdown {
  double leakage_floor = 0.0;           // l
  std::vector<double> group_addend;     // q_i theta_i (Delta_i - w)
  double per_capita_budget = 0.0;       // B/s
  double residual = 0.0;                // B/s - l
  bool feasible = false;                // residual > 0
};

budget_breakdown budget_residual(const market_view& view);

// Q_c and R_c at virtual-cost level x (integrals taken in cost space group by
// group, so the density never has to be evaluated numerically).
double q_cont(const market_view& view, double x);
double r_cont(const market_view& view, double x);

// Low-budget regime test: (B/s - l)(2 gamma + thetabar(1-thetabar)(1-gamma)s)
// < gamma sqrt(phi_min) sum_i q_i int sqrt(phi_i) f_i. Equivalent to the
// case-1 membership test.
bool check_low_budget(const market_view& view);

enum class rule_shape { sd, ftd, flat };

struct allocation_rule {
  std::shared_ptr<const market_view> view;
  rule_shape structure = rule_shape::sd;
  std::string case_tag;      // "1" | "2a" | "2b" | "3"
  double chi = 0.0;          // plateau level (at_phi value below the knee)
  double phi_hat = 0.0;      // knee in virtual-cost space
  double tail_scale = 0.0;   // eta: A = eta/sqrt(phi) above the knee
  double epsilon = 0.0;      // allocation granted above tau_i

  double at_phi(double x) const;
  // A_i(c): menu value on [c_min, tau_i], epsilon above tau_i.
  double at(size_t group, double c) const;
  // Cost where group i's virtual cost crosses the knee (clamped to the
  // participant interval).
  double knee_c(size_t group) const;

  const char* shape_name() const {
    return structure == rule_shape::sd    ? "SD"
           : structure == rule_shape::ftd ? "FtD"
                                          : "FLAT";
  }
};

// Solves for the optimal rule. Errors: regularity failure (errc::regime),
// residual <= 0 (errc::infeasible), budget large enough to select every
// participant outright (errc::regime).
allocation_rule solve_allocation(std::shared_ptr<const market_view> view);

}  // namespace lm
