// Discrete zero-sum game between the analyst (allocation A, minimizing) and
// the data adversary (presence rates p, maximizing) on a finite virtual-cost
// support phi_1 < ... < phi_K with masses pi_k summing to theta_bar:
//
//   T(A, p) = gamma/(s thetabar^2) (sum pi p/A - (sum pi p)^2/thetabar)
//           + (1-gamma)(1-thetabar)(1 - sum pi p / thetabar),
//   subject to sum pi phi A <= B/s - l.
//
// The saddle is closed-form in four regimes, indexed by the per-unit budget
// ratio rho_B = (B/s - l)/(gamma thetabar) against the endpoints of the
// decreasing ratio z -> Q(m, z)/R(m, z):
//   Q(m, z) = sum_{k<=m} pi phi + sqrt(phi_m/z) sum_{k>m} pi sqrt(phi),
//   R(m, z) = 2 gamma (z/phi_m sum_{k<=m} pi phi + sum_{k>m} pi)
//           + thetabar^2 (1-thetabar)(1-gamma) s.
// Case 1: strictly decreasing A proportional to 1/sqrt(phi), p = 1.
// Case 2a: plateau chi < 1 up to the knee, 1/sqrt(phi) tail.
// Case 2b: plateau at 1, 1/sqrt(phi) tail.
// Case 3: constant A = (B/s - l)/sum(pi phi); p is a ramp (3a) or zero (3b);
//         with p = 0 the analyst side is non-unique and the constant
//         allocation is the representative emitted by every solver here.
// Adversary ties (plateau coordinates with chi = 1) are likewise resolved to
// the capped-ramp representative p_k = min(1, z phi_k / phi_anchor), so
// independent solvers can be compared coordinate-wise.
#pragma once

#include <string>
#include <vector>

#include "virtual_cost.hpp"

namespace lm {

struct discrete_instance {
  std::vector<double> phi;  // strictly increasing, positive
  std::vector<double> pi;   // positive, sums to theta_bar
  double gamma = 0.0;
  double s = 0.0;
  double theta_bar = 0.0;
  double residual = 0.0;  // B/s - l

  // Canonicalizes: sorts by phi, merges exact ties (masses add), drops
  // zero-mass atoms; then validates the invariants above.
  discrete_instance(std::vector<double> phi_in, std::vector<double> pi_in,
                    double gamma_in, double s_in, double theta_bar_in,
                    double residual_in);

  size_t size() const { return phi.size(); }
  double pi_phi_total() const;
};

// Q(m, z) and R(m, z); m is 1-based (number of plateau coordinates).
double q_disc(const discrete_instance& inst, size_t m, double z);
double r_disc(const discrete_instance& inst, size_t m, double z);

struct discrete_saddle {
  std::vector<double> A;
  std::vector<double> p;
  double lambda = 0.0;       // budget multiplier
  std::string case_tag;      // "1" | "2a" | "2b" | "3"
  // Structure indices, 1-based counts; 0 / NaN when not applicable.
  size_t m_star = 0;         // knife-edge coordinates (case 2a)
  double z_star = 0.0;       // case 2a ramp scale
  size_t k_prime = 0;        // adversary anchor (case 2b)
  double z_prime = 0.0;
  size_t k_star = 0;         // analyst plateau size (case 2b)
  double z_tilde = 0.0;      // case 3a ramp scale
  double chi = 0.0;          // plateau level (cases 2-3)
};

// Closed-form saddle. Preconditions (named errors): residual > 0
// (errc::infeasible) and sum(pi phi) > residual (errc::regime, otherwise
// selecting every participant is affordable and the game is trivial).
discrete_saddle solve_discrete(const discrete_instance& inst);

struct saddle_check {
  std::string condition;  // "lemma3" | "lemma4" | "budget" | "shape"
  size_t index = 0;
  double magnitude = 0.0;
  std::string detail;
};

struct saddle_verdict {
  bool pass = true;
  std::vector<saddle_check> violations;
};

// First-order certificate: adversary marginals have the right sign pattern
// (Lemma-3), the allocation matches the lambda formula and the budget binds
// (Lemma-4); with p identically zero only budget feasibility is required.
saddle_verdict verify_saddle(const discrete_instance& inst,
                             const discrete_saddle& saddle, double tol = 1e-8);

// Independent oracle built only from the two best-response maps, never from
// the Q/R case dispatch. Plain alternating best responses oscillate (the
// adversary's exact best response is bang-bang), so the oracle solves the
// mutual-consistency system instead: analyst responses have the form
// A_k = min(x, y/sqrt(phi_k)) and adversary responses p_k = min(1, psi phi_k)
// with psi = x^2/y^2; an inner bisection pins y by budget binding, an outer
// bisection drives x to the knife-edge level a*(S) = gamma thetabar /
// (2 gamma S + c0). The flat boundary (case 3) and the chi = 1 boundary
// (case 2b) get dedicated one-dimensional solves. The result is certified
// with verify_saddle before being returned; grid_resolution controls the
// fallback sign-change scan (0 means 256). Intended for K <= 6.
discrete_saddle brute_force_saddle(const discrete_instance& inst,
                                   int grid_resolution = 0);

// Equal-width panels in virtual-cost space: pi_k by exact mixture-CDF
// differences, phi_k at panel midpoints, zero-mass panels dropped.
discrete_instance discretize(const market_view& view, int panels);

// T(A, p) for explicit strategy pairs (sandwich tests).
double game_objective(const discrete_instance& inst,
                      const std::vector<double>& A, const std::vector<double>& p);

}  // namespace lm
