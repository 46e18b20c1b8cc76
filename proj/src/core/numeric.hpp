// Shared numeric kernels: Gauss-Legendre quadrature (fixed panel and adaptive
// composite), bracketed bisection, central differences, and a counter-based
// RNG used by the simulator so that every (seed, replication, agent) triple
// owns an independent reproducible stream.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "error.hpp"

namespace lm {

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], computed
// once per rule size by Newton iteration on the Legendre recurrence.
struct gl_rule {
  std::vector<double> node;
  std::vector<double> weight;
  explicit gl_rule(int n);
};

const gl_rule& gl16();
const gl_rule& gl64();

// Integral of fn over [a, b] with one fixed panel of the given rule.
template <class F>
double gl_panel(const gl_rule& rule, F&& fn, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (size_t j = 0; j < rule.node.size(); ++j)
    acc += rule.weight[j] * fn(mid + half * rule.node[j]);
  return acc * half;
}

// Adaptive composite Gauss-Legendre: split a panel while the 64-node value
// differs from the sum over its halves by more than rel_tol (relative to the
// running magnitude, with an absolute floor so integrals near zero converge).
double integrate(const std::function<double(double)>& fn, double a, double b,
                 double rel_tol = 1e-8);

// Same, but with interior breakpoints the integrand is allowed to kink at.
double integrate_pieces(const std::function<double(double)>& fn,
                        const std::vector<double>& breaks, double rel_tol = 1e-8);

// Bracketed bisection for a root of g on [lo, hi]; g(lo) and g(hi) must have
// opposite signs (a zero endpoint is returned as-is). Stops when the bracket
// is narrower than tol_x. Monotonicity of g is not required, only the bracket.
double bisect(const std::function<double(double)>& g, double lo, double hi,
              double tol_x);

// Central difference with the step clamped into [lo, hi]; falls back to a
// one-sided difference at the ends of the interval.
double central_diff(const std::function<double(double)>& fn, double x, double h,
                    double lo, double hi);

// --- counter-based RNG -----------------------------------------------------

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Independent stream keyed by (seed, replication, agent). Keys are scrambled
// through three splitmix rounds so neighbouring counters decorrelate.
class counter_rng {
 public:
  counter_rng(uint64_t seed, uint64_t replication, uint64_t agent) {
    uint64_t s = seed;
    uint64_t k1 = splitmix64(s);
    s = k1 ^ (replication * 0xD6E8FEB86659FD93ull + 0x9E3779B97F4A7C15ull);
    uint64_t k2 = splitmix64(s);
    s = k2 ^ (agent * 0xC2B2AE3D27D4EB4Full + 0x165667B19E3779F9ull);
    state_ = splitmix64(s);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bernoulli(double p) { return next_unit() < p; }

 private:
  uint64_t state_;
};

}  // namespace lm
