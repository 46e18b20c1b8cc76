// Virtual-cost curves, the regularity gate, cumulative tables, and the
// solved market view with its partial mixture integrals.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/virtual_cost.hpp"

using namespace lm;

namespace {

// Single group, uniform costs on [0.2, 1.2]; with rate 0.5 the leakage
// coefficient is b = 0.3 * 0.5 = 0.15 and tau = 0.7.
market_config reference_config() {
  market_config cfg;
  cfg.population_size = 200;
  cfg.budget = 8.0;
  cfg.gamma = 0.97;
  cfg.theta_min = 0.05;
  cfg.privacy.rho = 0.6;
  cfg.privacy.w0 = 0.02;
  cfg.privacy.w1 = 0.05;
  cfg.groups = {group_spec{1.0, cost_distribution::uniform(0.2, 1.2),
                           {0.3, 0.2}, {0.3, 0.5}}};
  return cfg;
}

}  // namespace

TEST_CASE("virtual cost of a uniform law is affine") {
  const auto d = cost_distribution::uniform(0.2, 1.2);
  const virtual_cost_curve phi(d, 0.15);
  // phi(c) = (1-b)(c + (c - 0.2)) = 0.85 (2c - 0.2).
  CHECK(phi.phi(0.2) == doctest::Approx(0.17).epsilon(1e-14));
  CHECK(phi.phi(0.4) == doctest::Approx(0.51).epsilon(1e-14));
  CHECK(phi.phi(1.2) == doctest::Approx(0.85 * 2.2).epsilon(1e-14));
  CHECK(phi.phi_prime(0.6) == doctest::Approx(1.7).epsilon(1e-6));
  // Inverse restricted to [c_min, 0.7].
  CHECK(phi.inverse(0.51, 0.7) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(phi.inverse(0.0, 0.7) == doctest::Approx(0.2));   // clamps low
  CHECK(phi.inverse(9.0, 0.7) == doctest::Approx(0.7));   // clamps high
}

TEST_CASE("regularity holds for the standard families") {
  CHECK(regularity_check(cost_distribution::uniform(0.2, 1.2), 0.0).pass);
  CHECK(regularity_check(cost_distribution::uniform(0.2, 1.2), 0.5).pass);
  CHECK(regularity_check(
            cost_distribution::truncated_exponential(0.2, 1.2, 1.0), 0.15)
            .pass);
  CHECK(regularity_check(cost_distribution::beta_on_interval(0.2, 1.2, 2, 3),
                         0.15)
            .pass);
}

TEST_CASE("regularity rejects a steep right-leaning beta") {
  // Mass piles up near c_max fast enough that F f' > 2 f^2 inside the
  // support; the report must locate a violating cost.
  const auto d = cost_distribution::beta_on_interval(0.2, 1.2, 6.0, 0.45);
  const auto rep = regularity_check(d, 0.15);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.density_ok);
  CHECK(rep.first_violation_c > 0.2);
  CHECK(rep.first_violation_c < 1.2);
  // The located point really violates the inequality.
  const double c = rep.first_violation_c;
  CHECK(d.cdf(c) * d.pdf_derivative(c) > 2.0 * d.pdf(c) * d.pdf(c));
}

TEST_CASE("cumulative integral matches closed forms off the grid") {
  const cumulative_integral ci([](double x) { return x * x; }, 0.0, 1.0, 64);
  CHECK(ci.total() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(ci.eval(0.5) == doctest::Approx(0.125 / 3.0).epsilon(1e-12));
  // A point between grid cells exercises the partial-panel correction.
  const double c = 0.7703;
  CHECK(ci.eval(c) == doctest::Approx(c * c * c / 3.0).epsilon(1e-12));
  CHECK(ci.eval(-1.0) == doctest::Approx(0.0));
  CHECK(ci.eval(2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("market view derives the leakage quantities") {
  const auto view = make_view(reference_config(), {0.5});
  CHECK(view.b[0] == doctest::Approx(0.15).epsilon(1e-14));
  CHECK(view.prof.tau[0] == doctest::Approx(0.7).epsilon(1e-14));
  // Delta = h(tau) - g(tau) = (1 - rho) b tau.
  CHECK(view.delta[0] == doctest::Approx(0.4 * 0.15 * 0.7).epsilon(1e-12));
  CHECK(view.w == doctest::Approx(0.02 + 0.05 * 0.5).epsilon(1e-14));
  // l = q theta (Delta - w) and the residual budget B/s - l.
  CHECK(view.leakage_floor == doctest::Approx(0.5 * (0.042 - 0.045)));
  CHECK(view.pc_budget == doctest::Approx(0.04));
  CHECK(view.residual == doctest::Approx(0.0415).epsilon(1e-12));
  CHECK(view.phi_min == doctest::Approx(0.17).epsilon(1e-12));
  CHECK(view.phi_max == doctest::Approx(1.02).epsilon(1e-12));
}

TEST_CASE("default rates fall back to one half") {
  const auto view = make_view(reference_config());
  CHECK(view.prof.rates[0] == doctest::Approx(0.5));
  // Explicit default_rates in the config win over the fallback.
  auto cfg = reference_config();
  cfg.default_rates = {0.25};
  CHECK(make_view(cfg).prof.rates[0] == doctest::Approx(0.25));
}

TEST_CASE("partial mixture integrals against hand integration") {
  const auto view = make_view(reference_config(), {0.5});
  // Split at x = 0.51, i.e. c = 0.4.
  CHECK(view.knee_cost(0, 0.51) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(view.int_phi_below(0.51) == doctest::Approx(0.068).epsilon(1e-9));
  CHECK(view.int_sqrt_above(0.51) ==
        doctest::Approx(0.26115162896362612).epsilon(1e-9));
  CHECK(view.mass_above(0.51) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(view.int_sqrt_total() ==
        doctest::Approx(0.37649282669703205).epsilon(1e-10));
  CHECK(view.int_phi_total() == doctest::Approx(0.2975).epsilon(1e-10));

  // Ends of the split range reproduce the totals.
  CHECK(view.int_phi_below(view.phi_max) ==
        doctest::Approx(view.int_phi_total()).epsilon(1e-9));
  CHECK(view.int_sqrt_above(view.phi_min) ==
        doctest::Approx(view.int_sqrt_total()).epsilon(1e-9));
  CHECK(view.mass_above(view.phi_min) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(view.mass_above(view.phi_max) == doctest::Approx(0.0).epsilon(1e-9));

  // Mixture density: omega = f(u)/phi'(u) = 1 / (2 (1-b)) on the range.
  CHECK(view.omega(0.51) ==
        doctest::Approx(0.58823529411764706).epsilon(1e-9));
  CHECK(view.omega_mass() == doctest::Approx(0.5).epsilon(1e-9));
}
