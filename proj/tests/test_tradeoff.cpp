// Bias-variance evaluation, worst-case adversaries, the low-budget closed
// form, and the full-participation conditions.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "core/error.hpp"
#include "core/numeric.hpp"
#include "core/tradeoff.hpp"

using namespace lm;

namespace {

market_config reference_config(double budget) {
  market_config cfg;
  cfg.population_size = 200;
  cfg.budget = budget;
  cfg.gamma = 0.97;
  cfg.theta_min = 0.05;
  cfg.privacy.rho = 0.6;
  cfg.privacy.w0 = 0.02;
  cfg.privacy.w1 = 0.05;
  cfg.groups = {group_spec{1.0, cost_distribution::uniform(0.2, 1.2),
                           {0.3, 0.2}, {0.3, 0.5}}};
  return cfg;
}

std::shared_ptr<const market_view> ref_view(double budget,
                                            std::vector<double> rates = {
                                                0.5}) {
  return std::make_shared<const market_view>(
      make_view(reference_config(budget), std::move(rates)));
}

}  // namespace

TEST_CASE("closed-form variance and bias on a flat unit rule") {
  // Everyone participates (theta = 1) and everyone is selected (A = 1): the
  // estimator is a plain participant average, V = (E[p] - E[p]^2)/s and
  // Bias = 0.
  market_config cfg;
  cfg.population_size = 100;
  cfg.budget = 10.0;
  cfg.gamma = 0.9;
  cfg.theta_min = 0.05;
  cfg.groups = {group_spec{1.0, cost_distribution::uniform(0.2, 1.2),
                           {0.0, 0.0}, {0.3, 0.5}}};
  const auto view =
      std::make_shared<const market_view>(make_view(cfg, {1.0}));
  const allocation_rule unit{view, rule_shape::flat, "3", 1.0, 0.0, 0.0, 0.0};

  const auto tv = evaluate_tradeoff(unit, presence_constant(*view, 0.5));
  CHECK(tv.presence_mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tv.variance == doctest::Approx(0.0025).epsilon(1e-10));
  CHECK(tv.bias == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(tv.objective == doctest::Approx(0.9 * 0.0025).epsilon(1e-10));
  // With b = 0 and full participation the selection spend is E[phi] = c_max.
  CHECK(tv.spend_above_floor == doctest::Approx(1.2).epsilon(1e-9));

  // Perfect presence: zero variance, zero bias.
  const auto sure = evaluate_tradeoff(unit, presence_constant(*view, 1.0));
  CHECK(sure.variance == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(sure.objective == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("evaluation matches direct quadrature on a curved rule") {
  const auto view = ref_view(8.0);
  const auto rule = solve_allocation(view);
  REQUIRE(rule.case_tag == "1");
  const auto links = presence_from_links(*view);
  const auto tv = evaluate_tradeoff(rule, links);

  const double tau = view->prof.tau[0];
  const double tb = view->theta_bar();
  const std::vector<double> breaks{0.2, rule.knee_c(0), tau};
  // Uniform density on [0.2, 1.2] has f = 1.
  const double e_p =
      integrate_pieces([&](double c) { return links.at(0, c); }, breaks,
                       1e-12) /
      tb;
  const double e_p_over_a =
      integrate_pieces(
          [&](double c) { return links.at(0, c) / rule.at(0, c); }, breaks,
          1e-12) /
      tb;
  const double s = 200.0;
  CHECK(tv.presence_mean == doctest::Approx(e_p).epsilon(1e-9));
  CHECK(tv.variance ==
        doctest::Approx((e_p_over_a - e_p * e_p) / (s * tb)).epsilon(1e-9));
  CHECK(tv.bias == doctest::Approx((1.0 - tb) * (1.0 - e_p)).epsilon(1e-9));
  CHECK(tv.objective ==
        doctest::Approx(0.97 * tv.variance + 0.03 * tv.bias).epsilon(1e-12));
  // Budget binds below the flat case: selection spend equals the residual.
  CHECK(tv.spend_above_floor ==
        doctest::Approx(view->residual).epsilon(1e-9));
}

TEST_CASE("presence_from_links reproduces the configured data link") {
  const auto view = ref_view(8.0);
  const auto p = presence_from_links(*view);
  CHECK(p.at(0, 0.2) == doctest::Approx(0.3));
  CHECK(p.at(0, 0.7) == doctest::Approx(0.55));
  CHECK(p.at(0, 1.2) == doctest::Approx(0.8));
}

TEST_CASE("saddle adversary cannot be improved by local perturbations") {
  const auto view = ref_view(8.0);
  const auto rule = solve_allocation(view);
  const auto wc = worst_case_tradeoff(rule);
  REQUIRE(wc.upper_bound_certified);
  const double cap = std::max(wc.values.objective, wc.discrete_value);

  for (double c : {0.25, 0.45, 0.69}) {
    for (double dp : {0.01, -0.01}) {
      step_adversary probe = wc.adversary;
      probe.perturb_at(0, c, dp);
      const auto tv = evaluate_tradeoff(rule, probe.to_presence());
      CHECK(tv.objective <= cap + 1e-6);
    }
  }
}

TEST_CASE("certified worst case dominates fixed adversaries") {
  for (double budget : {8.0, 12.0, 30.0}) {
    const auto view = ref_view(budget);
    const auto rule = solve_allocation(view);
    const auto wc = worst_case_tradeoff(rule);
    REQUIRE(wc.upper_bound_certified);
    const double cap = wc.discrete_value + 1e-4;

    CHECK(grid_search_adversary(rule) <= cap);
    CHECK(evaluate_tradeoff(rule, presence_from_links(*view)).objective <=
          cap);
    for (double level : {0.3, 0.7, 1.0})
      CHECK(evaluate_tradeoff(rule, presence_constant(*view, level))
                .objective <= cap);
  }
}

TEST_CASE("worst-case adversary is a monotone capped ramp") {
  const auto rule = solve_allocation(ref_view(8.0));
  const auto adv = worst_case_tradeoff(rule).adversary;
  double prev = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double c = 0.2 + 0.5 * k / 100.0;
    const double p = adv.at(0, c);
    CHECK(p >= prev - 1e-12);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
}

TEST_CASE("low-budget closed form equals the saddle value") {
  const auto view = ref_view(8.0);
  const auto red = reduced_objective(*view);
  CHECK(red.theta_bar == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(red.residual == doctest::Approx(0.0415).epsilon(1e-12));
  CHECK(red.r ==
        doctest::Approx(0.37649282669703205 * 0.37649282669703205)
            .epsilon(1e-10));
  const double by_hand =
      0.97 / 200.0 *
      (red.r / (0.25 * red.residual) - 1.0 / red.theta_bar);
  CHECK(red.t_star == doctest::Approx(by_hand).epsilon(1e-12));

  const auto wc = worst_case_tradeoff(solve_allocation(view));
  CHECK(red.t_star == doctest::Approx(wc.discrete_value).epsilon(1e-8));
}

TEST_CASE("closed form refuses service outside the low-budget regime") {
  const auto view = ref_view(30.0);  // flat case
  try {
    reduced_objective(*view);
    FAIL("expected regime error");
  } catch (const error& e) {
    CHECK(e.code() == errc::regime);
  }
}

namespace {

// The two sufficient conditions are algebraically equivalent:
// (delta_i - Delta_i') theta_i / thetabar = w1 - D_i. Check the identity and
// the flag consistency at every applicable grid point.
void check_fp_invariants(const market_config& cfg, const fp_report& rep) {
  for (const auto& pt : rep.points) {
    if (!pt.applicable) continue;
    for (size_t i = 0; i < pt.rates.size(); ++i) {
      const double lhs =
          (pt.delta_bound[i] - pt.delta_prime[i]) * pt.rates[i] /
          pt.theta_bar;
      const double rhs = cfg.privacy.w1 - pt.d_bound[i];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8).scale(1.0));
    }
    CHECK(pt.prop1 == pt.prop2);
    if (pt.prop1) CHECK(pt.grad_ok);
  }
}

}  // namespace

TEST_CASE("full participation holds when leakage is fully scaled away") {
  // rho = 1 makes the leakage gap vanish, so any positive benefit slope
  // makes larger participation weakly better.
  market_config cfg;
  cfg.population_size = 200;
  cfg.budget = 1.0;
  cfg.gamma = 1.0;
  cfg.theta_min = 0.25;
  cfg.privacy.rho = 1.0;
  cfg.privacy.w0 = 0.01;
  cfg.privacy.w1 = 0.05;
  cfg.groups = {group_spec{1.0, cost_distribution::uniform(0.2, 1.2),
                           {0.1, 0.05}, {0.3, 0.5}}};
  const auto rep = full_participation_check(cfg, 5);
  CHECK(rep.applicable_points == 5);
  CHECK(rep.applicable_points >= 3);
  CHECK(rep.conditions_hold);
  CHECK(rep.optimal_on_grid);
  check_fp_invariants(cfg, rep);
  // The closed form itself decreases along the applicable rate grid.
  double last = 1e300;
  for (const auto& pt : rep.points) {
    if (!pt.applicable) continue;
    CHECK(pt.t_star <= last + 1e-12);
    last = pt.t_star;
  }
}

TEST_CASE("full participation with a strong benefit slope") {
  market_config cfg;
  cfg.population_size = 200;
  cfg.budget = 1.0;
  cfg.gamma = 0.99;
  cfg.theta_min = 0.25;
  cfg.privacy.rho = 0.8;
  cfg.privacy.w0 = 0.01;
  cfg.privacy.w1 = 0.08;
  cfg.groups = {group_spec{1.0, cost_distribution::uniform(0.2, 1.2),
                           {0.2, 0.1}, {0.3, 0.5}}};
  const auto rep = full_participation_check(cfg, 5);
  CHECK(rep.applicable_points == 5);
  check_fp_invariants(cfg, rep);
  CHECK(rep.conditions_hold);
  CHECK(rep.optimal_on_grid);
}
