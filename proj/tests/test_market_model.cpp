// Market primitives: config validation, leakage coefficients, privacy costs,
// participation profiles, and the modeling-assumption report.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/error.hpp"
#include "core/market_model.hpp"

using namespace lm;

namespace {

market_config two_group_config() {
  market_config cfg;
  cfg.population_size = 200;
  cfg.budget = 8.0;
  cfg.gamma = 0.97;
  cfg.theta_min = 0.05;
  cfg.privacy.rho = 0.6;
  cfg.privacy.w0 = 0.02;
  cfg.privacy.w1 = 0.05;

  group_spec a{0.6, cost_distribution::uniform(0.2, 1.2), {0.3, 0.2},
               {0.3, 0.5}};
  group_spec b{0.4, cost_distribution::uniform(0.5, 1.5), {0.4, 0.1},
               {0.3, 0.5}};
  cfg.groups = {a, b};
  return cfg;
}

}  // namespace

TEST_CASE("validate_config accepts the reference market") {
  CHECK_NOTHROW(validate_config(two_group_config()));
}

TEST_CASE("validate_config rejects each broken field") {
  auto bad = [&](auto&& mutate) {
    auto cfg = two_group_config();
    mutate(cfg);
    CHECK_THROWS_AS(validate_config(cfg), error);
  };
  bad([](market_config& c) { c.population_size = 0; });
  bad([](market_config& c) { c.budget = 0.0; });
  bad([](market_config& c) { c.gamma = 1.5; });
  bad([](market_config& c) { c.theta_min = 0.0; });
  bad([](market_config& c) { c.epsilon = -0.1; });
  bad([](market_config& c) { c.privacy.b_cap = 1.0; });
  bad([](market_config& c) { c.privacy.rho = 1.0; });
  bad([](market_config& c) { c.privacy.w0 = -1.0; });
  bad([](market_config& c) { c.groups.clear(); });
  bad([](market_config& c) { c.groups[0].mass = 0.7; });  // masses sum to 1.1
  bad([](market_config& c) { c.default_rates = {0.5}; }); // wrong length
}

TEST_CASE("leakage coefficient mixes own and other-group rates") {
  const auto cfg = two_group_config();
  const std::vector<double> rates = {0.5, 0.25};
  // Group 0: 0.3*0.5 + 0.2*theta_minus, theta_minus = mean rate of group 1.
  CHECK(theta_minus(cfg, rates, 0) == doctest::Approx(0.25));
  CHECK(leakage_coefficient(cfg, rates, 0) ==
        doctest::Approx(0.3 * 0.5 + 0.2 * 0.25));
  // Group 1 sees group 0's rate as the outside mean.
  CHECK(theta_minus(cfg, rates, 1) == doctest::Approx(0.5));
  CHECK(leakage_coefficient(cfg, rates, 1) ==
        doctest::Approx(0.4 * 0.25 + 0.1 * 0.5));

  // The cap binds when the linear form exceeds it.
  auto capped = cfg;
  capped.privacy.b_cap = 0.1;
  CHECK(leakage_coefficient(capped, rates, 0) == doctest::Approx(0.1));

  // Single group: no outside mass, theta_minus = 0.
  auto solo = cfg;
  solo.groups.erase(solo.groups.begin() + 1);
  solo.groups[0].mass = 1.0;
  CHECK(theta_minus(solo, {0.5}, 0) == 0.0);
  CHECK(leakage_coefficient(solo, {0.5}, 0) == doctest::Approx(0.15));
}

TEST_CASE("privacy costs and the participation benefit") {
  const auto cfg = two_group_config();
  const std::vector<double> rates = {0.5, 0.25};
  const double b0 = leakage_coefficient(cfg, rates, 0);
  CHECK(privacy_cost_participant(cfg, rates, 0, 0.8) ==
        doctest::Approx(0.8 * b0));
  // rho-scaled family: g = rho h.
  CHECK(privacy_cost_outsider(cfg, rates, 0, 0.8) ==
        doctest::Approx(0.6 * 0.8 * b0));

  // Offset family: g = max(h - kappa c, 0), floored at zero.
  auto off = cfg;
  off.privacy.family = g_family::offset;
  off.privacy.kappa = 0.1;
  CHECK(privacy_cost_outsider(off, rates, 0, 0.8) ==
        doctest::Approx(0.8 * b0 - 0.1 * 0.8));
  off.privacy.kappa = 10.0;
  CHECK(privacy_cost_outsider(off, rates, 0, 0.8) == 0.0);

  CHECK(participation_benefit(cfg.privacy, 0.4) ==
        doctest::Approx(0.02 + 0.05 * 0.4));
}

TEST_CASE("make_profile computes thresholds and the mean rate") {
  const auto cfg = two_group_config();
  const auto prof = make_profile(cfg, {0.5, 0.25});
  CHECK(prof.tau[0] == doctest::Approx(0.7));    // uniform [0.2,1.2] median
  CHECK(prof.tau[1] == doctest::Approx(0.75));   // quantile 0.25 of [0.5,1.5]
  CHECK(prof.theta_bar == doctest::Approx(0.6 * 0.5 + 0.4 * 0.25));

  // Rates below theta_min are a config error; a wrong-length vector (the
  // default-rate fallback lives one layer up, in make_view) is rejected too.
  CHECK_THROWS_AS(make_profile(cfg, {0.01, 0.5}), error);
  CHECK_THROWS_AS(make_profile(cfg, {0.5}), error);
  CHECK_THROWS_AS(make_profile(cfg, {}), error);
}

TEST_CASE("data link clamps into [0,1]") {
  const auto cfg = two_group_config();
  const auto& g = cfg.groups[0];
  CHECK(g.data_prob(0.2) == doctest::Approx(0.3));   // p0 at c_min
  CHECK(g.data_prob(1.2) == doctest::Approx(0.8));   // p0 + slope at c_max
  auto steep = g;
  steep.link = {0.9, 5.0};
  CHECK(steep.data_prob(1.2) == 1.0);
  auto neg = g;
  neg.link = {0.1, -5.0};
  CHECK(neg.data_prob(1.2) == 0.0);
}

TEST_CASE("assumption report flags the hand-built violations") {
  // The reference market satisfies every modeling assumption.
  CHECK(validate_assumptions(two_group_config()).pass);

  // A decreasing data link breaks the monotone-adversary assumption.
  auto cfg = two_group_config();
  cfg.groups[1].link = {0.8, -0.5};
  const auto rep = validate_assumptions(cfg);
  CHECK_FALSE(rep.pass);
  REQUIRE_FALSE(rep.items.empty());
  CHECK(rep.items[0].path == "groups[1].data_link.slope");

  // An outsider who loses more than a participant breaks the privacy order.
  auto off = two_group_config();
  off.privacy.family = g_family::offset;
  off.privacy.kappa = 0.0;  // g = h exactly: boundary passes
  CHECK(validate_assumptions(off).pass);
}
