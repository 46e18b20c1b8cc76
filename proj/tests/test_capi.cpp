// C surface: lifecycle, JSON report plumbing, status-code mapping, and
// string ownership. Links only the shared library, like an embedder would.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <memory>
#include <string>

#include "leakmarket/leakmarket.h"

using nlohmann::json;

namespace {

constexpr const char* kFixture =
    LM_SOURCE_DIR "/tests/fixtures/default.json";

struct string_out {
  char* ptr = nullptr;
  ~string_out() { lm_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct market_handle {
  lm_market* m = nullptr;
  ~market_handle() { lm_market_free(m); }
};

struct mech_handle {
  lm_mechanism* m = nullptr;
  ~mech_handle() { lm_mechanism_free(m); }
};

const char* kInfeasible = R"({
  "population_size": 200, "budget": 8.0, "gamma": 0.97, "theta_min": 0.05,
  "rates": [0.5],
  "privacy_model": { "rho": 0.0, "w0": 0.02, "w1": 0.05 },
  "groups": [ {
    "mass": 1.0,
    "cost_dist": { "family": "uniform", "c_min": 0.2, "c_max": 1.2 },
    "correlation": { "intra": 1.2, "inter": 0.0 },
    "data_link": { "p0": 0.3, "slope": 0.5 }
  } ]
})";

}  // namespace

TEST_CASE("version and error strings are always available") {
  CHECK(lm_version() != nullptr);
  CHECK(std::string(lm_version()).find('.') != std::string::npos);
  CHECK(lm_last_error() != nullptr);
  lm_string_free(nullptr);  // must be a no-op
}

TEST_CASE("full lifecycle over the reference fixture") {
  market_handle market;
  REQUIRE(lm_market_create_from_file(kFixture, &market.m) == LM_OK);

  string_out hash;
  REQUIRE(lm_market_hash(market.m, &hash.ptr) == LM_OK);
  CHECK(hash.str() == "548dd5652cb9c5fc");

  int n = 0;
  REQUIRE(lm_market_group_count(market.m, &n) == LM_OK);
  CHECK(n == 1);

  string_out assumptions;
  REQUIRE(lm_market_validate(market.m, &assumptions.ptr) == LM_OK);
  CHECK(json::parse(assumptions.str()).at("pass").get<bool>());

  // NULL rates fall back to the config's rates.
  mech_handle mech;
  REQUIRE(lm_market_solve(market.m, nullptr, 0, &mech.m) == LM_OK);

  string_out desc;
  REQUIRE(lm_mechanism_describe(mech.m, &desc.ptr) == LM_OK);
  const json d = json::parse(desc.str());
  CHECK(d.at("case").get<std::string>() == "1");
  CHECK(d.at("config_hash").get<std::string>() == hash.str());
  CHECK(d.at("theta_bar").get<double>() == doctest::Approx(0.5));
  CHECK(d.at("groups").at(0).at("tau").get<double>() == doctest::Approx(0.7));
  CHECK(d.at("expected_spend").get<double>() ==
        doctest::Approx(8.0).epsilon(1e-9));

  // Point queries agree with the description.
  double a0 = 0.0, a_out = 0.0, pay = 0.0;
  REQUIRE(lm_mechanism_allocation_at(mech.m, 0, 0.2, &a0) == LM_OK);
  CHECK(a0 == doctest::Approx(d.at("chi").get<double>()).epsilon(1e-12));
  REQUIRE(lm_mechanism_allocation_at(mech.m, 0, 1.0, &a_out) == LM_OK);
  CHECK(a_out == 0.0);  // above tau with epsilon = 0
  REQUIRE(lm_mechanism_payment_at(mech.m, 0, 0.2, &pay) == LM_OK);
  CHECK(pay > 0.0);

  // Explicit rates equal to the defaults give the identical description.
  const double rates[] = {0.5};
  mech_handle mech2;
  REQUIRE(lm_market_solve(market.m, rates, 1, &mech2.m) == LM_OK);
  string_out desc2;
  REQUIRE(lm_mechanism_describe(mech2.m, &desc2.ptr) == LM_OK);
  CHECK(desc2.str() == desc.str());
}

TEST_CASE("audit, tradeoff and simulation reports parse and cross-check") {
  market_handle market;
  REQUIRE(lm_market_create_from_file(kFixture, &market.m) == LM_OK);
  mech_handle mech;
  REQUIRE(lm_market_solve(market.m, nullptr, 0, &mech.m) == LM_OK);

  string_out audit;
  REQUIRE(lm_mechanism_audit(mech.m, 100, 1, &audit.ptr) == LM_OK);
  const json a = json::parse(audit.str());
  CHECK(a.at("pass").get<bool>());
  CHECK(a.at("truthfulness").at("violations").get<long long>() == 0);
  CHECK(a.at("participation").at("pass").get<bool>());
  // The reference fixture sits outside the underpayment regime, and the
  // report must say so rather than fail the audit.
  CHECK_FALSE(a.at("underpayment").at("regime_met").get<bool>());

  string_out tr;
  REQUIRE(lm_mechanism_tradeoff(mech.m, 800, &tr.ptr) == LM_OK);
  const json t = json::parse(tr.str());
  CHECK(t.at("worst_case").at("upper_bound_certified").get<bool>());
  REQUIRE_FALSE(t.at("reduced").is_null());
  const double closed = t.at("reduced").at("t_star").get<double>();
  const double saddle = t.at("worst_case").at("discrete_value").get<double>();
  CHECK(closed == doctest::Approx(saddle).epsilon(1e-6));
  CHECK(t.at("at_data_link").at("objective").get<double>() <=
        saddle + 1e-4);

  string_out sim1, sim2;
  REQUIRE(lm_mechanism_simulate(mech.m, 9, 1500, 1, &sim1.ptr) == LM_OK);
  REQUIRE(lm_mechanism_simulate(mech.m, 9, 1500, 1, &sim2.ptr) == LM_OK);
  CHECK(sim1.str() == sim2.str());  // counter RNG: bit-stable reports
  const json s = json::parse(sim1.str());
  CHECK(s.at("replications").get<long long>() == 1500);
  CHECK(s.at("conditional").at("pinned_n").get<long long>() == 100);
  CHECK(s.at("formula").at("expected_spend").get<double>() ==
        doctest::Approx(8.0).epsilon(1e-9));
  CHECK(s.at("unconditional").at("empty_markets").get<long long>() == 0);

  string_out oracle;
  REQUIRE(lm_market_oracle_table(market.m, nullptr, 0, 64, &oracle.ptr) ==
          LM_OK);
  CHECK(oracle.str().rfind("#", 0) == 0);
  CHECK(oracle.str().find("phi") != std::string::npos);

  string_out fp;
  REQUIRE(lm_market_full_participation(market.m, 3, &fp.ptr) == LM_OK);
  CHECK(json::parse(fp.str()).contains("points"));
}

TEST_CASE("argument errors are reported, not crashed on") {
  CHECK(lm_market_create_from_json(nullptr, nullptr) == LM_ERR_ARGUMENT);
  lm_market* out = nullptr;
  CHECK(lm_market_create_from_json(nullptr, &out) == LM_ERR_ARGUMENT);
  CHECK(out == nullptr);
  CHECK(std::string(lm_last_error()).size() > 0);

  market_handle market;
  REQUIRE(lm_market_create_from_file(kFixture, &market.m) == LM_OK);
  CHECK(lm_market_solve(nullptr, nullptr, 0, nullptr) == LM_ERR_ARGUMENT);

  const double two[] = {0.5, 0.5};
  lm_mechanism* mout = nullptr;
  CHECK(lm_market_solve(market.m, two, 2, &mout) == LM_ERR_ARGUMENT);
  CHECK(mout == nullptr);

  mech_handle mech;
  REQUIRE(lm_market_solve(market.m, nullptr, 0, &mech.m) == LM_OK);
  double v = 0.0;
  CHECK(lm_mechanism_allocation_at(mech.m, 5, 0.3, &v) == LM_ERR_ARGUMENT);
  CHECK(lm_mechanism_allocation_at(mech.m, -1, 0.3, &v) == LM_ERR_ARGUMENT);
  CHECK(lm_mechanism_payment_at(mech.m, 0, 0.3, nullptr) == LM_ERR_ARGUMENT);
  CHECK(lm_mechanism_describe(mech.m, nullptr) == LM_ERR_ARGUMENT);
  CHECK(lm_mechanism_audit(mech.m, 0, 1, nullptr) == LM_ERR_ARGUMENT);
  CHECK(lm_mechanism_simulate(mech.m, 1, 0, 1, nullptr) == LM_ERR_ARGUMENT);
}

TEST_CASE("status codes map the failure taxonomy") {
  lm_market* m = nullptr;
  CHECK(lm_market_create_from_json("{ not json", &m) == LM_ERR_CONFIG);
  CHECK(m == nullptr);
  CHECK(lm_market_create_from_file("/nonexistent/x.json", &m) ==
        LM_ERR_CONFIG);

  // Leakage floor above the per-capita budget: infeasible.
  market_handle bad;
  REQUIRE(lm_market_create_from_json(kInfeasible, &bad.m) == LM_OK);
  lm_mechanism* mech = nullptr;
  CHECK(lm_market_solve(bad.m, nullptr, 0, &mech) == LM_ERR_INFEASIBLE);
  CHECK(std::string(lm_last_error()).size() > 0);

  // Budget large enough to select every participant outright: regime.
  market_handle rich;
  std::string rich_json = kInfeasible;
  const auto p1 = rich_json.find("\"budget\": 8.0");
  rich_json.replace(p1, 13, "\"budget\": 70.0");
  const auto p2 = rich_json.find("\"intra\": 1.2");
  rich_json.replace(p2, 12, "\"intra\": 0.3");
  REQUIRE(lm_market_create_from_json(rich_json.c_str(), &rich.m) == LM_OK);
  CHECK(lm_market_solve(rich.m, nullptr, 0, &mech) == LM_ERR_REGIME);
}

TEST_CASE("assumption violations fail validation with a named path") {
  std::string text = kInfeasible;
  const auto p = text.find("\"slope\": 0.5");
  text.replace(p, 12, "\"slope\": -0.5");
  market_handle m;
  REQUIRE(lm_market_create_from_json(text.c_str(), &m.m) == LM_OK);
  string_out report;
  CHECK(lm_market_validate(m.m, &report.ptr) == LM_AUDIT_FAILED);
  const json r = json::parse(report.str());
  CHECK_FALSE(r.at("pass").get<bool>());
  CHECK(report.str().find("data_link.slope") != std::string::npos);
}
