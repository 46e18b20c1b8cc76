// C API implementation: thin exception-to-status translation over the core.
#include "leakmarket/leakmarket.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "../core/allocation.hpp"
#include "../core/config_io.hpp"
#include "../core/error.hpp"
#include "../core/payment.hpp"
#include "../core/simulator.hpp"
#include "../core/tradeoff.hpp"

using nlohmann::json;

struct lm_market {
  lm::market_config cfg;
};

struct lm_mechanism {
  lm::mechanism mech;
};

namespace {

thread_local std::string g_last_error;

int status_of(lm::errc c) {
  switch (c) {
    case lm::errc::ok: return LM_OK;
    case lm::errc::config: return LM_ERR_CONFIG;
    case lm::errc::infeasible: return LM_ERR_INFEASIBLE;
    case lm::errc::audit: return LM_AUDIT_FAILED;
    case lm::errc::regime: return LM_ERR_REGIME;
    case lm::errc::argument: return LM_ERR_ARGUMENT;
    case lm::errc::internal: return LM_ERR_INTERNAL;
  }
  return LM_ERR_INTERNAL;
}

template <class Fn>
int wrap(Fn&& fn) {
  try {
    return fn();
  } catch (const lm::error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LM_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int give(char** slot, const std::string& s) {
  if (!slot) {
    g_last_error = "output pointer is null";
    return LM_ERR_ARGUMENT;
  }
  *slot = dup_string(s);
  if (!*slot) {
    g_last_error = "allocation failure";
    return LM_ERR_INTERNAL;
  }
  return LM_OK;
}

std::vector<double> rates_vec(const lm_market* m, const double* rates,
                              int n_rates) {
  if (!rates) return {};
  lm::require(n_rates == static_cast<int>(m->cfg.groups.size()),
              lm::errc::argument, "rates length must match the group count");
  return std::vector<double>(rates, rates + n_rates);
}

json mechanism_json(const lm::mechanism& m) {
  const lm::market_view& v = *m.view;
  json out;
  out["structure"] = m.rule.shape_name();
  out["case"] = m.rule.case_tag;
  out["chi"] = m.rule.chi;
  out["phi_hat"] = m.rule.phi_hat;
  out["tail_scale"] = m.rule.tail_scale;
  out["epsilon"] = m.rule.epsilon;
  out["theta_bar"] = v.theta_bar();
  out["benefit_w"] = v.w;
  out["leakage_floor"] = v.leakage_floor;
  out["per_capita_budget"] = v.pc_budget;
  out["residual"] = v.residual;
  out["phi_range"] = {v.phi_min, v.phi_max};
  const auto spend = lm::expected_total_payment(m);
  json groups = json::array();
  for (size_t i = 0; i < v.n_groups(); ++i) {
    json g;
    g["mass"] = v.q(i);
    g["rate"] = v.prof.rates[i];
    g["tau"] = v.prof.tau[i];
    g["c_min"] = v.cfg.groups[i].cost.c_min();
    g["c_max"] = v.cfg.groups[i].cost.c_max();
    g["leakage_b"] = v.b[i];
    g["delta"] = v.delta[i];
    g["kappa"] = m.kappa[i];
    g["knee_cost"] = m.rule.knee_c(i);
    g["phi_range"] = {v.phi_lo[i], v.phi_hi[i]};
    g["expected_spend"] = spend.per_group[i];
    groups.push_back(g);
  }
  out["groups"] = groups;
  out["expected_spend"] = spend.direct;
  out["expected_spend_virtual"] = spend.via_virtual;
  out["budget"] = spend.budget;
  out["config_hash"] = lm::config_hash_hex(v.cfg);
  return out;
}

}  // namespace

extern "C" {

const char* lm_version(void) { return "0.1.0"; }

const char* lm_last_error(void) { return g_last_error.c_str(); }

void lm_string_free(char* s) { std::free(s); }

int lm_market_create_from_json(const char* json_text, lm_market** out) {
  return wrap([&] {
    lm::require(json_text && out, lm::errc::argument,
                "json_text and out must be non-null");
    auto m = std::make_unique<lm_market>(lm_market{lm::parse_config(json_text)});
    *out = m.release();
    return LM_OK;
  });
}

int lm_market_create_from_file(const char* path, lm_market** out) {
  return wrap([&] {
    lm::require(path && out, lm::errc::argument,
                "path and out must be non-null");
    auto m = std::make_unique<lm_market>(lm_market{lm::load_config(path)});
    *out = m.release();
    return LM_OK;
  });
}

void lm_market_free(lm_market* market) { delete market; }

int lm_market_validate(const lm_market* market, char** report_json) {
  return wrap([&] {
    lm::require(market, lm::errc::argument, "market is null");
    const auto rep = lm::validate_assumptions(market->cfg);
    json j;
    j["pass"] = rep.pass;
    j["violations"] = json::array();
    for (const auto& it : rep.items) {
      j["violations"].push_back({{"path", it.path},
                                 {"assumption", it.assumption},
                                 {"message", it.message},
                                 {"value", it.value}});
    }
    j["config_hash"] = lm::config_hash_hex(market->cfg);
    const int rc = give(report_json, j.dump(2));
    if (rc != LM_OK) return rc;
    if (!rep.pass) {
      g_last_error = "model assumptions violated";
      return LM_AUDIT_FAILED;
    }
    return LM_OK;
  });
}

int lm_market_hash(const lm_market* market, char** hex) {
  return wrap([&] {
    lm::require(market, lm::errc::argument, "market is null");
    return give(hex, lm::config_hash_hex(market->cfg));
  });
}

int lm_market_group_count(const lm_market* market, int* out) {
  return wrap([&] {
    lm::require(market && out, lm::errc::argument, "null argument");
    *out = static_cast<int>(market->cfg.groups.size());
    return LM_OK;
  });
}

int lm_market_solve(const lm_market* market, const double* rates, int n_rates,
                    lm_mechanism** out) {
  return wrap([&] {
    lm::require(market && out, lm::errc::argument, "null argument");
    auto view = std::make_shared<const lm::market_view>(
        lm::make_view(market->cfg, rates_vec(market, rates, n_rates)));
    auto m = std::make_unique<lm_mechanism>(
        lm_mechanism{lm::build_mechanism(std::move(view))});
    *out = m.release();
    return LM_OK;
  });
}

void lm_mechanism_free(lm_mechanism* mech) { delete mech; }

int lm_mechanism_describe(const lm_mechanism* mech, char** out) {
  return wrap([&] {
    lm::require(mech, lm::errc::argument, "mechanism is null");
    return give(out, mechanism_json(mech->mech).dump(2));
  });
}

int lm_mechanism_allocation_at(const lm_mechanism* mech, int group,
                               double cost, double* out) {
  return wrap([&] {
    lm::require(mech && out, lm::errc::argument, "null argument");
    lm::require(group >= 0 &&
                    group < static_cast<int>(mech->mech.view->n_groups()),
                lm::errc::argument, "group index out of range");
    *out = mech->mech.rule.at(static_cast<size_t>(group), cost);
    return LM_OK;
  });
}

int lm_mechanism_payment_at(const lm_mechanism* mech, int group, double cost,
                            double* out) {
  return wrap([&] {
    lm::require(mech && out, lm::errc::argument, "null argument");
    lm::require(group >= 0 &&
                    group < static_cast<int>(mech->mech.view->n_groups()),
                lm::errc::argument, "group index out of range");
    *out = mech->mech.payment(static_cast<size_t>(group), cost);
    return LM_OK;
  });
}

int lm_mechanism_audit(const lm_mechanism* mech, int samples,
                       unsigned long long seed, char** report_json) {
  return wrap([&] {
    lm::require(mech, lm::errc::argument, "mechanism is null");
    lm::require(samples > 0, lm::errc::argument, "samples must be positive");
    const auto& m = mech->mech;
    const auto tr = lm::truthfulness_audit(m, samples, seed);
    const auto pr = lm::participation_audit(m);
    const auto ur = lm::underpayment_check(m);
    json j;
    j["truthfulness"] = {{"pass", tr.pass},
                         {"samples", tr.samples},
                         {"violations", tr.violations},
                         {"offplateau_ties", tr.offplateau_ties},
                         {"max_gain", tr.max_gain},
                         {"max_envelope_gap", tr.max_envelope_gap},
                         {"max_boundary_gap", tr.max_boundary_gap},
                         {"detail", tr.detail}};
    j["participation"] = {{"pass", pr.pass},
                          {"theta_hat", pr.theta_hat},
                          {"boundary_cost", pr.boundary_cost},
                          {"max_theta_gap", pr.max_theta_gap},
                          {"threshold_shape", pr.threshold_shape},
                          {"detail", pr.detail}};
    j["underpayment"] = {{"regime_met", ur.regime_met},
                         {"holds", ur.holds},
                         {"max_excess", ur.max_excess},
                         {"detail", ur.detail}};
    const bool under_ok = ur.holds || !ur.regime_met;
    const bool pass = tr.pass && pr.pass && under_ok;
    j["pass"] = pass;
    j["config_hash"] = lm::config_hash_hex(m.view->cfg);
    j["seed"] = seed;
    const int rc = give(report_json, j.dump(2));
    if (rc != LM_OK) return rc;
    if (!pass) {
      g_last_error = "mechanism audit failed";
      return LM_AUDIT_FAILED;
    }
    return LM_OK;
  });
}

int lm_mechanism_tradeoff(const lm_mechanism* mech, int panels, char** out) {
  return wrap([&] {
    lm::require(mech, lm::errc::argument, "mechanism is null");
    lm::require(panels >= 2, lm::errc::argument, "panels must be at least 2");
    const auto& m = mech->mech;
    const auto wc = lm::worst_case_tradeoff(m.rule, panels);
    json j;
    j["worst_case"] = {{"variance", wc.values.variance},
                       {"bias", wc.values.bias},
                       {"objective", wc.values.objective},
                       {"presence_mean", wc.values.presence_mean},
                       {"spend_above_floor", wc.values.spend_above_floor},
                       {"case", wc.case_tag},
                       {"discrete_value", wc.discrete_value},
                       {"upper_bound_certified", wc.upper_bound_certified}};
    const auto link = lm::evaluate_tradeoff(m.rule,
                                            lm::presence_from_links(*m.view));
    j["at_data_link"] = {{"variance", link.variance},
                         {"bias", link.bias},
                         {"objective", link.objective},
                         {"presence_mean", link.presence_mean}};
    if (lm::check_low_budget(*m.view)) {
      const auto red = lm::reduced_objective(*m.view);
      j["reduced"] = {{"t_star", red.t_star},
                      {"r", red.r},
                      {"residual", red.residual},
                      {"theta_bar", red.theta_bar}};
    } else {
      j["reduced"] = nullptr;
    }
    j["config_hash"] = lm::config_hash_hex(m.view->cfg);
    return give(out, j.dump(2));
  });
}

int lm_mechanism_simulate(const lm_mechanism* mech, unsigned long long seed,
                          long long replications, int batch_size,
                          char** report_json) {
  return wrap([&] {
    lm::require(mech, lm::errc::argument, "mechanism is null");
    lm::require(replications > 0, lm::errc::argument,
                "replications must be positive");
    lm::require(batch_size > 0, lm::errc::argument,
                "batch_size must be positive");
    lm::sim_options opts;
    opts.seed = seed;
    opts.replications = replications;
    opts.batch_size = batch_size;
    const auto rep = lm::estimate_bias_variance(mech->mech, opts);
    auto moments = [](const lm::moment_summary& s) {
      return json{{"n", s.n},
                  {"mean", s.mean},
                  {"variance", s.variance},
                  {"se_mean", s.se_mean},
                  {"se_variance", s.se_variance}};
    };
    json j;
    j["replications"] = rep.replications;
    j["conditional"] = {{"estimate", moments(rep.conditional_estimate)},
                        {"bias", rep.conditional_bias},
                        {"bias_se", rep.conditional_bias_se},
                        {"pinned_n", rep.pinned_n}};
    j["unconditional"] = {{"estimate", moments(rep.unconditional_estimate)},
                          {"bias", rep.unconditional_bias},
                          {"bias_se", rep.unconditional_bias_se},
                          {"mean_total_paid", rep.mean_total_paid},
                          {"se_total_paid", rep.se_total_paid},
                          {"join_rate", rep.join_rate},
                          {"empty_markets", rep.empty_markets}};
    j["formula"] = {{"variance", rep.formula_variance},
                    {"bias", rep.formula_bias},
                    {"presence_mean", rep.formula_presence_mean},
                    {"expected_spend", rep.expected_spend}};
    j["seed"] = seed;
    j["config_hash"] = lm::config_hash_hex(mech->mech.view->cfg);
    return give(report_json, j.dump(2));
  });
}

int lm_market_oracle_table(const lm_market* market, const double* rates,
                           int n_rates, int panels, char** csv) {
  return wrap([&] {
    lm::require(market, lm::errc::argument, "market is null");
    lm::require(panels >= 2, lm::errc::argument, "panels must be at least 2");
    const auto view =
        lm::make_view(market->cfg, rates_vec(market, rates, n_rates));
    const auto inst = lm::discretize(view, panels);
    const auto saddle = lm::solve_discrete(inst);
    const auto verdict = lm::verify_saddle(inst, saddle);
    std::string s;
    s += "# case=" + saddle.case_tag +
         " lambda=" + std::to_string(saddle.lambda) +
         " chi=" + std::to_string(saddle.chi) +
         " value=" + std::to_string(lm::game_objective(inst, saddle.A, saddle.p)) +
         " certified=" + (verdict.pass ? "1" : "0") +
         " config_hash=" + lm::config_hash_hex(market->cfg) + "\n";
    s += "k,phi,mass,allocation,adversary\n";
    char line[160];
    for (size_t k = 0; k < inst.size(); ++k) {
      std::snprintf(line, sizeof line, "%zu,%.12g,%.12g,%.12g,%.12g\n", k,
                    inst.phi[k], inst.pi[k], saddle.A[k], saddle.p[k]);
      s += line;
    }
    return give(csv, s);
  });
}

int lm_market_full_participation(const lm_market* market, int steps,
                                 char** report_json) {
  return wrap([&] {
    lm::require(market, lm::errc::argument, "market is null");
    const auto rep = lm::full_participation_check(market->cfg, steps);
    json j;
    j["applicable_points"] = rep.applicable_points;
    j["conditions_hold"] = rep.conditions_hold;
    j["optimal_on_grid"] = rep.optimal_on_grid;
    json pts = json::array();
    for (const auto& p : rep.points) {
      pts.push_back({{"rates", p.rates},
                     {"theta_bar", p.theta_bar},
                     {"feasible", p.feasible},
                     {"regular", p.regular},
                     {"low_budget", p.low_budget},
                     {"applicable", p.applicable},
                     {"d_bound", p.d_bound},
                     {"delta_bound", p.delta_bound},
                     {"delta_prime", p.delta_prime},
                     {"grad", p.grad},
                     {"prop1", p.prop1},
                     {"prop2", p.prop2},
                     {"grad_ok", p.grad_ok},
                     {"t_star", p.t_star}});
    }
    j["points"] = pts;
    j["config_hash"] = lm::config_hash_hex(market->cfg);
    return give(report_json, j.dump(2));
  });
}

}  // extern "C"
