// Config I/O implementation.
#include "config_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace lm {

namespace {

using nlohmann::json;

const json& need(const json& j, const std::string& path,
                 const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    fail(errc::config, "missing field: " + path + key);
  return j.at(key);
}

double need_number(const json& j, const std::string& path,
                   const std::string& key) {
  const json& v = need(j, path, key);
  if (!v.is_number())
    fail(errc::config, "field is not a number: " + path + key);
  return v.get<double>();
}

double opt_number(const json& j, const std::string& path,
                  const std::string& key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number())
    fail(errc::config, "field is not a number: " + path + key);
  return v.get<double>();
}

cost_distribution parse_dist(const json& j, const std::string& path) {
  const json& fj = need(j, path, "family");
  if (!fj.is_string())
    fail(errc::config, "field is not a string: " + path + "family");
  const std::string family = fj.get<std::string>();
  const double lo = need_number(j, path, "c_min");
  const double hi = need_number(j, path, "c_max");
  const json params = j.contains("params") ? j.at("params") : json::object();
  const std::string ppath = path + "params.";
  if (family == "uniform") return cost_distribution::uniform(lo, hi);
  if (family == "truncated_exponential")
    return cost_distribution::truncated_exponential(
        lo, hi, need_number(params, ppath, "lambda"));
  if (family == "beta")
    return cost_distribution::beta_on_interval(
        lo, hi, need_number(params, ppath, "alpha"),
        need_number(params, ppath, "beta"));
  fail(errc::config, "unknown distribution family '" + family + "' at " +
                         path + "family");
}

}  // namespace

market_config parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(errc::config, std::string("config is not valid JSON: ") + e.what());
  }

  market_config cfg;
  const double s = need_number(j, "", "population_size");
  cfg.population_size = static_cast<long long>(s);
  require(double(cfg.population_size) == s && cfg.population_size > 0,
          errc::config, "population_size must be a positive integer");
  cfg.budget = need_number(j, "", "budget");
  cfg.gamma = need_number(j, "", "gamma");
  cfg.theta_min = need_number(j, "", "theta_min");
  cfg.epsilon = opt_number(j, "", "epsilon", 0.0);

  const json& pm = need(j, "", "privacy_model");
  const std::string pmp = "privacy_model.";
  cfg.privacy.b_cap = opt_number(pm, pmp, "b_cap", 0.9);
  cfg.privacy.rho = opt_number(pm, pmp, "rho", 0.0);
  cfg.privacy.w0 = need_number(pm, pmp, "w0");
  cfg.privacy.w1 = need_number(pm, pmp, "w1");
  std::string fam = "rho_scaled";
  if (pm.contains("g_family")) {
    require(pm.at("g_family").is_string(), errc::config,
            "field is not a string: privacy_model.g_family");
    fam = pm.at("g_family").get<std::string>();
  }
  if (fam == "rho_scaled") {
    cfg.privacy.family = g_family::rho_scaled;
    require(pm.contains("rho"), errc::config,
            "missing field: privacy_model.rho");
  } else if (fam == "offset") {
    cfg.privacy.family = g_family::offset;
    cfg.privacy.kappa = need_number(pm, pmp, "kappa");
  } else {
    fail(errc::config,
         "unknown g_family '" + fam + "' at privacy_model.g_family");
  }

  const json& groups = need(j, "", "groups");
  require(groups.is_array() && !groups.empty(), errc::config,
          "groups must be a non-empty array");
  for (size_t i = 0; i < groups.size(); ++i) {
    const std::string gp = "groups[" + std::to_string(i) + "].";
    const json& gj = groups.at(i);
    const json& corr = need(gj, gp, "correlation");
    const json& link = need(gj, gp, "data_link");
    group_spec g{
        need_number(gj, gp, "mass"),
        parse_dist(need(gj, gp, "cost_dist"), gp + "cost_dist."),
        {need_number(corr, gp + "correlation.", "intra"),
         need_number(corr, gp + "correlation.", "inter")},
        {need_number(link, gp + "data_link.", "p0"),
         need_number(link, gp + "data_link.", "slope")}};
    cfg.groups.push_back(std::move(g));
  }

  if (j.contains("rates")) {
    const json& r = j.at("rates");
    require(r.is_array() && r.size() == cfg.groups.size(), errc::config,
            "rates must be an array with one entry per group");
    for (size_t i = 0; i < r.size(); ++i) {
      require(r.at(i).is_number(), errc::config,
              "field is not a number: rates[" + std::to_string(i) + "]");
      cfg.default_rates.push_back(r.at(i).get<double>());
    }
  }

  validate_config(cfg);
  return cfg;
}

market_config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::config, "cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const market_config& cfg) {
  json j;
  j["population_size"] = cfg.population_size;
  j["budget"] = cfg.budget;
  j["gamma"] = cfg.gamma;
  j["theta_min"] = cfg.theta_min;
  j["epsilon"] = cfg.epsilon;
  json pm;
  pm["b_cap"] = cfg.privacy.b_cap;
  pm["w0"] = cfg.privacy.w0;
  pm["w1"] = cfg.privacy.w1;
  if (cfg.privacy.family == g_family::rho_scaled) {
    pm["g_family"] = "rho_scaled";
    pm["rho"] = cfg.privacy.rho;
  } else {
    pm["g_family"] = "offset";
    pm["kappa"] = cfg.privacy.kappa;
  }
  j["privacy_model"] = pm;
  json groups = json::array();
  for (const auto& g : cfg.groups) {
    json gj;
    gj["mass"] = g.mass;
    json dj;
    dj["family"] = g.cost.family_name();
    dj["c_min"] = g.cost.c_min();
    dj["c_max"] = g.cost.c_max();
    if (g.cost.family() == dist_family::truncated_exponential)
      dj["params"] = {{"lambda", g.cost.param_a()}};
    else if (g.cost.family() == dist_family::beta_on_interval)
      dj["params"] = {{"alpha", g.cost.param_a()}, {"beta", g.cost.param_b()}};
    gj["cost_dist"] = dj;
    gj["correlation"] = {{"intra", g.correlation.intra},
                         {"inter", g.correlation.inter}};
    gj["data_link"] = {{"p0", g.link.p0}, {"slope", g.link.slope}};
    groups.push_back(gj);
  }
  j["groups"] = groups;
  if (!cfg.default_rates.empty()) j["rates"] = cfg.default_rates;
  return j.dump(2);
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t config_hash(const market_config& cfg) {
  return fnv1a64(dump_config(cfg));
}

std::string config_hash_hex(const market_config& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return std::string(buf);
}

}  // namespace lm
