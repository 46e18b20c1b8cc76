#include "market_model.hpp"

#include <algorithm>
#include <cmath>

#include "numeric.hpp"

namespace lm {

double group_spec::data_prob(double c) const {
  const double t = (c - cost.c_min()) / cost.width();
  return std::clamp(link.p0 + link.slope * t, 0.0, 1.0);
}

void validate_config(const market_config& cfg) {
  require(cfg.population_size >= 1, errc::config, "population_size must be >= 1");
  require(cfg.budget > 0.0, errc::config, "budget must be > 0");
  require(cfg.gamma >= 0.0 && cfg.gamma <= 1.0, errc::config,
          "gamma must lie in [0, 1]");
  require(cfg.theta_min > 0.0 && cfg.theta_min <= 1.0, errc::config,
          "theta_min must lie in (0, 1]");
  require(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0, errc::config,
          "epsilon must lie in [0, 1]");
  const auto& pm = cfg.privacy;
  require(pm.b_cap > 0.0 && pm.b_cap < 1.0, errc::config,
          "privacy_model.b_cap must lie in (0, 1)");
  require(pm.rho >= 0.0 && pm.rho < 1.0, errc::config,
          "privacy_model.rho must lie in [0, 1)");
  require(pm.kappa >= 0.0, errc::config, "privacy_model.kappa must be >= 0");
  require(pm.w0 >= 0.0, errc::config, "privacy_model.w0 must be >= 0");
  require(pm.w1 >= 0.0, errc::config, "privacy_model.w1 must be >= 0");
  require(!cfg.groups.empty(), errc::config, "groups must be non-empty");

  double mass_sum = 0.0;
  for (size_t i = 0; i < cfg.groups.size(); ++i) {
    const auto& g = cfg.groups[i];
    const std::string at = "groups[" + std::to_string(i) + "]";
    require(g.mass > 0.0, errc::config, at + ".mass must be > 0");
    require(g.cost.c_min() > 0.0, errc::config,
            at + ".cost_dist.c_min must be > 0");
    require(g.correlation.intra >= 0.0, errc::config,
            at + ".correlation.intra must be >= 0");
    require(g.correlation.inter >= 0.0, errc::config,
            at + ".correlation.inter must be >= 0");
    mass_sum += g.mass;
  }
  require(std::abs(mass_sum - 1.0) <= 1e-12, errc::config,
          "groups[].mass must sum to 1 (got " + std::to_string(mass_sum) + ")");
  if (!cfg.default_rates.empty())
    require(cfg.default_rates.size() == cfg.groups.size(), errc::config,
            "rates must list one entry per group");
}

participation_profile make_profile(const market_config& cfg,
                                   std::vector<double> rates) {
  require(rates.size() == cfg.groups.size(), errc::argument,
          "profile must supply one rate per group");
  participation_profile prof;
  prof.rates = std::move(rates);
  prof.tau.resize(prof.rates.size());
  for (size_t i = 0; i < prof.rates.size(); ++i) {
    const double th = prof.rates[i];
    require(th >= cfg.theta_min - 1e-12 && th <= 1.0 + 1e-12, errc::config,
            "rates[" + std::to_string(i) + "] outside [theta_min, 1]");
    prof.tau[i] = cfg.groups[i].cost.quantile(std::clamp(th, 0.0, 1.0));
    prof.theta_bar += cfg.groups[i].mass * th;
  }
  return prof;
}

double theta_minus(const market_config& cfg, const std::vector<double>& rates,
                   size_t i) {
  double num = 0.0, den = 0.0;
  for (size_t j = 0; j < cfg.groups.size(); ++j) {
    if (j == i) continue;
    num += cfg.groups[j].mass * rates[j];
    den += cfg.groups[j].mass;
  }
  return den > 0.0 ? num / den : 0.0;
}

double leakage_coefficient(const market_config& cfg,
                           const std::vector<double>& rates, size_t i) {
  const auto& corr = cfg.groups[i].correlation;
  const double lin =
      corr.intra * rates[i] + corr.inter * theta_minus(cfg, rates, i);
  return std::min(cfg.privacy.b_cap, lin);
}

double privacy_cost_participant(const market_config& cfg,
                                const std::vector<double>& rates, size_t i,
                                double c) {
  return c * leakage_coefficient(cfg, rates, i);
}

double privacy_cost_outsider(const market_config& cfg,
                             const std::vector<double>& rates, size_t i,
                             double c) {
  const double h = privacy_cost_participant(cfg, rates, i, c);
  if (cfg.privacy.family == g_family::rho_scaled) return cfg.privacy.rho * h;
  return std::max(h - cfg.privacy.kappa * c, 0.0);
}

double participation_benefit(const privacy_cost_model& m, double theta_bar) {
  return m.w0 + m.w1 * theta_bar;
}

namespace {

void add(assumption_report& rep, std::string path, std::string name,
         std::string msg, double value) {
  rep.pass = false;
  rep.items.push_back(
      {std::move(path), std::move(name), std::move(msg), value});
}

std::vector<std::vector<double>> rate_grid(const market_config& cfg) {
  const size_t n = cfg.groups.size();
  const double lo = cfg.theta_min;
  std::vector<std::vector<double>> grid;
  auto level = [&](int k, int steps) {
    return lo + (1.0 - lo) * k / (steps - 1);
  };
  if (n == 1) {
    for (int a = 0; a < 20; ++a) grid.push_back({level(a, 20)});
  } else if (n == 2) {
    for (int a = 0; a < 20; ++a)
      for (int b = 0; b < 20; ++b) grid.push_back({level(a, 20), level(b, 20)});
  } else {
    counter_rng rng(0x1eaf, 0, 0);
    for (int r = 0; r < 400; ++r) {
      std::vector<double> th(n);
      for (auto& v : th) v = lo + (1.0 - lo) * rng.next_unit();
      grid.push_back(std::move(th));
    }
  }
  return grid;
}

}  // namespace

assumption_report validate_assumptions(const market_config& cfg) {
  assumption_report rep;
  const auto& pm = cfg.privacy;

  if (!(pm.b_cap > 0.0 && pm.b_cap < 1.0))
    add(rep, "privacy_model.b_cap", "bounded-leakage", "b_cap outside (0, 1)",
        pm.b_cap);
  if (!(pm.rho >= 0.0 && pm.rho < 1.0))
    add(rep, "privacy_model.rho", "outsider-discount", "rho outside [0, 1)",
        pm.rho);
  if (pm.w0 < 0.0)
    add(rep, "privacy_model.w0", "benefit-nonnegative", "w0 < 0", pm.w0);
  if (pm.w1 < 0.0)
    add(rep, "privacy_model.w1", "benefit-nondecreasing", "w1 < 0", pm.w1);

  double mass_sum = 0.0;
  for (size_t i = 0; i < cfg.groups.size(); ++i) {
    const auto& g = cfg.groups[i];
    const std::string at = "groups[" + std::to_string(i) + "]";
    mass_sum += g.mass;
    if (!(g.cost.c_min() > 0.0))
      add(rep, at + ".cost_dist.c_min", "positive-costs", "c_min <= 0",
          g.cost.c_min());
    if (g.link.slope < 0.0)
      add(rep, at + ".data_link.slope", "monotone-data-link",
          "decreasing data probability violates the monotone-adversary "
          "assumption",
          g.link.slope);
    // pdf positivity on the open support, 200 interior points.
    for (int k = 0; k < 200; ++k) {
      const double c = g.cost.c_min() + (k + 0.5) / 200.0 * g.cost.width();
      const double f = g.cost.pdf(c);
      if (!(f > 0.0) || !std::isfinite(f)) {
        add(rep, at + ".cost_dist", "positive-density",
            "pdf not positive/finite at c=" + std::to_string(c), f);
        break;
      }
    }
  }
  if (std::abs(mass_sum - 1.0) > 1e-12)
    add(rep, "groups[].mass", "unit-mass", "masses do not sum to 1", mass_sum);

  // Leakage stays strictly below 1 and outsiders never lose more than
  // participants, across the admissible profile grid.
  for (const auto& th : rate_grid(cfg)) {
    bool bad = false;
    for (size_t i = 0; i < cfg.groups.size() && !bad; ++i) {
      const double b = leakage_coefficient(cfg, th, i);
      if (!(b < 1.0)) {
        add(rep, "groups[" + std::to_string(i) + "].correlation",
            "bounded-leakage", "b_i reaches 1 under an admissible profile", b);
        bad = true;
      }
      const double c_hi = cfg.groups[i].cost.c_max();
      const double h = privacy_cost_participant(cfg, th, i, c_hi);
      const double g = privacy_cost_outsider(cfg, th, i, c_hi);
      if (g > h + 1e-12) {
        add(rep, "privacy_model", "outsider-dominated",
            "g exceeds h under an admissible profile", g - h);
        bad = true;
      }
    }
    if (bad) break;
  }
  return rep;
}

}  // namespace lm
