// Tradeoff evaluator implementation.
#include "tradeoff.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "numeric.hpp"

namespace lm {

presence presence_from_links(const market_view& view) {
  presence out;
  for (size_t i = 0; i < view.n_groups(); ++i) {
    const auto& g = view.cfg.groups[i];
    presence_curve pc;
    pc.prob = [&g](double c) { return g.data_prob(c); };
    // Clamp corners of p0 + slope * t make the curve piecewise linear.
    const double lo = g.cost.c_min(), hi = g.cost.c_max();
    if (g.link.slope > 1e-300) {
      for (double target : {0.0, 1.0}) {
        const double t = (target - g.link.p0) / g.link.slope;
        const double c = lo + t * (hi - lo);
        if (c > lo && c < hi) pc.cuts.push_back(c);
      }
      std::sort(pc.cuts.begin(), pc.cuts.end());
    }
    out.by_group.push_back(std::move(pc));
  }
  return out;
}

presence presence_constant(const market_view& view, double level) {
  presence out;
  for (size_t i = 0; i < view.n_groups(); ++i)
    out.by_group.push_back({[level](double) { return level; }, {}});
  return out;
}

double step_adversary::at(size_t i, double c) const {
  const auto& g = by_group[i];
  const auto it = std::lower_bound(g.edge.begin(), g.edge.end(), c);
  const size_t j = std::min<size_t>(it - g.edge.begin(), g.value.size() - 1);
  return g.value[j];
}

presence step_adversary::to_presence() const {
  presence out;
  for (const auto& g : by_group) {
    presence_curve pc;
    pc.prob = [g](double c) {  // by value: the presence outlives the adversary
      const auto it = std::lower_bound(g.edge.begin(), g.edge.end(), c);
      const size_t j =
          std::min<size_t>(it - g.edge.begin(), g.value.size() - 1);
      return g.value[j];
    };
    if (g.edge.size() > 1)
      pc.cuts.assign(g.edge.begin(), g.edge.end() - 1);
    out.by_group.push_back(std::move(pc));
  }
  return out;
}

void step_adversary::perturb_at(size_t i, double c, double dp) {
  auto& g = by_group[i];
  const auto it = std::lower_bound(g.edge.begin(), g.edge.end(), c);
  const size_t j = std::min<size_t>(it - g.edge.begin(), g.value.size() - 1);
  g.value[j] = std::clamp(g.value[j] + dp, 0.0, 1.0);
}

namespace {

// Participant-interval integral of fn(c) f_i(c) with breaks at the rule's
// knee and the presence curve's cuts.
double part_integral(const allocation_rule& rule, size_t i,
                     const std::vector<double>& cuts,
                     const std::function<double(double)>& fn, double tol) {
  const market_view& v = *rule.view;
  const auto& g = v.cfg.groups[i];
  const double lo = g.cost.c_min(), tau = v.prof.tau[i];
  std::vector<double> breaks = {lo, rule.knee_c(i), tau};
  for (double c : cuts)
    if (c > lo && c < tau) breaks.push_back(c);
  std::sort(breaks.begin(), breaks.end());
  return integrate_pieces([&](double c) { return fn(c) * g.cost.pdf(c); },
                          breaks, tol);
}

}  // namespace

tradeoff_values evaluate_tradeoff(const allocation_rule& rule,
                                  const presence& p) {
  const market_view& v = *rule.view;
  const double tb = v.theta_bar();
  tradeoff_values out;
  double mean_acc = 0.0, ratio_acc = 0.0, spend_acc = 0.0;
  for (size_t i = 0; i < v.n_groups(); ++i) {
    const auto& curve = p.by_group[i];
    mean_acc += v.q(i) * part_integral(rule, i, curve.cuts, curve.prob, 1e-9);
    ratio_acc += v.q(i) * part_integral(
                              rule, i, curve.cuts,
                              [&](double c) {
                                return curve.prob(c) / rule.at(i, c);
                              },
                              1e-9);
    spend_acc += v.q(i) * part_integral(
                              rule, i, {},
                              [&](double c) {
                                return v.phi[i].phi(c) * rule.at(i, c);
                              },
                              1e-9);
  }
  out.presence_mean = mean_acc / tb;
  out.variance =
      (ratio_acc / tb - out.presence_mean * out.presence_mean) / (v.s() * tb);
  out.bias = (1.0 - tb) * (1.0 - out.presence_mean);
  out.objective =
      v.gamma() * out.variance + (1.0 - v.gamma()) * out.bias;
  out.spend_above_floor = spend_acc;
  return out;
}

namespace {

// Map the saddle's per-atom adversary back to equal-width panels (atoms were
// dropped where the mixture carried no mass; forward-fill keeps the profile
// monotone there), then to per-group cost segments.
step_adversary lift_adversary(const allocation_rule& rule,
                              const discrete_instance& inst,
                              const std::vector<double>& p_atoms, int panels) {
  const market_view& v = *rule.view;
  const double width = (v.phi_max - v.phi_min) / panels;
  std::vector<double> p_panel(panels, -1.0);
  for (size_t k = 0; k < inst.size(); ++k) {
    int j = static_cast<int>((inst.phi[k] - v.phi_min) / width);
    j = std::clamp(j, 0, panels - 1);
    p_panel[j] = p_atoms[k];
  }
  double last = -1.0;
  for (int j = 0; j < panels; ++j) {
    if (p_panel[j] < 0.0)
      p_panel[j] = last;
    else
      last = p_panel[j];
  }
  for (int j = panels - 2; j >= 0; --j) {  // leading gap: backward fill
    if (p_panel[j] < 0.0) p_panel[j] = p_panel[j + 1];
  }

  step_adversary adv;
  for (size_t i = 0; i < v.n_groups(); ++i) {
    step_adversary::group_steps gs;
    for (int j = 0; j < panels; ++j) {
      const double c_hi = v.knee_cost(i, v.phi_min + (j + 1) * width);
      if (!gs.value.empty() && p_panel[j] == gs.value.back()) {
        gs.edge.back() = c_hi;  // extend the run
      } else if (gs.edge.empty() || c_hi > gs.edge.back() + 1e-300) {
        gs.edge.push_back(c_hi);
        gs.value.push_back(p_panel[j]);
      }
    }
    if (gs.edge.empty()) {
      gs.edge.push_back(v.prof.tau[i]);
      gs.value.push_back(p_panel.empty() ? 1.0 : p_panel.back());
    }
    adv.by_group.push_back(std::move(gs));
  }
  return adv;
}

}  // namespace

step_adversary adversary_best_response(const allocation_rule& rule,
                                       int panels) {
  const discrete_instance inst = discretize(*rule.view, panels);
  const discrete_saddle saddle = solve_discrete(inst);
  return lift_adversary(rule, inst, saddle.p, panels);
}

worst_case_report worst_case_tradeoff(const allocation_rule& rule,
                                      int panels) {
  const discrete_instance inst = discretize(*rule.view, panels);
  const discrete_saddle saddle = solve_discrete(inst);
  worst_case_report rep;
  rep.adversary = lift_adversary(rule, inst, saddle.p, panels);
  rep.case_tag = saddle.case_tag;
  rep.discrete_value = game_objective(inst, saddle.A, saddle.p);
  rep.upper_bound_certified = verify_saddle(inst, saddle).pass;
  rep.values = evaluate_tradeoff(rule, rep.adversary.to_presence());
  return rep;
}

double grid_search_adversary(const allocation_rule& rule, int levels,
                             int knots) {
  const market_view& v = *rule.view;
  auto eval_step = [&](double lo_level, double hi_level, double frac) {
    step_adversary adv;
    for (size_t i = 0; i < v.n_groups(); ++i) {
      const double a = v.cfg.groups[i].cost.c_min();
      const double b = v.prof.tau[i];
      step_adversary::group_steps gs;
      if (frac <= 0.0 || lo_level == hi_level) {
        gs.edge = {b};
        gs.value = {hi_level};
      } else if (frac >= 1.0) {
        gs.edge = {b};
        gs.value = {lo_level};
      } else {
        gs.edge = {a + frac * (b - a), b};
        gs.value = {lo_level, hi_level};
      }
      adv.by_group.push_back(std::move(gs));
    }
    return evaluate_tradeoff(rule, adv.to_presence()).objective;
  };

  double best = -INFINITY;
  for (int l = 0; l < levels; ++l) {
    const double level = double(l) / (levels - 1);
    best = std::max(best, eval_step(level, level, 0.0));
    for (int k = 1; k < knots; ++k) {
      const double frac = double(k) / knots;
      // Ramps from zero, ramps to one, and the general two-level family is
      // covered by pairing each level with zero below or one above.
      best = std::max(best, eval_step(0.0, level, frac));
      best = std::max(best, eval_step(level, 1.0, frac));
    }
  }
  return best;
}

reduced_objective_result reduced_objective(const market_view& view) {
  require(check_low_budget(view), errc::regime,
          "closed-form objective is only valid in the low-budget regime");
  reduced_objective_result out;
  out.theta_bar = view.theta_bar();
  out.residual = view.residual;
  const double root = view.int_sqrt_total();
  out.r = root * root;
  out.t_star =
      view.gamma() / view.s() *
      (out.r / (out.theta_bar * out.theta_bar * out.residual) -
       1.0 / out.theta_bar);
  return out;
}

namespace {

struct point_quantities {
  bool valid = false;
  double r = 0.0, res = 0.0, theta_bar = 0.0, t_star = 0.0, w = 0.0;
  std::vector<double> delta;
  std::vector<double> rates;
};

point_quantities quantities_at(const market_config& cfg,
                               const std::vector<double>& rates) {
  point_quantities q;
  q.rates = rates;
  market_view v = make_view(cfg, rates);
  const double root = v.int_sqrt_total();
  q.r = root * root;
  q.res = v.residual;
  q.theta_bar = v.theta_bar();
  q.w = v.w;
  q.delta = v.delta;
  if (q.res > 0.0 && q.r > 0.0)
    q.t_star = cfg.gamma / double(cfg.population_size) *
               (q.r / (q.theta_bar * q.theta_bar * q.res) - 1.0 / q.theta_bar);
  q.valid = true;
  return q;
}

}  // namespace

fp_report full_participation_check(const market_config& cfg, int steps) {
  require(steps >= 2, errc::argument, "grid needs at least two steps");
  const size_t n = cfg.groups.size();
  double total = std::pow(double(steps), double(n));
  require(total <= 20000.0, errc::argument,
          "rate grid too large; reduce steps or groups");

  const double lo = std::max(cfg.theta_min, 1e-3);
  std::vector<double> axis(steps);
  for (int j = 0; j < steps; ++j)
    axis[j] = lo + (1.0 - lo) * j / (steps - 1);

  fp_report rep;
  rep.conditions_hold = true;
  rep.optimal_on_grid = true;

  std::vector<int> idx(n, 0);
  const double grad_tol = 1e-9;
  while (true) {
    std::vector<double> rates(n);
    for (size_t i = 0; i < n; ++i) rates[i] = axis[idx[i]];

    fp_point pt;
    pt.rates = rates;
    market_view v = make_view(cfg, rates);
    pt.theta_bar = v.theta_bar();
    pt.feasible = v.residual > 0.0;
    pt.regular = true;
    for (size_t i = 0; i < n && pt.regular; ++i)
      pt.regular = regularity_check(cfg.groups[i].cost, v.b[i]).pass;
    pt.low_budget = pt.feasible && check_low_budget(v);
    pt.applicable = pt.feasible && pt.regular && pt.low_budget;

    if (pt.applicable) {
      const auto center = quantities_at(cfg, rates);
      pt.t_star = center.t_star;
      pt.d_bound.resize(n);
      pt.delta_bound.resize(n);
      pt.delta_prime.resize(n);
      pt.grad.resize(n);
      const double h = 1e-5;
      for (size_t i = 0; i < n; ++i) {
        const double th_lo = std::max(cfg.theta_min, rates[i] - h);
        const double th_hi = std::min(1.0, rates[i] + h);
        auto lo_rates = rates, hi_rates = rates;
        lo_rates[i] = th_lo;
        hi_rates[i] = th_hi;
        const auto ql = quantities_at(cfg, lo_rates);
        const auto qh = quantities_at(cfg, hi_rates);
        const double dx = th_hi - th_lo;
        const double drdth = (qh.r - ql.r) / dx;
        pt.grad[i] = (qh.t_star - ql.t_star) / dx;
        pt.delta_prime[i] = (qh.delta[i] - ql.delta[i]) / dx;
        double cross = 0.0;  // sum_{j != i} q_j theta_j dDelta_j/dtheta_i
        for (size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          cross += cfg.groups[j].mass * rates[j] *
                   (qh.delta[j] - ql.delta[j]) / dx;
        }
        const double qi = cfg.groups[i].mass;
        const double tb = center.theta_bar;
        const double res = center.res;
        const double r = center.r;
        pt.d_bound[i] =
            (rates[i] * pt.delta_prime[i] + center.delta[i] - center.w) / tb +
            drdth * res / (tb * qi * r) - 2.0 * res / (tb * tb) +
            res * res / (tb * r) + cross / (qi * tb);
        pt.delta_bound[i] =
            (center.w + tb * cfg.privacy.w1 - center.delta[i]) / rates[i] -
            drdth * res / (rates[i] * qi * r) + 2.0 * res / (rates[i] * tb) -
            res * res / (rates[i] * r) - cross / (qi * rates[i]);
      }
      pt.prop1 = true;
      pt.prop2 = true;
      pt.grad_ok = true;
      for (size_t i = 0; i < n; ++i) {
        if (cfg.privacy.w1 < pt.d_bound[i] - 1e-9) pt.prop1 = false;
        if (pt.delta_prime[i] > pt.delta_bound[i] + 1e-9) pt.prop2 = false;
        if (pt.grad[i] > grad_tol) pt.grad_ok = false;
      }
      ++rep.applicable_points;
      rep.conditions_hold = rep.conditions_hold && pt.prop1;
      rep.optimal_on_grid = rep.optimal_on_grid && pt.grad_ok;
    }
    rep.points.push_back(std::move(pt));

    size_t d = 0;
    while (d < n && ++idx[d] == steps) idx[d++] = 0;
    if (d == n) break;
  }
  if (rep.applicable_points == 0) {
    rep.conditions_hold = false;
    rep.optimal_on_grid = false;
  }
  return rep;
}

}  // namespace lm
