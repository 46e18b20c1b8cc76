// Payment engine implementation.
#include "payment.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "numeric.hpp"

namespace lm {

namespace {

// Full continuation integral int_c^{c_max} A_i, including the epsilon stub
// above tau_i. Only valid for c in [c_min_i, c_max_i].
double full_tail(const mechanism& m, size_t i, double c) {
  const auto& g = m.view->cfg.groups[i];
  const double tau = m.view->prof.tau[i];
  const double eps = m.rule.epsilon;
  if (c >= tau) return eps * (g.cost.c_max() - c);
  return m.alloc_integral_above(i, c) + eps * (g.cost.c_max() - tau);
}

}  // namespace

double mechanism::alloc_integral_above(size_t group, double c) const {
  const double tau = view->prof.tau[group];
  const double knee = knee_[group];
  const double cc = std::clamp(c, view->cfg.groups[group].cost.c_min(), tau);
  const double below = cc <= knee
                           ? s_low_[group].eval(cc)
                           : s_low_[group].total() + s_high_[group].eval(cc);
  return s_low_[group].total() + s_high_[group].total() - below;
}

double mechanism::payment(size_t group, double c_report) const {
  const auto& g = view->cfg.groups[group];
  const double tau = view->prof.tau[group];
  const double b = view->b[group];
  const double eps = rule.epsilon;
  if (c_report > tau && eps > 0.0) {
    // Out-of-range item: allocation epsilon, constant continuation rate.
    const double ct = std::min(c_report, g.cost.c_max());
    return ct * (1.0 - b) +
           ((1.0 - b) * eps * (g.cost.c_max() - ct) + kappa[group]) / eps;
  }
  const double ct = std::clamp(c_report, g.cost.c_min(), tau);
  const double a = rule.at(group, ct);
  require(a > 0.0, errc::internal, "zero allocation inside the menu");
  // Epsilon terms in kappa and in the continuation integral cancel here.
  return (1.0 - b) * ct +
         ((1.0 - b) * alloc_integral_above(group, ct) + view->delta[group] -
          view->w) /
             a;
}

double mechanism::utility(size_t group, double c_report, double c_true) const {
  const double b = view->b[group];
  const double a = rule.at(group, c_report);
  const double hc = b * c_true;
  return a * ((c_report - c_true) * (1.0 - b)) +
         (1.0 - b) * full_tail(*this, group, c_report) + kappa[group] - hc +
         view->w;
}

double mechanism::truthful_utility(size_t group, double c) const {
  return utility(group, c, c);
}

mechanism attach_payments(const allocation_rule& rule,
                          const std::vector<double>* kappa_override) {
  mechanism m;
  m.view = rule.view;
  m.rule = rule;
  const market_view& v = *m.view;
  const size_t n = v.n_groups();

  if (rule.epsilon > 0.0) {
    // Above tau the allocation drops to epsilon; monotonicity (and with it
    // truthfulness) needs epsilon to stay below the menu's lowest allocation.
    for (size_t i = 0; i < n; ++i) {
      const double edge = rule.at(i, v.prof.tau[i]);
      require(rule.epsilon <= edge + 1e-12, errc::config,
              "epsilon exceeds the allocation at the participation threshold "
              "of groups[" +
                  std::to_string(i) + "]; lower epsilon");
    }
  }

  m.knee_.resize(n);
  m.s_low_.reserve(n);
  m.s_high_.reserve(n);
  m.kappa.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& g = v.cfg.groups[i];
    const double tau = v.prof.tau[i];
    // Knee-aligned tables keep each integrand smooth, so GL panels converge.
    const double knee = std::clamp(rule.knee_c(i), g.cost.c_min(), tau);
    m.knee_[i] = knee;
    // Captured by value: the tables outlive this frame once the mechanism
    // is moved into its final home.
    auto a_of = [r = m.rule, i](double c) { return r.at(i, c); };
    m.s_low_.emplace_back(a_of, g.cost.c_min(), knee, 512);
    m.s_high_.emplace_back(a_of, knee, tau, 512);
    // Pin the constant so U_i(tau_i; tau_i) = -g_i(tau_i): the marginal type
    // is exactly indifferent between joining and staying out.
    m.kappa[i] = v.delta[i] - v.w -
                 (1.0 - v.b[i]) * rule.epsilon * (g.cost.c_max() - tau);
  }
  if (kappa_override) {
    require(kappa_override->size() == n, errc::argument,
            "kappa override has the wrong length");
    m.kappa = *kappa_override;
  }
  return m;
}

mechanism build_mechanism(std::shared_ptr<const market_view> view) {
  return attach_payments(solve_allocation(std::move(view)));
}

payment_total expected_total_payment(const mechanism& m) {
  const market_view& v = *m.view;
  payment_total out;
  out.budget = v.cfg.budget;
  for (size_t i = 0; i < v.n_groups(); ++i) {
    const auto& g = v.cfg.groups[i];
    const double tau = v.prof.tau[i];
    const double b = v.b[i];
    const std::vector<double> breaks = {g.cost.c_min(), m.knee(i), tau};
    // A * P without the division: A P = (1-b)(c A + S) + Delta - w.
    const double group_direct =
        g.mass * integrate_pieces(
                     [&](double c) {
                       const double a = m.rule.at(i, c);
                       return ((1.0 - b) *
                                   (c * a + m.alloc_integral_above(i, c)) +
                               v.delta[i] - v.w) *
                              g.cost.pdf(c);
                     },
                     breaks, 1e-9);
    out.per_group.push_back(group_direct);
    out.direct += group_direct;
    out.via_virtual +=
        g.mass * integrate_pieces(
                     [&](double c) {
                       return v.phi[i].phi(c) * m.rule.at(i, c) *
                              g.cost.pdf(c);
                     },
                     breaks, 1e-9);
  }
  const double s = v.s();
  out.direct *= s;
  for (double& g : out.per_group) g *= s;
  out.via_virtual = s * (out.via_virtual + v.leakage_floor);
  return out;
}

truthfulness_report truthfulness_audit(const mechanism& m, int samples,
                                       uint64_t seed, int report_grid) {
  const market_view& v = *m.view;
  const size_t n = v.n_groups();
  truthfulness_report rep;
  rep.samples = samples;

  // Precompute per-group report-grid tables. U(ct; c) is affine in
  // (G(ct), A(ct)) for fixed c: U = G - (1-b) c A - b c + w.
  struct grid_tab {
    std::vector<double> ct, a, g;
    double lo = 0.0, step = 0.0, knee = 0.0;
  };
  std::vector<grid_tab> tabs(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& gr = v.cfg.groups[i];
    const double b = v.b[i];
    const double lo = gr.cost.c_min();
    const double hi = m.rule.epsilon > 0.0 ? gr.cost.c_max() : v.prof.tau[i];
    grid_tab& t = tabs[i];
    t.lo = lo;
    t.step = (hi - lo) / report_grid;
    t.knee = m.knee(i);
    t.ct.resize(report_grid + 1);
    t.a.resize(report_grid + 1);
    t.g.resize(report_grid + 1);
    for (int j = 0; j <= report_grid; ++j) {
      const double ct = lo + t.step * j;
      const double a = m.rule.at(i, ct);
      t.ct[j] = ct;
      t.a[j] = a;
      t.g[j] = a * ct * (1.0 - b) + (1.0 - b) * full_tail(m, i, ct) +
               m.kappa[i];
    }
  }

  double u_scale = 1.0;
  for (int k = 0; k < samples; ++k) {
    counter_rng rng(seed, 7001, static_cast<uint64_t>(k));
    // Participant sample: group by mass, cost by quantile below tau.
    const double ug = rng.next_unit();
    size_t i = 0;
    double acc = 0.0;
    for (; i + 1 < n; ++i) {
      acc += v.q(i);
      if (ug < acc) break;
    }
    const double c =
        v.cfg.groups[i].cost.quantile(rng.next_unit() * v.prof.rates[i]);
    const grid_tab& t = tabs[i];
    const double b = v.b[i];
    const double slope = (1.0 - b) * c;

    double best = -INFINITY;
    for (size_t j = 0; j < t.ct.size(); ++j)
      best = std::max(best, t.g[j] - slope * t.a[j]);
    const double shift = -b * c + v.w;
    const double u_best = best + shift;
    const double u_truth = m.utility(i, c, c);
    u_scale = std::max({u_scale, std::fabs(u_best), std::fabs(u_truth)});
    rep.max_gain = std::max(rep.max_gain, u_best - u_truth);

    // Maximizer set within a tie tolerance; the one nearest the true cost
    // must land within a grid step of it.
    const double tie_tol = 1e-11 * std::max(1.0, std::fabs(u_best));
    double nearest = INFINITY;
    std::vector<double> ties;
    for (size_t j = 0; j < t.ct.size(); ++j) {
      if (t.g[j] - slope * t.a[j] >= best - tie_tol) {
        ties.push_back(t.ct[j]);
        if (std::fabs(t.ct[j] - c) < std::fabs(nearest - c)) nearest = t.ct[j];
      }
    }
    if (std::fabs(nearest - c) > 1.000001 * t.step) {
      ++rep.violations;
      continue;
    }
    // Ties far from the truthful report are fine only on a plateau.
    for (double ct : ties) {
      if (std::fabs(ct - nearest) <= 2.0001 * t.step) continue;
      const bool on_plateau =
          m.rule.structure == rule_shape::flat ||
          (m.rule.structure == rule_shape::ftd &&
           ct <= t.knee + 1.0001 * t.step && c <= t.knee + 1.0001 * t.step);
      if (!on_plateau) ++rep.offplateau_ties;
    }
  }

  // Envelope identity dU*(c)/dc = -(1-b) A(c) - b on an interior grid.
  for (size_t i = 0; i < n; ++i) {
    const auto& gr = v.cfg.groups[i];
    const double b = v.b[i];
    const double lo = gr.cost.c_min();
    const double tau = v.prof.tau[i];
    const double width = gr.cost.c_max() - lo;
    const double h = 1e-5 * width;
    for (int j = 1; j < 100; ++j) {
      const double c = lo + (tau - lo) * j / 100.0;
      const double cd =
          central_diff([&](double x) { return m.truthful_utility(i, x); }, c,
                       h, lo, tau);
      const double target = -(1.0 - b) * m.rule.at(i, c) - b;
      rep.max_envelope_gap =
          std::max(rep.max_envelope_gap,
                   std::fabs(cd - target) / std::fabs(target));
    }
    rep.max_boundary_gap = std::max(
        rep.max_boundary_gap,
        std::fabs(m.truthful_utility(i, tau) +
                  privacy_cost_outsider(v.cfg, v.prof.rates, i, tau)));
  }

  rep.pass = rep.violations == 0 && rep.offplateau_ties == 0 &&
             rep.max_gain <= 1e-9 * u_scale && rep.max_envelope_gap <= 1e-6 &&
             rep.max_boundary_gap <= 1e-8;
  if (!rep.pass) {
    rep.detail = "violations=" + std::to_string(rep.violations) +
                 " offplateau_ties=" + std::to_string(rep.offplateau_ties) +
                 " max_gain=" + std::to_string(rep.max_gain) +
                 " envelope=" + std::to_string(rep.max_envelope_gap) +
                 " boundary=" + std::to_string(rep.max_boundary_gap);
  }
  return rep;
}

participation_report participation_audit(const mechanism& m, int grid,
                                         double tol) {
  const market_view& v = *m.view;
  const size_t n = v.n_groups();
  participation_report rep;
  rep.theta_hat.resize(n);
  rep.boundary_cost.resize(n);
  rep.threshold_shape = true;

  for (size_t i = 0; i < n; ++i) {
    const auto& gr = v.cfg.groups[i];
    const double b = v.b[i];
    const double lo = gr.cost.c_min(), hi = gr.cost.c_max();
    const double tau = v.prof.tau[i];
    const double menu_hi = m.rule.epsilon > 0.0 ? hi : tau;
    const int rg = 1000;
    std::vector<double> ga(rg + 1), aa(rg + 1);
    for (int j = 0; j <= rg; ++j) {
      const double ct = lo + (menu_hi - lo) * j / rg;
      const double a = m.rule.at(i, ct);
      aa[j] = a;
      ga[j] = a * ct * (1.0 - b) + (1.0 - b) * full_tail(m, i, ct) +
              m.kappa[i];
    }
    // Decision d(c): join iff max_ct U(ct; c) >= -g_i(c). Ties go to joining,
    // so the marginal type at tau joins.
    const double step = (hi - lo) / (grid - 1);
    int first_out = grid;
    bool monotone = true;
    for (int k = 0; k < grid; ++k) {
      const double c = lo + step * k;
      const double slope = (1.0 - b) * c;
      double best = -INFINITY;
      for (int j = 0; j <= rg; ++j)
        best = std::max(best, ga[j] - slope * aa[j]);
      const double u_join = best - b * c + v.w;
      const double u_out = -privacy_cost_outsider(v.cfg, v.prof.rates, i, c);
      const bool join = u_join >= u_out - 1e-12 * std::max(1.0, std::fabs(u_out));
      if (join && k > first_out) monotone = false;
      if (!join && k < first_out) first_out = k;
    }
    rep.threshold_shape = rep.threshold_shape && monotone;
    const double boundary =
        first_out >= grid ? hi : lo + step * (first_out - 0.5);
    rep.boundary_cost[i] = boundary;
    rep.theta_hat[i] = gr.cost.cdf(boundary);
    rep.max_theta_gap = std::max(
        rep.max_theta_gap, std::fabs(rep.theta_hat[i] - v.prof.rates[i]));
    if (std::fabs(boundary - tau) > 1.0001 * step) rep.threshold_shape = false;
  }
  rep.pass = rep.threshold_shape && rep.max_theta_gap <= tol;
  if (!rep.pass)
    rep.detail = std::string(rep.threshold_shape ? "" : "non-threshold join set; ") +
                 "max theta gap " + std::to_string(rep.max_theta_gap);
  return rep;
}

underpayment_report underpayment_check(const mechanism& m, int grid) {
  const market_view& v = *m.view;
  underpayment_report rep;
  for (size_t i = 0; i < v.n_groups(); ++i) {
    const double b = v.b[i];
    if (b <= 1e-15) continue;
    const auto& gr = v.cfg.groups[i];
    const double lo = gr.cost.c_min();
    const double tau = v.prof.tau[i];
    // P_b - P_0 = -b c + (Delta - b S(c)) / A(c); nonpositivity over the menu
    // is equivalent to c A(c) + S(c) >= Delta/b, whose left side has slope
    // c A'(c) <= 0, so the condition binds at c = tau where S vanishes:
    //   A_i(tau_i) >= Delta_i / (b_i tau_i) = 1 - g_i(tau_i)/h_i(tau_i).
    const double share = v.delta[i] / (b * tau);
    if (m.rule.at(i, tau) + 1e-12 < share) rep.regime_met = false;
    for (int k = 0; k < grid; ++k) {
      const double c = lo + (tau - lo) * k / (grid - 1);
      const double a = m.rule.at(i, c);
      const double s_tail = m.alloc_integral_above(i, c);
      const double p_b = m.payment(i, c);
      // Same rule and threshold repriced with b = 0.
      const double p_0 = c + (s_tail - v.w) / a;
      const double excess = p_b - p_0;
      if (excess > rep.max_excess) rep.max_excess = excess;
    }
  }
  rep.holds = rep.max_excess <= 1e-10;
  if (!rep.holds)
    rep.detail = "leakage raises pay by up to " + std::to_string(rep.max_excess);
  return rep;
}

}  // namespace lm
