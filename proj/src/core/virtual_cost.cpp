#include "virtual_cost.hpp"

#include <algorithm>
#include <cmath>

#include "numeric.hpp"

namespace lm {

virtual_cost_curve::virtual_cost_curve(const cost_distribution& dist, double b)
    : dist_(&dist), b_(b) {
  require(b >= 0.0 && b < 1.0, errc::argument,
          "leakage coefficient must lie in [0, 1)");
}

double virtual_cost_curve::phi(double c) const {
  const double f = dist_->pdf(c);
  const double F = dist_->cdf(c);
  // f can vanish at the support ends (beta shapes); the hazard ratio then
  // diverges and so does phi, which the clamped inverse below tolerates.
  const double ratio = F > 0.0 ? (f > 0.0 ? F / f : INFINITY) : 0.0;
  return (1.0 - b_) * (c + ratio);
}

double virtual_cost_curve::phi_prime(double c) const {
  const double h = 1e-5 * dist_->width();
  return central_diff([this](double z) { return phi(z); }, c, h, dist_->c_min(),
                      dist_->c_max());
}

double virtual_cost_curve::inverse(double x, double hi) const {
  const double lo = dist_->c_min();
  if (x <= phi(lo)) return lo;
  if (x >= phi(hi)) return hi;
  return bisect([this, x](double c) { return phi(c) - x; }, lo, hi, 1e-10);
}

regularity_report regularity_check(const cost_distribution& dist, double b) {
  regularity_report rep;
  virtual_cost_curve curve(dist, b);
  const int n = 500;
  double prev = -INFINITY;
  for (int k = 0; k < n; ++k) {
    const double c = dist.c_min() + (k + 0.5) / n * dist.width();
    const double f = dist.pdf(c);
    const double F = dist.cdf(c);
    const double fp = dist.pdf_derivative(c);
    // Sufficient condition for phi' >= 0 with linear leakage:
    // phi' = (1-b)(2 - F f'/f^2) >= 0  <=>  F f' <= 2 f^2.
    if (rep.density_ok && F * fp > 2.0 * f * f + 1e-12) {
      rep.density_ok = false;
      rep.pass = false;
      rep.first_violation_c = c;
      rep.detail = "F f' > 2 f^2 at c=" + std::to_string(c);
    }
    const double ph = curve.phi(c);
    if (rep.monotone && ph < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
      rep.monotone = false;
      if (rep.pass) {
        rep.pass = false;
        rep.first_violation_c = c;
        rep.detail = "phi decreases at c=" + std::to_string(c);
      }
    }
    prev = ph;
  }
  return rep;
}

cumulative_integral::cumulative_integral(std::function<double(double)> fn,
                                         double a, double b, int cells)
    : fn_(std::move(fn)), a_(a), b_(b) {
  require(cells >= 1 && b >= a, errc::argument, "bad cumulative_integral span");
  dx_ = (b - a) / cells;
  cum_.resize(cells + 1, 0.0);
  for (int j = 0; j < cells; ++j)
    cum_[j + 1] = cum_[j] + gl_panel(gl16(), fn_, a_ + j * dx_, a_ + (j + 1) * dx_);
}

double cumulative_integral::eval(double c) const {
  if (cum_.empty() || c <= a_) return 0.0;
  if (c >= b_) return cum_.back();
  const double t = (c - a_) / dx_;
  const int j = std::min(static_cast<int>(t), static_cast<int>(cum_.size()) - 2);
  return cum_[j] + gl_panel(gl16(), fn_, a_ + j * dx_, c);
}

market_view::market_view(market_config c, participation_profile p)
    : cfg(std::move(c)), prof(std::move(p)) {
  const size_t n = cfg.groups.size();
  b.resize(n);
  delta.resize(n);
  phi_lo.resize(n);
  phi_hi.resize(n);
  w = participation_benefit(cfg.privacy, prof.theta_bar);

  for (size_t i = 0; i < n; ++i) {
    b[i] = leakage_coefficient(cfg, prof.rates, i);
    const double tau = prof.tau[i];
    delta[i] = privacy_cost_participant(cfg, prof.rates, i, tau) -
               privacy_cost_outsider(cfg, prof.rates, i, tau);
    leakage_floor += q(i) * prof.rates[i] * (delta[i] - w);
    phi.emplace_back(cfg.groups[i].cost, b[i]);
  }
  pc_budget = cfg.budget / s();
  residual = pc_budget - leakage_floor;

  phi_min = INFINITY;
  phi_max = -INFINITY;
  cum_phi_.resize(n);
  cum_sqrt_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    phi_lo[i] = phi[i].phi(cfg.groups[i].cost.c_min());
    phi_hi[i] = phi[i].phi(prof.tau[i]);
    phi_min = std::min(phi_min, phi_lo[i]);
    phi_max = std::max(phi_max, phi_hi[i]);
    const auto& dist = cfg.groups[i].cost;
    const virtual_cost_curve& curve = phi[i];
    cum_phi_[i] = cumulative_integral(
        [&dist, &curve](double z) { return curve.phi(z) * dist.pdf(z); },
        dist.c_min(), prof.tau[i]);
    cum_sqrt_[i] = cumulative_integral(
        [&dist, &curve](double z) {
          return std::sqrt(std::max(curve.phi(z), 0.0)) * dist.pdf(z);
        },
        dist.c_min(), prof.tau[i]);
  }
}

double market_view::knee_cost(size_t i, double x) const {
  if (x <= phi_lo[i]) return cfg.groups[i].cost.c_min();
  if (x >= phi_hi[i]) return prof.tau[i];
  return phi[i].inverse(x, prof.tau[i]);
}

double market_view::int_phi_below(double x) const {
  double acc = 0.0;
  for (size_t i = 0; i < n_groups(); ++i)
    acc += q(i) * cum_phi_[i].eval(knee_cost(i, x));
  return acc;
}

double market_view::int_sqrt_above(double x) const {
  double acc = 0.0;
  for (size_t i = 0; i < n_groups(); ++i)
    acc += q(i) * (cum_sqrt_[i].total() - cum_sqrt_[i].eval(knee_cost(i, x)));
  return acc;
}

double market_view::mass_above(double x) const {
  double acc = 0.0;
  for (size_t i = 0; i < n_groups(); ++i)
    acc += q(i) * (prof.rates[i] - cfg.groups[i].cost.cdf(knee_cost(i, x)));
  return acc;
}

double market_view::int_phi_total() const {
  double acc = 0.0;
  for (size_t i = 0; i < n_groups(); ++i) acc += q(i) * cum_phi_[i].total();
  return acc;
}

double market_view::int_sqrt_total() const {
  double acc = 0.0;
  for (size_t i = 0; i < n_groups(); ++i) acc += q(i) * cum_sqrt_[i].total();
  return acc;
}

double market_view::omega(double x) const {
  double acc = 0.0;
  for (size_t i = 0; i < n_groups(); ++i) {
    if (x < phi_lo[i] || x > phi_hi[i]) continue;
    const double u = knee_cost(i, x);
    const double dphi = phi[i].phi_prime(u);
    if (dphi > 0.0) acc += q(i) * cfg.groups[i].cost.pdf(u) / dphi;
  }
  return acc;
}

double market_view::omega_mass() const {
  return integrate([this](double x) { return omega(x); }, phi_min, phi_max);
}

market_view make_view(const market_config& cfg, std::vector<double> rates) {
  if (rates.empty()) {
    rates = cfg.default_rates;
    if (rates.empty())
      rates.assign(cfg.groups.size(),
                   std::clamp(0.5, cfg.theta_min, 1.0));
  }
  return market_view(cfg, make_profile(cfg, std::move(rates)));
}

}  // namespace lm
