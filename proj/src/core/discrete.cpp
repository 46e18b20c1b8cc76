#include "discrete.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "numeric.hpp"

namespace lm {

discrete_instance::discrete_instance(std::vector<double> phi_in,
                                     std::vector<double> pi_in, double gamma_in,
                                     double s_in, double theta_bar_in,
                                     double residual_in)
    : gamma(gamma_in), s(s_in), theta_bar(theta_bar_in), residual(residual_in) {
  require(phi_in.size() == pi_in.size() && !phi_in.empty(), errc::argument,
          "discrete instance needs matching non-empty phi/pi");
  require(gamma >= 0.0 && gamma <= 1.0, errc::argument, "gamma outside [0, 1]");
  require(s >= 1.0, errc::argument, "population size must be >= 1");
  require(theta_bar > 0.0 && theta_bar <= 1.0, errc::argument,
          "theta_bar outside (0, 1]");
  require(std::isfinite(residual), errc::argument, "residual must be finite");

  std::vector<size_t> order(phi_in.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t c) { return phi_in[a] < phi_in[c]; });
  for (size_t idx : order) {
    const double ph = phi_in[idx], mass = pi_in[idx];
    require(ph > 0.0, errc::argument, "phi atoms must be positive");
    require(mass >= 0.0, errc::argument, "pi masses must be non-negative");
    if (mass <= 0.0) continue;
    if (!phi.empty() && ph - phi.back() <= 1e-14 * std::max(1.0, ph)) {
      // Exact (or representation-level) ties merge into one atom.
      phi.back() = (phi.back() * pi.back() + ph * mass) / (pi.back() + mass);
      pi.back() += mass;
    } else {
      phi.push_back(ph);
      pi.push_back(mass);
    }
  }
  require(!phi.empty(), errc::argument, "all atoms had zero mass");
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  require(std::abs(total - theta_bar) <= 1e-9 * std::max(1.0, theta_bar),
          errc::argument, "pi must sum to theta_bar");
}

double discrete_instance::pi_phi_total() const {
  double acc = 0.0;
  for (size_t k = 0; k < phi.size(); ++k) acc += pi[k] * phi[k];
  return acc;
}

namespace {

// 1-based prefix sums over atoms: sp = pi*phi, sq = pi*sqrt(phi), sm = pi.
struct prefixes {
  std::vector<double> sp, sq, sm;
  explicit prefixes(const discrete_instance& in)
      : sp(in.size() + 1, 0.0), sq(in.size() + 1, 0.0), sm(in.size() + 1, 0.0) {
    for (size_t k = 0; k < in.size(); ++k) {
      sp[k + 1] = sp[k] + in.pi[k] * in.phi[k];
      sq[k + 1] = sq[k] + in.pi[k] * std::sqrt(in.phi[k]);
      sm[k + 1] = sm[k] + in.pi[k];
    }
  }
};

double c0_of(const discrete_instance& in) {
  return in.theta_bar * in.theta_bar * (1.0 - in.theta_bar) * (1.0 - in.gamma) *
         in.s;
}

void check_preconditions(const discrete_instance& in) {
  require(in.residual > 0.0, errc::infeasible,
          "per-capita budget does not cover the leakage floor");
  require(in.pi_phi_total() > in.residual, errc::regime,
          "budget affords the full allocation; the no-trivial-solution "
          "assumption fails");
}

}  // namespace

double q_disc(const discrete_instance& inst, size_t m, double z) {
  require(m >= 1 && m <= inst.size(), errc::argument, "q_disc: m out of range");
  require(z > 0.0, errc::argument, "q_disc: z must be positive");
  double head = 0.0, tail = 0.0;
  for (size_t k = 0; k < m; ++k) head += inst.pi[k] * inst.phi[k];
  for (size_t k = m; k < inst.size(); ++k)
    tail += inst.pi[k] * std::sqrt(inst.phi[k]);
  return head + std::sqrt(inst.phi[m - 1] / z) * tail;
}

double r_disc(const discrete_instance& inst, size_t m, double z) {
  require(m >= 1 && m <= inst.size(), errc::argument, "r_disc: m out of range");
  require(z > 0.0, errc::argument, "r_disc: z must be positive");
  double head = 0.0, tail = 0.0;
  for (size_t k = 0; k < m; ++k) head += inst.pi[k] * inst.phi[k];
  for (size_t k = m; k < inst.size(); ++k) tail += inst.pi[k];
  return 2.0 * inst.gamma * (z / inst.phi[m - 1] * head + tail) + c0_of(inst);
}

discrete_saddle solve_discrete(const discrete_instance& in) {
  check_preconditions(in);
  const size_t K = in.size();
  const double g = in.gamma, s = in.s, tb = in.theta_bar;
  const double c0 = c0_of(in);
  const prefixes px(in);

  auto Q = [&](size_t m, double z) {
    return px.sp[m] + std::sqrt(in.phi[m - 1] / z) * (px.sq[K] - px.sq[m]);
  };
  auto R = [&](size_t m, double z) {
    return 2.0 * g * (z / in.phi[m - 1] * px.sp[m] + px.sm[K] - px.sm[m]) + c0;
  };
  // Case membership uses rho_B = residual/(gamma tb) against Q/R ratios;
  // comparisons are cross-multiplied so gamma = 0 degenerates cleanly.
  auto below_ratio = [&](size_t m) {
    return in.residual * R(m, 1.0) < g * tb * Q(m, 1.0);
  };

  discrete_saddle out;
  out.A.resize(K);
  out.p.resize(K);

  if (below_ratio(1)) {
    // Case 1: budget too small for any plateau; A ~ 1/sqrt(phi), p = 1.
    out.case_tag = "1";
    const double eta = in.residual / px.sq[K];
    for (size_t k = 0; k < K; ++k) {
      out.A[k] = eta / std::sqrt(in.phi[k]);
      out.p[k] = 1.0;
    }
    out.lambda = g * px.sq[K] * px.sq[K] / (s * tb * tb * in.residual * in.residual);
    return out;
  }

  if (!below_ratio(K)) {
    // Case 3: flat allocation; adversary ramps (3a) or quits (3b).
    out.case_tag = "3";
    const double chi = in.residual / px.sp[K];
    out.chi = chi;
    for (size_t k = 0; k < K; ++k) out.A[k] = chi;
    const double num = g * tb * px.sp[K] - in.residual * c0;
    if (g > 0.0 && num > 0.0) {
      const double zt =
          in.phi[K - 1] * num / (2.0 * g * px.sp[K] * in.residual);
      out.z_tilde = zt;
      for (size_t k = 0; k < K; ++k) out.p[k] = zt * in.phi[k] / in.phi[K - 1];
      out.lambda = g * zt / (in.phi[K - 1] * s * tb * tb * chi * chi);
    } else {
      for (size_t k = 0; k < K; ++k) out.p[k] = 0.0;
      out.lambda = 0.0;
    }
    return out;
  }

  // Case 2: the ratio crosses rho_B at a unique (m*, z*).
  size_t m = 1;
  while (m + 1 <= K - 1 && !below_ratio(m + 1)) ++m;
  const double zlo = in.phi[m - 1] / in.phi[m];
  auto knee_gap = [&](double z) {
    return g * tb * Q(m, z) - in.residual * R(m, z);
  };
  // knee_gap decreases in z; by m* selection it is >= 0 at the left end of
  // the bracket (Claim-2 tie with level m*+1) and <= 0 at z = 1.
  double zs;
  if (knee_gap(zlo) <= 0.0)
    zs = zlo;
  else if (knee_gap(1.0) >= 0.0)
    zs = 1.0;
  else
    zs = bisect(knee_gap, zlo, 1.0, 1e-12);
  const double chi_cand = in.residual / Q(m, zs);

  if (chi_cand <= 1.0) {
    // Case 2a: plateau chi < 1 over the first m* atoms, 1/sqrt(phi) tail.
    out.case_tag = "2a";
    out.m_star = m;
    out.z_star = zs;
    out.chi = chi_cand;
    const double eta = chi_cand * std::sqrt(in.phi[m - 1] / zs);
    for (size_t k = 0; k < K; ++k) {
      out.A[k] = k < m ? chi_cand : eta / std::sqrt(in.phi[k]);
      out.p[k] = std::min(1.0, zs * in.phi[k] / in.phi[m - 1]);
    }
    double spw = 0.0;
    for (size_t k = 0; k < K; ++k)
      spw += in.pi[k] * std::sqrt(out.p[k] * in.phi[k]);
    out.lambda = g * spw * spw / (s * tb * tb * in.residual * in.residual);
    return out;
  }

  // Case 2b: the plateau saturates at 1. The adversary anchor (k', z') sits
  // where R crosses gamma*tb along the (m, z) chain walked from (1, 1); the
  // analyst plateau k* is the largest k with Q(k, 1) < residual.
  out.case_tag = "2b";
  out.chi = 1.0;
  size_t kp = 0;
  double zp = 0.0;
  for (size_t k = 1; k <= m; ++k) {
    const double seg_lo = k == m ? zs : in.phi[k - 1] / in.phi[k];
    if (R(k, seg_lo) < g * tb) {
      auto gap = [&](double z) { return R(k, z) - g * tb; };
      kp = k;
      zp = gap(1.0) <= 0.0 ? 1.0 : bisect(gap, seg_lo, 1.0, 1e-12);
      break;
    }
  }
  require(kp >= 1, errc::internal, "case 2b: adversary anchor not found");
  size_t ks = 0;
  for (size_t k = 1; k <= K; ++k)
    if (Q(k, 1.0) < in.residual) ks = k;
  require(ks >= 1 && ks < K, errc::internal,
          "case 2b: analyst plateau out of range");
  const double eta = (in.residual - px.sp[ks]) / (px.sq[K] - px.sq[ks]);
  for (size_t k = 0; k < K; ++k) {
    out.A[k] = k < ks ? 1.0 : eta / std::sqrt(in.phi[k]);
    out.p[k] = std::min(1.0, zp * in.phi[k] / in.phi[kp - 1]);
  }
  out.lambda = g * (px.sq[K] - px.sq[ks]) * (px.sq[K] - px.sq[ks]) /
               (s * tb * tb * (in.residual - px.sp[ks]) * (in.residual - px.sp[ks]));
  out.k_prime = kp;
  out.z_prime = zp;
  out.k_star = ks;
  return out;
}

saddle_verdict verify_saddle(const discrete_instance& inst,
                             const discrete_saddle& saddle, double tol) {
  saddle_verdict v;
  auto flag = [&](const std::string& cond, size_t idx, double mag,
                  const std::string& detail) {
    v.pass = false;
    v.violations.push_back({cond, idx, mag, detail});
  };

  const size_t K = inst.size();
  if (saddle.A.size() != K || saddle.p.size() != K) {
    flag("shape", 0, 0.0, "strategy dimensions do not match the instance");
    return v;
  }
  for (size_t k = 0; k < K; ++k) {
    if (saddle.A[k] < -tol || saddle.A[k] > 1.0 + tol)
      flag("shape", k, saddle.A[k], "A outside [0, 1]");
    if (saddle.p[k] < -tol || saddle.p[k] > 1.0 + tol)
      flag("shape", k, saddle.p[k], "p outside [0, 1]");
    if (k > 0 && saddle.A[k] > saddle.A[k - 1] + tol)
      flag("shape", k, saddle.A[k] - saddle.A[k - 1], "A must be non-increasing");
    if (k > 0 && saddle.p[k] < saddle.p[k - 1] - tol)
      flag("shape", k, saddle.p[k - 1] - saddle.p[k], "p must be non-decreasing");
  }

  const double g = inst.gamma, s = inst.s, tb = inst.theta_bar;
  double S = 0.0, budget = 0.0;
  for (size_t k = 0; k < K; ++k) {
    S += inst.pi[k] * saddle.p[k];
    budget += inst.pi[k] * inst.phi[k] * saddle.A[k];
  }

  // Lemma-3 sign pattern of the adversary marginal.
  for (size_t k = 0; k < K; ++k) {
    const double inv = saddle.A[k] > 0.0 ? 1.0 / saddle.A[k] : INFINITY;
    const double marg = g / (s * tb * tb) * (inv - 2.0 * S / tb) -
                        (1.0 - g) * (1.0 - tb) / tb;
    if (saddle.p[k] >= 1.0 - 1e-12) {
      if (!(marg >= -tol))
        flag("lemma3", k, marg, "p = 1 requires a non-negative marginal");
    } else if (saddle.p[k] <= 1e-12) {
      if (!(marg <= tol))
        flag("lemma3", k, marg, "p = 0 requires a non-positive marginal");
    } else if (!(std::abs(marg) <= tol)) {
      flag("lemma3", k, marg, "interior p requires a vanishing marginal");
    }
  }

  // Lemma-4: allocation formula and budget binding (feasibility only when the
  // adversary is inactive or the variance weight vanishes).
  const double budget_tol = tol * std::max(1.0, std::abs(inst.residual));
  if (S <= 1e-15 || g == 0.0) {
    if (budget > inst.residual + budget_tol)
      flag("budget", 0, budget - inst.residual, "allocation exceeds the budget");
  } else {
    if (!(saddle.lambda > 0.0)) {
      flag("lemma4", 0, saddle.lambda,
           "active adversary requires a positive multiplier");
    } else {
      for (size_t k = 0; k < K; ++k) {
        const double ref = std::min(
            1.0, std::sqrt(g * saddle.p[k] /
                           (s * tb * tb * saddle.lambda * inst.phi[k])));
        if (!(std::abs(saddle.A[k] - ref) <= tol))
          flag("lemma4", k, saddle.A[k] - ref,
               "allocation deviates from the multiplier formula");
      }
    }
    if (!(std::abs(budget - inst.residual) <= budget_tol))
      flag("budget", 0, budget - inst.residual, "budget does not bind");
  }
  return v;
}

namespace {

// Analyst best responses are two-parameter: A_k = min(x, y/sqrt(phi_k)).
// Given the plateau level x, the budget-binding tail scale y is exact on the
// consistent suffix (the tail is a suffix because phi is sorted).
struct tail_solution {
  double y = 0.0;
  size_t tail_start = 0;  // first tail index; == K means the tail is empty
};

tail_solution solve_tail(const discrete_instance& in, double x) {
  const size_t K = in.size();
  double head = 0.0;  // sum_{k < j} pi phi
  double tail_sq = 0.0;
  for (size_t k = 0; k < K; ++k) tail_sq += in.pi[k] * std::sqrt(in.phi[k]);
  for (size_t j = 0; j < K; ++j) {
    const double yj = (in.residual - x * head) / tail_sq;
    const double lo = j == 0 ? 0.0 : x * std::sqrt(in.phi[j - 1]);
    const double hi = x * std::sqrt(in.phi[j]);
    const double slack = 1e-12 * std::max(1.0, hi);
    if (yj >= lo - slack && yj <= hi + slack) return {yj, j};
    head += in.pi[j] * in.phi[j];
    tail_sq -= in.pi[j] * std::sqrt(in.phi[j]);
  }
  return {x * std::sqrt(in.phi.back()), K};
}

}  // namespace

discrete_saddle brute_force_saddle(const discrete_instance& in,
                                   int grid_resolution) {
  require(in.size() <= 6, errc::argument,
          "brute-force oracle is limited to K <= 6");
  check_preconditions(in);
  const size_t K = in.size();
  const double g = in.gamma, s = in.s, tb = in.theta_bar;
  const double c0 = c0_of(in);
  const double x_min = in.residual / in.pi_phi_total();

  // Knife-edge allocation level at adversary mass S (Lemma-3 zero marginal).
  auto a_star = [&](double S) {
    if (g <= 0.0) return 0.0;
    const double den = 2.0 * g * S + c0;
    return den > 0.0 ? g * tb / den : INFINITY;
  };
  auto mass_of_psi = [&](double psi) {
    double S = 0.0;
    for (size_t k = 0; k < K; ++k)
      S += in.pi[k] * std::min(1.0, psi * in.phi[k]);
    return S;
  };
  // Ramp scale with prescribed adversary mass; bisection plus one exact
  // solve on the final active set (mass is piecewise linear in psi).
  auto psi_for_mass = [&](double target, double lo, double hi) {
    auto gap = [&](double ps) { return mass_of_psi(ps) - target; };
    double psi = bisect(gap, lo, hi, (hi - lo) * 1e-14 + 1e-300);
    double capped = 0.0, lin = 0.0;
    for (size_t k = 0; k < K; ++k) {
      if (psi * in.phi[k] >= 1.0)
        capped += in.pi[k];
      else
        lin += in.pi[k] * in.phi[k];
    }
    if (lin > 0.0) {
      const double exact = (target - capped) / lin;
      if (std::abs(mass_of_psi(exact) - target) <= std::abs(gap(psi)))
        psi = exact;
    }
    return psi;
  };
  auto consistency = [&](double x) {
    const tail_solution t = solve_tail(in, x);
    const double psi = x * x / (t.y * t.y);
    return x - std::min(1.0, a_star(mass_of_psi(psi)));
  };

  auto build_flat = [&]() {
    discrete_saddle out;
    out.A.assign(K, x_min);
    out.p.assign(K, 0.0);
    out.case_tag = "3";
    out.chi = x_min;
    if (a_star(0.0) > x_min) {
      // Interior ramp: a*(mass(psi)) = x_min, i.e. mass = (g tb/x_min - c0)/2g.
      const double target = (g * tb / x_min - c0) / (2.0 * g);
      const double psi = psi_for_mass(target, 1e-300, 1.0 / in.phi.back());
      for (size_t k = 0; k < K; ++k) out.p[k] = std::min(1.0, psi * in.phi[k]);
      out.lambda = g * psi / (s * tb * tb * x_min * x_min);
      out.z_tilde = psi * in.phi.back();
    }
    return out;
  };
  auto build_chi_one = [&]() {
    discrete_saddle out;
    out.A.resize(K);
    out.p.resize(K);
    out.case_tag = "2b";
    out.chi = 1.0;
    const tail_solution t = solve_tail(in, 1.0);
    require(g > 0.0, errc::internal, "chi=1 branch requires gamma > 0");
    const double target = (g * tb - c0) / (2.0 * g);  // a*(target) = 1
    require(target > 0.0, errc::internal, "chi=1 branch with empty adversary");
    const double psi =
        psi_for_mass(target, 1.0 / (t.y * t.y), 1.0 / in.phi.front());
    for (size_t k = 0; k < K; ++k) {
      out.A[k] = std::min(1.0, t.y / std::sqrt(in.phi[k]));
      out.p[k] = std::min(1.0, psi * in.phi[k]);
    }
    out.lambda = g / (s * tb * tb * t.y * t.y);
    size_t kp = 0, ks = 0;
    while (kp < K && psi * in.phi[kp] < 1.0) ++kp;
    while (ks < K && t.y >= std::sqrt(in.phi[ks])) ++ks;
    out.k_prime = kp;
    out.z_prime = kp >= 1 ? psi * in.phi[kp - 1] : 0.0;
    out.k_star = ks;
    return out;
  };
  auto build_interior = [&](double x) {
    discrete_saddle out;
    out.A.resize(K);
    out.p.resize(K);
    const tail_solution t = solve_tail(in, x);
    const double psi = x * x / (t.y * t.y);
    for (size_t k = 0; k < K; ++k) {
      out.A[k] = std::min(x, t.y / std::sqrt(in.phi[k]));
      out.p[k] = std::min(1.0, psi * in.phi[k]);
    }
    out.lambda = g / (s * tb * tb * t.y * t.y);
    out.chi = x;
    out.case_tag = t.tail_start == 0 ? "1" : "2a";
    if (t.tail_start >= 1) {
      out.m_star = t.tail_start;
      out.z_star = psi * in.phi[t.tail_start - 1];
    }
    return out;
  };

  discrete_saddle out;
  if (consistency(x_min) >= 0.0) {
    out = build_flat();
  } else {
    const tail_solution t1 = solve_tail(in, 1.0);
    if (a_star(mass_of_psi(1.0 / (t1.y * t1.y))) >= 1.0)
      out = build_chi_one();
    else
      out = build_interior(bisect(consistency, x_min, 1.0, 1e-15));
  }

  if (verify_saddle(in, out, 1e-8).pass) return out;

  // Deterministic fallback: re-try every branch and every sign change of the
  // consistency residual on a grid, returning the first certified saddle.
  std::vector<discrete_saddle> candidates;
  auto attempt = [&](auto&& builder) {
    try {
      candidates.push_back(builder());
    } catch (const error&) {
      // A branch whose bracket does not exist here is simply not a candidate.
    }
  };
  attempt(build_flat);
  if (g > 0.0 && (g * tb - c0) / (2.0 * g) > 0.0) attempt(build_chi_one);
  const int n = grid_resolution > 0 ? grid_resolution : 256;
  double prev_x = x_min, prev_d = consistency(x_min);
  for (int i = 1; i <= n; ++i) {
    const double x = x_min + (1.0 - x_min) * i / n;
    const double d = consistency(x);
    if (std::signbit(d) != std::signbit(prev_d))
      attempt([&] { return build_interior(bisect(consistency, prev_x, x, 1e-15)); });
    prev_x = x;
    prev_d = d;
  }
  for (auto& cand : candidates)
    if (verify_saddle(in, cand, 1e-8).pass) return cand;
  fail(errc::internal, "brute-force oracle failed to certify a saddle");
}

discrete_instance discretize(const market_view& view, int panels) {
  require(panels >= 1, errc::argument, "discretize needs at least one panel");
  const double lo = view.phi_min, hi = view.phi_max;
  require(hi > lo, errc::internal, "degenerate virtual-cost range");
  auto mass_below = [&](double x) {
    double acc = 0.0;
    for (size_t i = 0; i < view.n_groups(); ++i)
      acc += view.q(i) * view.cfg.groups[i].cost.cdf(view.knee_cost(i, x));
    return acc;
  };
  std::vector<double> ph, pm;
  double below = 0.0;  // mass_below(lo) = 0
  for (int k = 0; k < panels; ++k) {
    const double e1 = k + 1 == panels ? hi : lo + (hi - lo) * (k + 1) / panels;
    const double next = mass_below(e1);
    const double mass = next - below;
    if (mass > 1e-15 * view.theta_bar()) {
      ph.push_back(lo + (hi - lo) * (k + 0.5) / panels);
      pm.push_back(mass);
    }
    below = next;
  }
  // Telescoping leaves sum(pi) = theta_bar up to the dropped slivers; fold
  // the remainder into the largest atom so the instance invariant is exact.
  double total = std::accumulate(pm.begin(), pm.end(), 0.0);
  if (!pm.empty() && std::abs(total - view.theta_bar()) > 0.0) {
    auto it = std::max_element(pm.begin(), pm.end());
    *it += view.theta_bar() - total;
  }
  return discrete_instance(std::move(ph), std::move(pm), view.gamma(), view.s(),
                           view.theta_bar(), view.residual);
}

double game_objective(const discrete_instance& inst, const std::vector<double>& A,
                      const std::vector<double>& p) {
  require(A.size() == inst.size() && p.size() == inst.size(), errc::argument,
          "strategy dimensions do not match the instance");
  const double g = inst.gamma, s = inst.s, tb = inst.theta_bar;
  double ratio = 0.0, S = 0.0;
  for (size_t k = 0; k < inst.size(); ++k) {
    if (p[k] > 0.0) {
      if (!(A[k] > 0.0)) return INFINITY;
      ratio += inst.pi[k] * p[k] / A[k];
    }
    S += inst.pi[k] * p[k];
  }
  return g / (s * tb * tb) * (ratio - S * S / tb) +
         (1.0 - g) * (1.0 - tb) * (1.0 - S / tb);
}

}  // namespace lm
