// Monte Carlo simulator implementation.
#include "simulator.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "numeric.hpp"

namespace lm {

namespace {

// Replication-counter offsets keep the three draw streams disjoint.
constexpr uint64_t kCondPopStream = uint64_t(1) << 40;
constexpr uint64_t kCondSelStream = uint64_t(1) << 41;

size_t draw_group(counter_rng& rng, const std::vector<double>& cum) {
  const double u = rng.next_unit();
  for (size_t i = 0; i + 1 < cum.size(); ++i)
    if (u < cum[i]) return i;
  return cum.size() - 1;
}

moment_summary summarize(const std::vector<double>& xs) {
  moment_summary out;
  out.n = static_cast<long long>(xs.size());
  if (xs.empty()) return out;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= double(xs.size());
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double n = double(xs.size());
  out.mean = mean;
  out.variance = xs.size() > 1 ? m2 / (n - 1.0) : 0.0;
  out.se_mean = std::sqrt(std::max(0.0, out.variance) / n);
  const double v = m2 / n;
  out.se_variance = std::sqrt(std::max(0.0, m4 / n - v * v) / n);
  return out;
}

}  // namespace

replication_result run_replication(const mechanism& m, uint64_t seed,
                                   long long replication, np_data convention,
                                   bool track_payments) {
  const market_view& v = *m.view;
  const size_t n = v.n_groups();
  std::vector<double> cum(n);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) cum[i] = (acc += v.q(i));

  replication_result out;
  out.joined_per_group.assign(n, 0);
  out.count_per_group.assign(n, 0);
  double ht_sum = 0.0, target_sum = 0.0;
  const long long s = v.cfg.population_size;
  for (long long k = 0; k < s; ++k) {
    counter_rng rng(seed, static_cast<uint64_t>(replication),
                    static_cast<uint64_t>(k));
    const size_t i = draw_group(rng, cum);
    const auto& g = v.cfg.groups[i];
    const double c = g.cost.quantile(rng.next_unit());
    const bool has_data = rng.next_bernoulli(g.data_prob(c));
    const bool joined = c <= v.prof.tau[i];
    ++out.count_per_group[i];
    if (joined) {
      ++out.joined_per_group[i];
      ++out.joined;
      target_sum += has_data ? 1.0 : 0.0;
      const double a = m.rule.at(i, c);
      if (rng.next_bernoulli(a)) {
        ++out.selected;
        ht_sum += (has_data ? 1.0 : 0.0) / a;
        if (track_payments) out.total_paid += m.payment(i, c);
      }
    } else {
      rng.next_unit();  // keep the stream aligned across conventions
      target_sum += convention == np_data::adversarial ? 1.0
                    : has_data                         ? 1.0
                                                       : 0.0;
    }
  }
  require(out.joined > 0, errc::infeasible,
          "empty market: no agent joined in this replication");
  out.estimate = ht_sum / double(out.joined);
  out.target = target_sum / double(s);
  return out;
}

simulation_report estimate_bias_variance(const mechanism& m,
                                         const sim_options& opts) {
  const market_view& v = *m.view;
  const size_t n = v.n_groups();
  simulation_report rep;
  rep.replications = opts.replications;

  {
    const auto wc = evaluate_tradeoff(m.rule, presence_from_links(v));
    rep.formula_variance = wc.variance;
    rep.formula_bias = wc.bias;
    rep.formula_presence_mean = wc.presence_mean;
  }
  rep.expected_spend = expected_total_payment(m).direct;

  if (opts.conditional) {
    // Participant-law population of pinned size N = round(s thetabar).
    const long long big_n =
        std::llround(v.s() * v.theta_bar());
    require(big_n >= 1, errc::argument,
            "pinned participant count is zero; raise s or the rates");
    rep.pinned_n = big_n;
    std::vector<double> cum(n);
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i)
      cum[i] = (acc += v.q(i) * v.prof.rates[i] / v.theta_bar());

    // Non-participant data value priced into the conditional target.
    double nu = 1.0;
    if (opts.nonparticipant == np_data::extended) {
      double out_mass = 0.0, out_mean = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const auto& g = v.cfg.groups[i];
        out_mass += v.q(i) * (1.0 - v.prof.rates[i]);
        out_mean += v.q(i) * integrate(
                                 [&](double c) {
                                   return g.data_prob(c) * g.cost.pdf(c);
                                 },
                                 v.prof.tau[i], g.cost.c_max(), 1e-9);
      }
      nu = out_mass > 1e-12 ? out_mean / out_mass : 1.0;
    }

    std::vector<double> ests, biases;
    ests.reserve(opts.replications);
    biases.reserve(opts.replications);
    std::vector<size_t> grp;
    std::vector<double> cost, aval;
    std::vector<char> data;
    double pop_mean = 0.0;
    for (long long r = 0; r < opts.replications; ++r) {
      if (r % opts.batch_size == 0) {
        const uint64_t batch = static_cast<uint64_t>(r / opts.batch_size);
        grp.resize(big_n);
        cost.resize(big_n);
        aval.resize(big_n);
        data.resize(big_n);
        pop_mean = 0.0;
        for (long long k = 0; k < big_n; ++k) {
          counter_rng rng(opts.seed, kCondPopStream + batch,
                          static_cast<uint64_t>(k));
          const size_t i = draw_group(rng, cum);
          const auto& g = v.cfg.groups[i];
          const double c = g.cost.quantile(rng.next_unit() * v.prof.rates[i]);
          grp[k] = i;
          cost[k] = c;
          aval[k] = m.rule.at(i, c);
          data[k] = rng.next_bernoulli(g.data_prob(c)) ? 1 : 0;
          pop_mean += data[k];
        }
        pop_mean /= double(big_n);
      }
      double ht = 0.0;
      for (long long k = 0; k < big_n; ++k) {
        counter_rng rng(opts.seed, kCondSelStream + static_cast<uint64_t>(r),
                        static_cast<uint64_t>(k));
        if (rng.next_bernoulli(aval[k])) ht += double(data[k]) / aval[k];
      }
      const double est = ht / double(big_n);
      const double target =
          v.theta_bar() * pop_mean + (1.0 - v.theta_bar()) * nu;
      ests.push_back(est);
      biases.push_back(target - est);
    }
    rep.conditional_estimate = summarize(ests);
    const auto bs = summarize(biases);
    rep.conditional_bias = bs.mean;
    rep.conditional_bias_se = bs.se_mean;
  }

  if (opts.unconditional) {
    std::vector<double> ests, biases, paid;
    std::vector<long long> joined(n, 0), seen(n, 0);
    for (long long r = 0; r < opts.replications; ++r) {
      try {
        const auto res = run_replication(m, opts.seed, r, opts.nonparticipant,
                                         opts.track_payments);
        ests.push_back(res.estimate);
        biases.push_back(res.target - res.estimate);
        if (opts.track_payments) paid.push_back(res.total_paid);
        for (size_t i = 0; i < n; ++i) {
          joined[i] += res.joined_per_group[i];
          seen[i] += res.count_per_group[i];
        }
      } catch (const error& e) {
        if (e.code() != errc::infeasible) throw;
        ++rep.empty_markets;
      }
    }
    rep.unconditional_estimate = summarize(ests);
    const auto bs = summarize(biases);
    rep.unconditional_bias = bs.mean;
    rep.unconditional_bias_se = bs.se_mean;
    if (opts.track_payments) {
      const auto ps = summarize(paid);
      rep.mean_total_paid = ps.mean;
      rep.se_total_paid = ps.se_mean;
    }
    rep.join_rate.resize(n);
    for (size_t i = 0; i < n; ++i)
      rep.join_rate[i] = seen[i] > 0 ? double(joined[i]) / double(seen[i]) : 0.0;
  }
  return rep;
}

equilibrium_report verify_equilibrium_empirical(const mechanism& m,
                                                long long replications,
                                                uint64_t seed) {
  const market_view& v = *m.view;
  const size_t n = v.n_groups();
  equilibrium_report rep;
  rep.expected = v.prof.rates;
  rep.empirical.assign(n, 0.0);
  rep.band.resize(n);
  std::vector<long long> joined(n, 0), seen(n, 0);
  for (long long r = 0; r < replications; ++r) {
    const auto res =
        run_replication(m, seed, r, np_data::adversarial, false);
    for (size_t i = 0; i < n; ++i) {
      joined[i] += res.joined_per_group[i];
      seen[i] += res.count_per_group[i];
    }
  }
  rep.pass = true;
  for (size_t i = 0; i < n; ++i) {
    const double th = v.prof.rates[i];
    rep.band[i] =
        3.0 * std::sqrt(th * (1.0 - th) / (v.s() * v.q(i)));
    if (seen[i] > 0) rep.empirical[i] = double(joined[i]) / double(seen[i]);
    if (std::fabs(rep.empirical[i] - th) > rep.band[i] + 1e-12) {
      rep.pass = false;
      rep.detail += "groups[" + std::to_string(i) + "] rate " +
                    std::to_string(rep.empirical[i]) + " vs " +
                    std::to_string(th) + "; ";
    }
  }
  return rep;
}

}  // namespace lm
