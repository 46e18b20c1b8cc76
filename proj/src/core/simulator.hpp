// Monte Carlo market simulator. Draws synthetic populations, plays the
// threshold participation equilibrium, runs the selection lottery, and checks
// the empirical estimator moments against the closed forms. Randomness is
// counter-based: every draw is a pure function of (seed, stream, replication,
// agent), so runs are reproducible regardless of scheduling.
#pragma once

#include <cstdint>

#include "payment.hpp"
#include "tradeoff.hpp"

namespace lm {

// What a non-participant's data point counts as in the estimation target:
// the adversarial convention scores it as 1 (the worst case the bias formula
// prices), the extended convention draws it from the configured data link.
enum class np_data { adversarial, extended };

struct sim_options {
  uint64_t seed = 1;
  long long replications = 1000;
  // Conditional runs pin the participant count at N = round(s * thetabar) and
  // redraw the population every `batch_size` replications (1 keeps
  // replications fully independent, matching the formula being tested).
  int batch_size = 1;
  np_data nonparticipant = np_data::adversarial;
  bool conditional = true;
  bool unconditional = true;
  bool track_payments = true;
};

struct moment_summary {
  long long n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased across replications
  double se_mean = 0.0;
  double se_variance = 0.0;  // via the fourth central moment
};

struct replication_result {
  double estimate = 0.0;
  double target = 0.0;  // realized population mean under the np convention
  long long joined = 0;
  long long selected = 0;
  double total_paid = 0.0;
  std::vector<long long> joined_per_group;
  std::vector<long long> count_per_group;
};

// One full market draw (population, participation, selection, payments).
// Throws errc::infeasible if nobody joins.
replication_result run_replication(const mechanism& m, uint64_t seed,
                                   long long replication,
                                   np_data convention = np_data::adversarial,
                                   bool track_payments = true);

struct simulation_report {
  long long replications = 0;
  // Conditional-on-N estimator moments plus their closed-form counterparts.
  moment_summary conditional_estimate;
  double conditional_bias = 0.0;
  double conditional_bias_se = 0.0;
  long long pinned_n = 0;
  // Unconditional (full market) moments.
  moment_summary unconditional_estimate;
  double unconditional_bias = 0.0;
  double unconditional_bias_se = 0.0;
  double mean_total_paid = 0.0;
  double se_total_paid = 0.0;
  std::vector<double> join_rate;  // empirical per group (unconditional runs)
  long long empty_markets = 0;
  // Closed forms evaluated at the configured data link.
  double formula_variance = 0.0;
  double formula_bias = 0.0;
  double formula_presence_mean = 0.0;
  double expected_spend = 0.0;  // analytic expected total payment
};

simulation_report estimate_bias_variance(const mechanism& m,
                                         const sim_options& opts);

struct equilibrium_report {
  bool pass = false;
  std::vector<double> empirical;  // pooled join rate per group
  std::vector<double> expected;   // theta_i
  std::vector<double> band;       // 3 sqrt(theta(1-theta)/(s q_i)) per group
  std::string detail;
};

// Pools unconditional populations and checks each group's join rate against
// its target rate within a single-replication 3-sigma binomial band.
equilibrium_report verify_equilibrium_empirical(const mechanism& m,
                                                long long replications = 20,
                                                uint64_t seed = 1);

}  // namespace lm
