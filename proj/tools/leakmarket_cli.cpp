// Command-line front end. Talks to the toolkit exclusively through the C API
// (leakmarket/leakmarket.h); JSON/CSV plumbing is local to this tool.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "leakmarket/leakmarket.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct market_deleter {
  void operator()(lm_market* m) const { lm_market_free(m); }
};
struct mech_deleter {
  void operator()(lm_mechanism* m) const { lm_mechanism_free(m); }
};
using market_ptr = std::unique_ptr<lm_market, market_deleter>;
using mech_ptr = std::unique_ptr<lm_mechanism, mech_deleter>;

// Adopt a C-API string into a std::string.
std::string take(char* s) {
  std::string out = s ? s : "";
  lm_string_free(s);
  return out;
}

int to_exit(int rc) {
  switch (rc) {
    case LM_OK:
    case LM_ERR_CONFIG:
    case LM_ERR_INFEASIBLE:
    case LM_AUDIT_FAILED:
    case LM_ERR_REGIME:
      return rc;
    default:
      return 1;
  }
}

[[noreturn]] void die(int rc, const std::string& context) {
  std::fprintf(stderr, "leakmarket: %s: %s\n", context.c_str(),
               lm_last_error());
  std::exit(to_exit(rc));
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    std::fprintf(stderr, "leakmarket: cannot write %s\n", path.c_str());
    std::exit(1);
  }
  out << content;
}

market_ptr open_market(const std::string& config_path) {
  lm_market* raw = nullptr;
  const int rc = lm_market_create_from_file(config_path.c_str(), &raw);
  if (rc != LM_OK) die(rc, "loading " + config_path);
  return market_ptr(raw);
}

mech_ptr solve_market(const lm_market* market,
                      const std::vector<double>& rates) {
  lm_mechanism* raw = nullptr;
  const int rc = lm_market_solve(market, rates.empty() ? nullptr : rates.data(),
                                 static_cast<int>(rates.size()), &raw);
  if (rc != LM_OK) die(rc, "solving the market");
  return mech_ptr(raw);
}

std::string market_hash(const lm_market* market) {
  char* hex = nullptr;
  if (lm_market_hash(market, &hex) != LM_OK) die(LM_ERR_INTERNAL, "hashing");
  return take(hex);
}

json describe(const lm_mechanism* mech) {
  char* s = nullptr;
  const int rc = lm_mechanism_describe(mech, &s);
  if (rc != LM_OK) die(rc, "describing the mechanism");
  return json::parse(take(s));
}

json tradeoff_json(const lm_mechanism* mech, int panels) {
  char* s = nullptr;
  const int rc = lm_mechanism_tradeoff(mech, panels, &s);
  if (rc != LM_OK) die(rc, "evaluating the tradeoff");
  return json::parse(take(s));
}

double alloc_at(const lm_mechanism* mech, int g, double c) {
  double v = 0.0;
  if (lm_mechanism_allocation_at(mech, g, c, &v) != LM_OK)
    die(LM_ERR_INTERNAL, "allocation query");
  return v;
}

double pay_at(const lm_mechanism* mech, int g, double c) {
  double v = 0.0;
  if (lm_mechanism_payment_at(mech, g, c, &v) != LM_OK)
    die(LM_ERR_INTERNAL, "payment query");
  return v;
}

std::string stamp(const std::string& hash, uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

// ---- commands ----

int cmd_solve(const std::string& config, const fs::path& out_dir,
              const std::vector<double>& rates, uint64_t seed, int panels) {
  auto market = open_market(config);
  auto mech = solve_market(market.get(), rates);
  json desc = describe(mech.get());
  desc["tradeoff"] = tradeoff_json(mech.get(), panels);
  write_file(out_dir / "mechanism.json", desc.dump(2) + "\n");

  const std::string head = stamp(desc["config_hash"], seed);
  const int grid = 200;
  std::ostringstream acsv, pcsv;
  acsv << head << "group,cost,allocation\n";
  pcsv << head << "group,cost,payment\n";
  for (size_t i = 0; i < desc["groups"].size(); ++i) {
    const auto& g = desc["groups"][i];
    const double lo = g["c_min"], hi = g["c_max"], tau = g["tau"];
    for (int k = 0; k <= grid; ++k) {
      const double c = lo + (hi - lo) * k / grid;
      acsv << i << ',' << c << ',' << alloc_at(mech.get(), int(i), c) << '\n';
    }
    for (int k = 0; k <= grid; ++k) {
      const double c = lo + (tau - lo) * k / grid;
      pcsv << i << ',' << c << ',' << pay_at(mech.get(), int(i), c) << '\n';
    }
  }
  write_file(out_dir / "allocation.csv", acsv.str());
  write_file(out_dir / "payment.csv", pcsv.str());
  std::printf("solved: structure=%s case=%s chi=%.6g phi_hat=%.6g -> %s\n",
              desc["structure"].get<std::string>().c_str(),
              desc["case"].get<std::string>().c_str(),
              desc["chi"].get<double>(), desc["phi_hat"].get<double>(),
              out_dir.c_str());
  return 0;
}

int cmd_audit(const std::string& config, const fs::path& out_dir,
              const std::vector<double>& rates, uint64_t seed, int samples) {
  auto market = open_market(config);
  json report;
  char* vs = nullptr;
  const int vrc = lm_market_validate(market.get(), &vs);
  report["assumptions"] = json::parse(take(vs));
  if (vrc != LM_OK && vrc != LM_AUDIT_FAILED) die(vrc, "validating");
  int arc = vrc;
  if (vrc == LM_OK) {
    auto mech = solve_market(market.get(), rates);
    char* as = nullptr;
    arc = lm_mechanism_audit(mech.get(), samples, seed, &as);
    if (arc != LM_OK && arc != LM_AUDIT_FAILED) die(arc, "auditing");
    report["mechanism"] = json::parse(take(as));
  }
  report["pass"] = arc == LM_OK;
  write_file(out_dir / "audit.json", report.dump(2) + "\n");
  std::printf("audit %s -> %s\n", arc == LM_OK ? "passed" : "FAILED",
              (out_dir / "audit.json").c_str());
  return to_exit(arc);
}

int cmd_simulate(const std::string& config, const fs::path& out_dir,
                 const std::vector<double>& rates, uint64_t seed,
                 long long reps, int batch) {
  auto market = open_market(config);
  auto mech = solve_market(market.get(), rates);
  char* s = nullptr;
  const int rc = lm_mechanism_simulate(mech.get(), seed, reps, batch, &s);
  if (rc != LM_OK) die(rc, "simulating");
  write_file(out_dir / "simulation.json", take(s) + "\n");
  std::printf("simulated %lld replications -> %s\n", reps,
              (out_dir / "simulation.json").c_str());
  return 0;
}

int cmd_oracle(const std::string& config, const fs::path& out_dir,
               const std::vector<double>& rates, uint64_t seed, int panels) {
  auto market = open_market(config);
  char* s = nullptr;
  const int rc =
      lm_market_oracle_table(market.get(), rates.empty() ? nullptr : rates.data(),
                             static_cast<int>(rates.size()), panels, &s);
  if (rc != LM_OK) die(rc, "building the oracle table");
  write_file(out_dir / "oracle.csv", stamp(market_hash(market.get()), seed) +
                                         take(s));
  std::printf("oracle table (%d panels) -> %s\n", panels,
              (out_dir / "oracle.csv").c_str());
  return 0;
}

int cmd_full_participation(const std::string& config, const fs::path& out_dir,
                           int steps) {
  auto market = open_market(config);
  char* s = nullptr;
  const int rc = lm_market_full_participation(market.get(), steps, &s);
  if (rc != LM_OK) die(rc, "scanning participation rates");
  const json j = json::parse(take(s));
  write_file(out_dir / "fullparticipation.json", j.dump(2) + "\n");
  std::printf(
      "full participation: conditions_hold=%s optimal_on_grid=%s (%d "
      "applicable points) -> %s\n",
      j["conditions_hold"].get<bool>() ? "yes" : "no",
      j["optimal_on_grid"].get<bool>() ? "yes" : "no",
      j["applicable_points"].get<int>(),
      (out_dir / "fullparticipation.json").c_str());
  return 0;
}

// ---- sweep ----

struct sweep_axis {
  std::string name;  // budget | alpha_intra | alpha_inter | theta
  int group = -1;    // -1: all groups
};

sweep_axis parse_axis(const std::string& text) {
  sweep_axis ax;
  const auto colon = text.find(':');
  ax.name = text.substr(0, colon);
  if (colon != std::string::npos) ax.group = std::stoi(text.substr(colon + 1));
  if (ax.name != "budget" && ax.name != "alpha_intra" &&
      ax.name != "alpha_inter" && ax.name != "theta") {
    std::fprintf(stderr,
                 "leakmarket: unknown sweep axis '%s' (expected budget, "
                 "alpha_intra[:g], alpha_inter[:g] or theta[:g])\n",
                 ax.name.c_str());
    std::exit(1);
  }
  return ax;
}

struct sweep_row {
  double value = 0.0;
  int status = 0;
  std::string structure, case_tag;
  double chi = NAN, phi_hat = NAN, theta_bar = NAN, residual = NAN;
  double t_star = NAN, t_worst = NAN, spend = NAN;
  std::vector<double> pay_total, pay_fixed;
};

std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Monotone within tolerance? dir=-1 non-increasing, dir=+1 non-decreasing.
bool monotone(const std::vector<double>& xs, int dir, double tol = 1e-10) {
  for (size_t k = 0; k + 1 < xs.size(); ++k) {
    const double d = xs[k + 1] - xs[k];
    if (dir < 0 && d > tol) return false;
    if (dir > 0 && d < -tol) return false;
  }
  return true;
}

int cmd_sweep(const std::string& config, const fs::path& out_dir,
              const std::string& axis_text, double from, double to, int steps,
              uint64_t seed, int panels) {
  const sweep_axis ax = parse_axis(axis_text);
  std::ifstream in(config);
  if (!in) {
    std::fprintf(stderr, "leakmarket: cannot open %s\n", config.c_str());
    return 2;
  }
  json base;
  try {
    std::stringstream ss;
    ss << in.rdbuf();
    base = json::parse(ss.str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "leakmarket: config is not valid JSON: %s\n",
                 e.what());
    return 2;
  }
  // Gate on the base configuration before sweeping: only axis-induced solve
  // failures are tolerated as failed rows, not a config that never loads.
  market_ptr base_market;
  {
    lm_market* raw = nullptr;
    int rc = lm_market_create_from_json(base.dump().c_str(), &raw);
    if (rc != LM_OK) {
      std::fprintf(stderr, "leakmarket: loading %s: %s\n", config.c_str(),
                   lm_last_error());
      return to_exit(rc);
    }
    base_market.reset(raw);
  }
  const size_t n_groups = base.at("groups").size();
  if (ax.group >= static_cast<int>(n_groups)) {
    std::fprintf(stderr, "leakmarket: axis group %d out of range\n", ax.group);
    return 1;
  }
  const std::string family =
      base["privacy_model"].value("g_family", std::string("rho_scaled"));

  std::vector<double> base_rates(n_groups, 0.5);
  if (base.contains("rates"))
    for (size_t i = 0; i < n_groups; ++i) base_rates[i] = base["rates"][i];
  const double theta_min = base.value("theta_min", 0.0);
  for (double& r : base_rates) r = std::clamp(r, std::max(theta_min, 1e-3), 1.0);

  // Anchor costs for the fixed-cost payment column: midpoint of the menu at
  // the base configuration (falls back to the support midpoint).
  std::vector<double> anchor(n_groups);
  for (size_t i = 0; i < n_groups; ++i) {
    const auto& d = base["groups"][i]["cost_dist"];
    anchor[i] = 0.5 * (d["c_min"].get<double>() + d["c_max"].get<double>());
  }
  {
    lm_mechanism* mraw = nullptr;
    if (lm_market_solve(base_market.get(), base_rates.data(),
                        static_cast<int>(n_groups), &mraw) == LM_OK) {
      mech_ptr mech(mraw);
      const json desc = describe(mech.get());
      for (size_t i = 0; i < n_groups; ++i)
        anchor[i] = 0.5 * (desc["groups"][i]["c_min"].get<double>() +
                           desc["groups"][i]["tau"].get<double>());
    }
  }

  auto run_point = [&](double v) {
    sweep_row row;
    row.value = v;
    json cfg = base;
    std::vector<double> rates = base_rates;
    if (ax.name == "budget") {
      cfg["budget"] = v;
    } else if (ax.name == "alpha_intra" || ax.name == "alpha_inter") {
      const char* key = ax.name == "alpha_intra" ? "intra" : "inter";
      for (size_t i = 0; i < n_groups; ++i)
        if (ax.group < 0 || static_cast<int>(i) == ax.group)
          cfg["groups"][i]["correlation"][key] = v;
    } else {  // theta
      for (size_t i = 0; i < n_groups; ++i)
        if (ax.group < 0 || static_cast<int>(i) == ax.group) rates[i] = v;
    }

    lm_market* mraw = nullptr;
    int rc = lm_market_create_from_json(cfg.dump().c_str(), &mraw);
    if (rc != LM_OK) {
      row.status = rc;
      return row;
    }
    market_ptr market(mraw);
    lm_mechanism* raw = nullptr;
    rc = lm_market_solve(market.get(), rates.data(),
                         static_cast<int>(n_groups), &raw);
    if (rc != LM_OK) {
      row.status = rc;
      return row;
    }
    mech_ptr mech(raw);
    char* ds = nullptr;
    if (lm_mechanism_describe(mech.get(), &ds) != LM_OK) {
      row.status = LM_ERR_INTERNAL;
      return row;
    }
    const json desc = json::parse(take(ds));
    row.structure = desc["structure"];
    row.case_tag = desc["case"];
    row.chi = desc["chi"];
    row.phi_hat = desc["phi_hat"];
    row.theta_bar = desc["theta_bar"];
    row.residual = desc["residual"];
    row.spend = desc["expected_spend"];
    for (size_t i = 0; i < n_groups; ++i) {
      row.pay_total.push_back(desc["groups"][i]["expected_spend"]);
      double p = NAN;
      lm_mechanism_payment_at(mech.get(), static_cast<int>(i), anchor[i], &p);
      row.pay_fixed.push_back(p);
    }
    char* ts = nullptr;
    if (lm_mechanism_tradeoff(mech.get(), panels, &ts) == LM_OK) {
      const json t = json::parse(take(ts));
      row.t_worst = t["worst_case"]["objective"];
      if (!t["reduced"].is_null()) row.t_star = t["reduced"]["t_star"];
    }
    return row;
  };

  std::vector<std::future<sweep_row>> futs;
  futs.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    const double v = from + (to - from) * k / (steps - 1);
    futs.push_back(std::async(std::launch::async, run_point, v));
  }
  std::vector<sweep_row> rows;
  rows.reserve(steps);
  for (auto& f : futs) rows.push_back(f.get());

  std::string hash;
  {
    lm_market* raw = nullptr;
    if (lm_market_create_from_json(base.dump().c_str(), &raw) == LM_OK) {
      market_ptr market(raw);
      hash = market_hash(market.get());
    }
  }

  std::ostringstream csv;
  csv << "# axis=" << axis_text << " from=" << from << " to=" << to
      << " steps=" << steps << " seed=" << seed << " config_hash=" << hash
      << "\n";
  csv << "value,status,structure,case,chi,phi_hat,theta_bar,residual,t_star,"
         "t_worst,expected_spend";
  for (size_t i = 0; i < n_groups; ++i)
    csv << ",pay_total_" << i << ",pay_fixed_" << i;
  csv << "\n";
  for (const auto& r : rows) {
    csv << csv_num(r.value) << ',' << r.status << ',' << r.structure << ','
        << r.case_tag << ',' << csv_num(r.chi) << ',' << csv_num(r.phi_hat)
        << ',' << csv_num(r.theta_bar) << ',' << csv_num(r.residual) << ','
        << csv_num(r.t_star) << ',' << csv_num(r.t_worst) << ','
        << csv_num(r.spend);
    for (size_t i = 0; i < n_groups; ++i) {
      csv << ',' << (i < r.pay_total.size() ? csv_num(r.pay_total[i]) : "")
          << ',' << (i < r.pay_fixed.size() ? csv_num(r.pay_fixed[i]) : "");
    }
    csv << "\n";
  }

  // Columns restricted to points that solved.
  auto column = [&](auto&& get) {
    std::vector<double> xs;
    for (const auto& r : rows)
      if (r.status == 0) {
        const double x = get(r);
        if (!std::isnan(x)) xs.push_back(x);
      }
    return xs;
  };

  int exit_rc = 0;
  if (ax.name == "budget") {
    // A bigger budget can only improve the optimum.
    const auto ts = column([](const sweep_row& r) { return r.t_star; });
    if (!monotone(ts, -1)) {
      std::fprintf(stderr,
                   "leakmarket: ASSERTION FAILED: t_star is not non-increasing "
                   "along the budget sweep\n");
      exit_rc = LM_AUDIT_FAILED;
    } else {
      std::printf("budget sweep: t_star non-increasing across %zu points\n",
                  ts.size());
    }
  } else if (ax.name == "alpha_intra" && family == "offset") {
    // Stronger intra-group leakage lowers pay under the offset family.
    for (size_t i = 0; i < n_groups; ++i) {
      const auto ps =
          column([i](const sweep_row& r) { return r.pay_fixed[i]; });
      if (!monotone(ps, -1)) {
        std::fprintf(stderr,
                     "leakmarket: ASSERTION FAILED: pay_fixed_%zu is not "
                     "non-increasing along the alpha_intra sweep\n",
                     i);
        exit_rc = LM_AUDIT_FAILED;
      }
    }
    if (exit_rc == 0)
      std::printf("alpha_intra sweep: fixed-cost payments non-increasing\n");
  } else {
    // Exhibit search only: flag non-monotone columns, assert nothing.
    for (size_t i = 0; i < n_groups; ++i) {
      const auto ps =
          column([i](const sweep_row& r) { return r.pay_total[i]; });
      if (ps.size() >= 3 && !monotone(ps, -1) && !monotone(ps, +1)) {
        std::printf("non-monotone exhibit: pay_total_%zu along %s\n", i,
                    axis_text.c_str());
        csv << "# non_monotone_exhibit=pay_total_" << i << "\n";
      }
    }
  }

  write_file(out_dir / "sweep.csv", csv.str());
  std::printf("sweep (%d points) -> %s\n", steps,
              (out_dir / "sweep.csv").c_str());
  return to_exit(exit_rc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leakage-aware data acquisition toolkit"};
  app.require_subcommand(1);

  std::string config, out_dir = ".", axis = "budget";
  std::vector<double> rates;
  uint64_t seed = 1;
  long long reps = 1000;
  int batch = 1, samples = 200, steps = 10, panels = 1000, fp_steps = 5,
      oracle_panels = 64;
  double from = 0.0, to = 1.0;

  auto add_common = [&](CLI::App* cmd, bool with_rates = true) {
    cmd->add_option("--config", config, "JSON market configuration")
        ->required();
    cmd->add_option("--out", out_dir, "output directory (default .)");
    if (with_rates)
      cmd->add_option("--rates", rates,
                      "participation rates (one per group; default from the "
                      "config)");
    cmd->add_option("--seed", seed, "random seed stamped into artifacts");
    return cmd;
  };

  auto* solve = add_common(app.add_subcommand(
      "solve", "solve the market and emit mechanism.json + CSV curves"));
  solve->add_option("--panels", panels, "discrete lift resolution");

  auto* audit = add_common(app.add_subcommand(
      "audit", "validate assumptions and certify the solved mechanism"));
  audit->add_option("--samples", samples, "truthfulness sample count");

  auto* sim = add_common(app.add_subcommand(
      "simulate", "Monte Carlo estimator moments vs the closed forms"));
  sim->add_option("--reps", reps, "replication count");
  sim->add_option("--batch", batch, "population redraw interval");

  auto* sweep = add_common(
      app.add_subcommand("sweep",
                         "re-solve along one axis and tabulate the curves"),
      false);
  sweep->add_option("--axis", axis,
                    "budget | alpha_intra[:g] | alpha_inter[:g] | theta[:g]")
      ->required();
  sweep->add_option("--from", from, "axis start")->required();
  sweep->add_option("--to", to, "axis end")->required();
  sweep->add_option("--steps", steps, "points (>= 2)")
      ->check(CLI::Range(2, 10000));
  sweep->add_option("--panels", panels, "discrete lift resolution");

  auto* fp = add_common(
      app.add_subcommand("check-full-participation",
                         "scan rate grids for the optimality conditions"),
      false);
  fp->add_option("--steps", fp_steps, "grid steps per group");

  auto* oracle = add_common(app.add_subcommand(
      "oracle", "emit the discrete-game saddle table for this market"));
  oracle->add_option("--panels", oracle_panels, "atom count");

  CLI11_PARSE(app, argc, argv);

  fs::create_directories(out_dir);
  if (solve->parsed())
    return cmd_solve(config, out_dir, rates, seed, panels);
  if (audit->parsed()) return cmd_audit(config, out_dir, rates, seed, samples);
  if (sim->parsed())
    return cmd_simulate(config, out_dir, rates, seed, reps, batch);
  if (sweep->parsed())
    return cmd_sweep(config, out_dir, axis, from, to, steps, seed, panels);
  if (fp->parsed()) return cmd_full_participation(config, out_dir, fp_steps);
  if (oracle->parsed())
    return cmd_oracle(config, out_dir, rates, seed, oracle_panels);
  return 1;
}
