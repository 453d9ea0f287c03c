// Command-line driver: simulation runs plus the verification subcommands.
// Exit codes: 0 success / all checks pass, 1 check failures (report written),
// 2 usage or configuration error, 3 runtime fault (NaN, non-convergence).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpe/experiments.hpp"
#include "mpe/scenarios.hpp"
#include "mpe/timestepper.hpp"
#include "mpe/verify.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;  // empty: use the config's output directory

  std::string out_dir() const { return out.empty() ? "out" : out; }
  std::string baselines = "baselines/baselines.json";
  int threads = 0;
  unsigned seed = 0;
  bool seed_set = false;
  bool overwrite = false;
  bool dump_defaults = false;
};

mpe::Config resolve_config(const GlobalOpts& o, const std::string& scenario) {
  mpe::KVMap m;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw mpe::ConfigError("cannot open config file: " + o.config_path);
    m = mpe::parse_config_text(in);
  } else if (!scenario.empty()) {
    m = mpe::scenario_config(scenario).to_map();
  } else {
    m = mpe::Config{}.to_map();
  }
  for (const auto& s : o.sets) mpe::apply_override(m, s);
  mpe::Config c = mpe::Config::from_map(m);
  if (o.threads > 0) c.run.threads = o.threads;
  if (o.seed_set) c.run.seed = o.seed;
  if (!o.out.empty()) c.run.out_dir = o.out;
  c.validate();
  return c;
}

void write_summary(const std::string& out_dir, const json& j) {
  std::filesystem::create_directories(out_dir);
  std::ofstream f(out_dir + "/summary.json");
  f << j.dump(2) << "\n";
}

json checks_to_json(const std::vector<mpe::Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tol", c.tol}});
  return arr;
}

void print_checks(const std::vector<mpe::Check>& checks) {
  for (const auto& c : checks)
    std::printf("%-40s %s  value=%.3e tol=%.1e\n", c.name.c_str(),
                c.pass ? "PASS" : "FAIL", c.value, c.tol);
}

bool all_pass(const std::vector<mpe::Check>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

json load_baselines(const std::string& path) {
  std::ifstream f(path);
  if (!f) return json::object();
  json j;
  f >> j;
  return j;
}

int cmd_run(const GlobalOpts& o, const std::string& scenario) {
  mpe::Config c = resolve_config(o, scenario);
  if (o.dump_defaults) {
    std::fputs(c.serialize().c_str(), stdout);
    return 0;
  }
  mpe::RunResult res = mpe::run(c, true, false, o.overwrite);
  bool bounds_ok = true;
  double worst = 0;
  if (c.run.monitor_bounds)
    for (const auto& r : res.series) {
      if (r.any_flag()) bounds_ok = false;
      worst = std::max({worst, r.margin_T, r.margin_qv, r.margin_qc, r.margin_qr});
    }
  const mpe::DiagnosticsRecord& last = res.series.back();
  json j;
  j["command"] = "run";
  j["steps"] = res.steps;
  j["final_time"] = res.state.time;
  j["bounds_ok"] = bounds_ok;
  j["worst_bound_margin"] = worst;
  json fin;
  const auto& cols = mpe::diagnostics_columns();
  auto vals = mpe::diagnostics_values(last);
  for (size_t n = 0; n < cols.size(); ++n) fin[cols[n]] = vals[n];
  j["final"] = fin;
  j["pass"] = bounds_ok;
  write_summary(c.run.out_dir, j);
  return bounds_ok ? 0 : 1;
}

int cmd_verify_operators(const GlobalOpts& o) {
  unsigned seed = o.seed_set ? o.seed : 12345;
  std::vector<mpe::Check> checks = mpe::verify_operator_checks(seed);
  for (const auto& c : mpe::verify_bihari_checks()) checks.push_back(c);

  // Empirical trilinear-inequality ratios on random band-limited fields;
  // informational unless a baseline pins them down.
  mpe::RunConfig rc;
  rc.nx = rc.ny = rc.np = 16;
  rc.Lx = rc.Ly = 1.0;
  mpe::PhysParams ph;
  ph.p0 = 1.0;
  ph.p1 = 2.0;
  mpe::Grid g = mpe::make_grid(rc, ph);
  json base = load_baselines(o.baselines);
  for (auto [kind, name] : {std::pair{mpe::TrilinearKind::HHP, "trilinear_hhp_max_ratio"},
                            std::pair{mpe::TrilinearKind::CLT, "trilinear_clt_max_ratio"}}) {
    mpe::TrilinearReport rep = mpe::trilinear_ratio_check(g, kind, 50, seed);
    double cap = base.contains("trilinear") && base["trilinear"].contains(name)
                     ? base["trilinear"][name].get<double>()
                     : std::numeric_limits<double>::infinity();
    checks.push_back({name, rep.max_ratio <= cap, rep.max_ratio, cap});
  }

  print_checks(checks);
  json j;
  j["command"] = "verify-operators";
  j["checks"] = checks_to_json(checks);
  j["pass"] = all_pass(checks);
  write_summary(o.out_dir(), j);
  return all_pass(checks) ? 0 : 1;
}

int cmd_verify_bounds(const GlobalOpts& o, long steps) {
  std::vector<mpe::Check> checks;
  for (const char* name : {"rest", "warm_bubble", "saturated_blob"}) {
    GlobalOpts so = o;
    mpe::Config c = resolve_config(so, name);
    c.run.max_steps = steps;
    mpe::RunResult res = mpe::run(c, false, true);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : res.series)
      worst = std::max({worst, r.margin_T, r.margin_qv, r.margin_qc, r.margin_qr});
    checks.push_back({std::string("bounds_") + name, worst <= 0.0, worst, 0.0});
  }
  print_checks(checks);
  json j;
  j["command"] = "verify-bounds";
  j["checks"] = checks_to_json(checks);
  j["pass"] = all_pass(checks);
  write_summary(o.out_dir(), j);
  return all_pass(checks) ? 0 : 1;
}

int cmd_converge_eps(const GlobalOpts& o, const std::string& which,
                     std::vector<double> values, int steps) {
  mpe::Config base = resolve_config(o, "saturated_blob");
  base.run.threads = std::max(1, base.run.threads);
  bool do2 = which == "eps2", do1 = which == "eps1";
  if (!do1 && !do2) throw mpe::ConfigError("--which must be eps1 or eps2");
  double eps1_hi = do1 && !values.empty() ? values.front() : 1e-2;
  if (do2 && values.empty()) values = {1e-1, 1e-2, 1e-3};
  mpe::EpsReport rep = mpe::converge_eps(base, do2 ? values : std::vector<double>{},
                                         eps1_hi, steps, do2, do1);
  std::vector<mpe::Check> checks;
  json j;
  j["command"] = "converge-eps";
  j["which"] = which;
  if (do2) {
    j["eps2_values"] = rep.eps2_values;
    j["eps2_diffs"] = rep.eps2_diffs;
    double margin = 0.0;
    for (size_t i = 1; i < rep.eps2_diffs.size(); ++i)
      margin = std::max(margin, rep.eps2_diffs[i] - rep.eps2_diffs[i - 1]);
    checks.push_back({"eps2_diffs_strictly_decreasing", rep.eps2_decreasing, margin, 0.0});
  }
  if (do1) {
    j["eps1_hi_diff"] = rep.eps1_hi_diff;
    j["eps1_lo_diff"] = rep.eps1_lo_diff;
    j["eps1_ratio"] = rep.eps1_ratio;
    bool ok = rep.eps1_ratio >= 5.0 && rep.eps1_ratio <= 20.0;
    checks.push_back({"eps1_vanishing_ratio_in_5_20", ok, rep.eps1_ratio, 20.0});
  }
  print_checks(checks);
  j["checks"] = checks_to_json(checks);
  j["pass"] = all_pass(checks);
  write_summary(o.out_dir(), j);
  return all_pass(checks) ? 0 : 1;
}

int cmd_uniqueness(const GlobalOpts& o, std::vector<double> amps, int steps, double delta) {
  mpe::Config base = resolve_config(o, "saturated_blob");
  json basej = load_baselines(o.baselines);
  double A7c = basej.contains("uniqueness") && basej["uniqueness"].contains("A7_constant")
                   ? basej["uniqueness"]["A7_constant"].get<double>()
                   : 0.0;
  std::vector<mpe::Check> checks;
  json j;
  j["command"] = "uniqueness";
  j["amplitudes"] = amps;
  j["A7_constant"] = A7c;

  // Zero perturbation: identical runs, Psi exactly zero.
  mpe::UniquenessMetrics zero =
      mpe::uniqueness_experiment(base, mpe::PerturbShape::velocity, 0.0, delta, 5);
  double zmax = 0;
  for (double p : zero.psi) zmax = std::max(zmax, std::abs(p));
  checks.push_back({"zero_perturbation_psi_identically_zero", zmax == 0.0, zmax, 0.0});

  std::vector<double> finals, fitted;
  bool envelope_ok = true;
  for (double a : amps) {
    mpe::UniquenessMetrics m =
        mpe::uniqueness_experiment(base, mpe::PerturbShape::velocity, a, delta, steps);
    finals.push_back(m.psi.back());
    fitted.push_back(mpe::uniqueness_fit_constant(m));
    if (A7c > 0.0) {
      auto env = mpe::uniqueness_envelope(m, A7c);
      for (size_t n = 0; n < env.size(); ++n)
        if (m.psi[n] > env[n] * (1.0 + 1e-9)) envelope_ok = false;
    }
  }
  j["final_psi"] = finals;
  j["fitted_constants"] = fitted;
  double scale_worst = 0.0;
  for (size_t i = 1; i < amps.size(); ++i) {
    double expect = (amps[i] / amps[i - 1]) * (amps[i] / amps[i - 1]);
    double got = finals[i] / finals[i - 1];
    scale_worst = std::max(scale_worst, std::max(got / expect, expect / got));
  }
  checks.push_back({"psi_scales_as_amplitude_squared_3x", scale_worst <= 3.0, scale_worst, 3.0});
  if (A7c > 0.0)
    checks.push_back({"psi_below_gronwall_envelope", envelope_ok, envelope_ok ? 0.0 : 1.0, 0.0});

  print_checks(checks);
  j["checks"] = checks_to_json(checks);
  j["pass"] = all_pass(checks);
  write_summary(o.out_dir(), j);
  return all_pass(checks) ? 0 : 1;
}

int cmd_mms(const GlobalOpts& o, std::vector<int> grids) {
  std::vector<mpe::MmsCase> cases;
  json errs = json::array();
  for (int n : grids) {
    cases.push_back(mpe::mms_qc_case(n));
    errs.push_back({{"n", n}, {"error", cases.back().error}});
    std::printf("n=%-4d L2 error=%.6e\n", n, cases.back().error);
  }
  double slope = mpe::mms_slope(cases);
  std::vector<mpe::Check> checks{{"mms_spatial_slope_ge_1.8", slope >= 1.8, slope, 1.8}};
  print_checks(checks);
  json j;
  j["command"] = "mms";
  j["cases"] = errs;
  j["slope"] = slope;
  j["checks"] = checks_to_json(checks);
  j["pass"] = all_pass(checks);
  write_summary(o.out_dir(), j);
  return all_pass(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moist primitive-equation simulator and verification suite"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  GlobalOpts o;
  app.add_option("--config", o.config_path, "configuration file");
  app.add_option("--set", o.sets, "override section.key=value (repeatable)");
  app.add_option("--threads", o.threads, "worker thread count");
  auto* seed_opt = app.add_option("--seed", o.seed, "random seed");
  app.add_option("--out", o.out, "output directory");
  app.add_flag("--overwrite", o.overwrite, "overwrite existing outputs");
  app.add_flag("--dump-defaults", o.dump_defaults, "print the resolved config and exit");

  std::string scenario = "warm_bubble";
  auto* run_cmd = app.add_subcommand("run", "time-step a scenario");
  run_cmd->add_option("--scenario", scenario, "built-in scenario when no --config given");

  auto* vo_cmd = app.add_subcommand("verify-operators", "operator identity checks");
  long bound_steps = 500;
  auto* vb_cmd = app.add_subcommand("verify-bounds", "maximum-principle monitor");
  vb_cmd->add_option("--steps", bound_steps, "steps per scenario");

  std::string which = "eps2";
  std::vector<double> eps_values;
  int eps_steps = 200;
  auto* ce_cmd = app.add_subcommand("converge-eps", "regularization consistency study");
  ce_cmd->add_option("--which", which, "eps1 or eps2");
  ce_cmd->add_option("--values", eps_values, "parameter values, descending");
  ce_cmd->add_option("--steps", eps_steps, "fixed step count");

  std::vector<double> amps{1e-4, 1e-5, 1e-6};
  int uq_steps = 100;
  double delta = 0.1;
  auto* uq_cmd = app.add_subcommand("uniqueness", "continuous-dependence experiment");
  uq_cmd->add_option("--amplitudes", amps, "perturbation amplitudes");
  uq_cmd->add_option("--steps", uq_steps, "steps per paired run");
  uq_cmd->add_option("--delta", delta, "scalar weight in the separation metric");
  uq_cmd->add_option("--baselines", o.baselines, "baselines JSON path");

  std::vector<int> grids{16, 32, 64};
  auto* mms_cmd = app.add_subcommand("mms", "manufactured-solution convergence");
  mms_cmd->add_option("--grids", grids, "horizontal grid sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  o.seed_set = seed_opt->count() > 0;

  try {
    if (app.get_subcommands().empty()) {
      if (o.dump_defaults) {
        std::fputs(resolve_config(o, "").serialize().c_str(), stdout);
        return 0;
      }
      std::cerr << "no subcommand given (see --help)\n";
      return 2;
    }
    if (run_cmd->parsed()) return cmd_run(o, o.config_path.empty() ? scenario : "");
    if (vo_cmd->parsed()) return cmd_verify_operators(o);
    if (vb_cmd->parsed()) return cmd_verify_bounds(o, bound_steps);
    if (ce_cmd->parsed()) return cmd_converge_eps(o, which, eps_values, eps_steps);
    if (uq_cmd->parsed()) return cmd_uniqueness(o, amps, uq_steps, delta);
    if (mms_cmd->parsed()) return cmd_mms(o, grids);
    return 2;
  } catch (const mpe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mpe::NonConvergence& e) {
    std::cerr << "solver fault: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime fault: " << e.what() << "\n";
    return 3;
  }
}
