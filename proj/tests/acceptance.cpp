// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] is the repository root (for baselines); pass
// --update-baselines to regenerate baselines/baselines.json instead.

#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpe/experiments.hpp"
#include "mpe/scenarios.hpp"
#include "mpe/timestepper.hpp"
#include "mpe/verify.hpp"

using nlohmann::json;
using namespace mpe;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what) {
  std::printf("%s — criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// FNV-1a over the little-endian bytes of the interior values; stable across
// reruns of the same build.
uint64_t fnv1a(uint64_t h, const double* v, size_t n) {
  const unsigned char* b = reinterpret_cast<const unsigned char*>(v);
  for (size_t m = 0; m < n * sizeof(double); ++m) {
    h ^= b[m];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t state_hash(const Grid& g, const ModelState& st) {
  uint64_t h = 1469598103934665603ull;
  for (const ScalarField3* f : {&st.vel.v1, &st.vel.v2, &st.T, &st.q_v, &st.q_c, &st.q_r})
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          double v = (*f)(i, j, k);
          h = fnv1a(h, &v, 1);
        }
  h = fnv1a(h, &st.time, 1);
  return h;
}

// --- criterion 1: discrete operator identities ------------------------------

void criterion_1() {
  auto checks = verify_operator_checks(20260826, 20);
  bool pass = true;
  double worst = 0;
  for (const auto& c : checks) {
    pass = pass && c.pass;
    worst = std::max(worst, c.value);
  }
  report(1, pass,
         fmt("integration-by-parts and self-adjointness identities on 20 random fields "
             "(worst rel err %.3e, tol 1e-12)", worst));
}

// --- criterion 2: projection + continuity ------------------------------------

void criterion_2() {
  Config cfg = scenario_config("rest");
  Grid g = make_grid(cfg.run, cfg.phys);
  HorizontalVelocity vel(g);
  std::mt19937 rng(99);
  detail::random_band_limited(g, rng, vel.v1);
  detail::random_band_limited(g, rng, vel.v2);
  ProjectionWorkspace ws(g);
  barotropic_project(g, vel, ws);
  diagnose_w(g, vel, 1e-6);
  double vscale = std::max(max_abs_v(g, vel), 1e-300);
  double cres = 0, wtop = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      wtop = std::max(wtop, std::abs(vel.w(i, j, 0)));
      for (int k = 0; k < g.np; ++k) {
        double div = div_h_cell(g, vel.v1, vel.v2, i, j, k);
        double dwdp = (vel.w(i, j, k + 1) - vel.w(i, j, k)) / g.dp;
        cres = std::max(cres, std::abs(div + dwdp));
      }
    }
  bool pass = cres <= 1e-10 * vscale && wtop <= 1e-8 * vscale;
  report(2, pass,
         fmt("post-projection continuity: max|div v + dw/dp| = %.3e (tol %.1e), "
             "max|w(p0)| = %.3e (tol %.1e)", cres, 1e-10 * vscale, wtop, 1e-8 * vscale));
}

// --- criterion 3: scalar bounds over three scenarios --------------------------

void criterion_3() {
  bool pass = true;
  double worst = -1e300;
  for (const char* name : {"rest", "warm_bubble", "saturated_blob"}) {
    Config cfg = scenario_config(name);
    cfg.run.output_every = 1;  // examine every step
    RunResult res = run(cfg, /*write_outputs=*/false);
    for (const auto& r : res.series) {
      if (r.any_flag()) pass = false;
      worst = std::max({worst, r.margin_T, r.margin_qv, r.margin_qc, r.margin_qr});
    }
    if (res.steps != 500) pass = false;
  }
  report(3, pass,
         fmt("scalar max-principle bounds over rest/warm_bubble/saturated_blob, 500 steps "
             "each (worst margin %.3e, must be <= 0)", worst));
}

// --- criterion 4: kinetic-energy decay and dissipation budget -----------------

void criterion_4() {
  Config cfg = scenario_config("decay");
  RunResult res = run(cfg, /*write_outputs=*/false);
  const auto& s = res.series;
  bool monotone = true;
  for (size_t n = 1; n < s.size(); ++n)
    if (s[n].v_L2 * s[n].v_L2 > s[n - 1].v_L2 * s[n - 1].v_L2) monotone = false;
  double dissipated = 0.0;  // trapezoid of 2 mu |grad v|^2
  for (size_t n = 1; n < s.size(); ++n)
    dissipated += 0.5 * (s[n].gradv_energy + s[n - 1].gradv_energy) *
                  (s[n].time - s[n - 1].time);
  dissipated *= 2.0 * cfg.phys.mu_v;
  double dE = s.front().v_L2 * s.front().v_L2 - s.back().v_L2 * s.back().v_L2;
  double rel = std::abs(dE - dissipated) / std::max(dissipated, 1e-300);
  bool pass = monotone && rel <= 0.05;
  report(4, pass,
         fmt("unforced decay: ||v||^2 nonincreasing (%s), energy drop matches "
             "2 mu int ||grad v||^2 dt to %.2f%% (tol 5%%)",
             monotone ? "yes" : "no", 100.0 * rel));
}

// --- criterion 5: manufactured-solution convergence ---------------------------

void criterion_5() {
  std::vector<MmsCase> cases;
  for (int n : {16, 32, 64}) cases.push_back(mms_qc_case(n));
  double slope = mms_slope(cases);
  bool pass = slope >= 1.8;
  for (size_t i = 1; i < cases.size(); ++i)
    if (!(cases[i].error < cases[i - 1].error)) pass = false;
  report(5, pass,
         fmt("cloud-water transport convergence on {16,32,64}^2: errors %.3e / %.3e / %.3e, "
             "observed order %.2f (need >= 1.8)",
             cases[0].error, cases[1].error, cases[2].error, slope));
}

// --- criterion 6: regularization-parameter consistency ------------------------

void criterion_6() {
  Config base = scenario_config("saturated_blob");
  EpsReport rep = converge_eps(base, {1e-1, 1e-2, 1e-3}, 1e-2, 200);
  bool eps1_ok = rep.eps1_ratio >= 5.0 && rep.eps1_ratio <= 20.0;
  bool pass = rep.eps2_decreasing && eps1_ok;
  report(6, pass,
         fmt("switch-width study: successive q_v differences %.3e / %.3e / %.3e "
             "(strictly decreasing: %s); vertical-regularization ratio %.2f in [5, 20]: %s",
             rep.eps2_diffs[0], rep.eps2_diffs[1], rep.eps2_diffs[2],
             rep.eps2_decreasing ? "yes" : "no", rep.eps1_ratio, eps1_ok ? "yes" : "no"));
}

// --- criterion 7: continuous dependence on the data ---------------------------

void criterion_7(json& baselines, bool update) {
  Config base = scenario_config("saturated_blob");
  const double delta = 0.1;
  const int steps = 100;
  const std::vector<double> amps = {1e-4, 1e-5, 1e-6};

  UniquenessMetrics zero =
      uniqueness_experiment(base, PerturbShape::velocity, 0.0, delta, 5);
  double zmax = 0;
  for (double p : zero.psi) zmax = std::max(zmax, std::abs(p));

  std::vector<UniquenessMetrics> runs;
  double fit = 0.0;
  for (double a : amps) {
    runs.push_back(uniqueness_experiment(base, PerturbShape::velocity, a, delta, steps));
    fit = std::max(fit, uniqueness_fit_constant(runs.back()));
  }
  // 25% headroom over the tightest constant seen; floor keeps the envelope a
  // real (finite, positive) bound even when the separation decays monotonically
  if (update) baselines["uniqueness"]["A7_constant"] = std::max(1.25 * fit, 1e-3);

  double A7 = baselines.contains("uniqueness") &&
                      baselines["uniqueness"].contains("A7_constant")
                  ? baselines["uniqueness"]["A7_constant"].get<double>()
                  : 0.0;
  bool envelope_ok = A7 > 0.0;
  for (const auto& m : runs) {
    auto env = uniqueness_envelope(m, A7);
    for (size_t n = 0; n < env.size(); ++n)
      if (m.psi[n] > env[n]) envelope_ok = false;
  }
  // quadratic amplitude scaling: Psi_final(amp) / Psi_final(amp/10) within 3x of 100
  bool quad_ok = true;
  double worst_ratio = 0.0;
  for (size_t n = 1; n < runs.size(); ++n) {
    double ratio = runs[n - 1].psi.back() / runs[n].psi.back();
    worst_ratio = std::max(worst_ratio, std::abs(std::log(ratio / 100.0)));
    if (ratio < 100.0 / 3.0 || ratio > 300.0) quad_ok = false;
  }
  bool pass = (zmax == 0.0) && envelope_ok && quad_ok;
  report(7, pass,
         fmt("paired-run separation: Psi scales as amp^2 within 3x (%s), stays below the "
             "recorded envelope with constant %.3g (%s), zero perturbation exactly zero (%s)",
             quad_ok ? "yes" : "no", A7, envelope_ok ? "yes" : "no",
             zmax == 0.0 ? "yes" : "no"));
}

// --- criterion 8: integral-inequality toolbox ---------------------------------

void criterion_8() {
  auto checks = verify_bihari_checks();
  bool pass = true;
  std::string names;
  for (const auto& c : checks) {
    pass = pass && c.pass;
    if (!c.pass) names += " " + c.name;
  }
  report(8, pass,
         pass ? "nonlinear-bound toolbox identities (G(0), closed form, inverse, linear "
                "reduction) all within tolerance"
              : "nonlinear-bound toolbox identities failed:" + names);
}

// --- criterion 9: microphysics algebra -----------------------------------------

void criterion_9() {
  Config cfg = scenario_config("saturated_blob");
  cfg.run.nx = cfg.run.ny = 12;
  cfg.run.np = 8;
  Grid g = make_grid(cfg.run, cfg.phys);
  const PhysParams& ph = cfg.phys;

  // pointwise total-water cancellation of the exchange terms
  ModelState st(g);
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        st.T(i, j, k) = 0.8 + 0.4 * u(rng);
        st.q_v(i, j, k) = 0.04 * u(rng);
        st.q_c(i, j, k) = 0.002 * u(rng);
        st.q_r(i, j, k) = 0.002 * u(rng);
      }
  for (int k = 0; k <= g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) st.vel.w(i, j, k) = 0.2 * (u(rng) - 0.5);
  SourceTendencies src(g);
  assemble_sources(g, st, ph, cfg.prof, nullptr, src);
  ScalarField3 sed(g);
  sedimentation(g, st.q_r, cfg.prof, ph, sed);
  double cancel = 0;
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        cancel = std::max(cancel, std::abs(src.dq_v(i, j, k) + src.dq_c(i, j, k) +
                                           src.dq_r(i, j, k) - sed(i, j, k)));

  // Lipschitz bound for the regularized switch on 1e4 random pairs
  double lip = 0;
  std::uniform_real_distribution<double> v(-0.1, 0.1);
  for (int n = 0; n < 10000; ++n) {
    double a = v(rng), b = v(rng);
    if (a == b) continue;
    double dH = std::abs(regularized_heaviside(a, ph.eps2) -
                         regularized_heaviside(b, ph.eps2));
    lip = std::max(lip, dH * ph.eps2 / std::abs(a - b));
  }

  // per-column sedimentation budget telescopes to the bottom-face flux
  double sed_err = 0;
  const double cf_bot = g.p1 / (ph.R * cfg.prof.theta_bar(g.p1));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double col = 0;
      for (int k = 0; k < g.np; ++k) col += sed(i, j, k) * g.dp;
      double expect = ph.V_t * cf_bot * st.q_r(i, j, g.np - 1);
      sed_err = std::max(sed_err, std::abs(col - expect) / std::max(std::abs(expect), 1e-300));
    }

  bool pass = cancel <= 1e-14 && lip <= 1.0 + 1e-12 && sed_err <= 1e-12;
  report(9, pass,
         fmt("microphysics algebra: total-water cancellation %.2e (tol 1e-14), switch "
             "Lipschitz ratio %.6f (<= 1), sedimentation column budget rel err %.2e "
             "(tol 1e-12)", cancel, lip, sed_err));
}

// --- criterion 10: determinism + snapshot round trip ---------------------------

Config determinism_config() {
  Config cfg = scenario_config("warm_bubble");
  cfg.run.nx = cfg.run.ny = 16;
  cfg.run.np = 8;
  cfg.run.dt = 0.01;
  cfg.run.t_end = 0.5;  // 50 fixed steps
  cfg.run.max_steps = 50;
  cfg.run.threads = 1;
  return cfg;
}

void criterion_10(json& baselines, bool update, const std::string& root) {
  Config cfg = determinism_config();
  RunResult res = run(cfg, /*write_outputs=*/false);
  uint64_t h = state_hash(res.grid, res.state);
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
  if (update) baselines["determinism"]["warm_bubble_state_fnv1a"] = hex;

  std::string want = baselines.contains("determinism") &&
                             baselines["determinism"].contains("warm_bubble_state_fnv1a")
                         ? baselines["determinism"]["warm_bubble_state_fnv1a"].get<std::string>()
                         : "";
  bool hash_ok = want == hex;

  // snapshot round trip, bit-exact
  std::string dir = root + "/build/acceptance_snapshots";
  std::filesystem::remove_all(dir);
  auto files = write_snapshot(res.grid, res.state, dir, "final", true);
  bool rt_ok = !files.empty();
  const std::vector<std::pair<std::string, const ScalarField3*>> fields = {
      {"T", &res.state.T}, {"q_v", &res.state.q_v}, {"v1", &res.state.vel.v1}};
  for (const auto& [name, field] : fields) {
    SnapshotData s = read_field_mpe1(dir + "/final_" + name + ".mpe1");
    ScalarField3 f(res.grid);
    load_field_mpe1(s, res.grid, f);
    for (int k = 0; k < res.grid.np; ++k)
      for (int j = 0; j < res.grid.ny; ++j)
        for (int i = 0; i < res.grid.nx; ++i)
          if (f(i, j, k) != (*field)(i, j, k)) rt_ok = false;
  }
  std::filesystem::remove_all(dir);
  bool pass = hash_ok && rt_ok;
  report(10, pass,
         fmt("single-threaded rerun hash %s vs recorded %s (%s); snapshot round trip "
             "bit-exact (%s)", hex, want.empty() ? "<missing>" : want.c_str(),
             hash_ok ? "match" : "mismatch", rt_ok ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  std::string root = argc > 1 ? argv[1] : ".";
  bool update = false;
  for (int a = 2; a < argc; ++a)
    if (std::strcmp(argv[a], "--update-baselines") == 0) update = true;

  std::string bpath = root + "/baselines/baselines.json";
  json baselines = json::object();
  {
    std::ifstream f(bpath);
    if (f) f >> baselines;
  }

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7(baselines, update);
  criterion_8();
  criterion_9();
  criterion_10(baselines, update, root);

  if (update) {
    std::filesystem::create_directories(root + "/baselines");
    std::ofstream out(bpath);
    out << baselines.dump(2) << "\n";
    std::printf("baselines written to %s\n", bpath.c_str());
    return 0;
  }
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
