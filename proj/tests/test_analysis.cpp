#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mpe/analysis.hpp"
#include "mpe/experiments.hpp"
#include "mpe/scenarios.hpp"
#include "mpe/verify.hpp"

using namespace mpe;

TEST_CASE("bound computation takes the max of interior data and targets") {
  Config cfg = scenario_config("saturated_blob");
  Grid g = make_grid(cfg.run, cfg.phys);
  ModelState st(g);
  init_state(g, cfg.run, cfg.phys, cfg.bdry, st);
  ScalarBounds b = compute_bounds(g, st, cfg.bdry);
  REQUIRE(b.qv_hi >= max_interior(g, st.q_v));
  REQUIRE(b.qv_hi >= cfg.bdry.q_star_v_c);
  REQUIRE(b.T_hi >= max_interior(g, st.T));
  REQUIRE(b.T_hi >= cfg.bdry.T_star_surface_c);
}

TEST_CASE("diagnostics record flags a bound violation with a positive margin") {
  Config cfg = scenario_config("rest");
  cfg.run.nx = cfg.run.ny = 8;
  cfg.run.np = 4;
  Grid g = make_grid(cfg.run, cfg.phys);
  ModelState st(g);
  init_state(g, cfg.run, cfg.phys, cfg.bdry, st);
  ScalarBounds bounds = compute_bounds(g, st, cfg.bdry);
  DiagnosticsRecord ok = record_diagnostics(g, st, cfg.phys, cfg.prof, bounds);
  REQUIRE_FALSE(ok.any_flag());
  REQUIRE(ok.margin_qv <= 0.0);
  st.q_v(1, 1, 1) = bounds.qv_hi + 1.0;  // exceed the ceiling
  DiagnosticsRecord bad = record_diagnostics(g, st, cfg.phys, cfg.prof, bounds);
  REQUIRE(bad.flag_qv);
  REQUIRE(bad.margin_qv == Catch::Approx(1.0 - kBoundCeilTol));
  st.q_v(1, 1, 1) = -1e-6;  // dip below the floor
  bad = record_diagnostics(g, st, cfg.phys, cfg.prof, bounds);
  REQUIRE(bad.flag_qv);
}

TEST_CASE("energy budget check accepts and rejects synthetic series") {
  std::vector<DiagnosticsRecord> series(5);
  for (int n = 0; n < 5; ++n) {
    series[static_cast<size_t>(n)].time = 0.1 * n;
    series[static_cast<size_t>(n)].v_L2 = std::exp(-0.1 * n);  // decaying energy
    series[static_cast<size_t>(n)].gradv_energy = 0.5;
    series[static_cast<size_t>(n)].T_L2 = 1.0;
  }
  BudgetReport rep = energy_budget_check(series, 10.0, 1.0);
  REQUIRE(rep.pass);
  // growing energy with C_hat = 0 must fail
  for (int n = 0; n < 5; ++n) series[static_cast<size_t>(n)].v_L2 = std::exp(0.5 * n);
  rep = energy_budget_check(series, 0.0, 0.0);
  REQUIRE_FALSE(rep.pass);
  REQUIRE(rep.worst_index >= 1);
  REQUIRE_THROWS_AS(energy_budget_check({series[0], series[1]}, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("integral-inequality primitive matches closed forms") {
  // g(s) = 1 + s + s^2: G(r) = (2/sqrt 3)(atan((2r+1)/sqrt 3) - pi/6)
  BihariG G(nonlinearity_fn(Nonlinearity::poly_1_s_s2));
  REQUIRE(G.G(0.0) == 0.0);
  for (double r : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    double exact = (2.0 / std::sqrt(3.0)) *
                   (std::atan((2.0 * r + 1.0) / std::sqrt(3.0)) - M_PI / 6.0);
    REQUIRE(G.G(r) == Catch::Approx(exact).margin(1e-12));
    REQUIRE(G.Ginv(G.G(r)) == Catch::Approx(r).margin(1e-10));
  }
  // g(s) = 1 + s^2: G = atan, sup G = pi/2, so larger arguments blow up
  BihariG Ga(nonlinearity_fn(Nonlinearity::arctan_1_s2));
  REQUIRE(Ga.G(1.0) == Catch::Approx(std::atan(1.0)).margin(1e-12));
  REQUIRE(std::isnan(Ga.Ginv(2.0)));  // 2 > pi/2
  BihariResult res = bihari_lasalle_bound(
      1.0, [](double t) { return t; }, Nonlinearity::arctan_1_s2, {0.0, 0.5, 1.0, 2.0});
  REQUIRE(std::isfinite(res.bound[0]));
  REQUIRE(std::isnan(res.bound.back()));
  REQUIRE(res.blowup_time <= 2.0);
}

TEST_CASE("linear envelope: zero rate is constant, constant rate is exponential") {
  std::vector<double> times = {0.0, 0.5, 1.0, 1.5};
  std::vector<double> zero(times.size(), 0.0);
  auto flat = gronwall_bound(2.0, times, zero);
  for (double v : flat) REQUIRE(v == 2.0);
  std::vector<double> ones(times.size(), 0.7);
  auto grow = gronwall_bound(2.0, times, ones);
  for (size_t n = 0; n < times.size(); ++n)
    REQUIRE(grow[n] == Catch::Approx(2.0 * std::exp(0.7 * times[n])).epsilon(1e-13));
  REQUIRE_THROWS_AS(gronwall_bound(1.0, times, {0.0}), std::invalid_argument);
}

TEST_CASE("separation metric vanishes for identical states and scales quadratically") {
  Config cfg = scenario_config("saturated_blob");
  cfg.run.nx = cfg.run.ny = 8;
  cfg.run.np = 4;
  Grid g = make_grid(cfg.run, cfg.phys);
  ModelState a(g), b(g);
  init_state(g, cfg.run, cfg.phys, cfg.bdry, a);
  init_state(g, cfg.run, cfg.phys, cfg.bdry, b);
  REQUIRE(uniqueness_psi(g, a, b, cfg.phys, 0.1) == 0.0);
  // constant offset in v1 only: psi = |dv1|^2 = eps^2 * volume
  double vol = g.Lx * g.Ly * (g.p1 - g.p0);
  for (double eps : {1e-3, 1e-4}) {
    ModelState c(g);
    init_state(g, cfg.run, cfg.phys, cfg.bdry, c);
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) c.vel.v1(i, j, k) += eps;
    REQUIRE(uniqueness_psi(g, a, c, cfg.phys, 0.1) ==
            Catch::Approx(eps * eps * vol).epsilon(1e-12));
  }
  // moisture enters with the delta^2 weight
  ModelState d(g);
  init_state(g, cfg.run, cfg.phys, cfg.bdry, d);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) d.q_r(i, j, k) += 1e-3;
  REQUIRE(uniqueness_psi(g, a, d, cfg.phys, 0.1) ==
          Catch::Approx(0.01 * 1e-6 * vol).epsilon(1e-12));
}

TEST_CASE("multiplier shape is at least 1 and grows with the velocity") {
  Config cfg = scenario_config("rest");
  cfg.run.nx = cfg.run.ny = 8;
  cfg.run.np = 4;
  Grid g = make_grid(cfg.run, cfg.phys);
  ModelState st(g);
  REQUIRE(uniqueness_multiplier_shape(g, st) == 1.0);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        st.vel.v1(i, j, k) = std::sin(M_PI * g.x(i) / g.Lx) * (g.p(k) - g.p0);
  REQUIRE(uniqueness_multiplier_shape(g, st) > 1.0);
}

TEST_CASE("operator and integral-inequality verification suites pass") {
  for (const Check& c : verify_operator_checks(4321)) {
    INFO(c.name << " value " << c.value << " tol " << c.tol);
    CHECK(c.pass);
  }
  for (const Check& c : verify_bihari_checks()) {
    INFO(c.name << " value " << c.value << " tol " << c.tol);
    CHECK(c.pass);
  }
}
