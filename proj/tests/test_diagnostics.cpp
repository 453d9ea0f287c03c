#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mpe/diagnostics.hpp"

using namespace mpe;

namespace {

Grid diag_grid(int nx = 16, int ny = 16, int np = 12) {
  RunConfig rc;
  rc.nx = nx; rc.ny = ny; rc.np = np;
  rc.Lx = 2.0 * M_PI; rc.Ly = 2.0 * M_PI;
  PhysParams ph;
  ph.p0 = 1.0; ph.p1 = 2.0;
  return make_grid(rc, ph);
}

// Low-mode velocity vanishing on the lateral walls (sampled at centers).
void seed_velocity(const Grid& g, HorizontalVelocity& vel, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  for (int m = 1; m <= 2; ++m) {
    double a = amp(rng), b = amp(rng);
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          double sx = std::sin(m * M_PI * g.x(i) / g.Lx);
          double sy = std::sin(m * M_PI * g.y(j) / g.Ly);
          double vp = std::cos(M_PI * (g.p(k) - g.p0) / (g.p1 - g.p0));
          vel.v1(i, j, k) += a * sx * sy * (1.0 + 0.5 * vp);
          vel.v2(i, j, k) += b * sx * sy * (1.0 - 0.5 * vp);
        }
  }
}

}  // namespace

TEST_CASE("hydrostatic integral is exact for constant temperature") {
  Grid g = diag_grid();
  PhysParams ph;
  ph.p0 = 1.0; ph.p1 = 2.0; ph.R = 1.0;
  const double T0 = 3.0, phis = 0.7;
  ScalarField3 T(g), Phi(g);
  T.fill(T0);
  Field2 Phi_s(g);
  Phi_s.fill(phis);
  hydrostatic_phi(g, T, Phi_s, ph, Phi);
  for (int k = 0; k < g.np; ++k) {
    double expect = phis + ph.R * T0 * std::log(g.p1 / g.p(k));
    REQUIRE(Phi(4, 5, k) == Catch::Approx(expect).margin(1e-13));
  }
}

TEST_CASE("hydrostatic integral is exact for T linear in ln p") {
  Grid g = diag_grid();
  PhysParams ph;
  ph.p0 = 1.0; ph.p1 = 2.0; ph.R = 2.0;
  const double a = 1.5, b = 0.4;  // T = a + b ln p
  ScalarField3 T(g), Phi(g);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) T(i, j, k) = a + b * std::log(g.p(k));
  Field2 Phi_s(g);
  hydrostatic_phi(g, T, Phi_s, ph, Phi);
  for (int k = 0; k < g.np; ++k) {
    double lp = std::log(g.p(k)), lp1 = std::log(g.p1);
    // integral of (a + b u) du from lp to lp1
    double expect = ph.R * (a * (lp1 - lp) + 0.5 * b * (lp1 * lp1 - lp * lp));
    REQUIRE(Phi(0, 0, k) == Catch::Approx(expect).margin(1e-13));
  }
}

TEST_CASE("diagnose_w rejects incompatible velocity fields") {
  Grid g = diag_grid();
  HorizontalVelocity vel(g);
  seed_velocity(g, vel, 7);
  REQUIRE_THROWS_AS(diagnose_w(g, vel), CompatibilityError);
}

TEST_CASE("projection drives the column divergence below tolerance") {
  Grid g = diag_grid();
  HorizontalVelocity vel(g);
  seed_velocity(g, vel, 11);
  ProjectionWorkspace ws(g);
  ProjectionInfo info = barotropic_project(g, vel, ws);
  REQUIRE(info.iterations > 0);
  REQUIRE(info.residual <= ws.tolerance);
  REQUIRE_NOTHROW(diagnose_w(g, vel, 1e-8));
  double vscale = max_abs_v(g, vel);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) REQUIRE(std::abs(vel.w(i, j, 0)) <= 1e-9 * vscale);
  // interior faces: telescoped column sums match the cell divergences
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      REQUIRE(vel.w(i, j, g.np) == 0.0);
}

TEST_CASE("projection is idempotent") {
  Grid g = diag_grid();
  HorizontalVelocity vel(g);
  seed_velocity(g, vel, 23);
  ProjectionWorkspace ws(g);
  barotropic_project(g, vel, ws);
  ProjectionInfo second = barotropic_project(g, vel, ws);
  double vscale = max_abs_v(g, vel);
  REQUIRE(second.correction_max <= 1e-10 * vscale);
}

TEST_CASE("projection leaves the vertical shear untouched") {
  Grid g = diag_grid();
  HorizontalVelocity vel(g);
  seed_velocity(g, vel, 31);
  // record shear v - vbar before
  ScalarField3 s1(g), s2(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double m1 = 0.0, m2 = 0.0;
      for (int k = 0; k < g.np; ++k) { m1 += vel.v1(i, j, k); m2 += vel.v2(i, j, k); }
      m1 /= g.np; m2 /= g.np;
      for (int k = 0; k < g.np; ++k) {
        s1(i, j, k) = vel.v1(i, j, k) - m1;
        s2(i, j, k) = vel.v2(i, j, k) - m2;
      }
    }
  ProjectionWorkspace ws(g);
  barotropic_project(g, vel, ws);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double m1 = 0.0, m2 = 0.0;
        for (int kk = 0; kk < g.np; ++kk) { m1 += vel.v1(i, j, kk); m2 += vel.v2(i, j, kk); }
        m1 /= g.np; m2 /= g.np;
        // column-uniform correction: shear is preserved bit-exactly
        REQUIRE(vel.v1(i, j, k) - m1 == Catch::Approx(s1(i, j, k)).margin(1e-13));
        REQUIRE(vel.v2(i, j, k) - m2 == Catch::Approx(s2(i, j, k)).margin(1e-13));
      }
}

TEST_CASE("theta diagnostic recovers the conjugation factor") {
  Grid g = diag_grid();
  PhysParams ph;
  ph.p0 = 1.0; ph.p1 = 2.0; ph.R = 1.0; ph.c_p = 3.5;
  ReferenceProfiles prof;
  prof.theta_h_0 = 1.0; prof.theta_h_slope = 0.0; prof.p_ref = ph.p1;
  ScalarField3 T(g), theta(g);
  const double e = ph.R / ph.c_p;
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) T(i, j, k) = 2.0 * std::pow(g.p(k) / ph.p0, e);
  compute_theta(g, T, ph, prof, theta);
  for (int k = 0; k < g.np; ++k)
    REQUIRE(theta(1, 1, k) == Catch::Approx(2.0 - 1.0).margin(1e-13));
}
