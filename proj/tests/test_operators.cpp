#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mpe/operators.hpp"
#include "mpe/verify.hpp"

using namespace mpe;

namespace {

Grid test_grid(int nx = 12, int ny = 10, int np = 8) {
  RunConfig rc;
  rc.nx = nx; rc.ny = ny; rc.np = np;
  rc.Lx = 2.0; rc.Ly = 2.0;
  PhysParams ph;
  ph.p0 = 1.0; ph.p1 = 2.0;
  return make_grid(rc, ph);
}

// Fill the ghost-extended range with analytic values; cell-center formulas
// extend to ghost indices.
template <class F>
void fill_analytic(const Grid& g, ScalarField3& f, F fn) {
  for (int k = -1; k <= g.np; ++k)
    for (int j = -1; j <= g.ny; ++j)
      for (int i = -1; i <= g.nx; ++i)
        f(i, j, k) = fn(g.x(i), g.y(j), g.p0 + (k + 0.5) * g.dp);
}

}  // namespace

TEST_CASE("centered stencils are exact on quadratics") {
  Grid g = test_grid();
  ScalarField3 f(g), fx(g), fy(g), fp(g), lap(g);
  fill_analytic(g, f, [](double x, double y, double p) {
    return x * x + 2.0 * y * y + 3.0 * p * p + x * y;
  });
  grad_h(g, f, fx, fy);
  ddp(g, f, fp);
  laplace_h(g, f, lap);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double x = g.x(i), y = g.y(j), p = g.p(k);
        REQUIRE(fx(i, j, k) == Catch::Approx(2.0 * x + y).margin(1e-12));
        REQUIRE(fy(i, j, k) == Catch::Approx(4.0 * y + x).margin(1e-12));
        REQUIRE(fp(i, j, k) == Catch::Approx(6.0 * p).margin(1e-12));
        REQUIRE(lap(i, j, k) == Catch::Approx(6.0).margin(1e-11));
      }
}

TEST_CASE("vertical diffusion: constant in, zero out") {
  Grid g = test_grid();
  ScalarField3 f(g), out(g);
  f.fill(4.2);
  DiffusionSpec spec;
  spec.nu = 3.0;
  vertical_diffusion(g, f, spec, out);
  for (int k = 0; k < g.np; ++k)
    REQUIRE(out(3, 3, k) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("vertical diffusion with unit weight is exact on p^2") {
  Grid g = test_grid();
  ScalarField3 f(g), out(g);
  fill_analytic(g, f, [](double, double, double p) { return p * p; });
  DiffusionSpec spec;
  spec.nu = 1.5;
  vertical_diffusion(g, f, spec, out);
  // nu * d2/dp2 (p^2) = 2 nu everywhere, second difference exact on quadratics
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        REQUIRE(out(i, j, k) == Catch::Approx(3.0).margin(1e-11));
}

TEST_CASE("conjugated diffusion annihilates c (p/p0)^e profiles") {
  Grid g = test_grid();
  ScalarField3 f(g), out(g);
  const double e = 2.0 / 7.0, p0 = g.p0;
  fill_analytic(g, f, [e, p0](double, double, double p) {
    return 5.0 * std::pow(p / p0, e);
  });
  DiffusionSpec spec;
  spec.nu = 2.0;
  spec.c = [](double p) { return 1.0 + p; };
  spec.e = e;
  spec.p0 = p0;
  vertical_diffusion(g, f, spec, out);
  for (int k = 0; k < g.np; ++k)
    REQUIRE(out(5, 4, k) == Catch::Approx(0.0).margin(1e-11));
}

TEST_CASE("advection of a constant with constant velocity vanishes") {
  Grid g = test_grid();
  ScalarField3 f(g), out(g);
  f.fill(2.5);
  HorizontalVelocity vel(g);
  vel.v1.fill(0.7);
  vel.v2.fill(-0.3);
  vel.w.fill(0.0);
  advect(g, f, vel, AdvectScheme::centered, out);
  for (int k = 0; k < g.np; ++k)
    REQUIRE(out(2, 2, k) == Catch::Approx(0.0).margin(1e-13));
  advect(g, f, vel, AdvectScheme::upwind, out);
  for (int k = 0; k < g.np; ++k)
    REQUIRE(out(2, 2, k) == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("upwind advection is monotone under the CFL limit") {
  Grid g = test_grid();
  ScalarField3 f(g), out(g);
  // step profile in x, constant extension into ghosts
  for (int k = -1; k <= g.np; ++k)
    for (int j = -1; j <= g.ny; ++j)
      for (int i = -1; i <= g.nx; ++i) f(i, j, k) = (i < g.nx / 2) ? 1.0 : 0.0;
  HorizontalVelocity vel(g);
  vel.v1.fill(1.0);
  const double dt = 0.5 * g.dx;  // CFL 0.5
  for (int step = 0; step < 5; ++step) {
    advect(g, f, vel, AdvectScheme::upwind, out);
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f(i, j, k) += dt * out(i, j, k);
    for (int k = -1; k <= g.np; ++k)
      for (int j = -1; j <= g.ny; ++j) {
        f(-1, j, k) = f(0, std::clamp(j, 0, g.ny - 1), std::clamp(k, 0, g.np - 1));
        f(g.nx, j, k) = f(g.nx - 1, std::clamp(j, 0, g.ny - 1), std::clamp(k, 0, g.np - 1));
      }
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          REQUIRE(f(i, j, k) >= -1e-14);
          REQUIRE(f(i, j, k) <= 1.0 + 1e-14);
        }
  }
}

TEST_CASE("norms of a constant field") {
  Grid g = test_grid();
  ScalarField3 f(g);
  f.fill(3.0);
  Norms n = norms(g, f);
  double vol = g.Lx * g.Ly * (g.p1 - g.p0);
  REQUIRE(n.L2 == Catch::Approx(3.0 * std::sqrt(vol)).epsilon(1e-13));
  REQUIRE(n.grad_h_seminorm == Catch::Approx(0.0).margin(1e-14));
  REQUIRE(n.ddp_seminorm == Catch::Approx(0.0).margin(1e-14));
  REQUIRE(n.H1_full == Catch::Approx(n.L2).epsilon(1e-13));
  REQUIRE(n.Linf == 3.0);
}

TEST_CASE("pressure-weighted norm matches the closed-form midpoint sum") {
  RunConfig rc;
  rc.nx = 8; rc.ny = 8; rc.np = 16;
  rc.Lx = 2.0 * M_PI; rc.Ly = 2.0 * M_PI;
  PhysParams ph;  // nondimensional defaults: g = R = 1, p0 = 1, p1 = 2
  ph.p0 = 1.0; ph.p1 = 2.0; ph.g = 1.0; ph.R = 1.0;
  Grid g = make_grid(rc, ph);
  ReferenceProfiles prof;  // theta_bar identically 1
  prof.T_bar_0 = 1.0; prof.T_bar_slope = 0.0;
  prof.theta_bar_0 = 1.0; prof.theta_bar_slope = 0.0;
  prof.p_ref = ph.p1;
  ScalarField3 f(g);
  f.fill(1.0);
  // sum_k (1 + (k+1/2)/16)^2 / 16 = 7/3 - 1/3072 exactly (midpoint rule)
  double expect = std::sqrt((7.0 / 3.0 - 1.0 / 3072.0) * g.Lx * g.Ly);
  REQUIRE(weighted_norm_w(g, f, prof, ph) == Catch::Approx(expect).epsilon(1e-13));
}

TEST_CASE("Dirichlet energy equals the face-difference pairing") {
  Grid g = test_grid(16, 16, 4);
  std::mt19937 rng(99);
  ScalarField3 f(g);
  detail::fill_random(g, rng, f);
  detail::fill_dirichlet_mirror(g, f);
  detail::fill_neumann_vertical(g, f);
  double lhs = grad_energy(g, f);
  double rhs = detail::face_grad_pair(g, f, f);
  REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-12));
  REQUIRE(lhs > 0.0);
}

TEST_CASE("trilinear ratio checks are deterministic and finite") {
  Grid g = test_grid(8, 8, 8);
  TrilinearReport a = trilinear_ratio_check(g, TrilinearKind::HHP, 5, 1234);
  TrilinearReport b = trilinear_ratio_check(g, TrilinearKind::HHP, 5, 1234);
  REQUIRE(a.max_ratio == b.max_ratio);
  REQUIRE(std::isfinite(a.max_ratio));
  REQUIRE(a.max_ratio > 0.0);
  TrilinearReport c = trilinear_ratio_check(g, TrilinearKind::CLT, 5, 1234);
  REQUIRE(std::isfinite(c.max_ratio));
  REQUIRE(c.max_ratio > 0.0);
}
