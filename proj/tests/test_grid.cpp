#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "mpe/grid.hpp"

using namespace mpe;

namespace {
Grid small_grid() {
  RunConfig rc;
  rc.nx = 8;
  rc.ny = 6;
  rc.np = 4;
  rc.Lx = 2.0;
  rc.Ly = 3.0;
  PhysParams ph;
  ph.p0 = 1.0;
  ph.p1 = 2.0;
  return make_grid(rc, ph);
}
}  // namespace

TEST_CASE("grid spacing and coordinates") {
  Grid g = small_grid();
  REQUIRE(g.dx == Catch::Approx(0.25));
  REQUIRE(g.dy == Catch::Approx(0.5));
  REQUIRE(g.dp == Catch::Approx(0.25));
  REQUIRE(g.x(0) == Catch::Approx(0.125));
  REQUIRE(g.y(5) == Catch::Approx(2.75));
  REQUIRE(g.p(0) == Catch::Approx(1.125));
  REQUIRE(g.p_faces.front() == 1.0);
  REQUIRE(g.p_faces.back() == 2.0);  // pinned exactly
  REQUIRE(g.p_faces.size() == 5);
  for (int k = 1; k < g.np; ++k) REQUIRE(g.p(k) > g.p(k - 1));
}

TEST_CASE("scalar field ghost indexing is independent per cell") {
  Grid g = small_grid();
  ScalarField3 f(g);
  double v = 0.0;
  for (int k = -1; k <= g.np; ++k)
    for (int j = -1; j <= g.ny; ++j)
      for (int i = -1; i <= g.nx; ++i) f(i, j, k) = v += 1.0;
  v = 0.0;
  for (int k = -1; k <= g.np; ++k)
    for (int j = -1; j <= g.ny; ++j)
      for (int i = -1; i <= g.nx; ++i) REQUIRE(f(i, j, k) == (v += 1.0));
}

TEST_CASE("interior_finite ignores ghosts") {
  Grid g = small_grid();
  ScalarField3 f(g);
  f(-1, -1, -1) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE(f.interior_finite());
  f(3, 2, 1) = std::numeric_limits<double>::infinity();
  REQUIRE_FALSE(f.interior_finite());
}

TEST_CASE("face field covers np+1 levels") {
  Grid g = small_grid();
  FaceField w(g);
  w(0, 0, 0) = 1.0;
  w(g.nx - 1, g.ny - 1, g.np) = 2.0;
  REQUIRE(w(0, 0, 0) == 1.0);
  REQUIRE(w(g.nx - 1, g.ny - 1, g.np) == 2.0);
}

TEST_CASE("boundary_region tags with lateral precedence") {
  Grid g = small_grid();
  REQUIRE(boundary_region(g, 3, 3, 2) == Region::Interior);
  REQUIRE(boundary_region(g, 3, 3, -1) == Region::Gamma_u);
  REQUIRE(boundary_region(g, 3, 3, g.np) == Region::Gamma_i);
  REQUIRE(boundary_region(g, -1, 3, 2) == Region::Gamma_l);
  REQUIRE(boundary_region(g, g.nx, 3, 2) == Region::Gamma_l);
  REQUIRE(boundary_region(g, 3, -1, 2) == Region::Gamma_l);
  // shared edges: lateral wins over top/bottom
  REQUIRE(boundary_region(g, -1, 3, -1) == Region::Gamma_l);
  REQUIRE(boundary_region(g, g.nx, 3, g.np) == Region::Gamma_l);
  REQUIRE_THROWS_AS(boundary_region(g, -2, 0, 0), std::out_of_range);
  REQUIRE_THROWS_AS(boundary_region(g, 0, 0, g.np + 1), std::out_of_range);
}
