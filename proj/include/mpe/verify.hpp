#pragma once

// Structure checks shared by the CLI verify subcommands and the acceptance
// suite: discrete integration-by-parts identities, operator adjointness,
// advection energy neutrality, and the nonlinear-bound toolbox identities.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mpe/analysis.hpp"
#include "mpe/diagnostics.hpp"
#include "mpe/operators.hpp"

namespace mpe {

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;  // measured error or ratio
  double tol = 0.0;
};

namespace detail {

inline void fill_random(const Grid& g, std::mt19937& rng, ScalarField3& f) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) f(i, j, k) = u(rng);
}

inline void fill_dirichlet_mirror(const Grid& g, ScalarField3& f) {
  for (int k = 0; k < g.np; ++k) {
    for (int j = 0; j < g.ny; ++j) {
      f(-1, j, k) = -f(0, j, k);
      f(g.nx, j, k) = -f(g.nx - 1, j, k);
    }
    for (int i = -1; i <= g.nx; ++i) {
      f(i, -1, k) = -f(i, 0, k);
      f(i, g.ny, k) = -f(i, g.ny - 1, k);
    }
  }
}

inline void fill_neumann_vertical(const Grid& g, ScalarField3& f) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      f(i, j, -1) = f(i, j, 0);
      f(i, j, g.np) = f(i, j, g.np - 1);
    }
}

// Face-difference gradient pairing matching the 5-point laplacian exactly:
// boundary faces carry half weight under the Dirichlet mirror fill.
inline double face_grad_pair(const Grid& g, const ScalarField3& f, const ScalarField3& h) {
  double s = 0.0;
  const double ix2 = 1.0 / (g.dx * g.dx), iy2 = 1.0 / (g.dy * g.dy);
  for (int k = 0; k < g.np; ++k) {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) {
        double wgt = (i == 0 || i == g.nx) ? 0.5 : 1.0;
        s += wgt * (f(i, j, k) - f(i - 1, j, k)) * (h(i, j, k) - h(i - 1, j, k)) * ix2;
      }
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double wgt = (j == 0 || j == g.ny) ? 0.5 : 1.0;
        s += wgt * (f(i, j, k) - f(i, j - 1, k)) * (h(i, j, k) - h(i, j - 1, k)) * iy2;
      }
  }
  return s * g.cell_volume();
}

}  // namespace detail

inline std::vector<Check> verify_operator_checks(unsigned seed, int n_fields = 20) {
  RunConfig rc;
  rc.nx = 16;
  rc.ny = 16;
  rc.np = 16;
  rc.Lx = 1.0;
  rc.Ly = 1.0;
  PhysParams ph;
  ph.mode = "nondimensional";
  ph.p0 = 1.0;
  ph.p1 = 2.0;
  ph.R = 1.0;
  ph.g = 1.0;
  Grid g = make_grid(rc, ph);
  std::mt19937 rng(seed);

  double e_ibp = 0.0, e_adj = 0.0, e_skew = 0.0;
  ScalarField3 f(g), h(g), Lf(g), Df(g), Dh(g);
  DiffusionSpec spec;
  spec.nu = 1.0;
  spec.c = [](double p) { return p; };
  spec.e = 0.0;

  for (int s = 0; s < n_fields; ++s) {
    detail::fill_random(g, rng, f);
    detail::fill_random(g, rng, h);
    detail::fill_dirichlet_mirror(g, f);
    detail::fill_dirichlet_mirror(g, h);
    laplace_h(g, f, Lf);
    double lhs = inner(g, Lf, h);
    double rhs = -detail::face_grad_pair(g, f, h);
    double scale = std::abs(lhs) + std::abs(rhs) + 1e-300;
    e_ibp = std::max(e_ibp, std::abs(lhs - rhs) / scale);

    detail::fill_neumann_vertical(g, f);
    detail::fill_neumann_vertical(g, h);
    vertical_diffusion(g, f, spec, Df);
    vertical_diffusion(g, h, spec, Dh);
    double a = inner(g, Df, h), b = inner(g, f, Dh);
    e_adj = std::max(e_adj, std::abs(a - b) / (std::abs(a) + std::abs(b) + 1e-300));

    // Skew advection energy neutrality with wall-vanishing advecting velocity
    // (Dirichlet mirror ghosts) and zero top/bottom w faces.
    HorizontalVelocity vel(g);
    detail::fill_random(g, rng, vel.v1);
    detail::fill_random(g, rng, vel.v2);
    detail::fill_dirichlet_mirror(g, vel.v1);
    detail::fill_dirichlet_mirror(g, vel.v2);
    detail::fill_neumann_vertical(g, vel.v1);
    detail::fill_neumann_vertical(g, vel.v2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 1; k < g.np; ++k)  // interior faces only; ends stay zero
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) vel.w(i, j, k) = u(rng);
    detail::fill_random(g, rng, f);
    detail::fill_dirichlet_mirror(g, f);
    detail::fill_neumann_vertical(g, f);
    advect(g, f, vel, AdvectScheme::centered, Lf);
    double num = std::abs(inner(g, Lf, f));
    Norms nf = norms(g, f);
    double den = nf.L2 * nf.L2 + 1e-300;
    e_skew = std::max(e_skew, num / den);
  }

  std::vector<Check> out;
  out.push_back({"laplace_ibp_identity", e_ibp <= 1e-12, e_ibp, 1e-12});
  out.push_back({"vertical_diffusion_self_adjoint", e_adj <= 1e-12, e_adj, 1e-12});
  out.push_back({"skew_advection_energy_neutral", e_skew <= 1e-12, e_skew, 1e-12});
  return out;
}

inline std::vector<Check> verify_bihari_checks() {
  std::vector<Check> out;

  // G(0) = 0 exactly for the form whose antiderivative is arctan-based:
  // int_0^r ds/(1+s+s^2) = (2/sqrt3)[arctan((2r+1)/sqrt3) - pi/6].
  BihariG Gp(nonlinearity_fn(Nonlinearity::poly_1_s_s2));
  double g0 = std::abs(Gp.G(0.0));
  out.push_back({"G_at_zero_arctan_form", g0 <= 1e-12, g0, 1e-12});

  double closed_err = 0.0;
  for (double r : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    const double s3 = std::sqrt(3.0);
    double closed = (2.0 / s3) * (std::atan((2.0 * r + 1.0) / s3) - M_PI / 6.0);
    closed_err = std::max(closed_err, std::abs(Gp.G(r) - closed));
  }
  out.push_back({"G_matches_closed_form", closed_err <= 1e-12, closed_err, 1e-12});

  double inv_err = 0.0;
  for (Nonlinearity nl : {Nonlinearity::linear, Nonlinearity::poly_1_s_s2,
                          Nonlinearity::poly_1_s2_s4, Nonlinearity::arctan_1_s2}) {
    BihariG G(nonlinearity_fn(nl));
    for (double r = 0.0; r <= 10.0; r += 0.5)
      inv_err = std::max(inv_err, std::abs(G.Ginv(G.G(r)) - r));
  }
  out.push_back({"Ginv_of_G_identity", inv_err <= 1e-10, inv_err, 1e-10});

  // g == 1: G is the identity, so the bound collapses to f0 + integral.
  std::vector<double> times;
  for (int n = 0; n <= 20; ++n) times.push_back(0.1 * n);
  auto integral = [](double t) { return 0.7 * t; };
  BihariResult br = bihari_lasalle_bound(2.0, integral, Nonlinearity::linear, times);
  double lin_err = 0.0;
  for (size_t n = 0; n < times.size(); ++n)
    lin_err = std::max(lin_err, std::abs(br.bound[n] - (2.0 + 0.7 * times[n])));
  out.push_back({"g_equals_1_additive_gronwall", lin_err <= 1e-10, lin_err, 1e-10});
  return out;
}

}  // namespace mpe
