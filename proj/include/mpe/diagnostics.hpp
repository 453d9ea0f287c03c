#pragma once

// Diagnosed quantities: geopotential from hydrostatic balance, vertical
// velocity from continuity, and the barotropic projection enforcing the
// vertically-integrated divergence-free constraint.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpe/grid.hpp"
#include "mpe/operators.hpp"
#include "mpe/params.hpp"

namespace mpe {

struct CompatibilityError : std::runtime_error {
  explicit CompatibilityError(const std::string& m) : std::runtime_error(m) {}
};
struct NonConvergence : std::runtime_error {
  NonConvergence(int iters, double res)
      : std::runtime_error("elliptic solve stalled after " + std::to_string(iters) +
                           " iterations, residual " + std::to_string(res)),
        iterations(iters), residual(res) {}
  int iterations;
  double residual;
};

// Phi(x,y,p) = Phi_s(x,y) + integral_p^{p1} R T / p' dp', trapezoid in ln p.
// Exact for T constant or linear in ln p (face value extrapolated in ln p).
inline void hydrostatic_phi(const Grid& g, const ScalarField3& T, const Field2& Phi_s,
                            const PhysParams& ph, ScalarField3& Phi) {
  const int n = g.np;
  const double lp1 = std::log(g.p1);
  std::vector<double> lp(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) lp[static_cast<size_t>(k)] = std::log(g.p(k));
  const double r_extrap = (lp1 - lp[static_cast<size_t>(n - 1)]) /
                          (lp[static_cast<size_t>(n - 1)] - lp[static_cast<size_t>(n - 2)]);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double Ta = T(i, j, n - 1), Tb = T(i, j, n - 2);
      double T_face = Ta + (Ta - Tb) * r_extrap;
      double phi = Phi_s(i, j) +
                   ph.R * 0.5 * (T_face + Ta) * (lp1 - lp[static_cast<size_t>(n - 1)]);
      Phi(i, j, n - 1) = phi;
      for (int k = n - 2; k >= 0; --k) {
        phi += ph.R * 0.5 * (T(i, j, k) + T(i, j, k + 1)) *
               (lp[static_cast<size_t>(k + 1)] - lp[static_cast<size_t>(k)]);
        Phi(i, j, k) = phi;
      }
    }
}

// Centered horizontal divergence of v at a cell; lateral walls use the
// Dirichlet mirror (ghost = -interior) regardless of the stored ghosts so the
// discrete column integral of the divergence is exactly compatible.
inline double div_h_cell(const Grid& g, const ScalarField3& v1, const ScalarField3& v2,
                         int i, int j, int k) {
  double e = (i + 1 < g.nx) ? v1(i + 1, j, k) : -v1(g.nx - 1, j, k);
  double w = (i - 1 >= 0) ? v1(i - 1, j, k) : -v1(0, j, k);
  double nn = (j + 1 < g.ny) ? v2(i, j + 1, k) : -v2(i, g.ny - 1, k);
  double s = (j - 1 >= 0) ? v2(i, j - 1, k) : -v2(i, 0, k);
  return (e - w) / (2.0 * g.dx) + (nn - s) / (2.0 * g.dy);
}

inline double max_abs_v(const Grid& g, const HorizontalVelocity& vel) {
  double m = 0.0;
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        m = std::max(m, std::max(std::abs(vel.v1(i, j, k)), std::abs(vel.v2(i, j, k))));
  return m;
}

// w(p_face_k) = integral_{p_face_k}^{p1} div v dp', telescoping upward from
// w(p1) = 0 exactly. Throws if the leftover |w(p0)| exceeds the compatibility
// tolerance, which signals a missing or failed projection.
inline void diagnose_w(const Grid& g, HorizontalVelocity& vel, double compat_tol = 1e-8) {
  const double vscale = std::max(max_abs_v(g, vel), 1e-300);
  double worst = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      vel.w(i, j, g.np) = 0.0;
      double acc = 0.0;
      for (int k = g.np - 1; k >= 0; --k) {
        acc += g.dp * div_h_cell(g, vel.v1, vel.v2, i, j, k);
        vel.w(i, j, k) = acc;
      }
      worst = std::max(worst, std::abs(vel.w(i, j, 0)));
    }
  if (worst > compat_tol * vscale)
    throw CompatibilityError("diagnose_w: |w(p0)| = " + std::to_string(worst) +
                             " exceeds " + std::to_string(compat_tol * vscale));
}

// ---------------------------------------------------------------------------
// Barotropic projection.

struct ProjectionWorkspace {
  Field2 div, psi, r, z, pcg, Ap, gx, gy;
  double tolerance = 1e-11;  // relative residual
  int max_iterations = 50000;
  explicit ProjectionWorkspace(const Grid& g)
      : div(g), psi(g), r(g), z(g), pcg(g), Ap(g), gx(g), gy(g) {}
};

struct ProjectionInfo {
  int iterations = 0;
  double residual = 0.0;
  double correction_max = 0.0;
};

namespace detail {

// Centered gradient of psi with Neumann mirror at the walls.
inline void grad2_neumann(const Grid& g, const Field2& psi, Field2& gx, Field2& gy) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double e = (i + 1 < g.nx) ? psi(i + 1, j) : psi(g.nx - 1, j);
      double w = (i - 1 >= 0) ? psi(i - 1, j) : psi(0, j);
      double n = (j + 1 < g.ny) ? psi(i, j + 1) : psi(i, g.ny - 1);
      double s = (j - 1 >= 0) ? psi(i, j - 1) : psi(i, 0);
      gx(i, j) = (e - w) / (2.0 * g.dx);
      gy(i, j) = (n - s) / (2.0 * g.dy);
    }
}

// Centered divergence with Dirichlet mirror at the walls.
inline void div2_dirichlet(const Grid& g, const Field2& u, const Field2& v, Field2& out) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double e = (i + 1 < g.nx) ? u(i + 1, j) : -u(g.nx - 1, j);
      double w = (i - 1 >= 0) ? u(i - 1, j) : -u(0, j);
      double n = (j + 1 < g.ny) ? v(i, j + 1) : -v(i, g.ny - 1);
      double s = (j - 1 >= 0) ? v(i, j - 1) : -v(i, 0);
      out(i, j) = (e - w) / (2.0 * g.dx) + (n - s) / (2.0 * g.dy);
    }
}

// A psi = -div(grad psi): the composite of the same centered divergence and
// gradient used everywhere else, so the corrected divergence equals the CG
// residual exactly. SPD on the mean-zero subspace.
inline void apply_neg_divgrad(const Grid& g, const Field2& psi, Field2& gx, Field2& gy,
                              Field2& out) {
  grad2_neumann(g, psi, gx, gy);
  div2_dirichlet(g, gx, gy, out);
  for (auto& v : out.raw()) v = -v;
}

inline void remove_mean(Field2& f) {
  double m = 0.0;
  for (double v : f.raw()) m += v;
  m /= static_cast<double>(f.raw().size());
  for (double& v : f.raw()) v -= m;
}

inline double dot2(const Field2& a, const Field2& b) {
  double s = 0.0;
  const auto& ar = a.raw();
  const auto& br = b.raw();
  for (size_t n = 0; n < ar.size(); ++n) s += ar[n] * br[n];
  return s;
}

}  // namespace detail

// Solves div(grad psi) = div(vbar) and subtracts grad psi from v at every
// level; psi (mean-zero) is returned in ws.psi for Phi_s bookkeeping.
inline ProjectionInfo barotropic_project(const Grid& g, HorizontalVelocity& vel,
                                         ProjectionWorkspace& ws) {
  Field2 vbar1(g), vbar2(g);
  const double inp = 1.0 / g.np;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < g.np; ++k) {
        s1 += vel.v1(i, j, k);
        s2 += vel.v2(i, j, k);
      }
      vbar1(i, j) = s1 * inp;
      vbar2(i, j) = s2 * inp;
    }
  detail::div2_dirichlet(g, vbar1, vbar2, ws.div);
  // rhs of the SPD system (-divgrad) psi = -div(vbar); mean-free up to roundoff.
  Field2& b = ws.div;
  for (auto& v : b.raw()) v = -v;
  detail::remove_mean(b);

  const double bnorm = std::sqrt(detail::dot2(b, b));
  ProjectionInfo info;
  ws.psi.fill(0.0);
  if (bnorm == 0.0) return info;

  // Jacobi preconditioning: the diagonal of -div(grad) is constant here.
  const double diag = 0.5 / (g.dx * g.dx) + 0.5 / (g.dy * g.dy);
  Field2& r = ws.r;
  Field2& z = ws.z;
  Field2& p = ws.pcg;
  Field2& Ap = ws.Ap;
  r = b;
  z = r;
  for (auto& v : z.raw()) v /= diag;
  p = z;
  double rz = detail::dot2(r, z);
  double rnorm = bnorm;
  int it = 0;
  while (rnorm > ws.tolerance * bnorm) {
    if (++it > ws.max_iterations) throw NonConvergence(it, rnorm / bnorm);
    detail::apply_neg_divgrad(g, p, ws.gx, ws.gy, Ap);
    double pAp = detail::dot2(p, Ap);
    if (pAp <= 0.0) throw NonConvergence(it, rnorm / bnorm);
    double alpha = rz / pAp;
    for (size_t n = 0; n < ws.psi.raw().size(); ++n) {
      ws.psi.raw()[n] += alpha * p.raw()[n];
      r.raw()[n] -= alpha * Ap.raw()[n];
    }
    detail::remove_mean(r);
    rnorm = std::sqrt(detail::dot2(r, r));
    z = r;
    for (auto& v : z.raw()) v /= diag;
    double rz_new = detail::dot2(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (size_t n = 0; n < p.raw().size(); ++n) p.raw()[n] = z.raw()[n] + beta * p.raw()[n];
  }
  detail::remove_mean(ws.psi);
  info.iterations = it;
  info.residual = rnorm / bnorm;

  detail::grad2_neumann(g, ws.psi, ws.gx, ws.gy);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        vel.v1(i, j, k) -= ws.gx(i, j);
        vel.v2(i, j, k) -= ws.gy(i, j);
        info.correction_max = std::max(info.correction_max,
                                       std::max(std::abs(ws.gx(i, j)), std::abs(ws.gy(i, j))));
      }
  return info;
}

// Output diagnostic: potential temperature offset from the reference.
inline void compute_theta(const Grid& g, const ScalarField3& T, const PhysParams& ph,
                          const ReferenceProfiles& prof, ScalarField3& theta) {
  const double e = ph.R / ph.c_p;
  for (int k = 0; k < g.np; ++k) {
    double fac = std::pow(ph.p0 / g.p(k), e);
    double th = prof.theta_h(g.p(k));
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) theta(i, j, k) = T(i, j, k) * fac - th;
  }
}

}  // namespace mpe
