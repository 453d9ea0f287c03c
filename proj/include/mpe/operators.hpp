#pragma once

// Discrete operators: horizontal gradient/Laplacian, vertical derivative,
// weighted vertical diffusion, advection stencils, norms, and the empirical
// trilinear-inequality ratio checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mpe/grid.hpp"
#include "mpe/params.hpp"

namespace mpe {

// ---------------------------------------------------------------------------
// Basic stencils. All read ghost cells; callers fill them first.

inline void grad_h(const Grid& g, const ScalarField3& f, ScalarField3& fx, ScalarField3& fy) {
  const double ix = 1.0 / (2.0 * g.dx), iy = 1.0 / (2.0 * g.dy);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        fx(i, j, k) = (f(i + 1, j, k) - f(i - 1, j, k)) * ix;
        fy(i, j, k) = (f(i, j + 1, k) - f(i, j - 1, k)) * iy;
      }
}

inline void laplace_h(const Grid& g, const ScalarField3& f, ScalarField3& out) {
  const double ix = 1.0 / (g.dx * g.dx), iy = 1.0 / (g.dy * g.dy);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        out(i, j, k) = (f(i + 1, j, k) - 2.0 * f(i, j, k) + f(i - 1, j, k)) * ix +
                       (f(i, j + 1, k) - 2.0 * f(i, j, k) + f(i, j - 1, k)) * iy;
}

inline void ddp(const Grid& g, const ScalarField3& f, ScalarField3& out) {
  const double ip = 1.0 / (2.0 * g.dp);
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        out(i, j, k) = (f(i, j, k + 1) - f(i, j, k - 1)) * ip;
}

// ---------------------------------------------------------------------------
// Weighted vertical diffusion.

struct DiffusionSpec {
  double mu = 1.0;   // horizontal coefficient (carried for completeness)
  double nu = 1.0;   // vertical coefficient
  std::function<double(double)> c;  // vertical weight c(p) > 0
  double e = 0.0;    // conjugation exponent: 0 plain, R/c_p conjugated
  double p0 = 0.0;   // reference pressure for the conjugation factor
};

inline DiffusionSpec diffusion_spec_T(const PhysParams& ph, const ReferenceProfiles& pr) {
  DiffusionSpec s;
  s.mu = ph.mu_T;
  s.nu = ph.nu_T;
  s.c = [g = ph.g, R = ph.R, pr](double p) { return g * p / (R * pr.T_bar(p)); };
  s.e = 0.0;
  s.p0 = ph.p0;
  return s;
}

inline DiffusionSpec diffusion_spec_theta(const PhysParams& ph, const ReferenceProfiles& pr) {
  DiffusionSpec s;
  s.mu = ph.mu_T;
  s.nu = ph.nu_T;
  s.c = [g = ph.g, R = ph.R, pr](double p) { return g * p / (R * pr.theta_bar(p)); };
  s.e = ph.R / ph.c_p;
  s.p0 = ph.p0;
  return s;
}

// nu * d/dp (c(p_face)^2 d/dp f) in conservative flux form; with e != 0 the
// operand is scaled by (p0/p)^e before and the result after differencing.
inline void vertical_diffusion(const Grid& g, const ScalarField3& f, const DiffusionSpec& spec,
                               ScalarField3& out) {
  const double idp2 = 1.0 / (g.dp * g.dp);
  std::vector<double> c2(static_cast<size_t>(g.np) + 1);
  for (int k = 0; k <= g.np; ++k) {
    double c = spec.c ? spec.c(g.p_faces[static_cast<size_t>(k)]) : 1.0;
    c2[static_cast<size_t>(k)] = c * c;
  }
  std::vector<double> scale(static_cast<size_t>(g.np) + 2, 1.0);  // index k+1
  if (spec.e != 0.0) {
    for (int k = -1; k <= g.np; ++k) {
      double p = g.p0 + (k + 0.5) * g.dp;  // ghost-extended cell centers
      scale[static_cast<size_t>(k + 1)] = std::pow(spec.p0 / p, spec.e);
    }
  }
  for (int k = 0; k < g.np; ++k) {
    const double s_m = scale[static_cast<size_t>(k)], s_0 = scale[static_cast<size_t>(k + 1)],
                 s_p = scale[static_cast<size_t>(k + 2)];
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double lo = f(i, j, k - 1) * s_m, mid = f(i, j, k) * s_0, hi = f(i, j, k + 1) * s_p;
        double flux_up = c2[static_cast<size_t>(k)] * (mid - lo);
        double flux_dn = c2[static_cast<size_t>(k + 1)] * (hi - mid);
        out(i, j, k) = spec.nu * s_0 * (flux_dn - flux_up) * idp2;
      }
  }
}

// ---------------------------------------------------------------------------
// Advection: returns the tendency -(v . grad f + w df/dp).

enum class AdvectScheme { centered, upwind };

inline void advect(const Grid& g, const ScalarField3& f, const HorizontalVelocity& vel,
                   AdvectScheme scheme, ScalarField3& out) {
  const ScalarField3& v1 = vel.v1;
  const ScalarField3& v2 = vel.v2;
  const FaceField& w = vel.w;
  if (scheme == AdvectScheme::centered) {
    // Skew form: 0.5*(div(v f) + v . grad f) horizontally; flux form minus
    // 0.5*f*dw/dp vertically. Exactly energy-neutral when the advecting
    // velocity vanishes at the walls and w vanishes on the p-faces.
    const double cx = 1.0 / (4.0 * g.dx), cy = 1.0 / (4.0 * g.dy), cp = 1.0 / (2.0 * g.dp);
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          double ax = (v1(i + 1, j, k) * f(i + 1, j, k) - v1(i - 1, j, k) * f(i - 1, j, k) +
                       v1(i, j, k) * (f(i + 1, j, k) - f(i - 1, j, k))) * cx;
          double ay = (v2(i, j + 1, k) * f(i, j + 1, k) - v2(i, j - 1, k) * f(i, j - 1, k) +
                       v2(i, j, k) * (f(i, j + 1, k) - f(i, j - 1, k))) * cy;
          double wlo = w(i, j, k), whi = w(i, j, k + 1);
          double ap = (whi * (f(i, j, k + 1) + f(i, j, k)) -
                       wlo * (f(i, j, k) + f(i, j, k - 1))) * cp -
                      f(i, j, k) * (whi - wlo) * cp;
          out(i, j, k) = -(ax + ay + ap);
        }
  } else {
    const double ix = 1.0 / g.dx, iy = 1.0 / g.dy, ipp = 1.0 / g.dp;
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          double u = v1(i, j, k), v = v2(i, j, k);
          double wc = 0.5 * (w(i, j, k) + w(i, j, k + 1));
          double ax = u >= 0.0 ? u * (f(i, j, k) - f(i - 1, j, k)) * ix
                               : u * (f(i + 1, j, k) - f(i, j, k)) * ix;
          double ay = v >= 0.0 ? v * (f(i, j, k) - f(i, j - 1, k)) * iy
                               : v * (f(i, j + 1, k) - f(i, j, k)) * iy;
          double ap = wc >= 0.0 ? wc * (f(i, j, k) - f(i, j, k - 1)) * ipp
                                : wc * (f(i, j, k + 1) - f(i, j, k)) * ipp;
          out(i, j, k) = -(ax + ay + ap);
        }
  }
}

// ---------------------------------------------------------------------------
// Inner products and norms (midpoint cell quadrature).

inline double inner(const Grid& g, const ScalarField3& a, const ScalarField3& b) {
  double s = 0.0;
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) s += a(i, j, k) * b(i, j, k);
  return s * g.cell_volume();
}

struct Norms {
  double L2 = 0, H1_horizontal = 0, H1_full = 0, Linf = 0;
  double grad_h_seminorm = 0, ddp_seminorm = 0;
};

// Norm gradients use interior stencils only (centered inside, one-sided at the
// first/last planes) so they are well defined without a ghost fill.
inline Norms norms(const Grid& g, const ScalarField3& f) {
  Norms n;
  double s2 = 0, sg = 0, sp = 0, mx = 0;
  auto dpx = [&](int i, int j, int k) {
    if (i == 0) return (f(1, j, k) - f(0, j, k)) / g.dx;
    if (i == g.nx - 1) return (f(i, j, k) - f(i - 1, j, k)) / g.dx;
    return (f(i + 1, j, k) - f(i - 1, j, k)) / (2.0 * g.dx);
  };
  auto dpy = [&](int i, int j, int k) {
    if (j == 0) return (f(i, 1, k) - f(i, 0, k)) / g.dy;
    if (j == g.ny - 1) return (f(i, j, k) - f(i, j - 1, k)) / g.dy;
    return (f(i, j + 1, k) - f(i, j - 1, k)) / (2.0 * g.dy);
  };
  auto dpp = [&](int i, int j, int k) {
    if (k == 0) return (f(i, j, 1) - f(i, j, 0)) / g.dp;
    if (k == g.np - 1) return (f(i, j, k) - f(i, j, k - 1)) / g.dp;
    return (f(i, j, k + 1) - f(i, j, k - 1)) / (2.0 * g.dp);
  };
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double v = f(i, j, k);
        s2 += v * v;
        double gx = dpx(i, j, k), gy = dpy(i, j, k), gp = dpp(i, j, k);
        sg += gx * gx + gy * gy;
        sp += gp * gp;
        mx = std::max(mx, std::abs(v));
      }
  double dV = g.cell_volume();
  n.L2 = std::sqrt(s2 * dV);
  n.grad_h_seminorm = std::sqrt(sg * dV);
  n.ddp_seminorm = std::sqrt(sp * dV);
  n.H1_horizontal = std::sqrt((s2 + sg) * dV);
  n.H1_full = std::sqrt((s2 + sg + sp) * dV);
  n.Linf = mx;
  return n;
}

// || (g p / (R thetabar)) f ||_{L2}
inline double weighted_norm_w(const Grid& g, const ScalarField3& f,
                              const ReferenceProfiles& prof, const PhysParams& ph) {
  double s = 0.0;
  for (int k = 0; k < g.np; ++k) {
    double wgt = ph.g * g.p(k) / (ph.R * prof.theta_bar(g.p(k)));
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double v = wgt * f(i, j, k);
        s += v * v;
      }
  }
  return std::sqrt(s * g.cell_volume());
}

// Dirichlet energy consistent with laplace_h and the current ghost fill:
// -<laplace_h f, f>. The momentum-energy budget uses this so the 5% check
// measures time-integration error only.
inline double grad_energy(const Grid& g, const ScalarField3& f) {
  ScalarField3 lap(f);
  // reuse shape; compute into scratch
  laplace_h(g, f, lap);
  return -inner(g, lap, f);
}

// ---------------------------------------------------------------------------
// Empirical trilinear-inequality ratios on random band-limited fields.

enum class TrilinearKind { HHP, CLT };

struct TrilinearReport {
  double max_ratio = 0.0;
  int samples = 0;
};

namespace detail {

// Random low-mode field vanishing on the lateral walls, Neumann in p.
inline void random_band_limited(const Grid& g, std::mt19937& rng, ScalarField3& f) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_int_distribution<int> mode(1, 3);
  f.fill(0.0);
  const double P = g.p1 - g.p0;
  for (int m = 0; m < 3; ++m) {
    double a = amp(rng);
    int kx = mode(rng), ky = mode(rng), kp = mode(rng) - 1;
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          f(i, j, k) += a * std::sin(kx * M_PI * g.x(i) / g.Lx) *
                        std::sin(ky * M_PI * g.y(j) / g.Ly) *
                        std::cos(kp * M_PI * (g.p(k) - g.p0) / P);
  }
}

}  // namespace detail

inline TrilinearReport trilinear_ratio_check(const Grid& g, TrilinearKind kind, int samples,
                                             unsigned seed) {
  TrilinearReport rep;
  rep.samples = samples;
  std::mt19937 rng(seed);
  ScalarField3 f(g), h(g), q(g);
  for (int s = 0; s < samples; ++s) {
    detail::random_band_limited(g, rng, f);
    detail::random_band_limited(g, rng, h);
    detail::random_band_limited(g, rng, q);
    Norms nf = norms(g, f), nh = norms(g, h), nq = norms(g, q);
    double ratio = 0.0;
    if (kind == TrilinearKind::HHP) {
      double lhs = 0.0;
      for (int k = 0; k < g.np; ++k)
        for (int j = 0; j < g.ny; ++j)
          for (int i = 0; i < g.nx; ++i)
            lhs += std::abs(f(i, j, k)) * std::abs(h(i, j, k)) * std::abs(q(i, j, k));
      lhs *= g.cell_volume();
      double rhs = std::sqrt(nf.grad_h_seminorm * nf.L2) * std::sqrt(nh.grad_h_seminorm * nh.L2) *
                   (std::sqrt(nq.L2 * nq.ddp_seminorm) + nq.L2);
      if (rhs > 0.0) ratio = lhs / rhs;
    } else {
      // Vertically integrate f and h*q, then take the horizontal integral.
      double lhs = 0.0;
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          double If = 0.0, Ihq = 0.0;
          for (int k = 0; k < g.np; ++k) {
            If += f(i, j, k) * g.dp;
            Ihq += h(i, j, k) * q(i, j, k) * g.dp;
          }
          lhs += If * Ihq * g.dx * g.dy;
        }
      lhs = std::abs(lhs);
      auto half = [](const Norms& n) {
        return std::sqrt(n.L2) * (std::sqrt(n.L2) + std::sqrt(n.grad_h_seminorm));
      };
      double rhs1 = half(nf) * nh.L2 * half(nq);
      double rhs2 = nf.L2 * half(nh) * half(nq);
      double rhs = std::min(rhs1, rhs2);
      if (rhs > 0.0) ratio = lhs / rhs;
    }
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

}  // namespace mpe
