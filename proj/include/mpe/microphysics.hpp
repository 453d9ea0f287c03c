#pragma once

// Warm-rain source terms: saturation rate with temperature cutoff, clamp,
// regularized Heaviside switch, condensation/evaporation/autoconversion/
// collection, rain sedimentation, and assembly of the scalar tendencies.

#include <cmath>
#include <stdexcept>

#include "mpe/grid.hpp"
#include "mpe/params.hpp"

namespace mpe {

// Piecewise cutoff: identity on [T_*/2-floor range, T*], floored at T_*/2,
// ramped to 0 ahead of the hard zero branch at 2 T_*. The zero branch takes
// precedence when T* >= 2 T_*; defaults keep T* < 2 T_* so the map is
// continuous. Always >= 0.
inline double phi_cutoff(double T, const PhysParams& ph) {
  const double cut = 2.0 * ph.T_star_lo;
  if (T >= cut) return 0.0;
  if (ph.T_star_hi < cut && T > ph.T_star_hi)
    return ph.T_star_hi * (cut - T) / (cut - ph.T_star_hi);
  return std::max(0.5 * ph.T_star_lo, T);
}

// F = (q_vs phi / p) (L R - c_p R_v phi) / (c_p R_v phi^2 + q_vs L^2).
// Denominator >= q_vs L^2 > 0 always.
inline double saturation_rate_F(double T, double p, const PhysParams& ph) {
  const double phi = phi_cutoff(T, ph);
  const double num = (ph.q_vs * phi / p) * (ph.L * ph.R - ph.c_p * ph.R_v * phi);
  const double den = ph.c_p * ph.R_v * phi * phi + ph.q_vs * ph.L * ph.L;
  double F = num / den;
  if (ph.use_F_plus) F = std::max(F, 0.0);
  return F;
}

inline double tau_clamp(double q_r) {
  if (q_r < 0.0) return 0.0;
  if (q_r > 1.0) return 1.0;
  return q_r;
}

inline double regularized_heaviside(double r, double eps2) {
  if (r <= 0.0) return 0.0;
  if (r > eps2) return 1.0;
  return r / eps2;
}

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

// Face-averaged w at the cell center, then max(-w, 0).
inline double w_center(const FaceField& w, int i, int j, int k) {
  return 0.5 * (w(i, j, k) + w(i, j, k + 1));
}

inline void w_minus(const Grid& g, const FaceField& w, ScalarField3& out) {
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        out(i, j, k) = std::max(-w_center(w, i, j, k), 0.0);
}

// Pointwise exchange rates at one cell.
struct MicroRates {
  double C = 0;  // condensation, vapor -> cloud
  double E = 0;  // evaporation, rain -> vapor
  double A = 0;  // autoconversion, cloud -> rain
  double K = 0;  // collection, cloud -> rain
};

inline MicroRates micro_rates(double T, double p, double qv, double qc, double qr,
                              double wm, const PhysParams& ph) {
  MicroRates r;
  r.C = wm * saturation_rate_F(T, p, ph) * regularized_heaviside(qv - ph.q_vs, ph.eps2);
  r.E = ph.k3 * tau_clamp(qr) * positive_part(ph.q_vs - qv);
  r.A = ph.k1 * positive_part(qc - ph.q_crit);
  r.K = ph.k2 * qc * tau_clamp(qr);
  return r;
}

// V_t d/dp of the face flux (p/(R thetabar)) q_r, donor cell above each face,
// zero inflow at p0. Column integral of the tendency telescopes to the flux
// through the bottom face.
inline void sedimentation(const Grid& g, const ScalarField3& q_r,
                          const ReferenceProfiles& prof, const PhysParams& ph,
                          ScalarField3& out) {
  std::vector<double> cf(static_cast<size_t>(g.np) + 1);
  for (int k = 0; k <= g.np; ++k) {
    double pf = g.p_faces[static_cast<size_t>(k)];
    cf[static_cast<size_t>(k)] = pf / (ph.R * prof.theta_bar(pf));
  }
  const double idp = 1.0 / g.dp;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double flux_lo = 0.0;  // face k: zero inflow at p0
      for (int k = 0; k < g.np; ++k) {
        double flux_hi = cf[static_cast<size_t>(k + 1)] * q_r(i, j, k);
        out(i, j, k) = ph.V_t * (flux_hi - flux_lo) * idp;
        flux_lo = flux_hi;
      }
    }
}

struct SourceTendencies {
  ScalarField3 dT, dq_v, dq_c, dq_r;
  SourceTendencies() = default;
  explicit SourceTendencies(const Grid& g) : dT(g), dq_v(g), dq_c(g), dq_r(g) {}
};

// Right-hand sides of the scalar equations in T-form. f_T is the external
// thermal source (may be null). Advection and diffusion are applied by the
// stepper, not here.
inline void assemble_sources(const Grid& g, const ModelState& st, const PhysParams& ph,
                             const ReferenceProfiles& prof, const ScalarField3* f_T,
                             SourceTendencies& out) {
  sedimentation(g, st.q_r, prof, ph, out.dq_r);
  const double LoCp = ph.L / ph.c_p;
  for (int k = 0; k < g.np; ++k) {
    const double p = g.p(k);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double T = st.T(i, j, k), qv = st.q_v(i, j, k), qc = st.q_c(i, j, k),
               qr = st.q_r(i, j, k);
        double wc = w_center(st.vel.w, i, j, k);
        if (!std::isfinite(T) || !std::isfinite(qv) || !std::isfinite(qc) ||
            !std::isfinite(qr) || !std::isfinite(wc))
          throw std::runtime_error("assemble_sources: non-finite input field");
        MicroRates r = micro_rates(T, p, qv, qc, qr, std::max(-wc, 0.0), ph);
        double fT = f_T ? (*f_T)(i, j, k) : 0.0;
        out.dT(i, j, k) = (ph.R * T / (ph.c_p * p)) * wc + LoCp * (r.C - r.E) + fT;
        out.dq_v(i, j, k) = r.E - r.C;
        out.dq_c(i, j, k) = r.C - r.A - r.K;
        out.dq_r(i, j, k) += r.A + r.K - r.E;
      }
  }
}

}  // namespace mpe
