#pragma once

// Verification toolbox: per-step diagnostics records, energy-budget checking,
// maximum-principle bound monitoring, and the nonlinear (Bihari-LaSalle) and
// linear (Gronwall) integral-inequality bounds.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpe/diagnostics.hpp"
#include "mpe/grid.hpp"
#include "mpe/operators.hpp"

namespace mpe {

// Upper bounds for the scalar fields: max over initial interior data and all
// boundary target fields. The floor is 0 for moisture and for T.
struct ScalarBounds {
  double T_hi = 0, qv_hi = 0, qc_hi = 0, qr_hi = 0;
};

inline double max_interior(const Grid& g, const ScalarField3& f) {
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) m = std::max(m, f(i, j, k));
  return m;
}

inline double min_interior(const Grid& g, const ScalarField3& f) {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) m = std::min(m, f(i, j, k));
  return m;
}

inline ScalarBounds compute_bounds(const Grid& g, const ModelState& st, const BoundaryData& bd) {
  auto bmax = [&](const BoundaryData::Fxy& fn, double cval) {
    if (!fn) return cval;
    double m = cval;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) m = std::max(m, fn(g.x(i), g.y(j)));
    return m;
  };
  ScalarBounds b;
  b.T_hi = std::max(max_interior(g, st.T),
                    std::max(bmax(bd.T_star_fn, bd.T_star_surface_c), bmax(bd.T_bl_fn, bd.T_bl_c)));
  b.qv_hi = std::max(max_interior(g, st.q_v),
                     std::max(bmax(bd.q_star_v_fn, bd.q_star_v_c), bmax(bd.q_bl_v_fn, bd.q_bl_v_c)));
  b.qc_hi = std::max(max_interior(g, st.q_c),
                     std::max(bmax(bd.q_star_c_fn, bd.q_star_c_c), bmax(bd.q_bl_c_fn, bd.q_bl_c_c)));
  b.qr_hi = std::max(max_interior(g, st.q_r),
                     std::max(bmax(bd.q_star_r_fn, bd.q_star_r_c), bmax(bd.q_bl_r_fn, bd.q_bl_r_c)));
  return b;
}

struct DiagnosticsRecord {
  double time = 0, dt = 0;
  // velocity
  double v_L2 = 0, v_H1h = 0, v_H1full = 0;
  double gradv_energy = 0;       // Dirichlet energy matching the update stencil
  double dpv_L2 = 0, dpv_w = 0;  // vertical-shear norms (plain and weighted)
  double grad_dpv_L2 = 0;
  double v_max = 0;
  // scalars
  double T_L2 = 0, T_H1h = 0, T_min = 0, T_max = 0, dpT_w = 0, gradT_energy = 0;
  double qv_L2 = 0, qv_H1h = 0, qv_min = 0, qv_max = 0, gradqv_energy = 0;
  double qc_L2 = 0, qc_H1h = 0, qc_min = 0, qc_max = 0, gradqc_energy = 0;
  double qr_L2 = 0, qr_H1h = 0, qr_min = 0, qr_max = 0, gradqr_energy = 0;
  // residuals
  double continuity_residual = 0;  // max |div v + dw/dp|
  double w_top_residual = 0;       // max |w(p0)|
  double projection_residual = 0;
  int projection_iterations = 0;
  // bound monitor
  bool flag_T = false, flag_qv = false, flag_qc = false, flag_qr = false;
  double margin_T = 0, margin_qv = 0, margin_qc = 0, margin_qr = 0;  // >0 means violated

  bool any_flag() const { return flag_T || flag_qv || flag_qc || flag_qr; }
};

inline const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> cols = {
      "time", "dt", "v_L2", "v_H1h", "v_H1full", "gradv_energy", "dpv_L2", "dpv_w",
      "grad_dpv_L2", "v_max", "T_L2", "T_H1h", "T_min", "T_max", "dpT_w", "gradT_energy",
      "qv_L2", "qv_H1h", "qv_min", "qv_max", "gradqv_energy",
      "qc_L2", "qc_H1h", "qc_min", "qc_max", "gradqc_energy",
      "qr_L2", "qr_H1h", "qr_min", "qr_max", "gradqr_energy",
      "continuity_residual", "w_top_residual", "projection_residual", "projection_iterations",
      "flag_T", "flag_qv", "flag_qc", "flag_qr",
      "margin_T", "margin_qv", "margin_qc", "margin_qr"};
  return cols;
}

inline std::vector<double> diagnostics_values(const DiagnosticsRecord& r) {
  return {r.time, r.dt, r.v_L2, r.v_H1h, r.v_H1full, r.gradv_energy, r.dpv_L2, r.dpv_w,
          r.grad_dpv_L2, r.v_max, r.T_L2, r.T_H1h, r.T_min, r.T_max, r.dpT_w, r.gradT_energy,
          r.qv_L2, r.qv_H1h, r.qv_min, r.qv_max, r.gradqv_energy,
          r.qc_L2, r.qc_H1h, r.qc_min, r.qc_max, r.gradqc_energy,
          r.qr_L2, r.qr_H1h, r.qr_min, r.qr_max, r.gradqr_energy,
          r.continuity_residual, r.w_top_residual, r.projection_residual,
          static_cast<double>(r.projection_iterations),
          r.flag_T ? 1.0 : 0.0, r.flag_qv ? 1.0 : 0.0, r.flag_qc ? 1.0 : 0.0,
          r.flag_qr ? 1.0 : 0.0, r.margin_T, r.margin_qv, r.margin_qc, r.margin_qr};
}

// Tolerances of the discrete maximum-principle monitor.
constexpr double kBoundFloorTol = 1e-12;
constexpr double kBoundCeilTol = 1e-8;

inline DiagnosticsRecord record_diagnostics(const Grid& g, const ModelState& st,
                                            const PhysParams& ph, const ReferenceProfiles& prof,
                                            const ScalarBounds& bounds, double dt = 0.0,
                                            const ProjectionInfo* proj = nullptr) {
  DiagnosticsRecord r;
  r.time = st.time;
  r.dt = dt;

  Norms n1 = norms(g, st.vel.v1), n2 = norms(g, st.vel.v2);
  auto comb = [](double a, double b) { return std::sqrt(a * a + b * b); };
  r.v_L2 = comb(n1.L2, n2.L2);
  r.v_H1h = comb(n1.H1_horizontal, n2.H1_horizontal);
  r.v_H1full = comb(n1.H1_full, n2.H1_full);
  r.v_max = std::max(n1.Linf, n2.Linf);
  r.gradv_energy = grad_energy(g, st.vel.v1) + grad_energy(g, st.vel.v2);

  ScalarField3 scratch(g), scratch2(g);
  ddp(g, st.vel.v1, scratch);
  ddp(g, st.vel.v2, scratch2);
  Norms nd1 = norms(g, scratch), nd2 = norms(g, scratch2);
  r.dpv_L2 = comb(nd1.L2, nd2.L2);
  r.grad_dpv_L2 = comb(nd1.grad_h_seminorm, nd2.grad_h_seminorm);
  r.dpv_w = comb(weighted_norm_w(g, scratch, prof, ph), weighted_norm_w(g, scratch2, prof, ph));

  Norms nT = norms(g, st.T);
  r.T_L2 = nT.L2;
  r.T_H1h = nT.H1_horizontal;
  r.T_min = min_interior(g, st.T);
  r.T_max = max_interior(g, st.T);
  ddp(g, st.T, scratch);
  r.dpT_w = weighted_norm_w(g, scratch, prof, ph);
  r.gradT_energy = grad_energy(g, st.T);

  auto scal = [&](const ScalarField3& f, double& L2, double& H1h, double& mn, double& mx,
                  double& ge) {
    Norms n = norms(g, f);
    L2 = n.L2;
    H1h = n.H1_horizontal;
    mn = min_interior(g, f);
    mx = max_interior(g, f);
    ge = grad_energy(g, f);
  };
  scal(st.q_v, r.qv_L2, r.qv_H1h, r.qv_min, r.qv_max, r.gradqv_energy);
  scal(st.q_c, r.qc_L2, r.qc_H1h, r.qc_min, r.qc_max, r.gradqc_energy);
  scal(st.q_r, r.qr_L2, r.qr_H1h, r.qr_min, r.qr_max, r.gradqr_energy);

  // Continuity residual against the same divergence used by diagnose_w.
  double cres = 0.0, wtop = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      wtop = std::max(wtop, std::abs(st.vel.w(i, j, 0)));
      for (int k = 0; k < g.np; ++k) {
        double div = div_h_cell(g, st.vel.v1, st.vel.v2, i, j, k);
        double dwdp = (st.vel.w(i, j, k + 1) - st.vel.w(i, j, k)) / g.dp;
        cres = std::max(cres, std::abs(div + dwdp));
      }
    }
  r.continuity_residual = cres;
  r.w_top_residual = wtop;
  if (proj) {
    r.projection_residual = proj->residual;
    r.projection_iterations = proj->iterations;
  }

  auto margin = [](double mn, double mx, double hi) {
    return std::max(-(mn + kBoundFloorTol), mx - (hi + kBoundCeilTol));
  };
  r.margin_T = margin(r.T_min, r.T_max, bounds.T_hi);
  r.margin_qv = margin(r.qv_min, r.qv_max, bounds.qv_hi);
  r.margin_qc = margin(r.qc_min, r.qc_max, bounds.qc_hi);
  r.margin_qr = margin(r.qr_min, r.qr_max, bounds.qr_hi);
  r.flag_T = r.margin_T > 0;
  r.flag_qv = r.margin_qv > 0;
  r.flag_qc = r.margin_qc > 0;
  r.flag_qr = r.margin_qr > 0;
  return r;
}

// ---------------------------------------------------------------------------
// Energy budget: d/dt ||v||^2 + 2 mu ||grad v||^2 <= C_hat (||v||^2 + ||T||^2 + 1).

struct BudgetReport {
  bool pass = true;
  double max_margin = -std::numeric_limits<double>::infinity();
  int worst_index = -1;
};

inline BudgetReport energy_budget_check(const std::vector<DiagnosticsRecord>& series,
                                        double C_hat, double mu) {
  if (series.size() < 3) throw std::invalid_argument("energy_budget_check: series too short");
  BudgetReport rep;
  for (size_t n = 1; n + 1 < series.size(); ++n) {
    const auto& a = series[n - 1];
    const auto& m = series[n];
    const auto& b = series[n + 1];
    double dtc = b.time - a.time;
    if (dtc <= 0.0) continue;
    double dEdt = (b.v_L2 * b.v_L2 - a.v_L2 * a.v_L2) / dtc;
    double lhs = dEdt + 2.0 * mu * m.gradv_energy;
    double rhs = C_hat * (m.v_L2 * m.v_L2 + m.T_L2 * m.T_L2 + 1.0);
    double margin = lhs - rhs;
    if (margin > rep.max_margin) {
      rep.max_margin = margin;
      rep.worst_index = static_cast<int>(n);
    }
    if (margin > 0.0) rep.pass = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Bihari-LaSalle / Gronwall bounds.

enum class Nonlinearity { linear, poly_1_s_s2, poly_1_s2_s4, arctan_1_s2 };

inline std::function<double(double)> nonlinearity_fn(Nonlinearity n) {
  switch (n) {
    case Nonlinearity::linear: return [](double) { return 1.0; };
    case Nonlinearity::poly_1_s_s2: return [](double s) { return 1.0 + s + s * s; };
    case Nonlinearity::poly_1_s2_s4:
      return [](double s) { return 1.0 + s * s + s * s * s * s; };
    case Nonlinearity::arctan_1_s2: return [](double s) { return 1.0 + s * s; };
  }
  return [](double) { return 1.0; };
}

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

// G(r) = integral_0^r ds / g(s); G(0) = 0 exactly.
class BihariG {
 public:
  BihariG(std::function<double(double)> g, double quad_tol = 1e-13)
      : g_(std::move(g)), tol_(quad_tol) {}

  double G(double r) const {
    if (r == 0.0) return 0.0;
    return detail::integrate([this](double s) { return 1.0 / g_(s); }, 0.0, r, tol_);
  }

  // Bracketed inversion; returns NaN when y exceeds sup G (bound blow-up).
  double Ginv(double y) const {
    if (y <= 0.0) return 0.0;
    double hi = 1.0;
    double Ghi = G(hi);
    int grow = 0;
    while (Ghi < y) {
      hi *= 2.0;
      double Gnext = G(hi);
      // y above sup G: the antiderivative saturates and the bound blows up
      if (!(Gnext > Ghi * (1.0 + 1e-12)) || ++grow > 80)
        return std::numeric_limits<double>::quiet_NaN();
      Ghi = Gnext;
    }
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (G(mid) < y) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  std::function<double(double)> g_;
  double tol_;
};

struct BihariResult {
  std::vector<double> bound;  // NaN past blow-up
  double blowup_time = std::numeric_limits<double>::infinity();
};

// Bound u(t) <= Ginv(G(f0) + I(t)) on the given time grid, where I(t) is the
// accumulated integral of alpha*beta. Domain exhaustion is reported as the
// blow-up time of the bound, not an error.
inline BihariResult bihari_lasalle_bound(double f0,
                                         const std::function<double(double)>& alpha_beta_integral,
                                         Nonlinearity nl, const std::vector<double>& times) {
  BihariG G(nonlinearity_fn(nl));
  BihariResult res;
  res.bound.reserve(times.size());
  const double G0 = G.G(f0);
  for (double t : times) {
    double arg = G0 + alpha_beta_integral(t);
    double b = G.Ginv(arg);
    if (std::isnan(b) && res.blowup_time == std::numeric_limits<double>::infinity())
      res.blowup_time = t;
    res.bound.push_back(b);
  }
  return res;
}

// f0 * exp(cumulative trapezoid of the rate series).
inline std::vector<double> gronwall_bound(double f0, const std::vector<double>& times,
                                          const std::vector<double>& rates) {
  if (times.size() != rates.size())
    throw std::invalid_argument("gronwall_bound: size mismatch");
  std::vector<double> out(times.size());
  double acc = 0.0;
  for (size_t n = 0; n < times.size(); ++n) {
    if (n > 0) acc += 0.5 * (rates[n] + rates[n - 1]) * (times[n] - times[n - 1]);
    out[n] = f0 * std::exp(acc);
  }
  return out;
}

}  // namespace mpe
