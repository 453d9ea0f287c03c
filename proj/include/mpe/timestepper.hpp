#pragma once

// IMEX time stepping: explicit advection/pressure-gradient/horizontal
// diffusion/sources, exact Coriolis rotation, pointwise semi-implicit
// microphysics exchanges, per-column implicit vertical diffusion, barotropic
// projection, and the run loop.

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mpe/analysis.hpp"
#include "mpe/diagnostics.hpp"
#include "mpe/grid.hpp"
#include "mpe/io.hpp"
#include "mpe/microphysics.hpp"
#include "mpe/operators.hpp"
#include "mpe/params.hpp"
#include "mpe/scenarios.hpp"

namespace mpe {

struct StepperConfig {
  enum class Scheme { euler, rk2 };
  Scheme scheme = Scheme::rk2;
  double cfl_safety = 0.5;
  double fixed_dt = 0.0;  // 0: derive from stable_dt each step
  bool semi_implicit_sinks = true;
  int threads = 1;

  static StepperConfig from_run(const RunConfig& r) {
    StepperConfig s;
    s.scheme = r.scheme == "euler" ? Scheme::euler : Scheme::rk2;
    s.cfl_safety = r.cfl_safety;
    s.fixed_dt = r.dt;
    s.threads = r.threads;
    return s;
  }
};

namespace detail {

inline double robin_ghost(double f_in, double target, double h) {
  // Face-centered second-order Robin fill: (f_g - f_in)/h = target - (f_g + f_in)/2
  return (2.0 * h * target + (2.0 - h) * f_in) / (2.0 + h);
}

// Runs tasks on up to `threads` workers; task order is fixed so results are
// deterministic regardless of the thread count (no shared reductions).
inline void run_tasks(std::vector<std::function<void()>>& tasks, int threads) {
  if (threads <= 1 || tasks.size() <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<size_t> next{0};
  int nw = std::min<int>(threads, static_cast<int>(tasks.size()));
  for (int w = 0; w < nw; ++w)
    pool.emplace_back([&] {
      for (;;) {
        size_t n = next.fetch_add(1);
        if (n >= tasks.size()) return;
        tasks[n]();
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// (I - dt nu D) f = f per column, D the flux-form vertical diffusion with
// squared face coefficients c2; zero flux at p0, Robin target (or zero flux)
// at p1. Thomas algorithm; the matrix is a diagonally dominant M-matrix.
inline void implicit_vertical_solve(const Grid& g, ScalarField3& f, double nu,
                                    const std::vector<double>& c2, double dt, bool robin,
                                    const std::function<double(double, double)>& target_fn,
                                    double target_c) {
  if (nu == 0.0 || dt == 0.0) return;
  const int np = g.np;
  const double r = dt * nu / (g.dp * g.dp);
  const double rb = dt * nu / g.dp;
  std::vector<double> a(np), b(np), c(np), d(np);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      for (int k = 0; k < np; ++k) {
        double lo = k > 0 ? r * c2[static_cast<size_t>(k)] : 0.0;
        double hi = k < np - 1 ? r * c2[static_cast<size_t>(k + 1)] : 0.0;
        a[static_cast<size_t>(k)] = -lo;
        c[static_cast<size_t>(k)] = -hi;
        b[static_cast<size_t>(k)] = 1.0 + lo + hi;
        d[static_cast<size_t>(k)] = f(i, j, k);
      }
      if (robin) {
        double tgt = target_fn ? target_fn(g.x(i), g.y(j)) : target_c;
        double e = rb * c2[static_cast<size_t>(np)];
        b[static_cast<size_t>(np - 1)] += e;
        d[static_cast<size_t>(np - 1)] += e * tgt;
      }
      for (int k = 1; k < np; ++k) {
        double m = a[static_cast<size_t>(k)] / b[static_cast<size_t>(k - 1)];
        b[static_cast<size_t>(k)] -= m * c[static_cast<size_t>(k - 1)];
        d[static_cast<size_t>(k)] -= m * d[static_cast<size_t>(k - 1)];
      }
      f(i, j, np - 1) = d[static_cast<size_t>(np - 1)] / b[static_cast<size_t>(np - 1)];
      for (int k = np - 2; k >= 0; --k)
        f(i, j, k) = (d[static_cast<size_t>(k)] -
                      c[static_cast<size_t>(k)] * f(i, j, k + 1)) /
                     b[static_cast<size_t>(k)];
    }
}

// Ghost fill realizing the boundary conditions; top/bottom first, lateral
// last so shared ghosts carry the lateral condition.
inline void apply_boundaries(const Grid& g, ModelState& st, const BoundaryData& bd) {
  const int nx = g.nx, ny = g.ny, np = g.np;
  // Top/bottom ghosts.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double x = g.x(i), y = g.y(j);
      st.vel.v1(i, j, -1) = st.vel.v1(i, j, 0);
      st.vel.v1(i, j, np) = st.vel.v1(i, j, np - 1);
      st.vel.v2(i, j, -1) = st.vel.v2(i, j, 0);
      st.vel.v2(i, j, np) = st.vel.v2(i, j, np - 1);
      st.T(i, j, -1) = st.T(i, j, 0);
      st.T(i, j, np) = detail::robin_ghost(st.T(i, j, np - 1), bd.T_star_surface(x, y), g.dp);
      st.q_v(i, j, -1) = st.q_v(i, j, 0);
      st.q_v(i, j, np) = detail::robin_ghost(st.q_v(i, j, np - 1), bd.q_star_v(x, y), g.dp);
      st.q_c(i, j, -1) = st.q_c(i, j, 0);
      st.q_c(i, j, np) = detail::robin_ghost(st.q_c(i, j, np - 1), bd.q_star_c(x, y), g.dp);
      st.q_r(i, j, -1) = st.q_r(i, j, 0);
      st.q_r(i, j, np) = detail::robin_ghost(st.q_r(i, j, np - 1), bd.q_star_r(x, y), g.dp);
    }
  // Lateral ghosts, covering the shared k-ghost edges.
  auto lateral = [&](ScalarField3& f, const BoundaryData::Fxy& fn, double cval, bool dirichlet) {
    for (int k = -1; k <= np; ++k) {
      for (int j = 0; j < ny; ++j) {
        double yb = g.y(j);
        if (dirichlet) {
          f(-1, j, k) = -f(0, j, k);
          f(nx, j, k) = -f(nx - 1, j, k);
        } else {
          double tw = fn ? fn(0.0, yb) : cval;
          double te = fn ? fn(g.Lx, yb) : cval;
          f(-1, j, k) = detail::robin_ghost(f(0, j, k), tw, g.dx);
          f(nx, j, k) = detail::robin_ghost(f(nx - 1, j, k), te, g.dx);
        }
      }
      for (int i = 0; i < nx; ++i) {
        double xb = g.x(i);
        if (dirichlet) {
          f(i, -1, k) = -f(i, 0, k);
          f(i, ny, k) = -f(i, ny - 1, k);
        } else {
          double ts = fn ? fn(xb, 0.0) : cval;
          double tn = fn ? fn(xb, g.Ly) : cval;
          f(i, -1, k) = detail::robin_ghost(f(i, 0, k), ts, g.dy);
          f(i, ny, k) = detail::robin_ghost(f(i, ny - 1, k), tn, g.dy);
        }
      }
    }
  };
  lateral(st.vel.v1, nullptr, 0.0, true);
  lateral(st.vel.v2, nullptr, 0.0, true);
  lateral(st.T, bd.T_bl_fn, bd.T_bl_c, false);
  lateral(st.q_v, bd.q_bl_v_fn, bd.q_bl_v_c, false);
  lateral(st.q_c, bd.q_bl_c_fn, bd.q_bl_c_c, false);
  lateral(st.q_r, bd.q_bl_r_fn, bd.q_bl_r_c, false);
}

// dt = safety * min(advective, horizontal-diffusion, sedimentation limits).
inline double stable_dt(const Grid& g, const ModelState& st, const PhysParams& ph,
                        const ReferenceProfiles& prof, double safety, bool* warned = nullptr) {
  double v1m = 0, v2m = 0, wm = 0;
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        v1m = std::max(v1m, std::abs(st.vel.v1(i, j, k)));
        v2m = std::max(v2m, std::abs(st.vel.v2(i, j, k)));
      }
  for (int k = 0; k <= g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) wm = std::max(wm, std::abs(st.vel.w(i, j, k)));
  const double inf = std::numeric_limits<double>::infinity();
  double lim = inf;
  if (v1m > 0) lim = std::min(lim, g.dx / v1m);
  if (v2m > 0) lim = std::min(lim, g.dy / v2m);
  if (wm > 0) lim = std::min(lim, g.dp / wm);
  double mu = std::max(ph.mu_v, std::max(ph.mu_T, ph.mu_q));
  if (mu > 0) lim = std::min(lim, 0.5 / (mu * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy))));
  if (ph.V_t > 0) {
    double cmax = 0;
    for (double pf : g.p_faces) cmax = std::max(cmax, pf / (ph.R * prof.theta_bar(pf)));
    lim = std::min(lim, g.dp / (ph.V_t * cmax));
  }
  if (warned) *warned = false;
  if (!std::isfinite(lim)) {
    if (warned) *warned = true;
    return 1.0;  // quiescent state: fall back to a unit step
  }
  return safety * lim;
}

struct Tendencies {
  ScalarField3 v1, v2, T, q_v, q_c, q_r;
  Tendencies() = default;
  explicit Tendencies(const Grid& g) : v1(g), v2(g), T(g), q_v(g), q_c(g), q_r(g) {}
};

class Stepper {
 public:
  Stepper(const Grid& g, const PhysParams& ph, const ReferenceProfiles& prof,
          const BoundaryData& bd, const StepperConfig& sc)
      : g_(g), ph_(ph), prof_(prof), bd_(bd), sc_(sc), ws_(g),
        tend_(g), tend2_(g), prov_(g), phi_(g),
        scr_v1_(g), scr_v2_(g), scr_T_(g), scr_qv_(g), scr_qc_(g), scr_qr_(g), scr_sed_(g),
        c2_scalar_(static_cast<size_t>(g.np) + 1), c2_theta_(static_cast<size_t>(g.np) + 1) {
    for (int k = 0; k <= g.np; ++k) {
      double pf = g.p_faces[static_cast<size_t>(k)];
      double cT = ph.g * pf / (ph.R * prof.T_bar(pf));
      double cth = ph.g * pf / (ph.R * prof.theta_bar(pf));
      c2_scalar_[static_cast<size_t>(k)] = cT * cT;
      c2_theta_[static_cast<size_t>(k)] = cth * cth;
    }
  }

  void set_f_T(const ScalarField3& f) { f_T_ = f; has_f_T_ = true; }
  ProjectionWorkspace& workspace() { return ws_; }

  // Project, diagnose w, fill ghosts; call once before stepping.
  ProjectionInfo initialize(ModelState& st) {
    apply_boundaries(g_, st, bd_);
    ProjectionInfo info = barotropic_project(g_, st.vel, ws_);
    diagnose_w(g_, st.vel);
    apply_boundaries(g_, st, bd_);
    hydrostatic_phi(g_, st.T, st.Phi_s, ph_, st.Phi);
    return info;
  }

  double stable_dt(const ModelState& st, bool* warned = nullptr) const {
    return mpe::stable_dt(g_, st, ph_, prof_, sc_.cfl_safety, warned);
  }

  // One IMEX step; state must have valid ghosts, projection, and w.
  ProjectionInfo step(ModelState& st, double dt) {
    explicit_tendencies(st, tend_);
    if (sc_.scheme == StepperConfig::Scheme::rk2) {
      copy_state(st, prov_);
      advance(prov_, tend_, dt);
      apply_boundaries(g_, prov_, bd_);
      barotropic_project(g_, prov_.vel, ws_);
      diagnose_w(g_, prov_.vel);
      apply_boundaries(g_, prov_, bd_);
      explicit_tendencies(prov_, tend2_);
      combine_advance(st, tend_, tend2_, dt);
    } else {
      advance(st, tend_, dt);
    }
    rotate_coriolis(st, dt);
    micro_exchange(st, dt);
    implicit_vertical(st, dt);
    ProjectionInfo info = barotropic_project(g_, st.vel, ws_);
    accumulate_phi_s(st, dt);
    diagnose_w(g_, st.vel);
    apply_boundaries(g_, st, bd_);
    st.time += dt;
    check_finite(st);
    hydrostatic_phi(g_, st.T, st.Phi_s, ph_, st.Phi);
    return info;
  }

 private:
  void copy_state(const ModelState& a, ModelState& b) {
    b.vel.v1 = a.vel.v1;
    b.vel.v2 = a.vel.v2;
    b.vel.w = a.vel.w;
    b.T = a.T;
    b.q_v = a.q_v;
    b.q_c = a.q_c;
    b.q_r = a.q_r;
    b.Phi_s = a.Phi_s;
    b.time = a.time;
  }

  static void axpy_interior(const Grid& g, double dt, const ScalarField3& t, ScalarField3& f) {
    for (int k = 0; k < g.np; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f(i, j, k) += dt * t(i, j, k);
  }

  void advance(ModelState& st, const Tendencies& t, double dt) {
    axpy_interior(g_, dt, t.v1, st.vel.v1);
    axpy_interior(g_, dt, t.v2, st.vel.v2);
    axpy_interior(g_, dt, t.T, st.T);
    axpy_interior(g_, dt, t.q_v, st.q_v);
    axpy_interior(g_, dt, t.q_c, st.q_c);
    axpy_interior(g_, dt, t.q_r, st.q_r);
  }

  // Heun combination: s += dt/2 (t1 + t2).
  void combine_advance(ModelState& st, const Tendencies& t1, const Tendencies& t2, double dt) {
    auto comb = [&](const ScalarField3& a, const ScalarField3& b, ScalarField3& f) {
      for (int k = 0; k < g_.np; ++k)
        for (int j = 0; j < g_.ny; ++j)
          for (int i = 0; i < g_.nx; ++i)
            f(i, j, k) += 0.5 * dt * (a(i, j, k) + b(i, j, k));
    };
    comb(t1.v1, t2.v1, st.vel.v1);
    comb(t1.v2, t2.v2, st.vel.v2);
    comb(t1.T, t2.T, st.T);
    comb(t1.q_v, t2.q_v, st.q_v);
    comb(t1.q_c, t2.q_c, st.q_c);
    comb(t1.q_r, t2.q_r, st.q_r);
  }

  // Ghosts by linear extrapolation: Phi is diagnosed, not boundary-conditioned.
  void fill_extrapolated_ghosts(ScalarField3& f) {
    const int nx = g_.nx, ny = g_.ny, np = g_.np;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        f(i, j, -1) = 2.0 * f(i, j, 0) - f(i, j, 1);
        f(i, j, np) = 2.0 * f(i, j, np - 1) - f(i, j, np - 2);
      }
    for (int k = -1; k <= np; ++k) {
      for (int j = 0; j < ny; ++j) {
        f(-1, j, k) = 2.0 * f(0, j, k) - f(1, j, k);
        f(nx, j, k) = 2.0 * f(nx - 1, j, k) - f(nx - 2, j, k);
      }
      for (int i = 0; i < nx; ++i) {
        f(i, -1, k) = 2.0 * f(i, 0, k) - f(i, 1, k);
        f(i, ny, k) = 2.0 * f(i, ny - 1, k) - f(i, ny - 2, k);
      }
    }
  }

  void explicit_tendencies(const ModelState& st, Tendencies& out) {
    hydrostatic_phi(g_, st.T, st.Phi_s, ph_, phi_);
    fill_extrapolated_ghosts(phi_);
    std::vector<std::function<void()>> tasks;
    tasks.push_back([&] {
      advect(g_, st.vel.v1, st.vel, AdvectScheme::centered, out.v1);
      laplace_h(g_, st.vel.v1, scr_v1_);
      for (int k = 0; k < g_.np; ++k)
        for (int j = 0; j < g_.ny; ++j)
          for (int i = 0; i < g_.nx; ++i)
            out.v1(i, j, k) += ph_.mu_v * scr_v1_(i, j, k) -
                               (phi_(i + 1, j, k) - phi_(i - 1, j, k)) / (2.0 * g_.dx);
    });
    tasks.push_back([&] {
      advect(g_, st.vel.v2, st.vel, AdvectScheme::centered, out.v2);
      laplace_h(g_, st.vel.v2, scr_v2_);
      for (int k = 0; k < g_.np; ++k)
        for (int j = 0; j < g_.ny; ++j)
          for (int i = 0; i < g_.nx; ++i)
            out.v2(i, j, k) += ph_.mu_v * scr_v2_(i, j, k) -
                               (phi_(i, j + 1, k) - phi_(i, j - 1, k)) / (2.0 * g_.dy);
    });
    tasks.push_back([&] {
      advect(g_, st.T, st.vel, AdvectScheme::centered, out.T);
      laplace_h(g_, st.T, scr_T_);
      for (int k = 0; k < g_.np; ++k) {
        double ip = 1.0 / g_.p(k);
        for (int j = 0; j < g_.ny; ++j)
          for (int i = 0; i < g_.nx; ++i) {
            double wc = w_center(st.vel.w, i, j, k);
            out.T(i, j, k) += ph_.mu_T * scr_T_(i, j, k) +
                              (ph_.R * st.T(i, j, k) / ph_.c_p) * ip * wc +
                              (has_f_T_ ? f_T_(i, j, k) : 0.0);
          }
      }
    });
    tasks.push_back([&] {
      advect(g_, st.q_v, st.vel, AdvectScheme::upwind, out.q_v);
      laplace_h(g_, st.q_v, scr_qv_);
      axpy_interior(g_, ph_.mu_q, scr_qv_, out.q_v);
    });
    tasks.push_back([&] {
      advect(g_, st.q_c, st.vel, AdvectScheme::upwind, out.q_c);
      laplace_h(g_, st.q_c, scr_qc_);
      axpy_interior(g_, ph_.mu_q, scr_qc_, out.q_c);
    });
    tasks.push_back([&] {
      advect(g_, st.q_r, st.vel, AdvectScheme::upwind, out.q_r);
      laplace_h(g_, st.q_r, scr_qr_);
      axpy_interior(g_, ph_.mu_q, scr_qr_, out.q_r);
      sedimentation(g_, st.q_r, prof_, ph_, scr_sed_);
      axpy_interior(g_, 1.0, scr_sed_, out.q_r);
    });
    detail::run_tasks(tasks, sc_.threads);
  }

  void rotate_coriolis(ModelState& st, double dt) {
    if (ph_.f0 == 0.0) return;
    const double c = std::cos(ph_.f0 * dt), s = std::sin(ph_.f0 * dt);
    for (int k = 0; k < g_.np; ++k)
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i) {
          double a = st.vel.v1(i, j, k), b = st.vel.v2(i, j, k);
          st.vel.v1(i, j, k) = c * a + s * b;
          st.vel.v2(i, j, k) = -s * a + c * b;
        }
  }

  // Pairwise exchanges with the sink evaluated implicitly in the owner, so
  // transferred amounts never exceed the available mass.
  void micro_exchange(ModelState& st, double dt) {
    auto amount = [&](double rate, double avail) {
      if (rate <= 0.0 || avail <= 0.0) return 0.0;
      if (!sc_.semi_implicit_sinks) return std::min(dt * rate, avail);
      return dt * rate / (1.0 + dt * rate / avail);
    };
    const double LoCp = ph_.L / ph_.c_p;
    for (int k = 0; k < g_.np; ++k) {
      double p = g_.p(k);
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i) {
          double T = st.T(i, j, k), qv = st.q_v(i, j, k), qc = st.q_c(i, j, k),
                 qr = st.q_r(i, j, k);
          double wm = std::max(-w_center(st.vel.w, i, j, k), 0.0);
          double aC = amount(wm * saturation_rate_F(T, p, ph_) *
                                 regularized_heaviside(qv - ph_.q_vs, ph_.eps2),
                             qv);
          qv -= aC;
          qc += aC;
          double aAK = amount(ph_.k1 * positive_part(qc - ph_.q_crit) +
                                  ph_.k2 * qc * tau_clamp(qr),
                              qc);
          qc -= aAK;
          qr += aAK;
          double aE = amount(ph_.k3 * tau_clamp(qr) * positive_part(ph_.q_vs - qv), qr);
          qr -= aE;
          qv += aE;
          st.T(i, j, k) = T + LoCp * (aC - aE);
          st.q_v(i, j, k) = qv;
          st.q_c(i, j, k) = qc;
          st.q_r(i, j, k) = qr;
        }
    }
  }

  void implicit_vertical(ModelState& st, double dt) {
    implicit_vertical_solve(g_, st.T, ph_.nu_T, c2_scalar_, dt, true, bd_.T_star_fn,
                            bd_.T_star_surface_c);
    implicit_vertical_solve(g_, st.q_v, ph_.nu_q, c2_scalar_, dt, true, bd_.q_star_v_fn,
                            bd_.q_star_v_c);
    implicit_vertical_solve(g_, st.q_c, ph_.nu_q, c2_scalar_, dt, true, bd_.q_star_c_fn,
                            bd_.q_star_c_c);
    implicit_vertical_solve(g_, st.q_r, ph_.nu_q, c2_scalar_, dt, true, bd_.q_star_r_fn,
                            bd_.q_star_r_c);
    if (ph_.eps1 > 0.0) {
      implicit_vertical_solve(g_, st.vel.v1, ph_.eps1, c2_theta_, dt, false, nullptr, 0.0);
      implicit_vertical_solve(g_, st.vel.v2, ph_.eps1, c2_theta_, dt, false, nullptr, 0.0);
    }
  }

  void accumulate_phi_s(ModelState& st, double dt) {
    for (int j = 0; j < g_.ny; ++j)
      for (int i = 0; i < g_.nx; ++i) st.Phi_s(i, j) += ws_.psi(i, j) / dt;
  }

  void check_finite(const ModelState& st) {
    struct Item { const ScalarField3* f; const char* name; };
    for (Item it : {Item{&st.vel.v1, "v1"}, Item{&st.vel.v2, "v2"}, Item{&st.T, "T"},
                    Item{&st.q_v, "q_v"}, Item{&st.q_c, "q_c"}, Item{&st.q_r, "q_r"}})
      if (!it.f->interior_finite())
        throw std::runtime_error(std::string("non-finite values in field ") + it.name +
                                 " at t = " + std::to_string(st.time));
  }

  const Grid& g_;
  PhysParams ph_;
  ReferenceProfiles prof_;
  BoundaryData bd_;
  StepperConfig sc_;
  ProjectionWorkspace ws_;
  Tendencies tend_, tend2_;
  ModelState prov_;
  ScalarField3 phi_;
  ScalarField3 scr_v1_, scr_v2_, scr_T_, scr_qv_, scr_qc_, scr_qr_, scr_sed_;
  std::vector<double> c2_scalar_, c2_theta_;
  ScalarField3 f_T_;
  bool has_f_T_ = false;
};

// ---------------------------------------------------------------------------
// Run loop.

struct RunResult {
  Grid grid;
  ModelState state;
  std::vector<DiagnosticsRecord> series;
  ScalarBounds bounds;
  long steps = 0;
};

inline std::string timestamp_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  return buf;
}

inline RunResult run(const Config& cfg, bool write_outputs = true, bool quiet = true,
                     bool overwrite = false,
                     const std::function<void(const Grid&, ModelState&)>& perturb = nullptr) {
  RunResult res;
  res.grid = make_grid(cfg.run, cfg.phys);
  const Grid& g = res.grid;
  res.state = ModelState(g);
  init_state(g, cfg.run, cfg.phys, cfg.bdry, res.state);
  if (perturb) perturb(g, res.state);

  StepperConfig sc = StepperConfig::from_run(cfg.run);
  Stepper stepper(g, cfg.phys, cfg.prof, cfg.bdry, sc);
  if (cfg.run.f_T_type != "zero") stepper.set_f_T(build_f_T(g, cfg.run));
  stepper.initialize(res.state);
  res.bounds = compute_bounds(g, res.state, cfg.bdry);

  RunManifest manifest;
  std::unique_ptr<TimeSeriesWriter> csv;
  if (write_outputs) {
    std::filesystem::create_directories(cfg.run.out_dir);
    manifest.config_echo = cfg.serialize();
    manifest.started_at = timestamp_now();
    write_manifest(manifest, cfg.run.out_dir);
    std::string series_path = cfg.run.out_dir + "/series.csv";
    if (overwrite) std::filesystem::remove(series_path);
    csv = std::make_unique<TimeSeriesWriter>(series_path);
  }

  auto record = [&](double dt_used, const ProjectionInfo* info) {
    DiagnosticsRecord r =
        record_diagnostics(g, res.state, cfg.phys, cfg.prof, res.bounds, dt_used, info);
    res.series.push_back(r);
    if (csv) csv->append(r);
    if (!quiet)
      std::printf("t=%-12.6g dt=%-10.4g max|v|=%-10.4g min q=%-11.4g E=%-12.6g\n", r.time,
                  dt_used, r.v_max, std::min({r.qv_min, r.qc_min, r.qr_min}),
                  r.v_L2 * r.v_L2);
    if (write_outputs && cfg.run.write_snapshots) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "step%08ld", res.steps);
      auto files = write_snapshot(g, res.state, cfg.run.out_dir, tag, overwrite);
      for (const auto& fpath : files) manifest.snapshots.push_back({fpath, res.state.time});
    }
  };

  record(0.0, nullptr);
  const double t_end = cfg.run.t_end;
  while (res.state.time < t_end * (1.0 - 1e-12) && res.steps < cfg.run.max_steps) {
    double dt = sc.fixed_dt > 0 ? sc.fixed_dt : stepper.stable_dt(res.state);
    dt = std::min(dt, t_end - res.state.time);
    ProjectionInfo info = stepper.step(res.state, dt);
    ++res.steps;
    if (res.steps % cfg.run.output_every == 0 ||
        res.state.time >= t_end * (1.0 - 1e-12))
      record(dt, &info);
  }

  if (write_outputs) {
    manifest.finished_at = timestamp_now();
    manifest.complete = true;
    write_manifest(manifest, cfg.run.out_dir);
  }
  return res;
}

}  // namespace mpe
