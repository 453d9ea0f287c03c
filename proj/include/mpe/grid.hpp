#pragma once

// Discrete domain [0,Lx] x [0,Ly] x (p0,p1): collocated horizontal placement,
// w staggered on pressure faces, one ghost layer on every side.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpe/params.hpp"

namespace mpe {

struct Grid {
  int nx = 0, ny = 0, np = 0;
  double dx = 0, dy = 0, dp = 0;
  double Lx = 0, Ly = 0;
  double p0 = 0, p1 = 0;
  std::vector<double> p_levels;  // cell centers, strictly increasing
  std::vector<double> p_faces;   // size np+1, p_faces[0] = p0, p_faces[np] = p1

  double x(int i) const { return (i + 0.5) * dx; }
  double y(int j) const { return (j + 0.5) * dy; }
  double p(int k) const { return p_levels[static_cast<size_t>(k)]; }
  double cell_volume() const { return dx * dy * dp; }
};

inline Grid make_grid(const RunConfig& run, const PhysParams& phys) {
  Grid g;
  g.nx = run.nx; g.ny = run.ny; g.np = run.np;
  g.Lx = run.Lx; g.Ly = run.Ly;
  g.p0 = phys.p0; g.p1 = phys.p1;
  g.dx = run.Lx / run.nx;
  g.dy = run.Ly / run.ny;
  g.dp = (phys.p1 - phys.p0) / run.np;
  g.p_faces.resize(static_cast<size_t>(run.np) + 1);
  for (int k = 0; k <= run.np; ++k)
    g.p_faces[static_cast<size_t>(k)] = phys.p0 + k * g.dp;
  g.p_faces[static_cast<size_t>(run.np)] = phys.p1;  // pin against roundoff
  g.p_levels.resize(static_cast<size_t>(run.np));
  for (int k = 0; k < run.np; ++k)
    g.p_levels[static_cast<size_t>(k)] = phys.p0 + (k + 0.5) * g.dp;
  return g;
}

// Cell-centered field with one ghost layer on every side. Valid index ranges
// are i in [-1, nx], j in [-1, ny], k in [-1, np].
class ScalarField3 {
 public:
  ScalarField3() = default;
  explicit ScalarField3(const Grid& g)
      : nx_(g.nx), ny_(g.ny), np_(g.np),
        data_(static_cast<size_t>(g.nx + 2) * (g.ny + 2) * (g.np + 2), 0.0) {}

  double& operator()(int i, int j, int k) { return data_[idx(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[idx(i, j, k)]; }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int np() const { return np_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  void fill(double v) { for (auto& x : data_) x = v; }

  bool interior_finite() const {
    for (int k = 0; k < np_; ++k)
      for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i)
          if (!std::isfinite((*this)(i, j, k))) return false;
    return true;
  }

 private:
  size_t idx(int i, int j, int k) const {
    return (static_cast<size_t>(k + 1) * (ny_ + 2) + (j + 1)) * (nx_ + 2) + (i + 1);
  }
  int nx_ = 0, ny_ = 0, np_ = 0;
  std::vector<double> data_;
};

// Horizontal (x,y) array without ghosts, used for Phi_s and projection scratch.
class Field2 {
 public:
  Field2() = default;
  Field2(int nx, int ny) : nx_(nx), ny_(ny), data_(static_cast<size_t>(nx) * ny, 0.0) {}
  explicit Field2(const Grid& g) : Field2(g.nx, g.ny) {}
  double& operator()(int i, int j) { return data_[static_cast<size_t>(j) * nx_ + i]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(j) * nx_ + i]; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }
  void fill(double v) { for (auto& x : data_) x = v; }
 private:
  int nx_ = 0, ny_ = 0;
  std::vector<double> data_;
};

// Vertical velocity on pressure faces: k in [0, np], no ghosts.
class FaceField {
 public:
  FaceField() = default;
  explicit FaceField(const Grid& g)
      : nx_(g.nx), ny_(g.ny), np_(g.np),
        data_(static_cast<size_t>(g.nx) * g.ny * (g.np + 1), 0.0) {}
  double& operator()(int i, int j, int k) { return data_[idx(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[idx(i, j, k)]; }
  int np() const { return np_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }
  void fill(double v) { for (auto& x : data_) x = v; }
 private:
  size_t idx(int i, int j, int k) const {
    return (static_cast<size_t>(k) * ny_ + j) * nx_ + i;
  }
  int nx_ = 0, ny_ = 0, np_ = 0;
  std::vector<double> data_;
};

struct HorizontalVelocity {
  ScalarField3 v1, v2;
  FaceField w;  // pinned to 0 on the first and last face by construction
  HorizontalVelocity() = default;
  explicit HorizontalVelocity(const Grid& g) : v1(g), v2(g), w(g) {}
};

struct ModelState {
  HorizontalVelocity vel;
  ScalarField3 T, q_v, q_c, q_r;
  ScalarField3 Phi;  // diagnosed
  Field2 Phi_s;
  double time = 0.0;
  ModelState() = default;
  explicit ModelState(const Grid& g)
      : vel(g), T(g), q_v(g), q_c(g), q_r(g), Phi(g), Phi_s(g) {}
};

enum class Region { Interior, Gamma_i, Gamma_u, Gamma_l };

// Tags a (possibly ghost) index. Lateral takes precedence at shared corners:
// lateral conditions are applied after top/bottom, so shared ghosts are Gamma_l.
inline Region boundary_region(const Grid& g, int i, int j, int k) {
  if (i < -1 || i > g.nx || j < -1 || j > g.ny || k < -1 || k > g.np)
    throw std::out_of_range("boundary_region: index outside ghost range");
  if (i < 0 || i >= g.nx || j < 0 || j >= g.ny) return Region::Gamma_l;
  if (k < 0) return Region::Gamma_u;
  if (k >= g.np) return Region::Gamma_i;
  return Region::Interior;
}

}  // namespace mpe
