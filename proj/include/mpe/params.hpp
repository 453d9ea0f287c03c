#pragma once

// Physical constants, regularization parameters, reference profiles, boundary
// data, and run configuration, plus the sectioned key=value config parser.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpe {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PhysParams {
  double R = 287.0;       // gas constant, dry air [J/(kg K)]
  double R_v = 461.5;     // gas constant, water vapor [J/(kg K)]
  double c_p = 1004.0;    // specific heat at constant pressure [J/(kg K)]
  double L = 2.5e6;       // latent heat of vaporization [J/kg]
  double g = 9.8;         // gravity [m/s^2]
  double f0 = 1e-4;       // Coriolis parameter [1/s]
  double gamma = 1.4;     // ratio of specific heats
  double k1 = 1e-3;       // autoconversion rate [1/s]
  double k2 = 2.2;        // collection rate [1/s]
  double k3 = 1e-3;       // evaporation rate [1/s]
  double q_vs = 0.02;     // saturation mixing ratio [kg/kg], constant
  double q_crit = 5e-4;   // autoconversion threshold [kg/kg]
  double V_t = 5.0;       // rain terminal velocity [m/s]
  double mu_v = 1.0;      // horizontal viscosity for momentum
  double mu_T = 1.0;      // horizontal diffusivity for T
  double mu_q = 1.0;      // horizontal diffusivity for moisture
  double nu_T = 1.0;      // vertical diffusivity for T
  double nu_q = 1.0;      // vertical diffusivity for moisture
  double eps1 = 0.0;      // artificial vertical viscosity for v
  double eps2 = 1e-2;     // Heaviside smoothing width
  double T_star_lo = 150.0;  // lower temperature cutoff for phi
  double T_star_hi = 290.0;  // upper temperature cutoff for phi
  bool use_F_plus = true;    // replace the saturation rate by its positive part
  double p0 = 1e4;        // top pressure bound [Pa]
  double p1 = 1e5;        // bottom pressure bound [Pa]
  std::string mode = "nondimensional";  // "nondimensional": unit viscosities

  void validate() const {
    if (!(p0 > 0.0) || !(p1 > 0.0) || !(p0 < p1))
      throw ConfigError("physics: p0 < p1 violated (both must be > 0)");
    if (!(eps2 > 0.0)) throw ConfigError("physics.eps2 must be > 0");
    if (eps1 < 0.0) throw ConfigError("physics.eps1 must be >= 0");
    if (!(T_star_lo < T_star_hi))
      throw ConfigError("physics: T_star_lo < T_star_hi violated");
    if (k1 < 0 || k2 < 0 || k3 < 0 || V_t < 0)
      throw ConfigError("physics: rate constants must be >= 0");
    if (!(q_vs > 0.0 && q_vs < 1.0))
      throw ConfigError("physics.q_vs must lie in (0, 1)");
    if (q_crit < 0.0 || q_crit >= 1.0)
      throw ConfigError("physics.q_crit must lie in [0, 1)");
    if (mu_v < 0 || mu_T < 0 || mu_q < 0 || nu_T < 0 || nu_q < 0)
      throw ConfigError("physics: viscosities must be >= 0");
    if (mode != "nondimensional" && mode != "physical")
      throw ConfigError("physics.mode must be 'nondimensional' or 'physical'");
  }
};

// Reference profiles, constant by default, optionally linear in ln(p/p1).
struct ReferenceProfiles {
  double T_bar_0 = 300.0, T_bar_slope = 0.0;
  double theta_bar_0 = 300.0, theta_bar_slope = 0.0;
  double theta_h_0 = 300.0, theta_h_slope = 0.0;
  double p_ref = 1e5;  // ln-p anchor, set to p1 at load time

  double T_bar(double p) const { return T_bar_0 + T_bar_slope * std::log(p / p_ref); }
  double theta_bar(double p) const { return theta_bar_0 + theta_bar_slope * std::log(p / p_ref); }
  double theta_h(double p) const { return theta_h_0 + theta_h_slope * std::log(p / p_ref); }
  double dtheta_h_dp(double p) const { return theta_h_slope / p; }

  void validate(double p0, double p1) const {
    for (double p : {p0, p1}) {
      if (!(T_bar(p) > 0.0) || !(theta_bar(p) > 0.0) || !(theta_h(p) > 0.0))
        throw ConfigError("profiles must be strictly positive on [p0, p1]");
      if (!std::isfinite(theta_h(p)) || !std::isfinite(dtheta_h_dp(p)))
        throw ConfigError("theta_h and its derivative must be bounded");
    }
  }
};

// Robin targets on the bottom face and the lateral walls. Constants from the
// config file; optional (x,y) overrides are installed programmatically (MMS).
struct BoundaryData {
  double T_star_surface_c = 300.0;
  double q_star_v_c = 0.0, q_star_c_c = 0.0, q_star_r_c = 0.0;
  double T_bl_c = 300.0;
  double q_bl_v_c = 0.0, q_bl_c_c = 0.0, q_bl_r_c = 0.0;

  using Fxy = std::function<double(double, double)>;
  Fxy T_star_fn, q_star_v_fn, q_star_c_fn, q_star_r_fn;
  Fxy T_bl_fn, q_bl_v_fn, q_bl_c_fn, q_bl_r_fn;

  double T_star_surface(double x, double y) const { return T_star_fn ? T_star_fn(x, y) : T_star_surface_c; }
  double q_star_v(double x, double y) const { return q_star_v_fn ? q_star_v_fn(x, y) : q_star_v_c; }
  double q_star_c(double x, double y) const { return q_star_c_fn ? q_star_c_fn(x, y) : q_star_c_c; }
  double q_star_r(double x, double y) const { return q_star_r_fn ? q_star_r_fn(x, y) : q_star_r_c; }
  double T_bl(double x, double y) const { return T_bl_fn ? T_bl_fn(x, y) : T_bl_c; }
  double q_bl_v(double x, double y) const { return q_bl_v_fn ? q_bl_v_fn(x, y) : q_bl_v_c; }
  double q_bl_c(double x, double y) const { return q_bl_c_fn ? q_bl_c_fn(x, y) : q_bl_c_c; }
  double q_bl_r(double x, double y) const { return q_bl_r_fn ? q_bl_r_fn(x, y) : q_bl_r_c; }

  void validate() const {
    for (double v : {T_star_surface_c, q_star_v_c, q_star_c_c, q_star_r_c,
                     T_bl_c, q_bl_v_c, q_bl_c_c, q_bl_r_c})
      if (v < 0.0 || !std::isfinite(v))
        throw ConfigError("boundary targets must be nonnegative and bounded");
  }
};

struct RunConfig {
  int nx = 16, ny = 16, np = 8;
  double Lx = 1e6, Ly = 1e6;
  double dt = 0.0;           // 0: derive from cfl_safety each step
  double cfl_safety = 0.5;
  double t_end = 0.0;
  long max_steps = 1000000;
  std::string scheme = "rk2";  // "rk2" | "euler"
  std::string initial_condition = "rest";
  double ic_amplitude = 0.0;
  double ic_radius = 0.25;   // bubble/blob radius as a fraction of min(Lx, Ly)
  std::string f_T_type = "zero";  // "zero" | "constant" | "gaussian"
  double f_T_value = 0.0;
  double f_T_x0 = 0.5, f_T_y0 = 0.5, f_T_pc = 0.5, f_T_sigma = 0.1;
  std::string out_dir = "out";
  int output_every = 10;
  bool write_snapshots = false;
  bool monitor_bounds = true;
  int threads = 1;
  unsigned seed = 12345;

  void validate() const {
    if (nx < 4 || ny < 4 || np < 4)
      throw ConfigError("grid: nx, ny, np must all be >= 4");
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw ConfigError("grid: Lx, Ly must be > 0");
    if (dt < 0.0) throw ConfigError("time.dt must be >= 0");
    if (dt == 0.0 && !(cfl_safety > 0.0 && cfl_safety <= 1.0))
      throw ConfigError("time.cfl_safety must lie in (0, 1] when dt is not fixed");
    if (t_end < 0.0) throw ConfigError("time.t_end must be >= 0");
    if (scheme != "rk2" && scheme != "euler")
      throw ConfigError("time.scheme must be 'rk2' or 'euler'");
    if (output_every < 1) throw ConfigError("output.every must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

using KVMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const KVMap& m, const std::string& key, double dflt) {
  auto it = m.find(key);
  if (it == m.end()) return dflt;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for key '" + key + "': " + it->second);
  }
}

inline long to_long(const KVMap& m, const std::string& key, long dflt) {
  auto it = m.find(key);
  if (it == m.end()) return dflt;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for key '" + key + "': " + it->second);
  }
}

inline bool to_bool(const KVMap& m, const std::string& key, bool dflt) {
  auto it = m.find(key);
  if (it == m.end()) return dflt;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("bad boolean value for key '" + key + "': " + it->second);
}

inline std::string to_str(const KVMap& m, const std::string& key, const std::string& dflt) {
  auto it = m.find(key);
  return it == m.end() ? dflt : it->second;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Parses sectioned key=value text into "section.key" -> value.
inline KVMap parse_config_text(std::istream& in) {
  KVMap out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("parse error at line " + std::to_string(lineno) + ": unterminated section");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section.empty())
        throw ConfigError("parse error at line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("parse error at line " + std::to_string(lineno) + ": expected key=value");
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty())
      throw ConfigError("parse error at line " + std::to_string(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError("parse error at line " + std::to_string(lineno) + ": key outside any section");
    out[section + "." + key] = val;
  }
  return out;
}

struct Config {
  PhysParams phys;
  ReferenceProfiles prof;
  BoundaryData bdry;
  RunConfig run;

  void validate() const {
    phys.validate();
    prof.validate(phys.p0, phys.p1);
    bdry.validate();
    run.validate();
  }

  static Config from_map(const KVMap& m) {
    using namespace detail;
    Config c;
    PhysParams& p = c.phys;
    p.mode = to_str(m, "physics.mode", p.mode);
    // Mode fixes the viscosity defaults; explicit keys still override below.
    if (p.mode == "physical") {
      p.mu_v = p.mu_T = p.mu_q = 1e4;
      p.nu_T = p.nu_q = 10.0;
    }
    p.R = to_double(m, "physics.R", p.R);
    p.R_v = to_double(m, "physics.R_v", p.R_v);
    p.c_p = to_double(m, "physics.c_p", p.c_p);
    p.L = to_double(m, "physics.L", p.L);
    p.g = to_double(m, "physics.g", p.g);
    p.f0 = to_double(m, "physics.f0", p.f0);
    p.gamma = to_double(m, "physics.gamma", p.gamma);
    p.k1 = to_double(m, "physics.k1", p.k1);
    p.k2 = to_double(m, "physics.k2", p.k2);
    p.k3 = to_double(m, "physics.k3", p.k3);
    p.q_vs = to_double(m, "physics.q_vs", p.q_vs);
    p.q_crit = to_double(m, "physics.q_crit", p.q_crit);
    p.V_t = to_double(m, "physics.V_t", p.V_t);
    p.mu_v = to_double(m, "physics.mu_v", p.mu_v);
    p.mu_T = to_double(m, "physics.mu_T", p.mu_T);
    p.mu_q = to_double(m, "physics.mu_q", p.mu_q);
    p.nu_T = to_double(m, "physics.nu_T", p.nu_T);
    p.nu_q = to_double(m, "physics.nu_q", p.nu_q);
    p.eps1 = to_double(m, "physics.eps1", p.eps1);
    p.eps2 = to_double(m, "physics.eps2", p.eps2);
    p.T_star_lo = to_double(m, "physics.T_star_lo", p.T_star_lo);
    p.T_star_hi = to_double(m, "physics.T_star_hi", p.T_star_hi);
    p.use_F_plus = to_bool(m, "physics.use_F_plus", p.use_F_plus);
    p.p0 = to_double(m, "physics.p0", p.p0);
    p.p1 = to_double(m, "physics.p1", p.p1);

    ReferenceProfiles& rp = c.prof;
    rp.T_bar_0 = to_double(m, "physics.T_bar_0", rp.T_bar_0);
    rp.T_bar_slope = to_double(m, "physics.T_bar_slope", rp.T_bar_slope);
    rp.theta_bar_0 = to_double(m, "physics.theta_bar_0", rp.theta_bar_0);
    rp.theta_bar_slope = to_double(m, "physics.theta_bar_slope", rp.theta_bar_slope);
    rp.theta_h_0 = to_double(m, "physics.theta_h_0", rp.theta_h_0);
    rp.theta_h_slope = to_double(m, "physics.theta_h_slope", rp.theta_h_slope);
    rp.p_ref = p.p1;

    BoundaryData& b = c.bdry;
    b.T_star_surface_c = to_double(m, "boundary.T_star_surface", b.T_star_surface_c);
    b.q_star_v_c = to_double(m, "boundary.q_star_v", b.q_star_v_c);
    b.q_star_c_c = to_double(m, "boundary.q_star_c", b.q_star_c_c);
    b.q_star_r_c = to_double(m, "boundary.q_star_r", b.q_star_r_c);
    b.T_bl_c = to_double(m, "boundary.T_bl", b.T_bl_c);
    b.q_bl_v_c = to_double(m, "boundary.q_bl_v", b.q_bl_v_c);
    b.q_bl_c_c = to_double(m, "boundary.q_bl_c", b.q_bl_c_c);
    b.q_bl_r_c = to_double(m, "boundary.q_bl_r", b.q_bl_r_c);

    RunConfig& r = c.run;
    r.nx = static_cast<int>(to_long(m, "grid.nx", r.nx));
    r.ny = static_cast<int>(to_long(m, "grid.ny", r.ny));
    r.np = static_cast<int>(to_long(m, "grid.np", r.np));
    r.Lx = to_double(m, "grid.Lx", r.Lx);
    r.Ly = to_double(m, "grid.Ly", r.Ly);
    r.dt = to_double(m, "time.dt", r.dt);
    r.cfl_safety = to_double(m, "time.cfl_safety", r.cfl_safety);
    r.t_end = to_double(m, "time.t_end", r.t_end);
    r.max_steps = to_long(m, "time.max_steps", r.max_steps);
    r.scheme = to_str(m, "time.scheme", r.scheme);
    r.initial_condition = to_str(m, "init.scenario", r.initial_condition);
    r.ic_amplitude = to_double(m, "init.amplitude", r.ic_amplitude);
    r.ic_radius = to_double(m, "init.radius", r.ic_radius);
    r.f_T_type = to_str(m, "init.f_T_type", r.f_T_type);
    r.f_T_value = to_double(m, "init.f_T_value", r.f_T_value);
    r.f_T_x0 = to_double(m, "init.f_T_x0", r.f_T_x0);
    r.f_T_y0 = to_double(m, "init.f_T_y0", r.f_T_y0);
    r.f_T_pc = to_double(m, "init.f_T_pc", r.f_T_pc);
    r.f_T_sigma = to_double(m, "init.f_T_sigma", r.f_T_sigma);
    r.out_dir = to_str(m, "output.dir", r.out_dir);
    r.output_every = static_cast<int>(to_long(m, "output.every", r.output_every));
    r.write_snapshots = to_bool(m, "output.snapshots", r.write_snapshots);
    r.monitor_bounds = to_bool(m, "output.monitor_bounds", r.monitor_bounds);
    r.threads = static_cast<int>(to_long(m, "output.threads", r.threads));
    r.seed = static_cast<unsigned>(to_long(m, "output.seed", static_cast<long>(r.seed)));

    c.validate();
    return c;
  }

  KVMap to_map() const {
    using detail::fmt;
    KVMap m;
    m["physics.mode"] = phys.mode;
    m["physics.R"] = fmt(phys.R);
    m["physics.R_v"] = fmt(phys.R_v);
    m["physics.c_p"] = fmt(phys.c_p);
    m["physics.L"] = fmt(phys.L);
    m["physics.g"] = fmt(phys.g);
    m["physics.f0"] = fmt(phys.f0);
    m["physics.gamma"] = fmt(phys.gamma);
    m["physics.k1"] = fmt(phys.k1);
    m["physics.k2"] = fmt(phys.k2);
    m["physics.k3"] = fmt(phys.k3);
    m["physics.q_vs"] = fmt(phys.q_vs);
    m["physics.q_crit"] = fmt(phys.q_crit);
    m["physics.V_t"] = fmt(phys.V_t);
    m["physics.mu_v"] = fmt(phys.mu_v);
    m["physics.mu_T"] = fmt(phys.mu_T);
    m["physics.mu_q"] = fmt(phys.mu_q);
    m["physics.nu_T"] = fmt(phys.nu_T);
    m["physics.nu_q"] = fmt(phys.nu_q);
    m["physics.eps1"] = fmt(phys.eps1);
    m["physics.eps2"] = fmt(phys.eps2);
    m["physics.T_star_lo"] = fmt(phys.T_star_lo);
    m["physics.T_star_hi"] = fmt(phys.T_star_hi);
    m["physics.use_F_plus"] = phys.use_F_plus ? "true" : "false";
    m["physics.p0"] = fmt(phys.p0);
    m["physics.p1"] = fmt(phys.p1);
    m["physics.T_bar_0"] = fmt(prof.T_bar_0);
    m["physics.T_bar_slope"] = fmt(prof.T_bar_slope);
    m["physics.theta_bar_0"] = fmt(prof.theta_bar_0);
    m["physics.theta_bar_slope"] = fmt(prof.theta_bar_slope);
    m["physics.theta_h_0"] = fmt(prof.theta_h_0);
    m["physics.theta_h_slope"] = fmt(prof.theta_h_slope);
    m["boundary.T_star_surface"] = fmt(bdry.T_star_surface_c);
    m["boundary.q_star_v"] = fmt(bdry.q_star_v_c);
    m["boundary.q_star_c"] = fmt(bdry.q_star_c_c);
    m["boundary.q_star_r"] = fmt(bdry.q_star_r_c);
    m["boundary.T_bl"] = fmt(bdry.T_bl_c);
    m["boundary.q_bl_v"] = fmt(bdry.q_bl_v_c);
    m["boundary.q_bl_c"] = fmt(bdry.q_bl_c_c);
    m["boundary.q_bl_r"] = fmt(bdry.q_bl_r_c);
    m["grid.nx"] = std::to_string(run.nx);
    m["grid.ny"] = std::to_string(run.ny);
    m["grid.np"] = std::to_string(run.np);
    m["grid.Lx"] = fmt(run.Lx);
    m["grid.Ly"] = fmt(run.Ly);
    m["time.dt"] = fmt(run.dt);
    m["time.cfl_safety"] = fmt(run.cfl_safety);
    m["time.t_end"] = fmt(run.t_end);
    m["time.max_steps"] = std::to_string(run.max_steps);
    m["time.scheme"] = run.scheme;
    m["init.scenario"] = run.initial_condition;
    m["init.amplitude"] = fmt(run.ic_amplitude);
    m["init.radius"] = fmt(run.ic_radius);
    m["init.f_T_type"] = run.f_T_type;
    m["init.f_T_value"] = fmt(run.f_T_value);
    m["init.f_T_x0"] = fmt(run.f_T_x0);
    m["init.f_T_y0"] = fmt(run.f_T_y0);
    m["init.f_T_pc"] = fmt(run.f_T_pc);
    m["init.f_T_sigma"] = fmt(run.f_T_sigma);
    m["output.dir"] = run.out_dir;
    m["output.every"] = std::to_string(run.output_every);
    m["output.snapshots"] = run.write_snapshots ? "true" : "false";
    m["output.monitor_bounds"] = run.monitor_bounds ? "true" : "false";
    m["output.threads"] = std::to_string(run.threads);
    m["output.seed"] = std::to_string(run.seed);
    return m;
  }

  // Emits the fully-resolved configuration; parse_config_text inverts this.
  std::string serialize() const {
    KVMap m = to_map();
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
    for (const auto& [k, v] : m) {
      auto dot = k.find('.');
      by_section[k.substr(0, dot)].push_back({k.substr(dot + 1), v});
    }
    std::ostringstream os;
    for (const auto& [sec, kvs] : by_section) {
      os << "[" << sec << "]\n";
      for (const auto& [k, v] : kvs) os << k << " = " << v << "\n";
      os << "\n";
    }
    return os.str();
  }
};

// Applies a "section.key=value" override string onto a parsed map.
inline void apply_override(KVMap& m, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("bad override (expected section.key=value): " + kv);
  std::string key = detail::trim(kv.substr(0, eq));
  if (key.find('.') == std::string::npos)
    throw ConfigError("override key must be section.key: " + kv);
  m[key] = detail::trim(kv.substr(eq + 1));
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  KVMap m = parse_config_text(in);
  return Config::from_map(m);
}

}  // namespace mpe
