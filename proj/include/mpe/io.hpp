#pragma once

// Snapshot files (MPE1), diagnostics CSV series, and the run manifest.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpe/analysis.hpp"
#include "mpe/grid.hpp"

namespace mpe {

struct ExistsError : std::runtime_error {
  explicit ExistsError(const std::string& m) : std::runtime_error(m) {}
};

// MPE1 format: ASCII header `MPE1 <name> <nx> <ny> <np> <time>` followed by
// raw little-endian 64-bit floats of the interior, k-major, then j, then i
// (i fastest). Assumes a little-endian host.
inline void write_field_mpe1(const Grid& g, const ScalarField3& f, const std::string& name,
                             double time, const std::string& path, bool overwrite) {
  if (!overwrite && std::filesystem::exists(path))
    throw ExistsError("snapshot exists (use --overwrite): " + path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot: " + path);
  char header[256];
  std::snprintf(header, sizeof header, "MPE1 %s %d %d %d %.17g\n", name.c_str(), g.nx, g.ny,
                g.np, time);
  out << header;
  std::vector<double> row(static_cast<size_t>(g.nx));
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) row[static_cast<size_t>(i)] = f(i, j, k);
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
  if (!out) throw std::runtime_error("short write: " + path);
}

struct SnapshotData {
  std::string name;
  int nx = 0, ny = 0, np = 0;
  double time = 0;
  std::vector<double> data;  // k-major, then j, then i
};

inline SnapshotData read_field_mpe1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read snapshot: " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  SnapshotData s;
  hs >> magic >> s.name >> s.nx >> s.ny >> s.np >> s.time;
  if (magic != "MPE1" || !hs || s.nx <= 0 || s.ny <= 0 || s.np <= 0)
    throw std::runtime_error("bad MPE1 header in " + path);
  size_t n = static_cast<size_t>(s.nx) * s.ny * s.np;
  s.data.resize(n);
  in.read(reinterpret_cast<char*>(s.data.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<size_t>(in.gcount()) != n * sizeof(double))
    throw std::runtime_error("truncated MPE1 payload in " + path);
  return s;
}

inline void load_field_mpe1(const SnapshotData& s, const Grid& g, ScalarField3& f) {
  if (s.nx != g.nx || s.ny != g.ny || s.np != g.np)
    throw std::runtime_error("snapshot grid mismatch for field " + s.name);
  size_t n = 0;
  for (int k = 0; k < g.np; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) f(i, j, k) = s.data[n++];
}

// One file per field: <dir>/<tag>_<field>.mpe1
inline std::vector<std::string> write_snapshot(const Grid& g, const ModelState& st,
                                               const std::string& dir, const std::string& tag,
                                               bool overwrite = false) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  auto emit = [&](const ScalarField3& f, const std::string& name) {
    std::string path = dir + "/" + tag + "_" + name + ".mpe1";
    write_field_mpe1(g, f, name, st.time, path, overwrite);
    files.push_back(path);
  };
  emit(st.vel.v1, "v1");
  emit(st.vel.v2, "v2");
  emit(st.T, "T");
  emit(st.q_v, "q_v");
  emit(st.q_c, "q_c");
  emit(st.q_r, "q_r");
  emit(st.Phi, "Phi");
  // w lives on faces; store as an (np+1)-level field via a plain dump.
  {
    std::string path = dir + "/" + tag + "_w.mpe1";
    if (!overwrite && std::filesystem::exists(path))
      throw ExistsError("snapshot exists (use --overwrite): " + path);
    std::ofstream out(path, std::ios::binary);
    char header[256];
    std::snprintf(header, sizeof header, "MPE1 w %d %d %d %.17g\n", g.nx, g.ny, g.np + 1,
                  st.time);
    out << header;
    std::vector<double> row(static_cast<size_t>(g.nx));
    for (int k = 0; k <= g.np; ++k)
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) row[static_cast<size_t>(i)] = st.vel.w(i, j, k);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
      }
    files.push_back(path);
  }
  return files;
}

// CSV time series: header on first append to an empty/new file, one row per
// record, flushed per append, 17 significant digits.
class TimeSeriesWriter {
 public:
  explicit TimeSeriesWriter(const std::string& path) : path_(path) {
    bool need_header = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_) throw std::runtime_error("cannot open time series file: " + path);
    if (need_header) {
      const auto& cols = diagnostics_columns();
      for (size_t n = 0; n < cols.size(); ++n) out_ << (n ? "," : "") << cols[n];
      out_ << "\n";
      out_.flush();
    }
  }

  void append(const DiagnosticsRecord& r) {
    auto vals = diagnostics_values(r);
    char buf[40];
    for (size_t n = 0; n < vals.size(); ++n) {
      std::snprintf(buf, sizeof buf, "%.17g", vals[n]);
      out_ << (n ? "," : "") << buf;
    }
    out_ << "\n";
    out_.flush();
    if (!out_) throw std::runtime_error("time series write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

inline std::vector<std::vector<double>> read_timeseries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read time series: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct RunManifest {
  std::string config_echo;
  std::string version = "mpe-1.0";
  std::string started_at, finished_at;
  std::vector<std::pair<std::string, double>> snapshots;  // path, time
  bool complete = false;
  std::vector<std::string> baseline_keys;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config"] = config_echo;
    j["version"] = version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["complete"] = complete;
    j["baseline_keys"] = baseline_keys;
    j["snapshots"] = nlohmann::json::array();
    for (const auto& [p, t] : snapshots) j["snapshots"].push_back({{"path", p}, {"time", t}});
    return j;
  }
};

inline void write_manifest(const RunManifest& m, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/MANIFEST.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << m.to_json().dump(2) << "\n";
}

}  // namespace mpe
