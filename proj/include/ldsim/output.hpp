#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ldsim/discretization.hpp"
#include "ldsim/errors.hpp"
#include "ldsim/mesh.hpp"
#include "ldsim/state.hpp"
#include "ldsim/studio.hpp"

namespace ldsim {

/// 17 significant digits, enough to read back the identical double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Ordered key=value report.
class Report {
 public:
  void add(std::string key, double v) { entries_.emplace_back(std::move(key), format_double(v)); }
  void add(std::string key, int v) { entries_.emplace_back(std::move(key), std::to_string(v)); }
  void add(std::string key, bool v) { entries_.emplace_back(std::move(key), v ? "true" : "false"); }
  void add(std::string key, const char* v) { add(std::move(key), std::string(v)); }
  void add(std::string key, std::string v) {
    for (char& c : v)
      if (c == '\n' || c == '\r') c = ' ';
    entries_.emplace_back(std::move(key), std::move(v));
  }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = detail::open_output(path);
  out << text;
  detail::close_output(out, path);
}

inline void write_report(const std::filesystem::path& path, const Report& r) { write_text(path, r.text()); }

/// Nodal solution, one row per node in x-major then y order. H is the heat
/// generation rate; it is evaluated from the state whatever the thermal mode.
inline void write_field_csv(const std::filesystem::path& path, const Discretization& disc,
                            const DeviceState& s) {
  const Mesh& mesh = disc.mesh();
  const auto h = disc.heat_generation(s);
  auto out = detail::open_output(path);
  out << "x_um,y_um,psi_V,n_cm3,p_cm3,T_K,H_Wcm3\n";
  for (int i = 0; i < mesh.nx(); ++i)
    for (int j = 0; j < mesh.ny(); ++j) {
      const int k = mesh.node_index(i, j);
      out << format_double(mesh.x_um[i]) << ',' << format_double(mesh.y_um[j]) << ','
          << format_double(s.psi[k]) << ',' << format_double(s.n[k]) << ',' << format_double(s.p[k])
          << ',' << format_double(s.T[k]) << ',' << format_double(h[k]) << '\n';
    }
  detail::close_output(out, path);
}

/// Drain characteristics of one or more gate sweeps, in sweep order.
inline void write_iv_csv(const std::filesystem::path& path, const std::vector<SweepResult>& sweeps) {
  auto out = detail::open_output(path);
  out << "Vg_V,Vd_V,Id_A_per_um,Tpeak_K,converged\n";
  for (const auto& r : sweeps)
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      const BiasPoint& p = r.points[k];
      out << format_double(p.gate_V) << ',' << format_double(p.drain_V) << ','
          << format_double(r.drain_current(k)) << ',' << format_double(p.t_peak_K) << ','
          << (p.converged ? "true" : "false") << '\n';
    }
  detail::close_output(out, path);
}

/// Nodal temperature difference (natural minus Si-28).
inline void write_delta_t_csv(const std::filesystem::path& path, const Mesh& mesh,
                              const std::vector<double>& dt) {
  auto out = detail::open_output(path);
  out << "x_um,y_um,dT_K\n";
  for (int i = 0; i < mesh.nx(); ++i)
    for (int j = 0; j < mesh.ny(); ++j)
      out << format_double(mesh.x_um[i]) << ',' << format_double(mesh.y_um[j]) << ','
          << format_double(dt[mesh.node_index(i, j)]) << '\n';
  detail::close_output(out, path);
}

/// Samples of a vertical temperature profile next to the fitted curve.
inline void write_profile_csv(const std::filesystem::path& path, const TempProfileFit& fit) {
  auto out = detail::open_output(path);
  out << "depth_um,T_K,T_fit_K\n";
  for (std::size_t k = 0; k < fit.depth_um.size(); ++k) {
    const double d = fit.depth_um[k];
    out << format_double(d) << ',' << format_double(fit.temperature_K[k]) << ','
        << format_double(fit.t0_K + fit.a_K * std::exp(-d / fit.length_um)) << '\n';
  }
  detail::close_output(out, path);
}

}  // namespace ldsim
