#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ldsim/device_spec.hpp"
#include "ldsim/discretization.hpp"
#include "ldsim/mesh.hpp"
#include "ldsim/solver.hpp"

namespace ldsim::fixtures {

/// 4 µm symmetric step diode, n-side on the left, 1D in practice (two y lines).
inline DeviceSpec diode_spec(double doping = 1e16, double min_dx = 0.005) {
  DeviceSpec spec;
  spec.regions.push_back({"Si", {0, 0, 4, 0.1}});
  spec.doping_profiles.push_back(DopingProfile::uniform(Species::donor, doping, {0, 0, 2, 0.1}));
  spec.doping_profiles.push_back(DopingProfile::uniform(Species::acceptor, doping, {2, 0, 4, 0.1}));
  spec.contacts.push_back({"cathode", {{0, 0, 0, 0.1}}, ContactKind::thermal_ohmic, 0});
  spec.contacts.push_back({"anode", {{4, 0, 4, 0.1}}, ContactKind::thermal_ohmic, 0});
  spec.x_hints = {{2.0}, min_dx, 0.1};
  spec.y_hints = {{}, 0.1, 0.1};
  return spec;
}

/// Uniformly doped n-type bar with ohmic, heat-sunk ends.
inline DeviceSpec resistor_spec(double length_um = 2.0, double doping = 1e17, double dx = 0.05) {
  DeviceSpec spec;
  spec.regions.push_back({"Si", {0, 0, length_um, 0.2}});
  spec.doping_profiles.push_back(DopingProfile::uniform(Species::donor, doping, {0, 0, length_um, 0.2}));
  spec.contacts.push_back({"left", {{0, 0, 0, 0.2}}, ContactKind::thermal_ohmic, 0});
  spec.contacts.push_back({"right", {{length_um, 0, length_um, 0.2}}, ContactKind::thermal_ohmic, 0});
  spec.x_hints = {{}, dx, dx};
  spec.y_hints = {{}, 0.2, 0.2};
  return spec;
}

/// 5×5-node coupled test device: p-n silicon with an oxide strip and a gate.
inline DeviceSpec jacobian_spec() {
  DeviceSpec spec;
  spec.regions.push_back({"Si", {0, 0, 1, 0.75}});
  spec.regions.push_back({"SiO2", {0, 0.75, 1, 1}});
  spec.doping_profiles.push_back(DopingProfile::uniform(Species::donor, 1e16, {0, 0, 0.5, 0.75}));
  spec.doping_profiles.push_back(DopingProfile::uniform(Species::acceptor, 1e16, {0.5, 0, 1, 0.75}));
  spec.contacts.push_back({"a", {{0, 0, 0, 0.75}}, ContactKind::ohmic, 0});
  spec.contacts.push_back({"b", {{1, 0, 1, 0.75}}, ContactKind::thermal_ohmic, 0});
  spec.contacts.push_back({"g", {{0, 1, 1, 1}}, ContactKind::gate, 0.5});
  spec.x_hints = {{}, 0.25, 0.25};
  spec.y_hints = {{}, 0.25, 0.25};
  return spec;
}

/// Silicon slab of thickness d (µm) along x with both faces held at ambient.
inline DeviceSpec slab_spec(double d_um, double dx_um) {
  DeviceSpec spec;
  spec.regions.push_back({"Si", {0, 0, d_um, 0.1}});
  spec.contacts.push_back({"left", {{0, 0, 0, 0.1}}, ContactKind::thermal, 0});
  spec.contacts.push_back({"right", {{d_um, 0, d_um, 0.1}}, ContactKind::thermal, 0});
  spec.x_hints = {{}, dx_um, dx_um};
  spec.y_hints = {{}, 0.1, 0.1};
  return spec;
}

/// Neutral state on the Jacobian device perturbed in every unknown.
inline DeviceState random_state(const Discretization& disc, std::mt19937_64& rng) {
  const Mesh& mesh = disc.mesh();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DeviceState s = neutral_guess(disc, {{"a", u(rng)}, {"g", 2 * u(rng)}});
  for (int i = 0; i < mesh.node_count(); ++i) {
    s.psi[i] += 0.2 * (u(rng) - 0.5);
    s.T[i] = 300 + 100 * u(rng);
    if (mesh.nodes[i].semiconductor) {
      s.n[i] *= std::exp(4 * (u(rng) - 0.5));
      s.p[i] *= std::exp(4 * (u(rng) - 0.5));
    }
  }
  return s;
}

/// Largest relative disagreement between the assembled Jacobian and central
/// differences. Entries are compared as contributions J_rc·x_c, relative to the
/// larger of the two estimates but never below 1e-3 of the row's largest
/// contribution, so entries that are roundoff-sized against their row do not
/// dominate.
inline double jacobian_error(const Discretization& disc, const DeviceState& s) {
  const auto sys = disc.assemble(s);
  const Eigen::MatrixXd jac(sys.jacobian);
  const Eigen::VectorXd x = pack_state(disc.unknowns(), s);
  const Eigen::Index n = x.size();
  Eigen::VectorXd row(n);
  for (Eigen::Index r = 0; r < n; ++r) row[r] = (jac.row(r).transpose().cwiseProduct(x)).cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const double h = 1e-6 * std::max(std::abs(x[c]), 1e-3);
    Eigen::VectorXd xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    DeviceState sp = s, sm = s;
    unpack_state(disc.unknowns(), xp, sp);
    unpack_state(disc.unknowns(), xm, sm);
    const Eigen::VectorXd fd = (disc.assemble(sp, false).residual - disc.assemble(sm, false).residual) / (2 * h);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double ref = std::max(std::max(std::abs(jac(r, c)), std::abs(fd[r])) * std::abs(x[c]), 1e-3 * row[r]);
      if (ref > 0.0) worst = std::max(worst, std::abs(fd[r] - jac(r, c)) * std::abs(x[c]) / ref);
    }
  }
  return worst;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ldsim-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ldsim::fixtures
