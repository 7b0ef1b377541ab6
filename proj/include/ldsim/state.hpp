#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ldsim/constants.hpp"
#include "ldsim/materials.hpp"
#include "ldsim/mesh.hpp"

namespace ldsim {

/// Nodal solution fields. Insulator nodes carry ψ and T only; their n and p
/// entries are zero and ignored.
struct DeviceState {
  std::vector<double> psi;  // V
  std::vector<double> n;    // cm⁻³
  std::vector<double> p;    // cm⁻³
  std::vector<double> T;    // K
  std::map<std::string, double> bias;  // contact name -> applied V

  double bias_of(const std::string& contact) const {
    auto it = bias.find(contact);
    return it == bias.end() ? 0.0 : it->second;
  }
  bool operator==(const DeviceState&) const = default;
};

inline const Material& node_material(const Mesh& mesh, const MaterialTable& mats, int node) {
  return mats.at(mesh.regions[mesh.nodes[node].region].material);
}

/// Charge-neutral equilibrium densities for net doping N: (n, p).
template <typename S>
std::pair<S, S> neutral_densities(double net, const S& ni) {
  using std::sqrt;
  const double half = 0.5 * std::abs(net);
  const S major = half + sqrt(half * half + ni * ni);
  const S minor = ni * ni / major;
  return net >= 0.0 ? std::pair<S, S>{major, minor} : std::pair<S, S>{minor, major};
}

/// Electrostatic potential of a charge-neutral region with zero quasi-Fermi level.
template <typename S>
S builtin_potential(double net, const S& ni, const S& t) {
  using std::asinh;
  return phys::thermal_voltage(t) * asinh(net / (2.0 * ni));
}

/// Checks the positivity invariants of a state on a mesh.
inline void check_state(const Mesh& mesh, const DeviceState& s) {
  const std::size_t count = static_cast<std::size_t>(mesh.node_count());
  if (s.psi.size() != count || s.n.size() != count || s.p.size() != count || s.T.size() != count)
    throw StateError("state size does not match the mesh");
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(s.psi[i]) || !(s.T[i] > 0.0))
      throw StateError("non-finite potential or non-positive temperature at node " +
                       std::to_string(i));
    if (mesh.nodes[i].semiconductor && !(s.n[i] > 0.0 && s.p[i] > 0.0))
      throw StateError("non-positive carrier density at node " + std::to_string(i));
  }
}

/// Quasi-Fermi potentials φ_n = ψ − V_t ln(n/n_i), φ_p = ψ + V_t ln(p/n_i).
/// Insulator nodes report ψ.
inline std::pair<std::vector<double>, std::vector<double>> quasi_fermi_potentials(
    const Mesh& mesh, const MaterialTable& mats, const DeviceState& s) {
  std::vector<double> phin(s.psi), phip(s.psi);
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (!mesh.nodes[i].semiconductor) continue;
    const double ni = intrinsic_density(node_material(mesh, mats, i), s.T[i]);
    const double vt = phys::thermal_voltage(s.T[i]);
    phin[i] = s.psi[i] - vt * std::log(s.n[i] / ni);
    phip[i] = s.psi[i] + vt * std::log(s.p[i] / ni);
  }
  return {phin, phip};
}

}  // namespace ldsim
