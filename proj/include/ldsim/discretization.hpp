#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "ldsim/constants.hpp"
#include "ldsim/dual.hpp"
#include "ldsim/materials.hpp"
#include "ldsim/mesh.hpp"
#include "ldsim/state.hpp"

namespace ldsim {

// ---------------------------------------------------------------------------
// Scharfetter–Gummel building blocks

/// Bernoulli function B(x) = x / (eˣ − 1), overflow-free for large |x|.
template <typename S>
S bernoulli(const S& x) {
  using std::exp;
  using std::expm1;
  const double xv = value_of(x);
  if (std::abs(xv) < 1e-5) return 1.0 - x * 0.5 + x * x / 12.0;
  if (xv > 0.0) return x * exp(-x) / (-expm1(-x));
  return x / expm1(x);
}

/// Scharfetter–Gummel current density (A/cm²) from node i to node j.
///
/// `drive` is the potential drop ψ_j − ψ_i, optionally augmented by α·(T_j − T_i)
/// when thermal diffusion is enabled. Electron current is
/// (qµV_t/L)[B(Δ)c_j − B(−Δ)c_i]; the hole flux uses the mirrored form.
template <typename S>
S sg_current(Carrier carrier, const S& drive, const S& c_i, const S& c_j, const S& t_edge,
             const S& mu, double length_cm) {
  const S vt = phys::thermal_voltage(t_edge);
  const S x = drive / vt;
  const S pre = phys::q * mu * vt / length_cm;
  if (carrier == Carrier::electron) return pre * (bernoulli(x) * c_j - bernoulli(-x) * c_i);
  return pre * (bernoulli(x) * c_i - bernoulli(-x) * c_j);
}

/// Convenience overload matching the textbook argument list.
inline double edge_current(Carrier carrier, double psi_i, double psi_j, double c_i, double c_j,
                           double t_edge, double mu_edge, double length_cm) {
  return sg_current<double>(carrier, psi_j - psi_i, c_i, c_j, t_edge, mu_edge, length_cm);
}

// ---------------------------------------------------------------------------
// Options and unknown layout

enum class HeatModel { joule, thermodynamic };
enum class ThermalMode { isothermal, self_consistent };

struct PhysicsOptions {
  HeatModel heat_model = HeatModel::joule;
  ThermalMode thermal = ThermalMode::self_consistent;
  /// α∇T terms in the current densities and the matching Thomson heat.
  bool thermal_drift = false;
  /// Smoothing (V) of |Δψ| in the parallel-field estimate for mobility.
  double field_smoothing = 1e-9;

  bool operator==(const PhysicsOptions&) const = default;
};

inline const char* to_string(HeatModel m) { return m == HeatModel::joule ? "joule" : "thermodynamic"; }
inline const char* to_string(ThermalMode m) {
  return m == ThermalMode::isothermal ? "isothermal" : "self-consistent";
}

enum class Var { psi = 0, n = 1, p = 2, T = 3 };

/// Node-major, variable-minor ordering: (ψ, n, p, T) on semiconductor nodes,
/// (ψ, T) on insulator nodes.
struct UnknownMap {
  std::vector<int> offset;
  std::vector<char> semiconductor;
  int size = 0;

  explicit UnknownMap(const Mesh& mesh) {
    offset.resize(static_cast<std::size_t>(mesh.node_count()));
    semiconductor.resize(offset.size());
    for (int i = 0; i < mesh.node_count(); ++i) {
      offset[i] = size;
      semiconductor[i] = mesh.nodes[i].semiconductor ? 1 : 0;
      size += semiconductor[i] ? 4 : 2;
    }
  }
  UnknownMap() = default;

  int index(int node, Var v) const {
    if (semiconductor[node]) return offset[node] + static_cast<int>(v);
    if (v == Var::psi) return offset[node];
    if (v == Var::T) return offset[node] + 1;
    return -1;
  }
  int count(int node) const { return semiconductor[node] ? 4 : 2; }
};

inline Eigen::VectorXd pack_state(const UnknownMap& map, const DeviceState& s) {
  Eigen::VectorXd u(map.size);
  for (std::size_t i = 0; i < map.offset.size(); ++i) {
    const int n = static_cast<int>(i);
    u[map.index(n, Var::psi)] = s.psi[i];
    u[map.index(n, Var::T)] = s.T[i];
    if (map.semiconductor[i]) {
      u[map.index(n, Var::n)] = s.n[i];
      u[map.index(n, Var::p)] = s.p[i];
    }
  }
  return u;
}

inline void unpack_state(const UnknownMap& map, const Eigen::VectorXd& u, DeviceState& s) {
  for (std::size_t i = 0; i < map.offset.size(); ++i) {
    const int n = static_cast<int>(i);
    s.psi[i] = u[map.index(n, Var::psi)];
    s.T[i] = u[map.index(n, Var::T)];
    if (map.semiconductor[i]) {
      s.n[i] = u[map.index(n, Var::n)];
      s.p[i] = u[map.index(n, Var::p)];
    } else {
      s.n[i] = s.p[i] = 0.0;
    }
  }
}

/// Residual F(u), per-row magnitude scale, and ∂F/∂u.
struct ResidualSystem {
  UnknownMap unknowns;
  Eigen::VectorXd residual;
  /// Σ|additive terms| per row: the residual of row i is judged relative to it.
  Eigen::VectorXd scale;
  Eigen::SparseMatrix<double> jacobian;
  std::vector<char> dirichlet;

  /// max_i |F_i| / scale_i.
  double scaled_norm() const {
    double m = 0.0;
    for (Eigen::Index i = 0; i < residual.size(); ++i)
      m = std::max(m, std::abs(residual[i]) / std::max(scale[i], 1e-300));
    return m;
  }
};

/// Backward-Euler history term.
struct TransientStep {
  const DeviceState* previous = nullptr;
  double dt = 0.0;  // s
};

// ---------------------------------------------------------------------------
// Local kernels

template <typename S>
struct NodeVars {
  S psi, n, p, T;
};

template <typename S>
struct EdgeTerms {
  S displacement{};  // ε·coef·(ψ_b − ψ_a), C/cm
  S electron{};      // electron current a→b, A/cm
  S hole{};          // hole current a→b, A/cm
  S heat_flux{};     // k·coef·(T_b − T_a), W/cm
  S power{};         // dissipated power on the edge, W/cm
  double displacement_abs = 0.0;  // ε·coef·(|ψ_a| + |ψ_b| + V_ref)
  double electron_abs = 0.0;
  double hole_abs = 0.0;
  double heat_abs = 0.0;  // k·coef·(T_a + T_b) + |P|/2
};

/// Per-edge material data resolved once per mesh.
struct EdgeData {
  double eps_coef = 0.0;  // Σ ε₀ε_r·half_dual / L, F/cm
  std::array<const Material*, 2> side_material{};
  std::array<double, 2> side_coef{};  // half_dual / L
  int side_count = 0;
  const Material* semi = nullptr;  // carrier-transport material
  double semi_coef = 0.0;          // dual_semi / L
  double semi_dual = 0.0;          // cm
  double total_doping = 0.0;       // edge average, cm⁻³
  double length = 0.0;             // cm
};

class Discretization {
 public:
  /// Potential added to |ψ| terms in Poisson row scales, so rows near ψ = 0
  /// are judged against a thermal-voltage-sized reference instead of roundoff.
  static constexpr double potential_floor = 0.025852;

  Discretization(const Mesh& mesh, const MaterialTable& materials, PhysicsOptions options = {})
      : mesh_(&mesh), materials_(&materials), options_(options), map_(mesh) {
    node_material_.resize(static_cast<std::size_t>(mesh.node_count()));
    for (int i = 0; i < mesh.node_count(); ++i)
      node_material_[i] = &node_material(mesh, materials, i);
    edge_data_.reserve(mesh.edges.size());
    for (const auto& e : mesh.edges) {
      EdgeData d;
      d.length = e.length;
      for (int s = 0; s < e.side_count; ++s) {
        const Material& m = materials.at(mesh.cell_material(e.sides[s].cell));
        const double c = e.sides[s].half_dual / e.length;
        d.eps_coef += phys::eps0 * m.eps_r * c;
        d.side_material[d.side_count] = &m;
        d.side_coef[d.side_count] = c;
        ++d.side_count;
        if (m.is_semiconductor() && d.semi == nullptr) d.semi = &m;
      }
      d.semi_coef = e.coefficient_semi();
      d.semi_dual = e.dual_semi;
      if (!(mesh.nodes[e.a].semiconductor && mesh.nodes[e.b].semiconductor)) d.semi = nullptr;
      if (d.semi_dual <= 0.0) d.semi = nullptr;
      d.total_doping = 0.5 * (mesh.nodes[e.a].total_doping + mesh.nodes[e.b].total_doping);
      edge_data_.push_back(d);
    }

    electrical_contact_.assign(static_cast<std::size_t>(mesh.node_count()), -1);
    thermal_contact_.assign(static_cast<std::size_t>(mesh.node_count()), 0);
    for (int c = 0; c < static_cast<int>(mesh.contacts.size()); ++c) {
      const auto& mc = mesh.contacts[c];
      for (int n : mc.nodes) {
        if (is_thermal(mc.contact.kind)) thermal_contact_[n] = 1;
        if (!is_electrical(mc.contact.kind)) continue;
        if (electrical_contact_[n] >= 0 && electrical_contact_[n] != c)
          throw SpecError("node shared by electrical contacts '" +
                          mesh.contacts[electrical_contact_[n]].contact.name + "' and '" +
                          mc.contact.name + "'");
        electrical_contact_[n] = c;
      }
    }
    bool any_thermal = false;
    for (char t : thermal_contact_) any_thermal = any_thermal || t;
    if (!any_thermal) throw SpecError("mesh without thermal contact");
  }

  const Mesh& mesh() const { return *mesh_; }
  const MaterialTable& materials() const { return *materials_; }
  const PhysicsOptions& options() const { return options_; }
  const UnknownMap& unknowns() const { return map_; }
  const EdgeData& edge_data(int e) const { return edge_data_[e]; }
  int electrical_contact(int node) const { return electrical_contact_[node]; }
  bool thermal_contact(int node) const { return thermal_contact_[node] != 0; }
  bool temperature_fixed(int node) const {
    return options_.thermal == ThermalMode::isothermal || thermal_contact_[node] != 0;
  }

  // -- kernels ---------------------------------------------------------------

  template <typename S>
  EdgeTerms<S> edge_terms(int e, const NodeVars<S>& a, const NodeVars<S>& b) const {
    using std::log;
    using std::sqrt;
    const EdgeData& d = edge_data_[e];
    EdgeTerms<S> out;
    out.displacement = d.eps_coef * (b.psi - a.psi);
    out.displacement_abs = d.eps_coef * (std::abs(value_of(a.psi)) + std::abs(value_of(b.psi)) +
                                         potential_floor);

    const S t_edge = 0.5 * (a.T + b.T);
    S k_coef{};
    for (int s = 0; s < d.side_count; ++s)
      k_coef += 0.01 * thermal_conductivity(*d.side_material[s], materials_->isotope(), t_edge) *
                d.side_coef[s];

    if (d.semi != nullptr) {
      const Material& m = *d.semi;
      const MaterialOptions& mo = materials_->options;
      const S dpsi = b.psi - a.psi;
      const S e_par = sqrt(dpsi * dpsi + options_.field_smoothing * options_.field_smoothing) /
                      d.length;
      const S mu_n = mobility(m, Carrier::electron, e_par, t_edge, d.total_doping, mo);
      const S mu_p = mobility(m, Carrier::hole, e_par, t_edge, d.total_doping, mo);

      S drive_n = dpsi, drive_p = dpsi;
      S alpha_na{}, alpha_nb{}, alpha_pa{}, alpha_pb{};
      if (options_.thermal_drift) {
        alpha_na = thermoelectric_power(Carrier::electron, a.n, a.T, m);
        alpha_nb = thermoelectric_power(Carrier::electron, b.n, b.T, m);
        alpha_pa = thermoelectric_power(Carrier::hole, a.p, a.T, m);
        alpha_pb = thermoelectric_power(Carrier::hole, b.p, b.T, m);
        drive_n += 0.5 * (alpha_na + alpha_nb) * (b.T - a.T);
        drive_p += 0.5 * (alpha_pa + alpha_pb) * (b.T - a.T);
      }
      const S jn = sg_current(Carrier::electron, drive_n, a.n, b.n, t_edge, mu_n, d.length);
      const S jp = sg_current(Carrier::hole, drive_p, a.p, b.p, t_edge, mu_p, d.length);
      out.electron = jn * d.semi_dual;
      out.hole = jp * d.semi_dual;
      {
        const double vt = phys::thermal_voltage(value_of(t_edge));
        const double pre_n = phys::q * value_of(mu_n) * vt / d.length * d.semi_dual;
        const double pre_p = phys::q * value_of(mu_p) * vt / d.length * d.semi_dual;
        const double xn = value_of(drive_n) / vt, xp = value_of(drive_p) / vt;
        // The intrinsic-density flux floors the scale: rows whose carriers are
        // far below n_i are judged in absolute terms.
        const double ni_edge = value_of(intrinsic_density(m, t_edge));
        out.electron_abs =
            pre_n * (bernoulli(xn) * value_of(b.n) + bernoulli(-xn) * value_of(a.n) + ni_edge);
        out.hole_abs =
            pre_p * (bernoulli(xp) * value_of(a.p) + bernoulli(-xp) * value_of(b.p) + ni_edge);
      }

      // Joule power from quasi-Fermi potential drops: Σ I·Δφ = ∫ J²/σ dV.
      const S ni_a = intrinsic_density(m, a.T), ni_b = intrinsic_density(m, b.T);
      const S vt_a = phys::thermal_voltage(a.T), vt_b = phys::thermal_voltage(b.T);
      const S phin_a = a.psi - vt_a * log(a.n / ni_a), phin_b = b.psi - vt_b * log(b.n / ni_b);
      const S phip_a = a.psi + vt_a * log(a.p / ni_a), phip_b = b.psi + vt_b * log(b.p / ni_b);
      out.power = out.electron * (phin_a - phin_b) + out.hole * (phip_a - phip_b);
      if (options_.thermal_drift)  // Thomson heat −T·J·∇α
        out.power -= t_edge * (out.electron * (alpha_nb - alpha_na) + out.hole * (alpha_pb - alpha_pa));

      if (materials_->options.carrier_heat_conduction) {
        const S sigma = phys::q * (0.5 * (a.n + b.n) * mu_n + 0.5 * (a.p + b.p) * mu_p);
        k_coef += phys::lorenz * sigma * t_edge * d.semi_coef;
      }
    }
    out.heat_flux = k_coef * (b.T - a.T);
    out.heat_abs = value_of(k_coef) * (value_of(a.T) + value_of(b.T)) + 0.5 * std::abs(value_of(out.power));
    return out;
  }

  /// Volumetric terms of node i: Poisson charge, recombination, recombination heat.
  template <typename S>
  struct NodeTerms {
    S charge{};       // (q(p − n + N) + ρ_trap)·A, C/cm
    S recombination{};  // q·R·A_semi, A/cm
    S heat{};         // W/cm
    double charge_abs = 0.0;
    double recombination_abs = 0.0;
  };

  template <typename S>
  NodeTerms<S> node_terms(int i, const NodeVars<S>& v) const {
    const MeshNode& node = mesh_->nodes[i];
    NodeTerms<S> out;
    out.charge = S(node.trap_charge * node.area);
    out.charge_abs = std::abs(node.trap_charge * node.area);
    if (!node.semiconductor) return out;
    const Material& m = *node_material_[i];
    const double a = node.area_semi;
    out.charge += phys::q * (v.p - v.n + node.net_doping) * a;
    out.charge_abs += phys::q * a * (value_of(v.p) + value_of(v.n) + std::abs(node.net_doping));
    const S r = srh_recombination(v.n, v.p, v.T, m);
    out.recombination = phys::q * r * a;
    // Intrinsic generation current of the control volume floors the scale, so
    // rows with vanishing minority densities are judged in absolute terms.
    out.recombination_abs =
        std::abs(value_of(out.recombination)) +
        phys::q * a * value_of(intrinsic_density(m, v.T)) / (m.electron.tau + m.hole.tau);
    if (options_.heat_model == HeatModel::thermodynamic)
      out.heat = r * (phys::q * band_gap(m, v.T) + 3.0 * phys::k_boltzmann * v.T) * a;
    return out;
  }

  /// Boundary values (ψ, n, p) imposed at an ohmic node for the given temperature.
  template <typename S>
  NodeVars<S> ohmic_values(int i, double applied, const S& t) const {
    const Material& m = *node_material_[i];
    const S ni = intrinsic_density(m, t);
    const double net = mesh_->nodes[i].net_doping;
    const auto [n0, p0] = neutral_densities(net, ni);
    return {applied + builtin_potential(net, ni, t), n0, p0, t};
  }

  // -- assembly -------------------------------------------------------------

  /// Residual, scales and (optionally) Jacobian at `s`.
  ResidualSystem assemble(const DeviceState& s, bool with_jacobian = true,
                          const TransientStep* transient = nullptr) const {
    check_state(*mesh_, s);
    const Mesh& mesh = *mesh_;
    const int size = map_.size;
    ResidualSystem sys;
    sys.unknowns = map_;
    sys.residual = Eigen::VectorXd::Zero(size);
    sys.scale = Eigen::VectorXd::Zero(size);
    sys.dirichlet.assign(static_cast<std::size_t>(size), 0);
    std::vector<Eigen::Triplet<double>> trip;
    if (with_jacobian) trip.reserve(mesh.edges.size() * 40 + static_cast<std::size_t>(size) * 4);

    // Dirichlet rows.
    for (int i = 0; i < mesh.node_count(); ++i) {
      const int c = electrical_contact_[i];
      if (c >= 0) {
        sys.dirichlet[map_.index(i, Var::psi)] = 1;
        if (mesh.nodes[i].semiconductor) {
          sys.dirichlet[map_.index(i, Var::n)] = 1;
          sys.dirichlet[map_.index(i, Var::p)] = 1;
        }
      }
      if (temperature_fixed(i)) sys.dirichlet[map_.index(i, Var::T)] = 1;
    }

    auto add = [&](int row, double value, double magnitude) {
      if (row < 0 || sys.dirichlet[row]) return;
      sys.residual[row] += value;
      sys.scale[row] += magnitude;
    };

    // Edge fluxes.
    using D8 = Dual<8>;
    for (int e = 0; e < static_cast<int>(mesh.edges.size()); ++e) {
      const Edge& edge = mesh.edges[e];
      const int na = edge.a, nb = edge.b;
      const int rows_a[4] = {map_.index(na, Var::psi), map_.index(na, Var::n),
                             map_.index(na, Var::p), map_.index(na, Var::T)};
      const int rows_b[4] = {map_.index(nb, Var::psi), map_.index(nb, Var::n),
                             map_.index(nb, Var::p), map_.index(nb, Var::T)};
      if (!with_jacobian) {
        const auto t = edge_terms<double>(e, node_vars(s, na), node_vars(s, nb));
        emit_edge(t, rows_a, rows_b, add);
        continue;
      }
      const auto va = dual_vars<8>(s, na, 0), vb = dual_vars<8>(s, nb, 4);
      const EdgeTerms<D8> t = edge_terms<D8>(e, va, vb);
      EdgeTerms<double> tv;
      tv.displacement = t.displacement.v;
      tv.electron = t.electron.v;
      tv.hole = t.hole.v;
      tv.heat_flux = t.heat_flux.v;
      tv.power = t.power.v;
      tv.displacement_abs = t.displacement_abs;
      tv.electron_abs = t.electron_abs;
      tv.hole_abs = t.hole_abs;
      tv.heat_abs = t.heat_abs;
      emit_edge(tv, rows_a, rows_b, add);

      int cols[8];
      for (int k = 0; k < 4; ++k) {
        cols[k] = rows_a[k];
        cols[k + 4] = rows_b[k];
      }
      // Row contributions: a gets (+disp, +I_n, +I_p, +flux + P/2);
      //                    b gets (−disp, −I_n, −I_p, −flux + P/2).
      const D8 row_terms_a[4] = {t.displacement, t.electron, t.hole, t.heat_flux + 0.5 * t.power};
      const D8 row_terms_b[4] = {-t.displacement, -t.electron, -t.hole,
                                 -t.heat_flux + 0.5 * t.power};
      for (int r = 0; r < 4; ++r) {
        for (int side = 0; side < 2; ++side) {
          const int row = side == 0 ? rows_a[r] : rows_b[r];
          if (row < 0) continue;
          const D8& term = side == 0 ? row_terms_a[r] : row_terms_b[r];
          const bool dir = sys.dirichlet[row];
          for (int k = 0; k < 8; ++k) {
            if (cols[k] < 0) continue;
            // Explicit zeros keep the sparsity pattern structurally symmetric.
            trip.emplace_back(row, cols[k], dir ? 0.0 : term.d[k]);
          }
        }
      }
    }

    // Node terms and Dirichlet rows.
    using D4 = Dual<4>;
    for (int i = 0; i < mesh.node_count(); ++i) {
      const MeshNode& node = mesh.nodes[i];
      const int rows[4] = {map_.index(i, Var::psi), map_.index(i, Var::n), map_.index(i, Var::p),
                           map_.index(i, Var::T)};
      const NodeVars<D4> v = dual_vars<4>(s, i, 0);
      const NodeTerms<D4> t = node_terms<D4>(i, v);
      D4 rowv[4] = {t.charge, -t.recombination, t.recombination, t.heat};
      double mags[4] = {t.charge_abs, t.recombination_abs, t.recombination_abs,
                        std::abs(t.heat.v)};
      if (transient != nullptr && transient->previous != nullptr && transient->dt > 0.0) {
        const DeviceState& old = *transient->previous;
        const double dt = transient->dt;
        const Material& m = *node_material_[i];
        double cap = 0.0;
        for (int k = 0; k < node.quadrant_count; ++k)
          cap += materials_->at(mesh.cell_material(node.quadrants[k].cell)).heat_capacity *
                 node.quadrants[k].area;
        const D4 dT = -cap * (v.T - old.T[i]) / dt;
        rowv[3] += dT;
        mags[3] += std::abs(dT.v);
        if (node.semiconductor) {
          (void)m;
          const D4 dn = -phys::q * node.area_semi * (v.n - old.n[i]) / dt;
          const D4 dp = phys::q * node.area_semi * (v.p - old.p[i]) / dt;
          rowv[1] += dn;
          rowv[2] += dp;
          mags[1] += std::abs(dn.v);
          mags[2] += std::abs(dp.v);
        }
      }

      // Replace Dirichlet rows.
      const int c = electrical_contact_[i];
      if (c >= 0) {
        const Contact& contact = mesh.contacts[c].contact;
        const double applied = s.bias_of(contact.name);
        if (contact.kind == ContactKind::gate) {
          const double target = applied + contact.gate_offset;
          rowv[0] = v.psi - target;
          mags[0] = std::abs(s.psi[i]) + std::abs(target) + potential_floor;
        } else {
          const NodeVars<D4> bc = ohmic_values<D4>(i, applied, v.T);
          rowv[0] = v.psi - bc.psi;
          rowv[1] = v.n - bc.n;
          rowv[2] = v.p - bc.p;
          mags[0] = std::abs(s.psi[i]) + std::abs(bc.psi.v) + potential_floor;
          mags[1] = s.n[i] + bc.n.v;
          mags[2] = s.p[i] + bc.p.v;
        }
      }
      if (temperature_fixed(i)) {
        rowv[3] = v.T - mesh.ambient_temperature;
        mags[3] = s.T[i] + mesh.ambient_temperature;
      }

      for (int r = 0; r < 4; ++r) {
        const int row = rows[r];
        if (row < 0) continue;
        const bool dir = sys.dirichlet[row];
        if (dir) {
          sys.residual[row] = rowv[r].v;
          sys.scale[row] = mags[r];
        } else {
          sys.residual[row] += rowv[r].v;
          sys.scale[row] += mags[r];
        }
        if (!with_jacobian) continue;
        for (int k = 0; k < 4; ++k)
          if (rows[k] >= 0) trip.emplace_back(row, rows[k], rowv[r].d[k]);
      }
    }

    if (with_jacobian) {
      sys.jacobian.resize(size, size);
      sys.jacobian.setFromTriplets(trip.begin(), trip.end());
      sys.jacobian.makeCompressed();
    }
    return sys;
  }

  // -- derived quantities -----------------------------------------------------

  /// Per-edge currents (A/cm) and powers (W/cm).
  struct EdgeFlows {
    std::vector<double> electron, hole, power;
  };
  EdgeFlows edge_flows(const DeviceState& s) const {
    EdgeFlows f;
    const std::size_t ne = mesh_->edges.size();
    f.electron.resize(ne);
    f.hole.resize(ne);
    f.power.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
      const Edge& edge = mesh_->edges[e];
      const auto t = edge_terms<double>(static_cast<int>(e), node_vars(s, edge.a), node_vars(s, edge.b));
      f.electron[e] = t.electron;
      f.hole[e] = t.hole;
      f.power[e] = t.power;
    }
    return f;
  }

  /// Heat generation per node (W/cm³), averaged over the node's control volume.
  std::vector<double> heat_generation(const DeviceState& s) const {
    const Mesh& mesh = *mesh_;
    std::vector<double> h(static_cast<std::size_t>(mesh.node_count()), 0.0);
    const EdgeFlows f = edge_flows(s);
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
      h[mesh.edges[e].a] += 0.5 * f.power[e];
      h[mesh.edges[e].b] += 0.5 * f.power[e];
    }
    for (int i = 0; i < mesh.node_count(); ++i) {
      h[i] += node_terms<double>(i, node_vars(s, i)).heat;
      h[i] /= mesh.nodes[i].area;
    }
    return h;
  }

  /// Terminal currents (A/cm of width) flowing from each contact into the device.
  std::map<std::string, double> terminal_currents(const DeviceState& s) const {
    const Mesh& mesh = *mesh_;
    const EdgeFlows f = edge_flows(s);
    std::map<std::string, double> out;
    for (int c = 0; c < static_cast<int>(mesh.contacts.size()); ++c) {
      const auto& mc = mesh.contacts[c];
      if (!is_electrical(mc.contact.kind)) continue;
      double total = 0.0;
      for (int n : mc.nodes) {
        for (int e : mesh.nodes[n].edges) {
          const Edge& edge = mesh.edges[e];
          const double out_of_a = f.electron[e] + f.hole[e];
          total += edge.a == n ? out_of_a : -out_of_a;
        }
      }
      out[mc.contact.name] = total;
    }
    return out;
  }

 private:
  template <typename Add>
  void emit_edge(const EdgeTerms<double>& t, const int* rows_a, const int* rows_b, Add& add) const {
    add(rows_a[0], t.displacement, t.displacement_abs);
    add(rows_b[0], -t.displacement, t.displacement_abs);
    add(rows_a[1], t.electron, t.electron_abs);
    add(rows_b[1], -t.electron, t.electron_abs);
    add(rows_a[2], t.hole, t.hole_abs);
    add(rows_b[2], -t.hole, t.hole_abs);
    add(rows_a[3], t.heat_flux + 0.5 * t.power, t.heat_abs);
    add(rows_b[3], -t.heat_flux + 0.5 * t.power, t.heat_abs);
  }

  NodeVars<double> node_vars(const DeviceState& s, int i) const {
    return {s.psi[i], s.n[i], s.p[i], s.T[i]};
  }

  template <int N>
  NodeVars<Dual<N>> dual_vars(const DeviceState& s, int i, int first_slot) const {
    return {Dual<N>::variable(s.psi[i], first_slot), Dual<N>::variable(s.n[i], first_slot + 1),
            Dual<N>::variable(s.p[i], first_slot + 2), Dual<N>::variable(s.T[i], first_slot + 3)};
  }

  const Mesh* mesh_;
  const MaterialTable* materials_;
  PhysicsOptions options_;
  UnknownMap map_;
  std::vector<const Material*> node_material_;
  std::vector<EdgeData> edge_data_;
  std::vector<int> electrical_contact_;
  std::vector<char> thermal_contact_;
};

/// One-shot assembly helper.
inline ResidualSystem assemble_system(const DeviceState& s, const Mesh& mesh,
                                      const MaterialTable& materials,
                                      const PhysicsOptions& options = {},
                                      const TransientStep* transient = nullptr) {
  return Discretization(mesh, materials, options).assemble(s, true, transient);
}

inline std::vector<double> heat_generation(const DeviceState& s, const Mesh& mesh,
                                           const MaterialTable& materials, HeatModel model) {
  PhysicsOptions o;
  o.heat_model = model;
  return Discretization(mesh, materials, o).heat_generation(s);
}

}  // namespace ldsim
