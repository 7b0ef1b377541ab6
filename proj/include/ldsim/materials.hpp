#pragma once

#include <cmath>
#include <map>
#include <string>

#include "ldsim/constants.hpp"
#include "ldsim/dual.hpp"
#include "ldsim/errors.hpp"

namespace ldsim {

enum class MaterialKind { semiconductor, insulator };
enum class Carrier { electron, hole };
enum class Isotope { natural, si28 };

inline const char* to_string(Isotope v) { return v == Isotope::natural ? "natural-Si" : "Si-28"; }

struct CarrierParams {
  double mu0 = 0.0;          // cm²/V·s at 300 K
  double mu_temp_exp = 0.0;  // µ_low ∝ (T/300)^-exp
  double vsat = 0.0;         // cm/s
  double tau = 0.0;          // SRH lifetime, s
  // Caughey–Thomas doping term, used only when doping_dependent_mobility is set.
  double mu_min = 0.0;
  double n_ref = 1.0;
  double ct_alpha = 1.0;

  bool operator==(const CarrierParams&) const = default;
};

struct Material {
  std::string name;
  MaterialKind kind = MaterialKind::insulator;
  double eps_r = 1.0;

  CarrierParams electron;
  CarrierParams hole;
  double nc300 = 0.0;       // cm⁻³
  double nv300 = 0.0;       // cm⁻³
  double ni300 = 0.0;       // cm⁻³, pins the 300 K gap
  double eg_alpha = 0.0;    // Varshni α, eV/K
  double eg_beta = 0.0;     // Varshni β, K

  double k300 = 0.0;        // W/m·K, used when no isotope variants are listed
  std::map<Isotope, double> isotope_k300;
  double k_temp_exp = 0.0;  // γ in k ∝ (T/300)^-γ
  double heat_capacity = 0.0;  // J/cm³·K

  bool is_semiconductor() const { return kind == MaterialKind::semiconductor; }
  const CarrierParams& carrier(Carrier c) const { return c == Carrier::electron ? electron : hole; }

  /// Band gap at 300 K implied by (N_c, N_v, n_i) at 300 K.
  double eg300() const {
    const double vt = phys::thermal_voltage(300.0);
    return 2.0 * vt * std::log(std::sqrt(nc300 * nv300) / ni300);
  }

  bool operator==(const Material&) const = default;
};

struct MaterialOptions {
  bool doping_dependent_mobility = false;
  /// Adds electron/hole gas conduction K_n + K_p = L₀·σ·T to the lattice term.
  bool carrier_heat_conduction = false;

  bool operator==(const MaterialOptions&) const = default;
};

inline Material default_silicon() {
  Material m;
  m.name = "Si";
  m.kind = MaterialKind::semiconductor;
  m.eps_r = 11.7;
  m.electron = {1417.0, 2.2, 1.07e7, 1e-5, 52.2, 9.68e16, 0.68};
  m.hole = {470.5, 2.1, 8.37e6, 1e-5, 44.9, 2.23e17, 0.719};
  m.nc300 = 2.8e19;
  m.nv300 = 1.04e19;
  m.ni300 = 1.08e10;
  m.eg_alpha = 4.73e-4;
  m.eg_beta = 636.0;
  m.k300 = 148.0;
  m.isotope_k300 = {{Isotope::natural, 148.0}, {Isotope::si28, 200.0}};
  m.k_temp_exp = 1.3;
  m.heat_capacity = 1.63;
  return m;
}

inline Material default_oxide() {
  Material m;
  m.name = "SiO2";
  m.kind = MaterialKind::insulator;
  m.eps_r = 3.9;
  m.k300 = 1.4;
  m.k_temp_exp = 0.0;
  m.heat_capacity = 1.67;
  return m;
}

/// Checks positivity of every parameter the models divide by or raise to a power.
inline void validate_material(const Material& m) {
  auto positive = [&](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ModelError("material '" + m.name + "': " + what + " must be positive");
  };
  positive(m.eps_r, "eps_r");
  positive(m.heat_capacity, "heat_capacity");
  if (!(m.k_temp_exp >= 0.0)) throw ModelError("material '" + m.name + "': k_temp_exp must be >= 0");
  if (m.isotope_k300.empty()) positive(m.k300, "k300");
  for (const auto& [variant, k] : m.isotope_k300) positive(k, "isotope k300");
  auto nat = m.isotope_k300.find(Isotope::natural), si28 = m.isotope_k300.find(Isotope::si28);
  if (nat != m.isotope_k300.end() && si28 != m.isotope_k300.end() && si28->second < nat->second)
    throw ModelError("material '" + m.name + "': Si-28 k300 below natural k300");
  if (!m.is_semiconductor()) return;
  for (const CarrierParams* c : {&m.electron, &m.hole}) {
    positive(c->mu0, "mu0");
    positive(c->vsat, "vsat");
    positive(c->tau, "tau");
    positive(c->n_ref, "n_ref");
    if (!(c->mu_temp_exp >= 0.0)) throw ModelError("material '" + m.name + "': mobility exponent < 0");
    if (!(c->mu_min >= 0.0 && c->mu_min <= c->mu0))
      throw ModelError("material '" + m.name + "': mu_min must lie in [0, mu0]");
  }
  positive(m.nc300, "nc300");
  positive(m.nv300, "nv300");
  positive(m.ni300, "ni300");
  if (!(m.eg_alpha >= 0.0 && m.eg_beta > 0.0))
    throw ModelError("material '" + m.name + "': Varshni parameters out of range");
}

/// Immutable set of materials plus the isotope variant selected for the run.
class MaterialTable {
 public:
  MaterialTable() = default;

  static MaterialTable defaults() {
    MaterialTable t;
    t.add(default_silicon());
    t.add(default_oxide());
    return t;
  }

  void add(Material m) { materials_[m.name] = std::move(m); }

  const Material& at(const std::string& name) const {
    auto it = materials_.find(name);
    if (it == materials_.end()) throw ModelError("unknown material '" + name + "'");
    return it->second;
  }
  Material& at_mut(const std::string& name) {
    auto it = materials_.find(name);
    if (it == materials_.end()) throw ModelError("unknown material '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return materials_.count(name) != 0; }
  const std::map<std::string, Material>& all() const { return materials_; }

  Isotope isotope() const { return isotope_; }
  MaterialTable with_isotope(Isotope v) const {
    MaterialTable t = *this;
    t.isotope_ = v;
    return t;
  }

  MaterialOptions options;

  bool operator==(const MaterialTable&) const = default;

 private:
  std::map<std::string, Material> materials_;
  Isotope isotope_ = Isotope::natural;
};

// ---------------------------------------------------------------------------
// Model evaluations. All are pure; the templates accept double or Dual<N>.

inline void check_temperature_range(double t) {
  if (!(t >= 200.0 && t <= 700.0))
    throw ModelError("intrinsic density requested at T = " + std::to_string(t) +
                     " K, outside 200-700 K");
}

template <typename S>
S band_gap(const Material& m, const S& t) {
  const double ref = 300.0 * 300.0 / (300.0 + m.eg_beta);
  return m.eg300() - m.eg_alpha * (t * t / (t + m.eg_beta) - ref);
}

template <typename S>
S conduction_dos(const Material& m, const S& t) {
  using std::pow;
  return m.nc300 * pow(t / 300.0, 1.5);
}
template <typename S>
S valence_dos(const Material& m, const S& t) {
  using std::pow;
  return m.nv300 * pow(t / 300.0, 1.5);
}

/// n_i(T) = √(N_c N_v)·exp(−E_g / 2k_BT), with E_g pinned so n_i(300 K) = ni300.
template <typename S>
S intrinsic_density(const Material& m, const S& t) {
  using std::exp;
  using std::pow;
  using std::sqrt;
  check_temperature_range(value_of(t));
  const S vt = phys::thermal_voltage(t);
  return sqrt(conduction_dos(m, t) * valence_dos(m, t)) * exp(-band_gap(m, t) / (2.0 * vt));
}

/// Low-field mobility including lattice-temperature (and optionally doping) dependence.
template <typename S>
S low_field_mobility(const Material& m, Carrier c, const S& t, double n_total,
                     const MaterialOptions& opt = {}) {
  using std::pow;
  const CarrierParams& cp = m.carrier(c);
  double mu300 = cp.mu0;
  if (opt.doping_dependent_mobility)
    mu300 = cp.mu_min + (cp.mu0 - cp.mu_min) / (1.0 + std::pow(n_total / cp.n_ref, cp.ct_alpha));
  return mu300 * pow(t / 300.0, -cp.mu_temp_exp);
}

/// Field-saturated mobility µ = µ_low / (1 + µ_low·E/v_sat).
template <typename S, typename SE>
S mobility(const Material& m, Carrier c, const SE& e_parallel, const S& t, double n_total,
           const MaterialOptions& opt = {}) {
  const S mu_low = low_field_mobility(m, c, t, n_total, opt);
  return mu_low / (1.0 + mu_low * e_parallel / m.carrier(c).vsat);
}

inline double saturation_field(const Material& m, Carrier c, double t, double n_total,
                               const MaterialOptions& opt = {}) {
  return m.carrier(c).vsat / low_field_mobility(m, c, t, n_total, opt);
}

/// Lattice thermal conductivity in W/m·K.
template <typename S>
S thermal_conductivity(const Material& m, Isotope variant, const S& t) {
  using std::pow;
  double k300 = m.k300;
  if (!m.isotope_k300.empty()) {
    auto it = m.isotope_k300.find(variant);
    if (it == m.isotope_k300.end())
      throw ModelError(std::string("material '") + m.name + "' has no isotope variant " +
                       to_string(variant));
    k300 = it->second;
  }
  if (m.k_temp_exp == 0.0) return S(k300);
  return k300 * pow(t / 300.0, -m.k_temp_exp);
}

/// Net SRH recombination rate (negative means net generation), midgap trap.
template <typename S>
S srh_recombination(const S& n, const S& p, const S& t, const Material& m) {
  const S ni = intrinsic_density(m, t);
  return (p * n - ni * ni) / (m.hole.tau * (n + ni) + m.electron.tau * (p + ni));
}

/// Kinetic thermoelectric power in V/K.
template <typename S>
S thermoelectric_power(Carrier c, const S& density, const S& t, const Material& m) {
  using std::log;
  if (c == Carrier::electron) return -phys::kb_over_q * (2.5 - log(density / conduction_dos(m, t)));
  return phys::kb_over_q * (2.5 - log(density / valence_dos(m, t)));
}

}  // namespace ldsim
