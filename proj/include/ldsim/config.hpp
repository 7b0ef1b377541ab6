#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ldsim/device_spec.hpp"
#include "ldsim/discretization.hpp"
#include "ldsim/errors.hpp"
#include "ldsim/ldmos.hpp"
#include "ldsim/materials.hpp"
#include "ldsim/mesh.hpp"
#include "ldsim/solver.hpp"
#include "ldsim/studio.hpp"

namespace ldsim {

enum class ExperimentKind { equilibrium, iv_sweep, isotope_compare, profile_fit };
enum class ThermalSelection { on, off, both };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::equilibrium: return "equilibrium";
    case ExperimentKind::iv_sweep: return "iv-sweep";
    case ExperimentKind::isotope_compare: return "isotope-compare";
    case ExperimentKind::profile_fit: return "profile-fit";
  }
  return "?";
}

/// One entry of the experiment list. Only the fields of its kind are used
/// (and printed); the rest keep their defaults.
struct Experiment {
  ExperimentKind kind = ExperimentKind::equilibrium;
  std::string name;  // output subdirectory

  // iv-sweep
  std::vector<double> gate_biases;
  DrainRange drain;
  ThermalSelection thermal = ThermalSelection::on;
  std::string gate_contact = "gate";
  std::string drain_contact = "drain";
  bool dump_fields = false;

  // isotope-compare and profile-fit
  BiasSequence bias;
  std::string material = "Si";           // isotope-compare
  Isotope isotope = Isotope::natural;    // profile-fit
  std::optional<double> column_x_um;     // profile-fit; hotspot column when unset

  bool operator==(const Experiment&) const = default;
};

struct DeviceSection {
  enum class Kind { ldmos, spec };
  Kind kind = Kind::ldmos;
  LdmosParams ldmos;
  DeviceSpec spec;
  Isotope spec_isotope = Isotope::natural;  // isotope of a raw-spec device

  Isotope isotope() const { return kind == Kind::ldmos ? ldmos.isotope : spec_isotope; }
  DeviceSpec resolve() const { return kind == Kind::ldmos ? build_ldmos(ldmos) : spec; }
  bool operator==(const DeviceSection&) const = default;
};

struct RunPlan {
  DeviceSection device;
  MaterialTable materials = MaterialTable::defaults();
  PhysicsOptions physics;
  SolverConfig solver;
  std::vector<Experiment> experiments;
  std::string output_dir;  // empty: decided by the caller
  std::uint64_t seed = 0;  // consumed by property-test harnesses only

  MaterialTable material_table() const { return materials.with_isotope(device.isotope()); }
  bool operator==(const RunPlan&) const = default;
};

namespace detail {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

template <typename E>
using Names = std::vector<std::pair<const char*, E>>;

inline const Names<Isotope>& isotope_names() {
  static const Names<Isotope> n{{"natural", Isotope::natural}, {"si28", Isotope::si28}};
  return n;
}
inline const Names<ExperimentKind>& experiment_names() {
  static const Names<ExperimentKind> n{{"equilibrium", ExperimentKind::equilibrium},
                                       {"iv-sweep", ExperimentKind::iv_sweep},
                                       {"isotope-compare", ExperimentKind::isotope_compare},
                                       {"profile-fit", ExperimentKind::profile_fit}};
  return n;
}
inline const Names<ThermalSelection>& thermal_selection_names() {
  static const Names<ThermalSelection> n{
      {"on", ThermalSelection::on}, {"off", ThermalSelection::off}, {"both", ThermalSelection::both}};
  return n;
}
inline const Names<ThermalMode>& thermal_mode_names() {
  static const Names<ThermalMode> n{{"self-consistent", ThermalMode::self_consistent},
                                    {"isothermal", ThermalMode::isothermal}};
  return n;
}
inline const Names<CouplingMode>& coupling_names() {
  static const Names<CouplingMode> n{{"gummel-then-newton", CouplingMode::gummel_then_newton},
                                     {"full-newton", CouplingMode::full_newton}};
  return n;
}
inline const Names<HeatModel>& heat_model_names() {
  static const Names<HeatModel> n{{"joule", HeatModel::joule},
                                  {"thermodynamic", HeatModel::thermodynamic}};
  return n;
}
inline const Names<MaterialKind>& material_kind_names() {
  static const Names<MaterialKind> n{{"semiconductor", MaterialKind::semiconductor},
                                     {"insulator", MaterialKind::insulator}};
  return n;
}
inline const Names<Species>& species_names() {
  static const Names<Species> n{{"donor", Species::donor}, {"acceptor", Species::acceptor}};
  return n;
}
inline const Names<ProfileShape>& shape_names() {
  static const Names<ProfileShape> n{{"uniform", ProfileShape::uniform},
                                     {"gaussian", ProfileShape::gaussian}};
  return n;
}
inline const Names<ContactKind>& contact_kind_names() {
  static const Names<ContactKind> n{{"ohmic", ContactKind::ohmic},
                                    {"gate", ContactKind::gate},
                                    {"thermal", ContactKind::thermal},
                                    {"thermal+ohmic", ContactKind::thermal_ohmic}};
  return n;
}

template <typename E>
const char* name_of(E v, const Names<E>& names) {
  for (const auto& [s, e] : names)
    if (e == v) return s;
  return "?";
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Reads one JSON object, rejecting keys outside the allowed set.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigValidationError(where() + "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j_.items())
      if (!ok.count(item.key())) throw UnknownKeyError(item.key(), join(path_, item.key()));
  }

  const json* find(const char* key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const json& require(const char* key) const {
    const json* p = find(key);
    if (p == nullptr) throw ConfigValidationError(where() + "missing required key '" + key + "'");
    return *p;
  }
  std::string path(const char* key) const { return join(path_, key); }

  void number(const char* key, double& v) const {
    if (const json* p = find(key)) v = as_number(*p, path(key));
  }
  void optional_number(const char* key, std::optional<double>& v) const {
    if (const json* p = find(key)) v = p->is_null() ? std::nullopt : std::optional(as_number(*p, path(key)));
  }
  void integer(const char* key, int& v) const {
    if (const json* p = find(key)) {
      if (!p->is_number_integer()) throw ConfigValidationError(path(key) + ": expected an integer");
      const auto x = p->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) throw ConfigValidationError(path(key) + ": out of range");
      v = static_cast<int>(x);
    }
  }
  void boolean(const char* key, bool& v) const {
    if (const json* p = find(key)) {
      if (!p->is_boolean()) throw ConfigValidationError(path(key) + ": expected true or false");
      v = p->get<bool>();
    }
  }
  void string(const char* key, std::string& v) const {
    if (const json* p = find(key)) v = as_string(*p, path(key));
  }
  template <typename E>
  void choice(const char* key, E& v, const Names<E>& names) const {
    if (const json* p = find(key)) v = as_choice(*p, path(key), names);
  }

  static double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigValidationError(path + ": expected a number");
    return j.get<double>();
  }
  static std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigValidationError(path + ": expected a string");
    return j.get<std::string>();
  }
  template <typename E>
  static E as_choice(const json& j, const std::string& path, const Names<E>& names) {
    const std::string s = as_string(j, path);
    std::string all;
    for (const auto& [n, e] : names) {
      if (s == n) return e;
      all += (all.empty() ? "" : ", ") + std::string(n);
    }
    throw ConfigValidationError(path + ": '" + s + "' is not one of " + all);
  }
  static std::vector<double> as_numbers(const json& j, const std::string& path,
                                        std::size_t exact = 0) {
    if (!j.is_array()) throw ConfigValidationError(path + ": expected an array of numbers");
    if (exact != 0 && j.size() != exact)
      throw ConfigValidationError(path + ": expected " + std::to_string(exact) + " numbers");
    std::vector<double> v;
    for (std::size_t k = 0; k < j.size(); ++k)
      v.push_back(as_number(j[k], path + "[" + std::to_string(k) + "]"));
    return v;
  }
  static Rect as_rect(const json& j, const std::string& path) {
    const auto v = as_numbers(j, path, 4);
    return {v[0], v[1], v[2], v[3]};
  }

 private:
  std::string where() const { return path_.empty() ? "" : path_ + ": "; }
  const json& j_;
  std::string path_;
};

inline ojson rect_json(const Rect& r) { return ojson::array({r.x0, r.y0, r.x1, r.y1}); }

// -- sections ----------------------------------------------------------------

#define LDSIM_LDMOS_FIELDS(X)                                  \
  X("gate_length_um", gate_length)                             \
  X("locos_length_um", locos_length)                           \
  X("gate_oxide_nm", gate_oxide_nm)                            \
  X("field_oxide_um", field_oxide_um)                          \
  X("locos_recess_um", locos_recess)                           \
  X("field_plate_length_um", field_plate_length)               \
  X("substrate_depth_um", substrate_depth)                     \
  X("body_peak_cm3", body_peak)                                \
  X("drift_doping_cm3", drift_doping)                          \
  X("source_drain_doping_cm3", source_drain_doping)            \
  X("substrate_doping_cm3", substrate_doping)                  \
  X("source_length_um", source_length)                         \
  X("body_contact_length_um", body_contact_length)             \
  X("drain_length_um", drain_length)                           \
  X("drift_depth_um", drift_depth)                             \
  X("junction_depth_um", junction_depth)                       \
  X("body_sigma_x_um", body_sigma_x)                           \
  X("body_sigma_y_um", body_sigma_y)                           \
  X("gate_offset_V", gate_offset)                              \
  X("ambient_temperature_K", ambient_temperature)              \
  X("mesh_min_x_um", mesh_min_x)                               \
  X("mesh_max_x_um", mesh_max_x)                               \
  X("mesh_min_y_um", mesh_min_y)                               \
  X("mesh_max_y_um", mesh_max_y)

inline LdmosParams parse_ldmos(const json& j, const std::string& path) {
#define LDSIM_KEY(key, field) key,
  ObjectReader r(j, path, {LDSIM_LDMOS_FIELDS(LDSIM_KEY)});
#undef LDSIM_KEY
  LdmosParams p;
#define LDSIM_READ(key, field) r.number(key, p.field);
  LDSIM_LDMOS_FIELDS(LDSIM_READ)
#undef LDSIM_READ
  return p;
}

inline ojson print_ldmos(const LdmosParams& p) {
  ojson o = ojson::object();
#define LDSIM_WRITE(key, field) o[key] = p.field;
  LDSIM_LDMOS_FIELDS(LDSIM_WRITE)
#undef LDSIM_WRITE
  return o;
}

inline AxisHints parse_hints(const json& j, const std::string& path) {
  ObjectReader r(j, path, {"lines_um", "min_spacing_um", "max_spacing_um"});
  AxisHints h;
  if (const json* p = r.find("lines_um")) h.lines = ObjectReader::as_numbers(*p, r.path("lines_um"));
  r.number("min_spacing_um", h.min_spacing);
  r.number("max_spacing_um", h.max_spacing);
  return h;
}

inline ojson print_hints(const AxisHints& h) {
  ojson o = ojson::object();
  o["lines_um"] = h.lines;
  o["min_spacing_um"] = h.min_spacing;
  o["max_spacing_um"] = h.max_spacing;
  return o;
}

inline DeviceSpec parse_spec(const json& j, const std::string& path) {
  ObjectReader r(j, path, {"ambient_temperature_K", "regions", "doping", "contacts", "x_hints", "y_hints"});
  DeviceSpec s;
  r.number("ambient_temperature_K", s.ambient_temperature);
  auto array = [&](const char* key) -> const json& {
    const json& a = r.require(key);
    if (!a.is_array()) throw ConfigValidationError(r.path(key) + ": expected an array");
    return a;
  };
  const json& regions = array("regions");
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const std::string p = r.path("regions") + "[" + std::to_string(k) + "]";
    ObjectReader e(regions[k], p, {"material", "box_um"});
    Region reg;
    reg.material = ObjectReader::as_string(e.require("material"), e.path("material"));
    reg.box = ObjectReader::as_rect(e.require("box_um"), e.path("box_um"));
    s.regions.push_back(reg);
  }
  if (r.find("doping")) {
    const json& doping = array("doping");
    for (std::size_t k = 0; k < doping.size(); ++k) {
      const std::string p = r.path("doping") + "[" + std::to_string(k) + "]";
      ObjectReader e(doping[k], p, {"species", "shape", "peak_cm3", "box_um", "center_um", "sigma_um"});
      DopingProfile d;
      d.species = ObjectReader::as_choice(e.require("species"), e.path("species"), species_names());
      e.choice("shape", d.shape, shape_names());
      d.peak = ObjectReader::as_number(e.require("peak_cm3"), e.path("peak_cm3"));
      if (const json* b = e.find("box_um")) d.box = ObjectReader::as_rect(*b, e.path("box_um"));
      if (const json* c = e.find("center_um")) {
        const auto v = ObjectReader::as_numbers(*c, e.path("center_um"), 2);
        d.center_x = v[0], d.center_y = v[1];
      }
      if (const json* c = e.find("sigma_um")) {
        const auto v = ObjectReader::as_numbers(*c, e.path("sigma_um"), 2);
        d.sigma_x = v[0], d.sigma_y = v[1];
      }
      s.doping_profiles.push_back(d);
    }
  }
  const json& contacts = array("contacts");
  for (std::size_t k = 0; k < contacts.size(); ++k) {
    const std::string p = r.path("contacts") + "[" + std::to_string(k) + "]";
    ObjectReader e(contacts[k], p, {"name", "kind", "segments_um", "gate_offset_V"});
    Contact c;
    c.name = ObjectReader::as_string(e.require("name"), e.path("name"));
    c.kind = ObjectReader::as_choice(e.require("kind"), e.path("kind"), contact_kind_names());
    const json& segs = e.require("segments_um");
    if (!segs.is_array()) throw ConfigValidationError(e.path("segments_um") + ": expected an array");
    for (std::size_t m = 0; m < segs.size(); ++m)
      c.segments.push_back(ObjectReader::as_rect(segs[m], e.path("segments_um") + "[" + std::to_string(m) + "]"));
    e.number("gate_offset_V", c.gate_offset);
    s.contacts.push_back(c);
  }
  if (const json* h = r.find("x_hints")) s.x_hints = parse_hints(*h, r.path("x_hints"));
  if (const json* h = r.find("y_hints")) s.y_hints = parse_hints(*h, r.path("y_hints"));
  return s;
}

inline ojson print_spec(const DeviceSpec& s) {
  ojson o = ojson::object();
  o["ambient_temperature_K"] = s.ambient_temperature;
  o["regions"] = ojson::array();
  for (const auto& r : s.regions) o["regions"].push_back({{"material", r.material}, {"box_um", rect_json(r.box)}});
  o["doping"] = ojson::array();
  for (const auto& d : s.doping_profiles) {
    ojson e = ojson::object();
    e["species"] = name_of(d.species, species_names());
    e["shape"] = name_of(d.shape, shape_names());
    e["peak_cm3"] = d.peak;
    e["box_um"] = rect_json(d.box);
    e["center_um"] = {d.center_x, d.center_y};
    e["sigma_um"] = {d.sigma_x, d.sigma_y};
    o["doping"].push_back(e);
  }
  o["contacts"] = ojson::array();
  for (const auto& c : s.contacts) {
    ojson e = ojson::object();
    e["name"] = c.name;
    e["kind"] = name_of(c.kind, contact_kind_names());
    e["segments_um"] = ojson::array();
    for (const auto& seg : c.segments) e["segments_um"].push_back(rect_json(seg));
    e["gate_offset_V"] = c.gate_offset;
    o["contacts"].push_back(e);
  }
  o["x_hints"] = print_hints(s.x_hints);
  o["y_hints"] = print_hints(s.y_hints);
  return o;
}

inline void parse_carrier(const json& j, const std::string& path, CarrierParams& c) {
  ObjectReader r(j, path, {"mu0_cm2_Vs", "mu_temp_exp", "vsat_cm_s", "tau_s", "mu_min_cm2_Vs", "n_ref_cm3", "ct_alpha"});
  r.number("mu0_cm2_Vs", c.mu0);
  r.number("mu_temp_exp", c.mu_temp_exp);
  r.number("vsat_cm_s", c.vsat);
  r.number("tau_s", c.tau);
  r.number("mu_min_cm2_Vs", c.mu_min);
  r.number("n_ref_cm3", c.n_ref);
  r.number("ct_alpha", c.ct_alpha);
}

inline ojson print_carrier(const CarrierParams& c) {
  ojson o = ojson::object();
  o["mu0_cm2_Vs"] = c.mu0;
  o["mu_temp_exp"] = c.mu_temp_exp;
  o["vsat_cm_s"] = c.vsat;
  o["tau_s"] = c.tau;
  o["mu_min_cm2_Vs"] = c.mu_min;
  o["n_ref_cm3"] = c.n_ref;
  o["ct_alpha"] = c.ct_alpha;
  return o;
}

inline void parse_material(const json& j, const std::string& path, Material& m) {
  ObjectReader r(j, path,
                 {"kind", "eps_r", "electron", "hole", "nc300_cm3", "nv300_cm3", "ni300_cm3",
                  "eg_alpha_eV_K", "eg_beta_K", "k300_W_mK", "k300_natural_W_mK", "k300_si28_W_mK",
                  "k_temp_exp", "heat_capacity_J_cm3K"});
  r.choice("kind", m.kind, material_kind_names());
  r.number("eps_r", m.eps_r);
  if (const json* p = r.find("electron")) parse_carrier(*p, r.path("electron"), m.electron);
  if (const json* p = r.find("hole")) parse_carrier(*p, r.path("hole"), m.hole);
  r.number("nc300_cm3", m.nc300);
  r.number("nv300_cm3", m.nv300);
  r.number("ni300_cm3", m.ni300);
  r.number("eg_alpha_eV_K", m.eg_alpha);
  r.number("eg_beta_K", m.eg_beta);
  r.number("k300_W_mK", m.k300);
  if (const json* p = r.find("k300_natural_W_mK"))
    m.isotope_k300[Isotope::natural] = ObjectReader::as_number(*p, r.path("k300_natural_W_mK"));
  if (const json* p = r.find("k300_si28_W_mK"))
    m.isotope_k300[Isotope::si28] = ObjectReader::as_number(*p, r.path("k300_si28_W_mK"));
  r.number("k_temp_exp", m.k_temp_exp);
  r.number("heat_capacity_J_cm3K", m.heat_capacity);
}

inline ojson print_material(const Material& m) {
  ojson o = ojson::object();
  o["kind"] = name_of(m.kind, material_kind_names());
  o["eps_r"] = m.eps_r;
  o["electron"] = print_carrier(m.electron);
  o["hole"] = print_carrier(m.hole);
  o["nc300_cm3"] = m.nc300;
  o["nv300_cm3"] = m.nv300;
  o["ni300_cm3"] = m.ni300;
  o["eg_alpha_eV_K"] = m.eg_alpha;
  o["eg_beta_K"] = m.eg_beta;
  o["k300_W_mK"] = m.k300;
  if (auto it = m.isotope_k300.find(Isotope::natural); it != m.isotope_k300.end())
    o["k300_natural_W_mK"] = it->second;
  if (auto it = m.isotope_k300.find(Isotope::si28); it != m.isotope_k300.end())
    o["k300_si28_W_mK"] = it->second;
  o["k_temp_exp"] = m.k_temp_exp;
  o["heat_capacity_J_cm3K"] = m.heat_capacity;
  return o;
}

inline BiasSequence parse_bias(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigValidationError(path + ": expected an array of {contact, voltage_V}");
  BiasSequence b;
  for (std::size_t k = 0; k < j.size(); ++k) {
    ObjectReader e(j[k], path + "[" + std::to_string(k) + "]", {"contact", "voltage_V"});
    b.emplace_back(ObjectReader::as_string(e.require("contact"), e.path("contact")),
                   ObjectReader::as_number(e.require("voltage_V"), e.path("voltage_V")));
  }
  return b;
}

inline ojson print_bias(const BiasSequence& b) {
  ojson a = ojson::array();
  for (const auto& [c, v] : b) a.push_back({{"contact", c}, {"voltage_V", v}});
  return a;
}

inline Experiment parse_experiment(const json& j, const std::string& path, std::size_t index) {
  if (!j.is_object()) throw ConfigValidationError(path + ": expected an object");
  auto t = j.find("type");
  if (t == j.end()) throw ConfigValidationError(path + ": missing required key 'type'");
  Experiment e;
  e.kind = ObjectReader::as_choice(*t, join(path, "type"), experiment_names());
  switch (e.kind) {
    case ExperimentKind::equilibrium: {
      ObjectReader r(j, path, {"type", "name"});
      r.string("name", e.name);
      break;
    }
    case ExperimentKind::iv_sweep: {
      ObjectReader r(j, path, {"type", "name", "gate_biases_V", "drain_V", "thermal", "gate_contact",
                               "drain_contact", "dump_fields"});
      r.string("name", e.name);
      e.gate_biases = ObjectReader::as_numbers(r.require("gate_biases_V"), r.path("gate_biases_V"));
      ObjectReader d(r.require("drain_V"), r.path("drain_V"), {"start", "stop", "step"});
      d.number("start", e.drain.start);
      e.drain.stop = ObjectReader::as_number(d.require("stop"), d.path("stop"));
      d.number("step", e.drain.step);
      r.choice("thermal", e.thermal, thermal_selection_names());
      r.string("gate_contact", e.gate_contact);
      r.string("drain_contact", e.drain_contact);
      r.boolean("dump_fields", e.dump_fields);
      break;
    }
    case ExperimentKind::isotope_compare: {
      ObjectReader r(j, path, {"type", "name", "bias", "material"});
      r.string("name", e.name);
      e.bias = parse_bias(r.require("bias"), r.path("bias"));
      r.string("material", e.material);
      break;
    }
    case ExperimentKind::profile_fit: {
      ObjectReader r(j, path, {"type", "name", "bias", "isotope", "column_x_um"});
      r.string("name", e.name);
      e.bias = parse_bias(r.require("bias"), r.path("bias"));
      r.choice("isotope", e.isotope, isotope_names());
      r.optional_number("column_x_um", e.column_x_um);
      break;
    }
  }
  if (e.name.empty()) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02zu", index + 1);
    e.name = std::string(buf) + "-" + to_string(e.kind);
  }
  return e;
}

inline ojson print_experiment(const Experiment& e) {
  ojson o = ojson::object();
  o["type"] = to_string(e.kind);
  o["name"] = e.name;
  switch (e.kind) {
    case ExperimentKind::equilibrium:
      break;
    case ExperimentKind::iv_sweep:
      o["gate_biases_V"] = e.gate_biases;
      o["drain_V"] = {{"start", e.drain.start}, {"stop", e.drain.stop}, {"step", e.drain.step}};
      o["thermal"] = name_of(e.thermal, thermal_selection_names());
      o["gate_contact"] = e.gate_contact;
      o["drain_contact"] = e.drain_contact;
      o["dump_fields"] = e.dump_fields;
      break;
    case ExperimentKind::isotope_compare:
      o["bias"] = print_bias(e.bias);
      o["material"] = e.material;
      break;
    case ExperimentKind::profile_fit:
      o["bias"] = print_bias(e.bias);
      o["isotope"] = name_of(e.isotope, isotope_names());
      o["column_x_um"] = e.column_x_um ? ojson(*e.column_x_um) : ojson(nullptr);
      break;
  }
  return o;
}

inline bool safe_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
  return true;
}

}  // namespace detail

/// Checks cross-section invariants: the device builds and meshes, every region
/// material exists and is valid, and every contact an experiment names exists.
inline void validate_plan(const RunPlan& plan) {
  auto wrap = [](const char* where, const auto& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigValidationError(std::string(where) + ": " + e.what());
    }
  };
  DeviceSpec spec;
  Mesh mesh;
  wrap("device", [&] {
    spec = plan.device.resolve();
    mesh = build_mesh(spec, plan.materials);
  });
  wrap("materials", [&] {
    for (const auto& [name, m] : plan.materials.all()) validate_material(m);
    for (const auto& r : spec.regions) plan.materials.at(r.material);
    for (const auto& r : spec.regions) {
      const Material& m = plan.materials.at(r.material);
      if (!m.isotope_k300.empty() && !m.isotope_k300.count(plan.device.isotope()))
        throw ModelError("material '" + m.name + "' has no conductivity for " +
                         to_string(plan.device.isotope()));
    }
  });
  plan.solver.validate();
  if (!(plan.physics.field_smoothing > 0.0))
    throw ConfigValidationError("physics.field_smoothing_V must be positive");
  if (plan.experiments.empty()) throw ConfigValidationError("experiments: at least one experiment required");

  std::set<std::string> names;
  auto contact = [&](const std::string& c, const std::string& where) {
    if (!mesh.has_contact(c)) throw ConfigValidationError(where + ": unknown contact '" + c + "'");
  };
  for (std::size_t k = 0; k < plan.experiments.size(); ++k) {
    const Experiment& e = plan.experiments[k];
    const std::string where = "experiments[" + std::to_string(k) + "]";
    if (!detail::safe_name(e.name))
      throw ConfigValidationError(where + ": name must use letters, digits, '-', '_' or '.'");
    if (!names.insert(e.name).second)
      throw ConfigValidationError(where + ": duplicate experiment name '" + e.name + "'");
    switch (e.kind) {
      case ExperimentKind::equilibrium:
        break;
      case ExperimentKind::iv_sweep:
        if (e.gate_biases.empty()) throw ConfigValidationError(where + ": gate_biases_V is empty");
        wrap(where.c_str(), [&] { e.drain.values(); });
        contact(e.gate_contact, where);
        contact(e.drain_contact, where);
        if (e.gate_contact == e.drain_contact)
          throw ConfigValidationError(where + ": gate and drain contacts coincide");
        break;
      case ExperimentKind::isotope_compare:
      case ExperimentKind::profile_fit:
        for (const auto& [c, v] : e.bias) contact(c, where + ".bias");
        if (e.kind == ExperimentKind::isotope_compare) {
          if (!plan.materials.contains(e.material))
            throw ConfigValidationError(where + ": unknown material '" + e.material + "'");
          const Material& m = plan.materials.at(e.material);
          if (!m.isotope_k300.count(Isotope::natural) || !m.isotope_k300.count(Isotope::si28))
            throw ConfigValidationError(where + ": material '" + e.material +
                                        "' lacks natural and Si-28 conductivities");
        }
        if (e.kind == ExperimentKind::profile_fit && e.column_x_um &&
            !(*e.column_x_um >= mesh.x_um.front() && *e.column_x_um <= mesh.x_um.back()))
          throw ConfigValidationError(where + ": column_x_um outside the device");
        break;
    }
  }
}

/// Parses and validates a JSON run plan; unspecified values take their defaults.
inline RunPlan parse_config(const std::string& text) {
  using detail::json;
  using detail::ObjectReader;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') ++line, column = 1;
      else ++column;
    }
    std::string detail = e.what();
    if (auto c = detail.find("column"); c != std::string::npos)
      if (auto colon = detail.find(": ", c); colon != std::string::npos) detail = detail.substr(colon + 2);
    throw ConfigSyntaxError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + detail,
                            line, column);
  }

  ObjectReader r(root, "", {"device", "materials", "physics", "solver", "experiments", "output_dir", "seed"});
  RunPlan plan;

  {
    ObjectReader d(r.require("device"), "device", {"isotope", "ldmos", "spec"});
    Isotope iso = Isotope::natural;
    d.choice("isotope", iso, detail::isotope_names());
    const json* ld = d.find("ldmos");
    const json* sp = d.find("spec");
    if ((ld != nullptr) == (sp != nullptr))
      throw ConfigValidationError("device: give exactly one of 'ldmos' or 'spec'");
    if (ld != nullptr) {
      plan.device.kind = DeviceSection::Kind::ldmos;
      plan.device.ldmos = detail::parse_ldmos(*ld, "device.ldmos");
      plan.device.ldmos.isotope = iso;
    } else {
      plan.device.kind = DeviceSection::Kind::spec;
      plan.device.spec = detail::parse_spec(*sp, "device.spec");
      plan.device.spec_isotope = iso;
    }
  }

  if (const json* m = r.find("materials")) {
    if (!m->is_object()) throw ConfigValidationError("materials: expected an object");
    for (const auto& item : m->items()) {
      const std::string path = "materials." + item.key();
      if (item.key() == "options") {
        ObjectReader o(item.value(), path, {"doping_dependent_mobility", "carrier_heat_conduction"});
        o.boolean("doping_dependent_mobility", plan.materials.options.doping_dependent_mobility);
        o.boolean("carrier_heat_conduction", plan.materials.options.carrier_heat_conduction);
        continue;
      }
      if (!plan.materials.contains(item.key())) {
        if (!item.value().is_object() || !item.value().contains("kind"))
          throw ConfigValidationError(path + ": a new material must state its 'kind'");
        Material fresh;
        fresh.name = item.key();
        plan.materials.add(fresh);
      }
      detail::parse_material(item.value(), path, plan.materials.at_mut(item.key()));
    }
  }

  if (const json* p = r.find("physics")) {
    ObjectReader o(*p, "physics", {"heat_model", "thermal_drift", "field_smoothing_V"});
    o.choice("heat_model", plan.physics.heat_model, detail::heat_model_names());
    o.boolean("thermal_drift", plan.physics.thermal_drift);
    o.number("field_smoothing_V", plan.physics.field_smoothing);
  }

  if (const json* s = r.find("solver")) {
    ObjectReader o(*s, "solver",
                   {"abs_tolerance", "update_tolerance", "max_iterations", "initial_damping", "min_damping",
                    "max_potential_step_V", "max_bias_step_V", "max_halvings", "polish_steps", "coupling",
                    "thermal"});
    SolverConfig& c = plan.solver;
    o.number("abs_tolerance", c.abs_tolerance);
    o.number("update_tolerance", c.update_tolerance);
    o.integer("max_iterations", c.max_iterations);
    o.number("initial_damping", c.initial_damping);
    o.number("min_damping", c.min_damping);
    o.number("max_potential_step_V", c.max_potential_step);
    o.number("max_bias_step_V", c.max_bias_step);
    o.integer("max_halvings", c.max_halvings);
    o.integer("polish_steps", c.polish_steps);
    o.choice("coupling", c.coupling, detail::coupling_names());
    o.choice("thermal", c.thermal, detail::thermal_mode_names());
  }
  plan.physics.thermal = plan.solver.thermal;

  const json& ex = r.require("experiments");
  if (!ex.is_array()) throw ConfigValidationError("experiments: expected an array");
  for (std::size_t k = 0; k < ex.size(); ++k)
    plan.experiments.push_back(detail::parse_experiment(ex[k], "experiments[" + std::to_string(k) + "]", k));

  r.string("output_dir", plan.output_dir);
  if (const json* s = r.find("seed")) {
    if (!s->is_number_unsigned()) throw ConfigValidationError("seed: expected a non-negative integer");
    plan.seed = s->get<std::uint64_t>();
  }

  validate_plan(plan);
  return plan;
}

/// Prints a plan so that parse_config(print_config(plan)) == plan.
inline std::string print_config(const RunPlan& plan) {
  using detail::ojson;
  ojson root = ojson::object();
  ojson dev = ojson::object();
  dev["isotope"] = detail::name_of(plan.device.isotope(), detail::isotope_names());
  if (plan.device.kind == DeviceSection::Kind::ldmos) dev["ldmos"] = detail::print_ldmos(plan.device.ldmos);
  else dev["spec"] = detail::print_spec(plan.device.spec);
  root["device"] = dev;

  ojson mats = ojson::object();
  mats["options"] = {{"doping_dependent_mobility", plan.materials.options.doping_dependent_mobility},
                     {"carrier_heat_conduction", plan.materials.options.carrier_heat_conduction}};
  for (const auto& [name, m] : plan.materials.all()) mats[name] = detail::print_material(m);
  root["materials"] = mats;

  root["physics"] = {{"heat_model", detail::name_of(plan.physics.heat_model, detail::heat_model_names())},
                     {"thermal_drift", plan.physics.thermal_drift},
                     {"field_smoothing_V", plan.physics.field_smoothing}};
  const SolverConfig& c = plan.solver;
  ojson solver = ojson::object();
  solver["abs_tolerance"] = c.abs_tolerance;
  solver["update_tolerance"] = c.update_tolerance;
  solver["max_iterations"] = c.max_iterations;
  solver["initial_damping"] = c.initial_damping;
  solver["min_damping"] = c.min_damping;
  solver["max_potential_step_V"] = c.max_potential_step;
  solver["max_bias_step_V"] = c.max_bias_step;
  solver["max_halvings"] = c.max_halvings;
  solver["polish_steps"] = c.polish_steps;
  solver["coupling"] = detail::name_of(c.coupling, detail::coupling_names());
  solver["thermal"] = detail::name_of(c.thermal, detail::thermal_mode_names());
  root["solver"] = solver;

  root["experiments"] = ojson::array();
  for (const auto& e : plan.experiments) root["experiments"].push_back(detail::print_experiment(e));
  root["output_dir"] = plan.output_dir;
  root["seed"] = plan.seed;
  return root.dump(2) + "\n";
}

inline RunPlan load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ldsim
