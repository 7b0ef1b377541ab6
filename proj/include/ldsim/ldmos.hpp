#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ldsim/device_spec.hpp"
#include "ldsim/errors.hpp"
#include "ldsim/materials.hpp"

namespace ldsim {

/// Parameters of the planar LDMOS test structure (lengths in µm, dopings in cm⁻³).
///
/// Lateral layout, left to right: p+ body contact, n+ source, channel under the
/// thin gate oxide (gate edge at x = 0), field oxide of length `locos_length`
/// recessed `locos_recess` into the silicon, n+ drain. The gate steps up onto
/// the field oxide as a plate of `field_plate_length`. The n drift region is
/// uniform from the gate edge to the drain; the p-body is a gaussian centred
/// under the source, wide enough that the channel pinches off near the field
/// oxide edge. Heat leaves through the substrate contact at the bottom.
struct LdmosParams {
  double gate_length = 2.6;
  double locos_length = 3.5;
  double gate_oxide_nm = 25.0;
  double field_oxide_um = 0.5;
  double locos_recess = 0.22;  // part of the field oxide grown below the surface, µm
  double field_plate_length = 1.0;  // gate extension over the field oxide, µm
  double substrate_depth = 20.0;
  double body_peak = 1e17;
  double drift_doping = 2e16;
  double source_drain_doping = 1e20;
  double substrate_doping = 1e15;
  Isotope isotope = Isotope::natural;

  double source_length = 1.0;
  double body_contact_length = 0.5;
  double drain_length = 1.0;
  double drift_depth = 3.0;
  double junction_depth = 0.5;  // n+ source/drain, deeper than the LOCOS recess
  double body_sigma_x = 1.7;
  double body_sigma_y = 0.7;
  double gate_offset = 0.55;  // n+ poly work-function term, V
  double ambient_temperature = 300.0;

  double mesh_min_x = 0.1;
  double mesh_max_x = 0.5;
  double mesh_min_y = 0.04;
  double mesh_max_y = 3.0;

  bool operator==(const LdmosParams&) const = default;

  double gate_edge() const { return 0.0; }
  double locos_start() const { return gate_length; }
  double locos_end() const { return gate_length + locos_length; }
  double x_min() const { return -(source_length + body_contact_length); }
  double x_max() const { return locos_end() + drain_length; }
};

inline void validate(const LdmosParams& p) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw SpecError(std::string(what) + " must be positive");
  };
  positive(p.gate_length, "gate length");
  positive(p.locos_length, "LOCOS length");
  positive(p.gate_oxide_nm, "gate oxide thickness");
  positive(p.field_oxide_um, "field oxide thickness");
  positive(p.substrate_depth, "substrate depth");
  positive(p.body_peak, "body doping");
  positive(p.drift_doping, "drift doping");
  positive(p.source_drain_doping, "source/drain doping");
  positive(p.substrate_doping, "substrate doping");
  positive(p.source_length, "source length");
  positive(p.body_contact_length, "body contact length");
  positive(p.drain_length, "drain length");
  positive(p.drift_depth, "drift depth");
  positive(p.junction_depth, "junction depth");
  positive(p.body_sigma_x, "body sigma_x");
  positive(p.body_sigma_y, "body sigma_y");
  positive(p.ambient_temperature, "ambient temperature");
  positive(p.mesh_min_x, "mesh_min_x");
  positive(p.mesh_min_y, "mesh_min_y");
  if (p.mesh_max_x < p.mesh_min_x || p.mesh_max_y < p.mesh_min_y)
    throw SpecError("maximum mesh spacing below minimum spacing");
  if (p.locos_recess < 0.0 || p.locos_recess >= p.field_oxide_um)
    throw SpecError("LOCOS recess must lie within the field oxide thickness");
  if (p.gate_oxide_nm * 1e-3 >= p.field_oxide_um - p.locos_recess)
    throw SpecError("gate oxide thicker than the field oxide above the surface");
  if (p.locos_recess >= p.drift_depth)
    throw SpecError("LOCOS recess reaches below the drift region");
  if (p.field_plate_length < 0.0 || p.field_plate_length >= p.locos_length)
    throw SpecError("field plate must end before the drain side of the field oxide");
  if (p.junction_depth >= p.drift_depth)
    throw SpecError("source/drain junction deeper than the drift region");
  if (p.drift_depth >= p.substrate_depth)
    throw SpecError("drift region deeper than the substrate");
}

/// Parts of `a` outside `b` (up to four rectangles).
inline std::vector<Rect> subtract(const Rect& a, const Rect& b) {
  const Rect c{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
               std::min(a.y1, b.y1)};
  if (!(c.x1 > c.x0 && c.y1 > c.y0)) return {a};
  std::vector<Rect> out;
  auto keep = [&](Rect r) {
    if (r.x1 > r.x0 && r.y1 > r.y0) out.push_back(r);
  };
  keep({a.x0, a.y0, c.x0, a.y1});
  keep({c.x1, a.y0, a.x1, a.y1});
  keep({c.x0, a.y0, c.x1, c.y0});
  keep({c.x0, c.y1, c.x1, a.y1});
  return out;
}

/// Declarative device description of the LDMOS. y = 0 is the silicon surface
/// under the gate; oxide occupies y < 0 and the recessed field-oxide step.
inline DeviceSpec build_ldmos(const LdmosParams& p) {
  validate(p);
  const double x0 = p.x_min(), x1 = p.x_max();
  const double xs = -p.source_length;  // body/source boundary
  const double xl = p.locos_start(), xd = p.locos_end();
  const double tox = p.gate_oxide_nm * 1e-3;
  const double r = p.locos_recess, top = r - p.field_oxide_um;
  const Rect recess{xl, 0.0, xd, r};

  DeviceSpec s;
  s.ambient_temperature = p.ambient_temperature;
  for (const Rect& si : subtract({x0, 0.0, x1, p.substrate_depth}, recess))
    s.regions.push_back({"Si", si});
  s.regions.push_back({"SiO2", {x0, top, 0.0, 0.0}});   // over source and body
  s.regions.push_back({"SiO2", {0.0, -tox, xl, 0.0}});  // gate oxide
  s.regions.push_back({"SiO2", {0.0, top, xl, -tox}});  // cap above the gate electrode
  s.regions.push_back({"SiO2", {xl, top, xd, r}});      // LOCOS
  s.regions.push_back({"SiO2", {xd, top, x1, 0.0}});    // over drain

  auto uniform = [&](Species sp, double conc, Rect box) {
    for (const Rect& piece : subtract(box, recess))
      s.doping_profiles.push_back(DopingProfile::uniform(sp, conc, piece));
  };
  using S = Species;
  uniform(S::acceptor, p.substrate_doping, {x0, 0.0, x1, p.substrate_depth});
  uniform(S::donor, p.drift_doping, {0.0, 0.0, x1, p.drift_depth});
  s.doping_profiles.push_back(DopingProfile::gaussian(S::acceptor, p.body_peak, 0.5 * xs, 0.0,
                                                      p.body_sigma_x, p.body_sigma_y));
  uniform(S::acceptor, 0.1 * p.source_drain_doping, {x0, 0.0, xs, p.junction_depth});
  uniform(S::donor, p.source_drain_doping, {xs, 0.0, 0.0, p.junction_depth});
  uniform(S::donor, p.source_drain_doping, {xd, 0.0, x1, p.junction_depth});

  std::vector<Rect> gate{{0.0, -tox, xl, -tox}};
  if (p.field_plate_length > 0.0) {
    gate.push_back({xl, top, xl, -tox});
    gate.push_back({xl, top, xl + p.field_plate_length, top});
  }
  const double source_contact_end = 0.3 * xs;
  const double drain_contact_start = xd + 0.2 * p.drain_length;
  s.contacts = {
      {"source", {{x0, 0.0, source_contact_end, 0.0}}, ContactKind::ohmic, 0.0},
      {"gate", gate, ContactKind::gate, p.gate_offset},
      {"drain", {{drain_contact_start, 0.0, x1, 0.0}}, ContactKind::ohmic, 0.0},
      {"substrate", {{x0, p.substrate_depth, x1, p.substrate_depth}}, ContactKind::thermal_ohmic,
       0.0},
  };

  s.x_hints = {{xs, 0.0, xl, xl + p.field_plate_length, xd}, p.mesh_min_x, p.mesh_max_x};
  s.y_hints = {{0.0, r}, p.mesh_min_y, p.mesh_max_y};
  return s;
}

}  // namespace ldsim
