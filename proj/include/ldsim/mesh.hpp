#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ldsim/constants.hpp"
#include "ldsim/device_spec.hpp"
#include "ldsim/errors.hpp"
#include "ldsim/materials.hpp"

namespace ldsim {

/// Half of an edge's dual face lying inside one mesh cell.
struct EdgeSide {
  int cell = -1;
  double half_dual = 0.0;  // cm
};

struct Edge {
  int a = 0, b = 0;          // node indices, a < b
  bool horizontal = true;    // x-directed
  double length = 0.0;       // cm
  std::array<EdgeSide, 2> sides{};
  int side_count = 0;
  double dual = 0.0;         // cm, full dual face
  double dual_semi = 0.0;    // cm, part inside semiconductor cells

  double coefficient() const { return dual / length; }
  double coefficient_semi() const { return dual_semi / length; }
};

/// A quarter cell owned by a node.
struct Quadrant {
  int cell = -1;
  double area = 0.0;  // cm²
};

struct MeshNode {
  int region = -1;
  bool semiconductor = false;
  double net_doping = 0.0;    // N_D⁺ − N_A⁻, cm⁻³
  double total_doping = 0.0;  // N_D⁺ + N_A⁻, cm⁻³
  double trap_charge = 0.0;   // ρ_trap, C/cm³
  double area = 0.0;          // cm²
  double area_semi = 0.0;     // cm²
  std::array<Quadrant, 4> quadrants{};
  int quadrant_count = 0;
  std::vector<int> edges;
};

struct MeshContact {
  Contact contact;
  std::vector<int> nodes;
};

/// Rectilinear tensor-product finite-volume mesh. Node (i, j) sits at
/// (x[i], y[j]) and has index i·ny + j, so node order is x-major then y.
struct Mesh {
  std::vector<double> x_um, y_um;
  std::vector<Region> regions;
  std::vector<bool> region_semiconductor;
  std::vector<int> cell_region;  // (nx−1)·(ny−1), index ci·(ny−1) + cj
  std::vector<MeshNode> nodes;
  std::vector<Edge> edges;
  std::vector<MeshContact> contacts;
  double ambient_temperature = 300.0;

  int nx() const { return static_cast<int>(x_um.size()); }
  int ny() const { return static_cast<int>(y_um.size()); }
  int node_count() const { return nx() * ny(); }
  int node_index(int i, int j) const { return i * ny() + j; }
  int node_i(int n) const { return n / ny(); }
  int node_j(int n) const { return n % ny(); }
  double node_x_um(int n) const { return x_um[node_i(n)]; }
  double node_y_um(int n) const { return y_um[node_j(n)]; }
  int cell_index(int ci, int cj) const { return ci * (ny() - 1) + cj; }
  bool cell_semiconductor(int c) const { return region_semiconductor[cell_region[c]]; }
  const std::string& cell_material(int c) const { return regions[cell_region[c]].material; }

  double domain_area_cm2() const {
    return (x_um.back() - x_um.front()) * (y_um.back() - y_um.front()) * phys::um_to_cm *
           phys::um_to_cm;
  }

  const MeshContact& contact(const std::string& name) const {
    for (const auto& c : contacts)
      if (c.contact.name == name) return c;
    throw SpecError("no contact named '" + name + "'");
  }
  bool has_contact(const std::string& name) const {
    return std::any_of(contacts.begin(), contacts.end(),
                       [&](const MeshContact& c) { return c.contact.name == name; });
  }
};

namespace detail {

inline void sort_unique(std::vector<double>& v, double tol = 1e-9) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  v = std::move(out);
}

/// Target spacing: grows linearly with distance from the nearest hint line,
/// which gives geometric cell growth with ratio `growth` between neighbours.
inline double target_spacing(double s, const std::vector<double>& hints, const AxisHints& h,
                             double growth) {
  if (hints.empty()) return h.max_spacing;
  double d = std::numeric_limits<double>::infinity();
  for (double l : hints) d = std::min(d, std::abs(s - l));
  return std::min(h.max_spacing, h.min_spacing + (growth - 1.0) * d);
}

}  // namespace detail

/// Mesh lines along one axis: every mandatory coordinate appears verbatim;
/// intervals are filled by equidistributing the density 1/h(s).
inline std::vector<double> mesh_lines(std::vector<double> mandatory, const AxisHints& hints) {
  constexpr double growth = 1.25;
  constexpr int samples = 4000;
  detail::sort_unique(mandatory);
  std::vector<double> hint_lines = hints.lines;
  detail::sort_unique(hint_lines);

  std::vector<double> lines;
  for (std::size_t k = 0; k + 1 < mandatory.size(); ++k) {
    const double a = mandatory[k], b = mandatory[k + 1];
    std::vector<double> cum(samples + 1, 0.0);
    const double ds = (b - a) / samples;
    double prev = 1.0 / detail::target_spacing(a, hint_lines, hints, growth);
    bool uniform = true;
    for (int s = 1; s <= samples; ++s) {
      const double cur = 1.0 / detail::target_spacing(a + s * ds, hint_lines, hints, growth);
      uniform = uniform && cur == prev;
      cum[s] = cum[s - 1] + 0.5 * (prev + cur) * ds;
      prev = cur;
    }
    const int cells = std::max(1, static_cast<int>(std::ceil(cum.back() - 1e-9)));
    lines.push_back(a);
    int s = 0;
    for (int c = 1; c < cells; ++c) {
      // Constant spacing: place lines directly so that e.g. 0.5 stays exact.
      if (uniform) {
        lines.push_back(a + (b - a) * c / cells);
        continue;
      }
      const double target = cum.back() * c / cells;
      while (cum[s + 1] < target) ++s;
      const double frac = (target - cum[s]) / (cum[s + 1] - cum[s]);
      lines.push_back(a + (s + frac) * ds);
    }
  }
  lines.push_back(mandatory.back());
  return lines;
}

namespace detail {

inline bool on_segment(const Rect& seg, double x, double y, double tol = 1e-9) {
  return seg.contains(x, y, tol);
}

inline void validate_hints(const AxisHints& h, double lo, double hi, const char* axis) {
  if (!(h.min_spacing > 0.0) || !(h.max_spacing >= h.min_spacing))
    throw SpecError(std::string("invalid mesh spacing on ") + axis + " axis");
  for (double l : h.lines)
    if (l < lo - 1e-9 || l > hi + 1e-9)
      throw SpecError(std::string("refinement line ") + std::to_string(l) + " outside the " +
                      axis + " extent of the device");
}

}  // namespace detail

/// Region ids, per-node areas and edge dual faces from the line sets.
inline void control_volume_coefficients(Mesh& mesh) {
  const int nx = mesh.nx(), ny = mesh.ny();
  std::vector<double> x(nx), y(ny);
  for (int i = 0; i < nx; ++i) x[i] = mesh.x_um[i] * phys::um_to_cm;
  for (int j = 0; j < ny; ++j) y[j] = mesh.y_um[j] * phys::um_to_cm;

  for (auto& node : mesh.nodes) {
    node.area = node.area_semi = 0.0;
    node.quadrant_count = 0;
    node.edges.clear();
  }
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      MeshNode& node = mesh.nodes[mesh.node_index(i, j)];
      for (int di = -1; di <= 0; ++di) {
        for (int dj = -1; dj <= 0; ++dj) {
          const int ci = i + di, cj = j + dj;
          if (ci < 0 || cj < 0 || ci >= nx - 1 || cj >= ny - 1) continue;
          const int cell = mesh.cell_index(ci, cj);
          const double a = 0.25 * (x[ci + 1] - x[ci]) * (y[cj + 1] - y[cj]);
          node.quadrants[node.quadrant_count++] = {cell, a};
          node.area += a;
          if (mesh.cell_semiconductor(cell)) node.area_semi += a;
        }
      }
    }
  }

  mesh.edges.clear();
  auto add_edge = [&](int a, int b, bool horizontal, double length,
                      std::array<std::pair<int, double>, 2> sides) {
    Edge e;
    e.a = a;
    e.b = b;
    e.horizontal = horizontal;
    e.length = length;
    for (const auto& [cell, half] : sides) {
      if (cell < 0) continue;
      e.sides[e.side_count++] = {cell, half};
      e.dual += half;
      if (mesh.cell_semiconductor(cell)) e.dual_semi += half;
    }
    const int id = static_cast<int>(mesh.edges.size());
    mesh.edges.push_back(e);
    mesh.nodes[a].edges.push_back(id);
    mesh.nodes[b].edges.push_back(id);
  };
  // Edges in node-index order of their lower endpoint.
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      if (j + 1 < ny) {  // vertical edge (i,j)-(i,j+1): cells left/right
        const int left = i > 0 ? mesh.cell_index(i - 1, j) : -1;
        const int right = i < nx - 1 ? mesh.cell_index(i, j) : -1;
        const double hl = i > 0 ? 0.5 * (x[i] - x[i - 1]) : 0.0;
        const double hr = i < nx - 1 ? 0.5 * (x[i + 1] - x[i]) : 0.0;
        add_edge(mesh.node_index(i, j), mesh.node_index(i, j + 1), false, y[j + 1] - y[j],
                 {std::pair{left, hl}, std::pair{right, hr}});
      }
      if (i + 1 < nx) {  // horizontal edge (i,j)-(i+1,j): cells above/below
        const int above = j > 0 ? mesh.cell_index(i, j - 1) : -1;
        const int below = j < ny - 1 ? mesh.cell_index(i, j) : -1;
        const double ha = j > 0 ? 0.5 * (y[j] - y[j - 1]) : 0.0;
        const double hb = j < ny - 1 ? 0.5 * (y[j + 1] - y[j]) : 0.0;
        add_edge(mesh.node_index(i, j), mesh.node_index(i + 1, j), true, x[i + 1] - x[i],
                 {std::pair{above, ha}, std::pair{below, hb}});
      }
    }
  }
}

inline double profile_value(const DopingProfile& p, double x_um, double y_um) {
  if (p.shape == ProfileShape::uniform) return p.box.contains(x_um, y_um) ? p.peak : 0.0;
  const double dx = (x_um - p.center_x) / p.sigma_x;
  const double dy = (y_um - p.center_y) / p.sigma_y;
  return p.peak * std::exp(-0.5 * (dx * dx + dy * dy));
}

/// Net and total doping per node; insulator nodes get zero.
inline void assign_doping(Mesh& mesh, const std::vector<DopingProfile>& profiles) {
  for (const auto& p : profiles) {
    if (!(p.peak > 0.0)) throw SpecError("doping peak concentration must be positive");
    if (p.shape == ProfileShape::gaussian && !(p.sigma_x > 0.0 && p.sigma_y > 0.0))
      throw SpecError("gaussian doping requires positive sigma");
    if (p.shape == ProfileShape::uniform) {
      const Rect& b = p.box;
      if (!(b.x1 > b.x0 && b.y1 > b.y0)) throw SpecError("empty doping rectangle");
      if (b.x0 < mesh.x_um.front() - 1e-9 || b.x1 > mesh.x_um.back() + 1e-9 ||
          b.y0 < mesh.y_um.front() - 1e-9 || b.y1 > mesh.y_um.back() + 1e-9)
        throw SpecError("doping rectangle outside the device");
      for (int ci = 0; ci + 1 < mesh.nx(); ++ci) {
        for (int cj = 0; cj + 1 < mesh.ny(); ++cj) {
          const double cx = 0.5 * (mesh.x_um[ci] + mesh.x_um[ci + 1]);
          const double cy = 0.5 * (mesh.y_um[cj] + mesh.y_um[cj + 1]);
          if (b.contains(cx, cy, 0.0) && !mesh.cell_semiconductor(mesh.cell_index(ci, cj)))
            throw SpecError("doping rectangle extends outside semiconductor regions");
        }
      }
    }
  }
  for (int n = 0; n < mesh.node_count(); ++n) {
    MeshNode& node = mesh.nodes[n];
    node.net_doping = node.total_doping = 0.0;
    if (!node.semiconductor) continue;
    const double x = mesh.node_x_um(n), y = mesh.node_y_um(n);
    for (const auto& p : profiles) {
      const double v = profile_value(p, x, y);
      node.net_doping += p.species == Species::donor ? v : -v;
      node.total_doping += v;
    }
  }
}

/// Builds the mesh: line sets, region tiling checks, contacts, coefficients, doping.
inline Mesh build_mesh(const DeviceSpec& spec,
                       const MaterialTable& materials = MaterialTable::defaults()) {
  if (spec.regions.empty()) throw SpecError("device has no regions");
  Rect domain = spec.regions.front().box;
  for (const auto& r : spec.regions) {
    if (!(r.box.x1 > r.box.x0 && r.box.y1 > r.box.y0))
      throw SpecError("region with empty rectangle");
    domain.x0 = std::min(domain.x0, r.box.x0);
    domain.y0 = std::min(domain.y0, r.box.y0);
    domain.x1 = std::max(domain.x1, r.box.x1);
    domain.y1 = std::max(domain.y1, r.box.y1);
  }
  detail::validate_hints(spec.x_hints, domain.x0, domain.x1, "x");
  detail::validate_hints(spec.y_hints, domain.y0, domain.y1, "y");
  if (!(spec.ambient_temperature > 0.0)) throw SpecError("ambient temperature must be positive");

  std::vector<double> mx{domain.x0, domain.x1}, my{domain.y0, domain.y1};
  for (const auto& r : spec.regions) {
    mx.insert(mx.end(), {r.box.x0, r.box.x1});
    my.insert(my.end(), {r.box.y0, r.box.y1});
  }
  for (const auto& p : spec.doping_profiles) {
    if (p.shape != ProfileShape::uniform) continue;
    for (double v : {p.box.x0, p.box.x1})
      if (v > domain.x0 && v < domain.x1) mx.push_back(v);
    for (double v : {p.box.y0, p.box.y1})
      if (v > domain.y0 && v < domain.y1) my.push_back(v);
  }
  for (const auto& c : spec.contacts) {
    for (const auto& s : c.segments) {
      if (!domain.contains(s.x0, s.y0) || !domain.contains(s.x1, s.y1))
        throw SpecError("contact '" + c.name + "' lies outside the device");
      mx.insert(mx.end(), {s.x0, s.x1});
      my.insert(my.end(), {s.y0, s.y1});
    }
  }
  mx.insert(mx.end(), spec.x_hints.lines.begin(), spec.x_hints.lines.end());
  my.insert(my.end(), spec.y_hints.lines.begin(), spec.y_hints.lines.end());

  Mesh mesh;
  mesh.x_um = mesh_lines(mx, spec.x_hints);
  mesh.y_um = mesh_lines(my, spec.y_hints);
  mesh.regions = spec.regions;
  mesh.ambient_temperature = spec.ambient_temperature;
  for (const auto& r : spec.regions)
    mesh.region_semiconductor.push_back(materials.at(r.material).is_semiconductor());

  const int nx = mesh.nx(), ny = mesh.ny();
  mesh.cell_region.assign(static_cast<std::size_t>((nx - 1) * (ny - 1)), -1);
  for (int ci = 0; ci + 1 < nx; ++ci) {
    for (int cj = 0; cj + 1 < ny; ++cj) {
      const double cx = 0.5 * (mesh.x_um[ci] + mesh.x_um[ci + 1]);
      const double cy = 0.5 * (mesh.y_um[cj] + mesh.y_um[cj + 1]);
      int owner = -1;
      for (int r = 0; r < static_cast<int>(spec.regions.size()); ++r) {
        if (!spec.regions[r].box.contains(cx, cy, 0.0)) continue;
        if (owner >= 0)
          throw SpecError("regions " + std::to_string(owner) + " and " + std::to_string(r) +
                          " overlap");
        owner = r;
      }
      if (owner < 0)
        throw SpecError("regions leave a gap near (" + std::to_string(cx) + ", " +
                        std::to_string(cy) + ") µm");
      mesh.cell_region[mesh.cell_index(ci, cj)] = owner;
    }
  }

  mesh.nodes.assign(static_cast<std::size_t>(nx * ny), MeshNode{});
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      MeshNode& node = mesh.nodes[mesh.node_index(i, j)];
      for (int di = -1; di <= 0; ++di) {
        for (int dj = -1; dj <= 0; ++dj) {
          const int ci = i + di, cj = j + dj;
          if (ci < 0 || cj < 0 || ci >= nx - 1 || cj >= ny - 1) continue;
          const int c = mesh.cell_index(ci, cj);
          const int r = mesh.cell_region[c];
          const bool semi = mesh.region_semiconductor[r];
          if (node.region < 0 || (semi && !node.semiconductor) ||
              (semi == node.semiconductor && r < node.region)) {
            node.region = r;
            node.semiconductor = semi;
          }
        }
      }
    }
  }

  control_volume_coefficients(mesh);

  bool has_thermal = false;
  for (const auto& c : spec.contacts) {
    MeshContact mc{c, {}};
    has_thermal = has_thermal || is_thermal(c.kind);
    for (const auto& seg : c.segments) {
      const bool vertical = std::abs(seg.x1 - seg.x0) < 1e-12;
      const bool horizontal = std::abs(seg.y1 - seg.y0) < 1e-12;
      if (!vertical && !horizontal)
        throw SpecError("contact '" + c.name + "' segment is not axis-aligned");
      const bool on_boundary =
          (vertical && (std::abs(seg.x0 - domain.x0) < 1e-9 || std::abs(seg.x0 - domain.x1) < 1e-9)) ||
          (horizontal && (std::abs(seg.y0 - domain.y0) < 1e-9 || std::abs(seg.y0 - domain.y1) < 1e-9));
      bool on_interface = false;
      for (int n = 0; n < mesh.node_count(); ++n) {
        if (!detail::on_segment(seg, mesh.node_x_um(n), mesh.node_y_um(n))) continue;
        if (std::find(mc.nodes.begin(), mc.nodes.end(), n) == mc.nodes.end())
          mc.nodes.push_back(n);
        int first = -1;
        for (int k = 0; k < mesh.nodes[n].quadrant_count; ++k) {
          const int r = mesh.cell_region[mesh.nodes[n].quadrants[k].cell];
          if (first < 0) first = r;
          else if (r != first) on_interface = true;
        }
      }
      if (!on_boundary && !on_interface)
        throw SpecError("contact '" + c.name +
                        "' is neither on the device boundary nor on a region interface");
    }
    std::sort(mc.nodes.begin(), mc.nodes.end());
    if (mc.nodes.empty()) throw SpecError("contact '" + c.name + "' has no mesh nodes");
    for (int n : mc.nodes) {
      const MeshNode& node = mesh.nodes[n];
      if ((c.kind == ContactKind::ohmic || c.kind == ContactKind::thermal_ohmic) &&
          !node.semiconductor)
        throw SpecError("ohmic contact '" + c.name + "' does not touch a semiconductor");
      if (c.kind == ContactKind::gate) {
        if (node.semiconductor)
          throw SpecError("gate contact '" + c.name + "' touches a semiconductor");
      }
    }
    for (const auto& other : mesh.contacts)
      if (other.contact.name == c.name) throw SpecError("duplicate contact '" + c.name + "'");
    mesh.contacts.push_back(std::move(mc));
  }
  if (!has_thermal) throw SpecError("device needs at least one thermal contact");

  assign_doping(mesh, spec.doping_profiles);
  return mesh;
}

}  // namespace ldsim
