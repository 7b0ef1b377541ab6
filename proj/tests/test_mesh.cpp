#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "common.hpp"
#include "ldsim/ldmos.hpp"
#include "ldsim/mesh.hpp"

using namespace ldsim;

namespace {

bool contains_exactly(const std::vector<double>& v, double x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

double area_sum(const Mesh& m) {
  double a = 0.0;
  for (const auto& n : m.nodes) a += n.area;
  return a;
}

DeviceSpec square(double h) {
  DeviceSpec s;
  s.regions.push_back({"Si", {0, 0, 1, 1}});
  s.contacts.push_back({"sink", {{0, 1, 1, 1}}, ContactKind::thermal, 0});
  s.x_hints = {{}, h, h};
  s.y_hints = {{}, h, h};
  return s;
}

}  // namespace

TEST(Mesh, UniformSquareTiling) {
  const Mesh m = build_mesh(square(0.1));
  EXPECT_EQ(m.nx(), 11);
  EXPECT_EQ(m.ny(), 11);
  EXPECT_EQ(m.cell_region.size(), 100u);
  for (int i = 1; i < m.nx(); ++i) EXPECT_NEAR(m.x_um[i] - m.x_um[i - 1], 0.1, 1e-12);
}

TEST(Mesh, NodeOrderIsXMajor) {
  const Mesh m = build_mesh(square(0.25));
  EXPECT_EQ(m.node_index(1, 0), m.ny());
  EXPECT_EQ(m.node_i(m.node_index(3, 2)), 3);
  EXPECT_EQ(m.node_j(m.node_index(3, 2)), 2);
}

TEST(Mesh, ControlVolumesPartitionTheDomain) {
  for (const DeviceSpec& spec : {square(0.1), fixtures::diode_spec(), fixtures::jacobian_spec(),
                                 build_ldmos(LdmosParams{})}) {
    const Mesh m = build_mesh(spec);
    EXPECT_NEAR(area_sum(m) / m.domain_area_cm2(), 1.0, 1e-12);
  }
}

TEST(Mesh, UniformEdgeCoefficientIsOne) {
  const Mesh m = build_mesh(square(0.25));
  const int centre = m.node_index(2, 2);
  for (int e : m.nodes[centre].edges) EXPECT_NEAR(m.edges[e].coefficient(), 1.0, 1e-12);
}

TEST(Mesh, AnisotropicEdgeCoefficient) {
  DeviceSpec s = square(0.1);
  s.x_hints = {{}, 0.2, 0.2};
  const Mesh m = build_mesh(s);
  const int centre = m.node_index(2, 5);
  int checked = 0;
  for (int e : m.nodes[centre].edges)
    if (m.edges[e].horizontal) {
      EXPECT_NEAR(m.edges[e].coefficient(), 0.5, 1e-12);
      ++checked;
    }
  EXPECT_EQ(checked, 2);
}

TEST(Mesh, CornerNodeIsQuarterOfInterior) {
  const Mesh m = build_mesh(square(0.25));
  EXPECT_NEAR(m.nodes[m.node_index(0, 0)].area / m.nodes[m.node_index(2, 2)].area, 0.25, 1e-12);
}

TEST(Mesh, UniformDoping) {
  const Mesh m = build_mesh(fixtures::resistor_spec(2.0, 1e16));
  for (const auto& n : m.nodes) EXPECT_DOUBLE_EQ(n.net_doping, 1e16);
}

TEST(Mesh, CoincidentDopingCancels) {
  DeviceSpec s = fixtures::resistor_spec(2.0, 1e16);
  s.doping_profiles.push_back(DopingProfile::uniform(Species::acceptor, 1e16, {0, 0, 2, 0.2}));
  const Mesh m = build_mesh(s);
  for (const auto& n : m.nodes) EXPECT_EQ(n.net_doping, 0.0);
}

TEST(Mesh, GaussianOneSigma) {
  const auto g = DopingProfile::gaussian(Species::acceptor, 1e18, 0.0, 0.0, 0.1, 0.3);
  EXPECT_NEAR(profile_value(g, 0.1, 0.0), 1e18 * std::exp(-0.5), 1e3);
  EXPECT_NEAR(profile_value(g, 0.1, 0.0), 6.065e17, 1e14);
}

TEST(Mesh, InsulatorNodesCarryNoDoping) {
  const Mesh m = build_mesh(fixtures::jacobian_spec());
  for (int j = 0; j < m.ny(); ++j) {
    if (m.y_um[j] > 0.75) { EXPECT_EQ(m.nodes[m.node_index(0, j)].net_doping, 0.0); }
  }
}

TEST(Mesh, ContactNodes) {
  const Mesh m = build_mesh(fixtures::diode_spec());
  EXPECT_EQ(m.contact("anode").nodes.size(), static_cast<std::size_t>(m.ny()));
  EXPECT_THROW(m.contact("gate"), SpecError);
  EXPECT_FALSE(m.has_contact("gate"));
}

TEST(Mesh, RejectsBadSpecs) {
  DeviceSpec s = square(0.1);
  s.x_hints.min_spacing = 0.0;
  EXPECT_THROW(build_mesh(s), SpecError);
  DeviceSpec empty;
  EXPECT_THROW(build_mesh(empty), SpecError);
  DeviceSpec stray = square(0.1);
  stray.contacts.push_back({"off", {{2, 0, 2, 1}}, ContactKind::ohmic, 0});
  EXPECT_THROW(build_mesh(stray), SpecError);
}

TEST(Ldmos, MandatoryLinesAppearExactly) {
  const LdmosParams p;
  const Mesh m = build_mesh(build_ldmos(p));
  EXPECT_TRUE(contains_exactly(m.x_um, 0.0));
  EXPECT_TRUE(contains_exactly(m.x_um, 2.6));
  EXPECT_TRUE(contains_exactly(m.x_um, p.locos_end()));
  EXPECT_LE(m.nx() * m.ny(), 60 * 40);
}

TEST(Ldmos, RejectsZeroLocos) {
  LdmosParams p;
  p.locos_length = 0.0;
  EXPECT_THROW(build_ldmos(p), SpecError);
  p = LdmosParams{};
  p.locos_recess = p.field_oxide_um;
  EXPECT_THROW(build_ldmos(p), SpecError);
}

TEST(Ldmos, SubstrateDepthOnlyMovesTheBottom) {
  LdmosParams p;
  const DeviceSpec a = build_ldmos(p);
  p.substrate_depth *= 2.0;
  const DeviceSpec b = build_ldmos(p);
  ASSERT_EQ(a.contacts.size(), b.contacts.size());
  for (std::size_t k = 0; k < a.contacts.size(); ++k) {
    if (a.contacts[k].name == "substrate") {
      EXPECT_EQ(b.contacts[k].segments[0].y0, 2.0 * a.contacts[k].segments[0].y0);
    } else {
      EXPECT_EQ(a.contacts[k], b.contacts[k]);
    }
  }
  EXPECT_EQ(a.doping_profiles.size(), b.doping_profiles.size());
  for (std::size_t k = 0; k < a.doping_profiles.size(); ++k) {
    if (a.doping_profiles[k].box.y1 != LdmosParams{}.substrate_depth) {
      EXPECT_EQ(a.doping_profiles[k], b.doping_profiles[k]);
    }
  }
  const Mesh ma = build_mesh(a), mb = build_mesh(b);
  EXPECT_EQ(ma.x_um, mb.x_um);
  EXPECT_NEAR(mb.y_um.back(), 2.0 * ma.y_um.back(), 1e-12);
}
