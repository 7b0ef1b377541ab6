#include <cmath>

#include <gtest/gtest.h>

#include "ldsim/constants.hpp"
#include "ldsim/dual.hpp"
#include "ldsim/materials.hpp"

using namespace ldsim;

namespace {
const Material& si() {
  static const Material m = default_silicon();
  return m;
}
}  // namespace

TEST(Intrinsic, PinnedAt300K) { EXPECT_NEAR(intrinsic_density(si(), 300.0) / 1.08e10, 1.0, 1e-12); }

TEST(Intrinsic, GrowsSteeplyWithTemperature) {
  EXPECT_GT(intrinsic_density(si(), 400.0), 100.0 * intrinsic_density(si(), 300.0));
}

TEST(Intrinsic, DefinitionalIdentity) {
  for (double t : {250.0, 300.0, 450.0, 650.0}) {
    const double ni = intrinsic_density(si(), t);
    const double rhs = conduction_dos(si(), t) * valence_dos(si(), t) *
                       std::exp(-band_gap(si(), t) / phys::thermal_voltage(t));
    EXPECT_NEAR(ni * ni / rhs, 1.0, 1e-12);
  }
}

TEST(Intrinsic, OutOfRangeTemperature) {
  EXPECT_THROW(intrinsic_density(si(), 150.0), ModelError);
  EXPECT_THROW(intrinsic_density(si(), 800.0), ModelError);
}

TEST(Mobility, FieldLimits) {
  const double mu_low = low_field_mobility(si(), Carrier::electron, 300.0, 1e16);
  EXPECT_DOUBLE_EQ(mobility(si(), Carrier::electron, 0.0, 300.0, 1e16), mu_low);
  const double ec = saturation_field(si(), Carrier::electron, 300.0, 1e16);
  EXPECT_NEAR(mobility(si(), Carrier::electron, ec, 300.0, 1e16), 0.5 * mu_low, 1e-12 * mu_low);
  const double huge = 1e12;
  EXPECT_NEAR(mobility(si(), Carrier::electron, huge, 300.0, 1e16) * huge / si().electron.vsat, 1.0, 1e-6);
}

TEST(Mobility, DecreasesWithTemperature) {
  EXPECT_LT(low_field_mobility(si(), Carrier::hole, 400.0, 0.0), low_field_mobility(si(), Carrier::hole, 300.0, 0.0));
}

TEST(Mobility, DopingDependenceIsOptIn) {
  MaterialOptions opt;
  EXPECT_DOUBLE_EQ(low_field_mobility(si(), Carrier::electron, 300.0, 1e19, opt), si().electron.mu0);
  opt.doping_dependent_mobility = true;
  EXPECT_LT(low_field_mobility(si(), Carrier::electron, 300.0, 1e19, opt), 0.5 * si().electron.mu0);
}

TEST(ThermalConductivity, IsotopeVariants) {
  EXPECT_DOUBLE_EQ(thermal_conductivity(si(), Isotope::natural, 300.0), 148.0);
  EXPECT_DOUBLE_EQ(thermal_conductivity(si(), Isotope::si28, 300.0), 200.0);
  EXPECT_NEAR(thermal_conductivity(si(), Isotope::natural, 400.0), 148.0 * std::pow(4.0 / 3.0, -1.3), 1e-12);
  EXPECT_NEAR(thermal_conductivity(si(), Isotope::natural, 400.0), 101.8, 0.05);
}

TEST(ThermalConductivity, OxideIgnoresIsotope) {
  const Material ox = default_oxide();
  EXPECT_DOUBLE_EQ(thermal_conductivity(ox, Isotope::si28, 500.0), 1.4);
}

TEST(ThermalConductivity, MissingVariantIsAnError) {
  Material m = default_silicon();
  m.isotope_k300.erase(Isotope::si28);
  EXPECT_THROW(thermal_conductivity(m, Isotope::si28, 300.0), ModelError);
}

TEST(Recombination, Cases) {
  const double ni = intrinsic_density(si(), 300.0);
  EXPECT_NEAR(srh_recombination(ni * 1e3, ni * 1e-3, 300.0, si()), 0.0, 1e-9 * ni / si().electron.tau);
  Material m = default_silicon();
  m.hole.tau = m.electron.tau = 1e-7;
  EXPECT_NEAR(srh_recombination(10 * ni, 10 * ni, 300.0, m) / (4.5 * ni / 1e-7), 1.0, 1e-12);
  EXPECT_LT(srh_recombination(0.1 * ni, 0.1 * ni, 300.0, si()), 0.0);
}

TEST(Thermoelectric, ReferencePointsAndSign) {
  const double t = 350.0;
  const double nc = conduction_dos(si(), t), nv = valence_dos(si(), t);
  EXPECT_NEAR(thermoelectric_power(Carrier::electron, nc, t, si()), -2.5 * phys::kb_over_q, 1e-18);
  EXPECT_NEAR(thermoelectric_power(Carrier::electron, nc, t, si()), -2.154e-4, 1e-7);
  EXPECT_NEAR(thermoelectric_power(Carrier::hole, nv, t, si()), 2.154e-4, 1e-7);
  EXPECT_LT(thermoelectric_power(Carrier::electron, 0.5 * nc * std::exp(2.5), t, si()), 0.0);
  EXPECT_GT(thermoelectric_power(Carrier::electron, 2.0 * nc * std::exp(2.5), t, si()), 0.0);
}

TEST(Materials, DualDerivativeMatchesDifference) {
  using D = Dual<1>;
  D t(420.0);
  t.d[0] = 1.0;
  const D k = thermal_conductivity(si(), Isotope::natural, t);
  const double h = 1e-3;
  const double fd = (thermal_conductivity(si(), Isotope::natural, 420.0 + h) -
                     thermal_conductivity(si(), Isotope::natural, 420.0 - h)) / (2 * h);
  EXPECT_NEAR(k.d[0] / fd, 1.0, 1e-7);
}

TEST(Materials, Validation) {
  EXPECT_NO_THROW(validate_material(default_silicon()));
  EXPECT_NO_THROW(validate_material(default_oxide()));
  Material m = default_silicon();
  m.electron.mu0 = -1.0;
  EXPECT_THROW(validate_material(m), ModelError);
  m = default_silicon();
  m.isotope_k300[Isotope::si28] = 100.0;
  EXPECT_THROW(validate_material(m), ModelError);
  m = default_oxide();
  m.k300 = 0.0;
  EXPECT_THROW(validate_material(m), ModelError);
}

TEST(MaterialTable, DefaultsAndIsotope) {
  const MaterialTable t = MaterialTable::defaults();
  EXPECT_TRUE(t.contains("Si"));
  EXPECT_TRUE(t.contains("SiO2"));
  EXPECT_EQ(t.isotope(), Isotope::natural);
  EXPECT_EQ(t.with_isotope(Isotope::si28).isotope(), Isotope::si28);
  EXPECT_THROW(t.at("GaN"), ModelError);
}
