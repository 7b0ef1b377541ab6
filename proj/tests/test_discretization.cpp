#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "common.hpp"
#include "ldsim/discretization.hpp"
#include "ldsim/solver.hpp"
#include "ldsim/studio.hpp"

using namespace ldsim;

TEST(Bernoulli, ReferenceValues) {
  EXPECT_DOUBLE_EQ(bernoulli(0.0), 1.0);
  EXPECT_NEAR(bernoulli(1.0), 1.0 / (std::exp(1.0) - 1.0), 1e-15);
  EXPECT_NEAR(bernoulli(1.0), 0.581977, 1e-6);
  EXPECT_NEAR(bernoulli(-1.0), 1.581977, 1e-6);
}

TEST(Bernoulli, ReflectionIdentityAndRange) {
  for (double x : {1e-9, 1e-6, 1e-5, 3e-5, 0.1, 2.0, 30.0, 300.0}) {
    EXPECT_NEAR(bernoulli(-x), bernoulli(x) + x, 1e-14 * (1.0 + x)) << x;
  }
  EXPECT_TRUE(std::isfinite(bernoulli(800.0)));
  EXPECT_GE(bernoulli(800.0), 0.0);
  EXPECT_DOUBLE_EQ(bernoulli(-800.0), 800.0);
}

TEST(Bernoulli, ContinuousAcrossSeriesSwitch) {
  const double a = bernoulli(0.999999e-5), b = bernoulli(1.000001e-5);
  EXPECT_NEAR(a, b, 1e-10);
}

TEST(ScharfetterGummel, EquilibriumEdgeCarriesNothing) {
  EXPECT_EQ(edge_current(Carrier::electron, 0.3, 0.3, 1e16, 1e16, 300.0, 1000.0, 1e-5), 0.0);
  const double vt = phys::thermal_voltage(300.0);
  for (double dpsi : {-0.5, -0.01, 0.02, 0.4}) {
    const double n_i = 1e15, n_j = n_i * std::exp(dpsi / vt);
    const double jn = edge_current(Carrier::electron, 0.0, dpsi, n_i, n_j, 300.0, 1000.0, 1e-5);
    const double scale = phys::q * 1000.0 * vt / 1e-5 * std::max(n_i, n_j);
    EXPECT_LE(std::abs(jn) / scale, 1e-14) << dpsi;
    const double p_i = 1e15, p_j = p_i * std::exp(-dpsi / vt);
    const double jp = edge_current(Carrier::hole, 0.0, dpsi, p_i, p_j, 300.0, 400.0, 1e-5);
    EXPECT_LE(std::abs(jp) / (scale * 0.4 * std::max(p_i, p_j) / std::max(n_i, n_j)), 1e-14) << dpsi;
  }
}

TEST(ScharfetterGummel, PureDiffusion) {
  const double vt = phys::thermal_voltage(300.0), l = 1e-5, mu = 1000.0;
  const double j = edge_current(Carrier::electron, 0.1, 0.1, 1e15, 3e15, 300.0, mu, l);
  EXPECT_NEAR(j / (phys::q * mu * vt / l * 2e15), 1.0, 1e-14);
}

TEST(Residual, UniformSlabEquilibriumIsExact) {
  const Mesh mesh = build_mesh(fixtures::resistor_spec(2.0, 1e17, 0.2));
  const MaterialTable mats = MaterialTable::defaults();
  const Discretization disc(mesh, mats);
  const DeviceState s = neutral_guess(disc, {});
  const double ni = 1.08e10;
  for (int i = 0; i < mesh.node_count(); ++i) {
    EXPECT_NEAR(s.n[i] / 1e17, 1.0, 1e-12);
    EXPECT_NEAR(s.p[i] / (ni * ni / 1e17), 1.0, 1e-9);
    EXPECT_EQ(s.T[i], 300.0);
  }
  EXPECT_LE(disc.assemble(s).scaled_norm(), 1e-10);
}

TEST(HeatGeneration, ZeroAtEquilibrium) {
  const Mesh mesh = build_mesh(fixtures::diode_spec());
  const MaterialTable mats = MaterialTable::defaults();
  const Discretization disc(mesh, mats);
  auto [eq, rep] = solve_point(disc, neutral_guess(disc, {}), SolverConfig{}, true);
  ASSERT_TRUE(rep.converged);
  const auto h = disc.heat_generation(eq);
  double hmax = 0.0;
  for (double v : h) hmax = std::max(hmax, std::abs(v));
  EXPECT_LE(hmax, 1e-6);  // W/cm³: roundoff of a zero field
  const EnergyBalance b = energy_balance(disc, eq);
  EXPECT_LE(std::abs(b.heat_W_per_um), 1e-15);
  EXPECT_LE(std::abs(b.terminal_W_per_um), 1e-15);
}

TEST(HeatGeneration, OhmicResistor) {
  const double length_um = 2.0, doping = 1e17, v = 0.1;
  const Mesh mesh = build_mesh(fixtures::resistor_spec(length_um, doping, 0.05));
  const MaterialTable mats = MaterialTable::defaults();
  PhysicsOptions po;
  po.thermal = ThermalMode::isothermal;
  const Discretization disc(mesh, mats, po);
  SolverConfig cfg;
  cfg.thermal = ThermalMode::isothermal;
  auto [eq, r0] = solve_point(disc, neutral_guess(disc, {}), cfg, true);
  ASSERT_TRUE(r0.converged);
  auto [s, r1] = ramp_bias(disc, eq, {{"right", v}}, cfg);
  ASSERT_TRUE(r1.converged);

  const Material& si = mats.at("Si");
  const double e = v / (length_um * 1e-4);
  const double sigma = phys::q * doping * mobility(si, Carrier::electron, e, 300.0, doping);
  const double j = sigma * e;  // A/cm²
  const auto h = disc.heat_generation(s);
  const int mid = mesh.node_index(mesh.nx() / 2, 0);
  EXPECT_NEAR(h[mid] / (j * j / sigma), 1.0, 0.01);

  const double r_per_um = (length_um * 1e-4) / (sigma * 0.2e-4) * 1e4;  // Ω·µm for a 1 µm deep slice
  const EnergyBalance b = energy_balance(disc, s);
  EXPECT_NEAR(b.terminal_W_per_um / (v * v / r_per_um), 1.0, 0.01);
  EXPECT_NEAR(b.heat_W_per_um / b.terminal_W_per_um, 1.0, 0.01);
  EXPECT_LE(b.current_sum_relative, 1e-8);
}

TEST(Jacobian, MatchesCentralDifferences) {
  const Mesh mesh = build_mesh(fixtures::jacobian_spec());
  ASSERT_EQ(mesh.nx(), 5);
  ASSERT_EQ(mesh.ny(), 5);
  const MaterialTable mats = MaterialTable::defaults();
  PhysicsOptions po;
  po.heat_model = HeatModel::thermodynamic;
  po.thermal_drift = true;
  const Discretization disc(mesh, mats, po);
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) worst = std::max(worst, fixtures::jacobian_error(disc, fixtures::random_state(disc, rng)));
  EXPECT_LE(worst, 1e-5);
}
