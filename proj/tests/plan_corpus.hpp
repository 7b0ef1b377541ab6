#pragma once

#include <cmath>
#include <random>
#include <string>

#include "common.hpp"
#include "ldsim/config.hpp"

namespace ldsim::fixtures {

/// A random valid RunPlan. Every numeric field takes a full-precision random
/// value so that printing has to preserve all 17 digits.
inline RunPlan random_plan(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  auto log_range = [&](double lo, double hi) { return std::exp(range(std::log(lo), std::log(hi))); };
  auto coin = [&] { return u(rng) < 0.5; };

  RunPlan plan;
  std::vector<std::string> contacts;
  std::string gate, drain;
  const Isotope iso = coin() ? Isotope::natural : Isotope::si28;
  if (u(rng) < 0.7) {
    LdmosParams& p = plan.device.ldmos;
    p.gate_length = range(1.5, 3.5);
    p.locos_length = range(2.0, 5.0);
    p.drift_doping = log_range(5e15, 5e16);
    p.body_peak = log_range(5e16, 3e17);
    p.gate_oxide_nm = range(15.0, 40.0);
    p.field_plate_length = range(0.0, 1.5);
    p.body_sigma_x = range(1.0, 2.0);
    p.ambient_temperature = range(280.0, 320.0);
    p.isotope = iso;
    contacts = {"source", "gate", "drain", "substrate"};
    gate = "gate";
    drain = "drain";
  } else {
    plan.device.kind = DeviceSection::Kind::spec;
    plan.device.spec = diode_spec(log_range(1e15, 1e18), range(0.004, 0.02));
    plan.device.spec.ambient_temperature = range(280.0, 320.0);
    plan.device.spec_isotope = iso;
    contacts = {"cathode", "anode"};
    gate = "cathode";
    drain = "anode";
  }

  Material& si = plan.materials.at_mut("Si");
  si.isotope_k300[Isotope::natural] = range(142.0, 148.0);
  si.isotope_k300[Isotope::si28] = range(165.0, 227.0);
  si.electron.mu0 = range(1200.0, 1500.0);
  si.hole.vsat = range(7e6, 9e6);
  si.k_temp_exp = range(1.0, 1.5);
  plan.materials.options.doping_dependent_mobility = coin();
  plan.materials.options.carrier_heat_conduction = coin();
  if (coin()) {
    Material extra = default_oxide();
    extra.name = "Si3N4";
    extra.eps_r = range(6.0, 8.0);
    extra.k300 = range(10.0, 30.0);
    plan.materials.add(extra);
  }

  plan.physics.heat_model = coin() ? HeatModel::joule : HeatModel::thermodynamic;
  plan.physics.thermal_drift = coin();
  plan.physics.field_smoothing = log_range(1e-10, 1e-6);
  plan.solver.abs_tolerance = log_range(1e-12, 1e-8);
  plan.solver.update_tolerance = log_range(1e-14, 1e-10);
  plan.solver.max_iterations = 10 + static_cast<int>(rng() % 60);
  plan.solver.initial_damping = range(0.5, 1.0);
  plan.solver.min_damping = range(0.001, 0.4);
  plan.solver.max_potential_step = range(0.2, 2.0);
  plan.solver.max_bias_step = range(0.1, 1.0);
  plan.solver.max_halvings = static_cast<int>(rng() % 8);
  plan.solver.polish_steps = static_cast<int>(rng() % 3);
  plan.solver.coupling = coin() ? CouplingMode::full_newton : CouplingMode::gummel_then_newton;
  plan.solver.thermal = coin() ? ThermalMode::isothermal : ThermalMode::self_consistent;
  plan.physics.thermal = plan.solver.thermal;

  auto random_bias = [&] {
    BiasSequence b;
    for (int k = 0, n = 1 + static_cast<int>(rng() % 3); k < n; ++k)
      b.emplace_back(contacts[rng() % contacts.size()], range(-1.0, 10.0));
    return b;
  };
  const int count = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < count; ++k) {
    Experiment e;
    e.kind = static_cast<ExperimentKind>(rng() % 4);
    e.name = "exp-" + std::to_string(k) + "_" + to_string(e.kind);
    switch (e.kind) {
      case ExperimentKind::equilibrium:
        break;
      case ExperimentKind::iv_sweep:
        for (int g = 0, n = 1 + static_cast<int>(rng() % 3); g < n; ++g) e.gate_biases.push_back(range(0.0, 5.0));
        e.drain.start = range(0.0, 1.0);
        e.drain.step = range(0.1, 2.0);
        e.drain.stop = e.drain.start + range(0.0, 20.0);
        e.thermal = static_cast<ThermalSelection>(rng() % 3);
        e.gate_contact = gate;
        e.drain_contact = drain;
        e.dump_fields = coin();
        break;
      case ExperimentKind::isotope_compare:
        e.bias = random_bias();
        break;
      case ExperimentKind::profile_fit:
        e.bias = random_bias();
        e.isotope = coin() ? Isotope::natural : Isotope::si28;
        if (coin()) e.column_x_um = range(0.1, 1.0);
        break;
    }
    plan.experiments.push_back(e);
  }
  plan.output_dir = coin() ? "" : "out-" + std::to_string(rng() % 1000);
  plan.seed = rng();
  return plan;
}

}  // namespace ldsim::fixtures
