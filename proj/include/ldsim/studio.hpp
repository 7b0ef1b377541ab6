#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "ldsim/discretization.hpp"
#include "ldsim/ldmos.hpp"
#include "ldsim/mesh.hpp"
#include "ldsim/solver.hpp"

namespace ldsim {

/// Ordered contact voltages; contacts are ramped one after another in this order.
using BiasSequence = std::vector<std::pair<std::string, double>>;

/// Currents below this are treated as leakage-level noise in relative audits.
inline constexpr double leakage_floor_A_per_um = 1e-12;

struct Hotspot {
  double x_um = 0.0;
  double y_um = 0.0;
  double t_max_K = 0.0;
  int node = -1;
};

namespace detail {

inline Hotspot argmax_temperature(const Mesh& mesh, const DeviceState& s) {
  Hotspot h;
  for (int i = 0; i < mesh.node_count(); ++i) {
    // node order is x-major then y, so a strict comparison keeps the smallest (x, y)
    if (h.node < 0 || s.T[i] > h.t_max_K) {
      h.node = i;
      h.t_max_K = s.T[i];
    }
  }
  h.x_um = mesh.node_x_um(h.node);
  h.y_um = mesh.node_y_um(h.node);
  return h;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::map<std::string, double> per_um(std::map<std::string, double> currents_per_cm) {
  for (auto& [name, i] : currents_per_cm) i *= phys::um_to_cm;
  return currents_per_cm;
}

}  // namespace detail

/// Location and value of the maximum nodal temperature. Ties go to the smallest
/// x, then the smallest y. An isothermal solution has no hotspot.
inline Hotspot hotspot(const Discretization& disc, const DeviceState& s) {
  if (disc.options().thermal == ThermalMode::isothermal)
    throw AnalysisError("isothermal state: temperature is pinned, no meaningful hotspot");
  check_state(disc.mesh(), s);
  return detail::argmax_temperature(disc.mesh(), s);
}

/// Equilibrium solve followed by contact ramps in the given order.
inline std::pair<DeviceState, ConvergenceReport> solve_operating_point(const Discretization& disc,
                                                                       const SolverConfig& config,
                                                                       const BiasSequence& bias) {
  DeviceState s = neutral_guess(disc, {});
  auto [eq, report] = solve_point(disc, s, config, true);
  if (!report.converged) {
    report.message = "equilibrium: " + report.message;
    return {eq, report};
  }
  DeviceState cur = std::move(eq);
  for (const auto& [contact, v] : bias) {
    if (!disc.mesh().has_contact(contact)) throw SpecError("unknown contact '" + contact + "'");
    auto [next, r] = ramp_bias(disc, cur, {{contact, v}}, config);
    report.absorb(r);
    report.bias_path.insert(report.bias_path.end(), r.bias_path.begin(), r.bias_path.end());
    cur = std::move(next);
    if (!r.converged) {
      report.converged = false;
      report.message = contact + " ramp: " + r.message;
      return {cur, report};
    }
  }
  return {cur, report};
}

// ---------------------------------------------------------------------------
// Energy balance

struct EnergyBalance {
  double heat_W_per_um = 0.0;      // ∫H dV
  double terminal_W_per_um = 0.0;  // Σ I·V
  double mismatch = 0.0;           // relative
  double current_sum_A_per_um = 0.0;
  double current_sum_relative = 0.0;
};

/// Compares integrated heat generation with terminal dissipation and audits
/// Kirchhoff's current law. Both relative measures use leakage-level floors
/// in their denominators so near-zero biases do not report roundoff as error.
inline EnergyBalance energy_balance(const Discretization& disc, const DeviceState& s,
                                    double current_floor_A_per_um = leakage_floor_A_per_um) {
  const Mesh& mesh = disc.mesh();
  const auto h = disc.heat_generation(s);
  EnergyBalance b;
  for (int i = 0; i < mesh.node_count(); ++i) b.heat_W_per_um += h[i] * mesh.nodes[i].area;
  b.heat_W_per_um *= phys::um_to_cm;
  const auto currents = detail::per_um(disc.terminal_currents(s));
  double largest = 0.0, volts = 0.0;
  for (const auto& [name, i] : currents) {
    const double v = s.bias_of(name);
    b.terminal_W_per_um += i * v;
    b.current_sum_A_per_um += i;
    largest = std::max(largest, std::abs(i));
    volts += std::abs(v);
  }
  // At zero bias both sides are roundoff; a 1 V scale keeps the floor finite.
  const double power_floor = current_floor_A_per_um * std::max(volts, 1.0);
  const double pden =
      std::max({std::abs(b.heat_W_per_um), std::abs(b.terminal_W_per_um), power_floor});
  b.mismatch = pden > 0.0 ? std::abs(b.heat_W_per_um - b.terminal_W_per_um) / pden : 0.0;
  b.current_sum_relative =
      std::abs(b.current_sum_A_per_um) / std::max(largest, current_floor_A_per_um);
  return b;
}

// ---------------------------------------------------------------------------
// I–V sweeps

struct DrainRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  std::vector<double> values() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw SpecError("drain step must be positive");
    if (!(stop >= start)) throw SpecError("drain range must satisfy stop >= start");
    const long count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> v(static_cast<std::size_t>(count));
    for (long k = 0; k < count; ++k) v[k] = start + static_cast<double>(k) * step;
    return v;
  }
  bool operator==(const DrainRange&) const = default;
};

struct BiasPoint {
  double gate_V = 0.0;
  double drain_V = 0.0;
  std::map<std::string, double> currents_A_per_um;  // into the device
  double t_peak_K = 0.0;
  double x_peak_um = 0.0;
  double y_peak_um = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
  double wall_seconds = 0.0;
  double energy_mismatch = 0.0;       // relative, see energy_balance
  double current_sum_relative = 0.0;  // Kirchhoff residual over the terminals
  std::string message;
};

struct SweepResult {
  std::string gate_contact;
  std::string drain_contact;
  double gate_V = 0.0;
  ThermalMode thermal = ThermalMode::self_consistent;
  std::vector<BiasPoint> points;
  std::vector<DeviceState> states;  // filled only when requested, one per converged point
  bool complete = true;
  std::string failure;

  double drain_current(std::size_t k) const {
    const auto& c = points.at(k).currents_A_per_um;
    auto it = c.find(drain_contact);
    return it == c.end() ? std::nan("") : it->second;
  }
};

struct SweepOptions {
  std::string gate_contact = "gate";
  std::string drain_contact = "drain";
  bool keep_states = false;
  /// Called after every bias point (converged or not), e.g. for logging.
  std::function<void(const SweepResult&, const BiasPoint&)> on_point;
};

/// Drain sweeps at each gate bias. Every gate bias restarts from equilibrium;
/// along the drain axis each point continues from the previous one. On a
/// convergence failure the failing point is recorded (NaN currents) and that
/// gate's sweep stops with `complete = false`.
inline std::vector<SweepResult> iv_sweep(const Mesh& mesh, const MaterialTable& materials,
                                         PhysicsOptions physics, SolverConfig config,
                                         const std::vector<double>& gate_biases,
                                         const DrainRange& drain, ThermalMode thermal,
                                         const SweepOptions& options = {}) {
  const std::vector<double> vds = drain.values();
  if (gate_biases.empty()) throw SpecError("iv_sweep needs at least one gate bias");
  for (const auto* c : {&options.gate_contact, &options.drain_contact})
    if (!mesh.has_contact(*c)) throw SpecError("unknown contact '" + *c + "'");
  physics.thermal = thermal;
  config.thermal = thermal;
  const Discretization disc(mesh, materials, physics);

  auto t0 = std::chrono::steady_clock::now();
  auto [eq, eq_report] = solve_point(disc, neutral_guess(disc, {}), config, true);
  const double eq_seconds = detail::seconds_since(t0);

  std::vector<SweepResult> out;
  for (double vg : gate_biases) {
    SweepResult r;
    r.gate_contact = options.gate_contact;
    r.drain_contact = options.drain_contact;
    r.gate_V = vg;
    r.thermal = thermal;
    DeviceState cur = eq;
    ConvergenceReport pending = eq_report;
    double pending_seconds = eq_seconds;
    bool ok = eq_report.converged;
    std::string failure = ok ? "" : "equilibrium: " + eq_report.message;
    if (ok) {
      t0 = std::chrono::steady_clock::now();
      auto [g, gr] = ramp_bias(disc, cur, {{options.gate_contact, vg}}, config);
      pending.absorb(gr);
      pending_seconds += detail::seconds_since(t0);
      cur = std::move(g);
      ok = gr.converged;
      if (!ok) failure = "gate ramp: " + gr.message;
    }
    for (double vd : vds) {
      BiasPoint pt;
      pt.gate_V = vg;
      pt.drain_V = vd;
      ConvergenceReport rep = pending;
      double secs = pending_seconds;
      pending = {};
      pending_seconds = 0.0;
      if (ok) {
        t0 = std::chrono::steady_clock::now();
        auto [s, dr] = ramp_bias(disc, cur, {{options.drain_contact, vd}}, config);
        rep.absorb(dr);
        secs += detail::seconds_since(t0);
        ok = dr.converged;
        if (ok) cur = std::move(s);
        else failure = "drain ramp to " + std::to_string(vd) + " V: " + dr.message;
      }
      pt.converged = ok;
      pt.iterations = rep.iterations;
      pt.residual_norm = rep.residual_norm;
      pt.wall_seconds = secs;
      if (ok) {
        pt.currents_A_per_um = detail::per_um(disc.terminal_currents(cur));
        const Hotspot h = detail::argmax_temperature(mesh, cur);
        pt.t_peak_K = h.t_max_K;
        pt.x_peak_um = h.x_um;
        pt.y_peak_um = h.y_um;
        const EnergyBalance b = energy_balance(disc, cur);
        pt.energy_mismatch = b.mismatch;
        pt.current_sum_relative = b.current_sum_relative;
        pt.message = "converged";
        if (options.keep_states) r.states.push_back(cur);
      } else {
        for (const auto& mc : mesh.contacts)
          if (is_electrical(mc.contact.kind)) pt.currents_A_per_um[mc.contact.name] = std::nan("");
        pt.t_peak_K = pt.x_peak_um = pt.y_peak_um = std::nan("");
        pt.message = failure;
      }
      r.points.push_back(pt);
      if (options.on_point) options.on_point(r, r.points.back());
      if (!ok) {
        r.complete = false;
        r.failure = failure;
        break;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Drain-voltage intervals [V_k, V_k+1] over which the drain current falls by
/// more than `relative_tolerance` of its magnitude.
inline std::vector<std::pair<double, double>> negative_resistance_intervals(
    const SweepResult& r, double relative_tolerance = 1e-9) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k + 1 < r.points.size(); ++k) {
    if (!r.points[k].converged || !r.points[k + 1].converged) continue;
    const double i0 = r.drain_current(k), i1 = r.drain_current(k + 1);
    if (i1 < i0 - relative_tolerance * std::abs(i0))
      out.emplace_back(r.points[k].drain_V, r.points[k + 1].drain_V);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vertical temperature profile

struct TempProfileFit {
  double t0_K = 0.0;
  double a_K = 0.0;
  double length_um = 0.0;
  double r_squared = 0.0;
  double column_x_um = 0.0;
  int samples = 0;
  std::vector<double> depth_um, temperature_K;  // the fitted data
};

/// Least-squares fit of T0 + a·exp(−depth/L) to (depth µm, T K) samples.
inline TempProfileFit fit_exponential_profile(const std::vector<double>& depth,
                                              const std::vector<double>& temperature) {
  const std::size_t m = depth.size();
  if (m != temperature.size()) throw AnalysisError("profile samples have mismatched lengths");
  if (m < 4) throw AnalysisError("profile fit needs at least 4 samples, got " + std::to_string(m));
  const auto [lo, hi] = std::minmax_element(temperature.begin(), temperature.end());
  const double range = *hi - *lo;
  if (!(range > 1e-12 * std::max(1.0, std::abs(*hi))))
    throw AnalysisError("degenerate (constant) temperature profile");
  const double span = *std::max_element(depth.begin(), depth.end()) -
                      *std::min_element(depth.begin(), depth.end());
  if (!(span > 0.0)) throw AnalysisError("profile samples share one depth");

  // log-linear start: shift by an offset just beyond the far end of the data
  std::size_t first = 0, last = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (depth[k] < depth[first]) first = k;
    if (depth[k] > depth[last]) last = k;
  }
  const double sign = temperature[first] >= temperature[last] ? 1.0 : -1.0;
  const double base = sign > 0.0 ? *lo - 1e-3 * range : *hi + 1e-3 * range;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double y = std::log(sign * (temperature[k] - base));
    sx += depth[k];
    sy += y;
    sxx += depth[k] * depth[k];
    sxy += depth[k] * y;
  }
  const double n = static_cast<double>(m);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  Eigen::VectorXd x(3);
  x << base, sign * std::exp(intercept), slope < 0.0 ? -1.0 / slope : span;

  struct Residual : Eigen::DenseFunctor<double> {
    const std::vector<double>& d;
    const std::vector<double>& t;
    Residual(const std::vector<double>& d_, const std::vector<double>& t_)
        : Eigen::DenseFunctor<double>(3, static_cast<int>(d_.size())), d(d_), t(t_) {}
    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
      for (std::size_t k = 0; k < d.size(); ++k) f[k] = p[0] + p[1] * std::exp(-d[k] / p[2]) - t[k];
      return 0;
    }
    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
      for (std::size_t k = 0; k < d.size(); ++k) {
        const double e = std::exp(-d[k] / p[2]);
        j(k, 0) = 1.0;
        j(k, 1) = e;
        j(k, 2) = p[1] * e * d[k] / (p[2] * p[2]);
      }
      return 0;
    }
  } functor(depth, temperature);
  Eigen::LevenbergMarquardt<Residual> lm(functor);
  lm.setXtol(1e-15);
  lm.setFtol(1e-15);
  lm.setGtol(0.0);
  lm.setMaxfev(4000);
  lm.minimize(x);
  if (!x.allFinite() || !(x[2] > 0.0))
    throw AnalysisError("profile fit did not produce a positive decay length");

  TempProfileFit fit;
  fit.t0_K = x[0];
  fit.a_K = x[1];
  fit.length_um = x[2];
  fit.samples = static_cast<int>(m);
  fit.depth_um = depth;
  fit.temperature_K = temperature;
  double mean = 0.0;
  for (double t : temperature) mean += t;
  mean /= n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double r = x[0] + x[1] * std::exp(-depth[k] / x[2]) - temperature[k];
    ss_res += r * r;
    ss_tot += (temperature[k] - mean) * (temperature[k] - mean);
  }
  fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return fit;
}

/// Fits the temperature along the mesh column nearest `column_x_um`, from the
/// first semiconductor node downwards; depth is measured from that node.
inline TempProfileFit fit_vertical_profile(const Mesh& mesh, const DeviceState& s,
                                           double column_x_um) {
  check_state(mesh, s);
  int col = 0;
  for (int i = 1; i < mesh.nx(); ++i)
    if (std::abs(mesh.x_um[i] - column_x_um) < std::abs(mesh.x_um[col] - column_x_um)) col = i;
  std::vector<double> depth, temperature;
  double top = 0.0;
  for (int j = 0; j < mesh.ny(); ++j) {
    const int n = mesh.node_index(col, j);
    if (!mesh.nodes[n].semiconductor) continue;
    if (depth.empty()) top = mesh.y_um[j];
    depth.push_back(mesh.y_um[j] - top);
    temperature.push_back(s.T[n]);
  }
  if (depth.empty())
    throw AnalysisError("column at x = " + std::to_string(mesh.x_um[col]) +
                        " um does not intersect a semiconductor");
  TempProfileFit fit = fit_exponential_profile(depth, temperature);
  fit.column_x_um = mesh.x_um[col];
  return fit;
}

// ---------------------------------------------------------------------------
// Drift-region field model

/// Lateral field (V/cm) carried by current density J (A/cm²) in a uniformly
/// doped drift region with field-saturated mobility: E = (qNµ/J − 1/E_c)⁻¹.
inline double drift_field_model(double j, double doping, double mu, double e_crit) {
  if (!(doping > 0.0) || !(mu > 0.0) || !(e_crit > 0.0))
    throw AnalysisError("drift_field_model needs positive doping, mobility and critical field");
  if (!(j >= 0.0)) throw AnalysisError("drift_field_model needs J >= 0");
  const double j_sat = phys::q * doping * mu * e_crit;
  if (j >= j_sat)
    throw AnalysisError("current density at or above q*N*mu*Ec: the drift field diverges");
  if (j == 0.0) return 0.0;
  return 1.0 / (phys::q * doping * mu / j - 1.0 / e_crit);
}

struct DriftFieldSample {
  double x_um = 0.0, y_um = 0.0;  // edge midpoint
  double current_density = 0.0;   // |J_n|, A/cm²
  double doping = 0.0;            // |N_D − N_A|, cm⁻³
  double mobility = 0.0;          // low-field µ_n at the edge temperature
  double critical_field = 0.0;    // v_sat / µ, V/cm
  double simulated_field = 0.0;   // |Δψ| / L, V/cm
  double model_field = 0.0;       // drift_field_model at the same J
  double relative_difference() const {
    return std::abs(model_field - simulated_field) / simulated_field;
  }
};

/// Compares the simulated lateral field on the x-directed semiconductor edge
/// nearest (x, y) with the 1D drift model driven by that edge's electron current.
inline DriftFieldSample sample_drift_field(const Discretization& disc, const DeviceState& s,
                                           double x_um, double y_um) {
  const Mesh& mesh = disc.mesh();
  int best = -1;
  double best_d = 0.0;
  for (int e = 0; e < static_cast<int>(mesh.edges.size()); ++e) {
    const Edge& edge = mesh.edges[e];
    if (!edge.horizontal || disc.edge_data(e).semi == nullptr) continue;
    const double xm = 0.5 * (mesh.node_x_um(edge.a) + mesh.node_x_um(edge.b));
    const double ym = mesh.node_y_um(edge.a);
    const double d = std::hypot(xm - x_um, ym - y_um);
    if (best < 0 || d < best_d) best = e, best_d = d;
  }
  if (best < 0) throw AnalysisError("no semiconductor edge for the drift-field sample");
  const Edge& edge = mesh.edges[best];
  const EdgeData& data = disc.edge_data(best);
  const auto flows = disc.edge_flows(s);
  DriftFieldSample out;
  out.x_um = 0.5 * (mesh.node_x_um(edge.a) + mesh.node_x_um(edge.b));
  out.y_um = mesh.node_y_um(edge.a);
  out.current_density = std::abs(flows.electron[best]) / data.semi_dual;
  out.doping = std::abs(0.5 * (mesh.nodes[edge.a].net_doping + mesh.nodes[edge.b].net_doping));
  const double t_edge = 0.5 * (s.T[edge.a] + s.T[edge.b]);
  out.mobility = low_field_mobility(*data.semi, Carrier::electron, t_edge, data.total_doping,
                                    disc.materials().options);
  out.critical_field = data.semi->electron.vsat / out.mobility;
  out.simulated_field = std::abs(s.psi[edge.b] - s.psi[edge.a]) / edge.length;
  out.model_field =
      drift_field_model(out.current_density, out.doping, out.mobility, out.critical_field);
  return out;
}

// ---------------------------------------------------------------------------
// Isotope comparison

struct IsotopeComparison {
  std::string material;
  double k300_natural = 0.0;
  double k300_si28 = 0.0;
  double ambient_K = 0.0;
  Hotspot peak_natural;
  Hotspot peak_si28;
  double dT_peak = 0.0;  // natural minus Si-28
  double dT_mean = 0.0;  // area-weighted over semiconductor nodes
  std::vector<double> dT_field;
  /// Peak-rise ratio Si-28/natural of the linear heat problem with the natural
  /// run's heat source frozen, against k300_natural / k300_si28.
  double frozen_rise_ratio = 0.0;
  double expected_rise_ratio = 0.0;
  DeviceState natural;
  DeviceState si28;
  ConvergenceReport report_natural;
  ConvergenceReport report_si28;
};

/// Solves the same device and bias with natural-Si and Si-28 conductivities
/// (concurrently) and reports the temperature reduction. Runs self-consistently
/// regardless of `config.thermal`.
inline IsotopeComparison compare_isotopes(const Mesh& mesh, const MaterialTable& materials,
                                          PhysicsOptions physics, SolverConfig config,
                                          const BiasSequence& bias,
                                          const std::string& material = "Si") {
  physics.thermal = ThermalMode::self_consistent;
  config.thermal = ThermalMode::self_consistent;
  const Material& m = materials.at(material);
  auto k_of = [&](Isotope v) {
    auto it = m.isotope_k300.find(v);
    if (it == m.isotope_k300.end())
      throw ModelError("material '" + material + "' has no " + to_string(v) + " conductivity");
    return it->second;
  };
  IsotopeComparison c;
  c.material = material;
  c.k300_natural = k_of(Isotope::natural);
  c.k300_si28 = k_of(Isotope::si28);
  c.ambient_K = mesh.ambient_temperature;

  const MaterialTable nat = materials.with_isotope(Isotope::natural);
  const MaterialTable s28 = materials.with_isotope(Isotope::si28);
  auto run = [&](const MaterialTable* table) {
    const Discretization disc(mesh, *table, physics);
    return solve_operating_point(disc, config, bias);
  };
  auto fut = std::async(std::launch::async, run, &s28);
  auto [sn, rn] = run(&nat);
  auto [ss, rs] = fut.get();
  c.report_natural = rn;
  c.report_si28 = rs;
  if (!rn.converged) throw ConvergenceError("natural-Si run: " + rn.message);
  if (!rs.converged) throw ConvergenceError("Si-28 run: " + rs.message);
  c.natural = std::move(sn);
  c.si28 = std::move(ss);

  c.peak_natural = detail::argmax_temperature(mesh, c.natural);
  c.peak_si28 = detail::argmax_temperature(mesh, c.si28);
  c.dT_peak = c.peak_natural.t_max_K - c.peak_si28.t_max_K;
  c.dT_field.resize(static_cast<std::size_t>(mesh.node_count()));
  double area = 0.0, acc = 0.0;
  for (int i = 0; i < mesh.node_count(); ++i) {
    c.dT_field[i] = c.natural.T[i] - c.si28.T[i];
    if (!mesh.nodes[i].semiconductor) continue;
    acc += c.dT_field[i] * mesh.nodes[i].area;
    area += mesh.nodes[i].area;
  }
  c.dT_mean = area > 0.0 ? acc / area : 0.0;

  MaterialTable linear_nat = nat, linear_s28 = s28;
  for (MaterialTable* t : {&linear_nat, &linear_s28})
    for (const auto& [name, mat] : t->all()) t->at_mut(name).k_temp_exp = 0.0;
  const auto h = Discretization(mesh, nat, physics).heat_generation(c.natural);
  auto peak_rise = [&](const MaterialTable& t) {
    const auto temps = solve_frozen_heat(mesh, t, h);
    return *std::max_element(temps.begin(), temps.end()) - mesh.ambient_temperature;
  };
  const double rise_nat = peak_rise(linear_nat);
  c.frozen_rise_ratio = rise_nat > 0.0 ? peak_rise(linear_s28) / rise_nat : 1.0;
  c.expected_rise_ratio = c.k300_natural / c.k300_si28;
  return c;
}

}  // namespace ldsim
