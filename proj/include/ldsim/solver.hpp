#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "ldsim/discretization.hpp"
#include "ldsim/linear_solver.hpp"

namespace ldsim {

enum class CouplingMode { full_newton, gummel_then_newton };

inline const char* to_string(CouplingMode m) {
  return m == CouplingMode::full_newton ? "full-newton" : "gummel-then-newton";
}

struct SolverConfig {
  double abs_tolerance = 1e-10;      // scaled residual (max-norm)
  double update_tolerance = 1e-12;   // relative update used only for diagnostics
  int max_iterations = 50;
  double initial_damping = 1.0;
  double min_damping = 1.0 / 64.0;
  double max_potential_step = 1.0;  // V, caps the first trial step of ψ
  double max_bias_step = 0.5;        // V
  int max_halvings = 6;
  int polish_steps = 1;  // extra full Newton steps after convergence
  CouplingMode coupling = CouplingMode::gummel_then_newton;
  /// Copied into PhysicsOptions::thermal when the run layer builds a Discretization.
  ThermalMode thermal = ThermalMode::self_consistent;

  void validate() const {
    if (!(abs_tolerance > 0.0) || !(update_tolerance > 0.0))
      throw ConfigValidationError("solver tolerances must be positive");
    if (max_iterations < 1) throw ConfigValidationError("max_iterations must be >= 1");
    if (!(max_bias_step > 0.0)) throw ConfigValidationError("max_bias_step must be positive");
    if (!(min_damping > 0.0 && min_damping <= initial_damping && initial_damping <= 1.0))
      throw ConfigValidationError("damping factors must satisfy 0 < min <= initial <= 1");
    if (max_halvings < 0) throw ConfigValidationError("max_halvings must be >= 0");
    if (polish_steps < 0) throw ConfigValidationError("polish_steps must be >= 0");
    if (!(max_potential_step > 0.0))
      throw ConfigValidationError("max_potential_step must be positive");
  }
  bool operator==(const SolverConfig&) const = default;
};

struct ConvergenceReport {
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> damping_history;
  /// (merit before, merit after) of each accepted step, same frozen scaling.
  std::vector<std::pair<double, double>> merit_history;
  std::vector<std::map<std::string, double>> bias_path;
  std::string message;

  void absorb(const ConvergenceReport& inner) {
    iterations += inner.iterations;
    damping_history.insert(damping_history.end(), inner.damping_history.begin(),
                           inner.damping_history.end());
    merit_history.insert(merit_history.end(), inner.merit_history.begin(),
                         inner.merit_history.end());
    residual_norm = inner.residual_norm;
  }
};

namespace detail {

inline double merit(const Eigen::VectorXd& f, const Eigen::VectorXd& scale) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double r = f[i] / std::max(scale[i], 1e-300);
    s += r * r;
  }
  return std::sqrt(s);
}

/// u + λΔu with multiplicative carrier updates and a temperature floor.
///
/// Carrier increases are linear, decreases use c·exp(Δc/c) so densities stay
/// positive for any step length.
inline DeviceState apply_update(const UnknownMap& map, const DeviceState& s,
                                const Eigen::VectorXd& du, double lambda) {
  DeviceState t = s;
  for (std::size_t i = 0; i < map.offset.size(); ++i) {
    const int node = static_cast<int>(i);
    t.psi[i] += lambda * du[map.index(node, Var::psi)];
    t.T[i] = std::max(100.0, s.T[i] + lambda * du[map.index(node, Var::T)]);
    if (!map.semiconductor[i]) continue;
    for (auto [field, var] : {std::pair{&DeviceState::n, Var::n}, std::pair{&DeviceState::p, Var::p}}) {
      const double c = (s.*field)[i];
      const double r = lambda * du[map.index(node, var)] / c;
      (t.*field)[i] = r >= 0.0 ? c * (1.0 + r) : c * std::exp(r);
    }
  }
  return t;
}

}  // namespace detail

namespace detail {

/// One Newton correction; returns false with a message on linear-solver failure.
inline bool newton_direction(const ResidualSystem& sys, Eigen::VectorXd& du, std::string& message) {
  try {
    du = solve_linear(sys.jacobian, -sys.residual);
    return true;
  } catch (const LinearSolveError& e) {
    message = e.what();
    return false;
  }
}

}  // namespace detail

/// Damped Newton at the bias stored in `state0.bias`.
///
/// Each iteration solves J·Δu = −F, caps the ψ part of the step at
/// `max_potential_step`, and halves λ until the merit ‖F/scale‖₂ (scales frozen
/// at the current iterate) does not increase. Once the scaled max-norm meets the
/// tolerance, `polish_steps` extra full steps are tried and kept if they lower
/// the merit without leaving the tolerance. Rows far below the worst one keep
/// converging quadratically, which tightens discrete current conservation.
inline std::pair<DeviceState, ConvergenceReport> newton_solve(const Discretization& disc,
                                                              const DeviceState& state0,
                                                              const SolverConfig& config,
                                                              const TransientStep* transient = nullptr) {
  ConvergenceReport report;
  DeviceState s = state0;
  const UnknownMap& map = disc.unknowns();
  for (int it = 0;; ++it) {
    ResidualSystem sys = disc.assemble(s, true, transient);
    report.residual_norm = sys.scaled_norm();
    if (!std::isfinite(report.residual_norm)) {
      report.message = "non-finite residual";
      return {s, report};
    }
    if (report.residual_norm <= config.abs_tolerance) {
      report.converged = true;
      report.message = "converged";
      for (int k = 0; k < config.polish_steps && report.residual_norm > 0.0; ++k) {
        Eigen::VectorXd du;
        std::string ignored;
        if (!detail::newton_direction(sys, du, ignored)) break;
        DeviceState trial = detail::apply_update(map, s, du, 1.0);
        ResidualSystem ts;
        try {
          ts = disc.assemble(trial, true, transient);
        } catch (const Error&) {
          break;
        }
        const double norm = ts.scaled_norm();
        const double m0 = detail::merit(sys.residual, sys.scale);
        const double m1 = detail::merit(ts.residual, sys.scale);
        if (!(norm <= config.abs_tolerance) || !(m1 <= m0)) break;
        ++report.iterations;
        report.damping_history.push_back(1.0);
        report.merit_history.emplace_back(m0, m1);
        report.residual_norm = norm;
        s = std::move(trial);
        sys = std::move(ts);
      }
      return {s, report};
    }
    if (it >= config.max_iterations) {
      report.message = "no convergence after " + std::to_string(config.max_iterations) + " iterations";
      return {s, report};
    }
    Eigen::VectorXd du;
    if (!detail::newton_direction(sys, du, report.message)) return {s, report};
    ++report.iterations;

    double max_dpsi = 0.0;
    for (std::size_t i = 0; i < map.offset.size(); ++i)
      max_dpsi = std::max(max_dpsi, std::abs(du[map.index(static_cast<int>(i), Var::psi)]));
    double lambda = config.initial_damping;
    if (max_dpsi * lambda > config.max_potential_step) lambda = config.max_potential_step / max_dpsi;

    const double m0 = detail::merit(sys.residual, sys.scale);
    bool accepted = false;
    while (lambda >= config.min_damping * (1.0 - 1e-12)) {
      DeviceState trial = detail::apply_update(map, s, du, lambda);
      double m1 = std::numeric_limits<double>::infinity();
      try {
        m1 = detail::merit(disc.assemble(trial, false, transient).residual, sys.scale);
      } catch (const Error&) {
      }
      if (std::isfinite(m1) && m1 <= m0) {
        report.damping_history.push_back(lambda);
        report.merit_history.emplace_back(m0, m1);
        s = std::move(trial);
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      report.message = "line search failed at iteration " + std::to_string(it + 1);
      return {s, report};
    }
  }
}

/// Initial guess: charge-neutral carriers at T_ambient with contact potentials applied.
inline DeviceState neutral_guess(const Discretization& disc,
                                 const std::map<std::string, double>& bias) {
  const Mesh& mesh = disc.mesh();
  const std::size_t count = static_cast<std::size_t>(mesh.node_count());
  DeviceState s;
  s.psi.assign(count, 0.0);
  s.n.assign(count, 0.0);
  s.p.assign(count, 0.0);
  s.T.assign(count, mesh.ambient_temperature);
  s.bias = bias;
  for (const auto& mc : mesh.contacts)
    if (is_electrical(mc.contact.kind) && !s.bias.count(mc.contact.name)) s.bias[mc.contact.name] = 0.0;
  const double t0 = mesh.ambient_temperature;
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (!mesh.nodes[i].semiconductor) continue;
    const Material& m = node_material(mesh, disc.materials(), i);
    const double ni = intrinsic_density(m, t0);
    const auto [n0, p0] = neutral_densities(mesh.nodes[i].net_doping, ni);
    s.n[i] = n0;
    s.p[i] = p0;
    s.psi[i] = builtin_potential(mesh.nodes[i].net_doping, ni, t0);
  }
  // Insulator nodes take the mean of their semiconductor neighbours, or a gate value.
  for (int i = 0; i < mesh.node_count(); ++i) {
    if (mesh.nodes[i].semiconductor) continue;
    double sum = 0.0;
    int cnt = 0;
    for (int e : mesh.nodes[i].edges) {
      const int j = mesh.edges[e].a == i ? mesh.edges[e].b : mesh.edges[e].a;
      if (mesh.nodes[j].semiconductor) {
        sum += s.psi[j];
        ++cnt;
      }
    }
    if (cnt > 0) s.psi[i] = sum / cnt;
  }
  for (int i = 0; i < mesh.node_count(); ++i) {
    const int c = disc.electrical_contact(i);
    if (c < 0) continue;
    const Contact& ct = mesh.contacts[c].contact;
    const double v = s.bias_of(ct.name);
    if (ct.kind == ContactKind::gate) {
      s.psi[i] = v + ct.gate_offset;
    } else {
      const auto bc = disc.ohmic_values<double>(i, v, t0);
      s.psi[i] = bc.psi;
      s.n[i] = bc.n;
      s.p[i] = bc.p;
    }
  }
  return s;
}

/// Nonlinear Poisson pre-solve with carriers slaved to ψ by Boltzmann statistics
/// (quasi-Fermi levels frozen at zero) and T fixed. This is the first half-step
/// of a Gummel iteration and gives Newton a self-consistent electrostatic start.
inline ConvergenceReport poisson_presolve(const Discretization& disc, DeviceState& s,
                                          const SolverConfig& config) {
  const Mesh& mesh = disc.mesh();
  const int count = mesh.node_count();
  ConvergenceReport report;
  std::vector<double> ni(static_cast<std::size_t>(count), 0.0);
  for (int i = 0; i < count; ++i)
    if (mesh.nodes[i].semiconductor) ni[i] = intrinsic_density(node_material(mesh, disc.materials(), i), s.T[i]);

  auto residual = [&](const std::vector<double>& psi, Eigen::VectorXd& f, Eigen::VectorXd& scale,
                      std::vector<Eigen::Triplet<double>>* trip) {
    f.setZero(count);
    scale.setZero(count);
    for (int e = 0; e < static_cast<int>(mesh.edges.size()); ++e) {
      const Edge& edge = mesh.edges[e];
      const double c = disc.edge_data(e).eps_coef;
      const double d = c * (psi[edge.b] - psi[edge.a]);
      const double mag =
          c * (std::abs(psi[edge.a]) + std::abs(psi[edge.b]) + Discretization::potential_floor);
      f[edge.a] += d;
      f[edge.b] -= d;
      scale[edge.a] += mag;
      scale[edge.b] += mag;
      if (trip) {
        trip->emplace_back(edge.a, edge.a, -c);
        trip->emplace_back(edge.a, edge.b, c);
        trip->emplace_back(edge.b, edge.b, -c);
        trip->emplace_back(edge.b, edge.a, c);
      }
    }
    for (int i = 0; i < count; ++i) {
      const MeshNode& node = mesh.nodes[i];
      double diag = 0.0;
      f[i] += node.trap_charge * node.area;
      scale[i] += std::abs(node.trap_charge * node.area);
      if (node.semiconductor) {
        const double vt = phys::thermal_voltage(s.T[i]);
        const double x = std::clamp(psi[i] / vt, -700.0, 700.0);
        const double n = ni[i] * std::exp(x), p = ni[i] * std::exp(-x);
        const double a = node.area_semi;
        f[i] += phys::q * (p - n + node.net_doping) * a;
        scale[i] += phys::q * (p + n + std::abs(node.net_doping)) * a;
        diag = -phys::q * (n + p) * a / vt;
      }
      if (trip) trip->emplace_back(i, i, diag);
    }
    for (int i = 0; i < count; ++i) {
      if (disc.electrical_contact(i) < 0) continue;
      f[i] = psi[i] - s.psi[i];
      scale[i] = std::abs(psi[i]) + std::abs(s.psi[i]) + Discretization::potential_floor;
    }
  };

  std::vector<double> psi = s.psi;
  for (int it = 0; it <= config.max_iterations; ++it) {
    Eigen::VectorXd f, scale;
    std::vector<Eigen::Triplet<double>> trip;
    residual(psi, f, scale, &trip);
    double norm = 0.0;
    for (int i = 0; i < count; ++i) norm = std::max(norm, std::abs(f[i]) / std::max(scale[i], 1e-300));
    report.residual_norm = norm;
    if (norm <= config.abs_tolerance) {
      report.converged = true;
      break;
    }
    if (it == config.max_iterations) break;
    // Dirichlet rows become identity rows.
    std::vector<Eigen::Triplet<double>> kept;
    kept.reserve(trip.size());
    for (const auto& t : trip)
      if (disc.electrical_contact(t.row()) < 0) kept.push_back(t);
    for (int i = 0; i < count; ++i)
      if (disc.electrical_contact(i) >= 0) kept.emplace_back(i, i, 1.0);
    Eigen::SparseMatrix<double> j(count, count);
    j.setFromTriplets(kept.begin(), kept.end());
    Eigen::VectorXd dpsi = solve_linear(j, -f);
    ++report.iterations;
    double lambda = std::min(1.0, config.max_potential_step / std::max(dpsi.cwiseAbs().maxCoeff(), 1e-300));
    const double m0 = detail::merit(f, scale);
    bool accepted = false;
    while (lambda >= 1e-6) {
      std::vector<double> trial(psi);
      for (int i = 0; i < count; ++i) trial[i] += lambda * dpsi[i];
      Eigen::VectorXd ft, st;
      residual(trial, ft, st, nullptr);
      if (detail::merit(ft, scale) <= m0) {
        psi = std::move(trial);
        report.damping_history.push_back(lambda);
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
  }
  s.psi = psi;
  for (int i = 0; i < count; ++i) {
    if (!mesh.nodes[i].semiconductor || disc.electrical_contact(i) >= 0) continue;
    const double vt = phys::thermal_voltage(s.T[i]);
    const double x = std::clamp(psi[i] / vt, -700.0, 700.0);
    s.n[i] = std::max(ni[i] * std::exp(x), 1e-100);
    s.p[i] = std::max(ni[i] * std::exp(-x), 1e-100);
  }
  report.message = report.converged ? "converged" : "poisson pre-solve did not converge";
  return report;
}

/// Solves at the bias stored in `state0`, cold-starting if requested.
inline std::pair<DeviceState, ConvergenceReport> solve_point(const Discretization& disc,
                                                             const DeviceState& state0,
                                                             const SolverConfig& config,
                                                             bool cold_start) {
  DeviceState s = state0;
  if (cold_start && config.coupling == CouplingMode::gummel_then_newton) poisson_presolve(disc, s, config);
  return newton_solve(disc, s, config);
}

/// Moves every contact voltage from `state.bias` to `target` in steps no larger
/// than `max_bias_step`, halving the step on failure.
inline std::pair<DeviceState, ConvergenceReport> ramp_bias(const Discretization& disc,
                                                           const DeviceState& state,
                                                           const std::map<std::string, double>& target,
                                                           const SolverConfig& config) {
  ConvergenceReport report;
  std::map<std::string, double> start = state.bias, goal = state.bias;
  for (const auto& [k, v] : target) {
    goal[k] = v;
    if (!start.count(k)) start[k] = 0.0;
  }
  double span = 0.0;
  for (const auto& [k, v] : goal) span = std::max(span, std::abs(v - start[k]));
  report.bias_path.push_back(start);
  if (span == 0.0) {
    report.converged = true;
    report.message = "zero-length ramp";
    return {state, report};
  }
  const double nominal = 1.0 / std::ceil(span / config.max_bias_step - 1e-12);
  DeviceState good = state;
  double s = 0.0, h = nominal;
  int halvings = 0;
  while (s < 1.0) {
    const double next = std::min(1.0, s + h);
    DeviceState trial = good;
    for (const auto& [k, v] : goal) trial.bias[k] = start[k] + next * (v - start[k]);
    if (next == 1.0) trial.bias = goal;
    auto [sol, rep] = newton_solve(disc, trial, config);
    report.absorb(rep);
    if (rep.converged) {
      good = std::move(sol);
      s = next;
      report.bias_path.push_back(good.bias);
      halvings = 0;
      h = std::min(nominal, 2.0 * h);
      continue;
    }
    if (++halvings > config.max_halvings) {
      report.converged = false;
      report.message = "bias ramp failed; last converged bias reached at fraction " + std::to_string(s) +
                       " (" + rep.message + ")";
      return {good, report};
    }
    h *= 0.5;
  }
  report.converged = true;
  report.message = "converged";
  return {good, report};
}

/// Steady heat conduction with a frozen source (W/cm³ per node); returns T per node.
inline std::vector<double> solve_frozen_heat(const Mesh& mesh, const MaterialTable& materials,
                                             const std::vector<double>& heat, double tolerance = 1e-12,
                                             int max_iterations = 50) {
  const int count = mesh.node_count();
  std::vector<char> fixed(static_cast<std::size_t>(count), 0);
  bool any = false;
  for (const auto& mc : mesh.contacts)
    if (is_thermal(mc.contact.kind))
      for (int n : mc.nodes) fixed[n] = 1, any = true;
  if (!any) throw SpecError("mesh without thermal contact");

  std::vector<std::array<std::pair<const Material*, double>, 2>> sides(mesh.edges.size());
  std::vector<int> side_count(mesh.edges.size(), 0);
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const Edge& edge = mesh.edges[e];
    for (int k = 0; k < edge.side_count; ++k)
      sides[e][side_count[e]++] = {&materials.at(mesh.cell_material(edge.sides[k].cell)),
                                   edge.sides[k].half_dual / edge.length};
  }

  std::vector<double> t(static_cast<std::size_t>(count), mesh.ambient_temperature);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(count), scale = Eigen::VectorXd::Zero(count);
    std::vector<Eigen::Triplet<double>> trip;
    using D2 = Dual<2>;
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
      const Edge& edge = mesh.edges[e];
      const D2 ta = D2::variable(t[edge.a], 0), tb = D2::variable(t[edge.b], 1);
      const D2 tm = 0.5 * (ta + tb);
      D2 k{};
      for (int s = 0; s < side_count[e]; ++s)
        k += 0.01 * thermal_conductivity(*sides[e][s].first, materials.isotope(), tm) * sides[e][s].second;
      const D2 flux = k * (tb - ta);
      const int rows[2] = {edge.a, edge.b};
      const D2 terms[2] = {flux, -flux};
      for (int r = 0; r < 2; ++r) {
        if (fixed[rows[r]]) continue;
        f[rows[r]] += terms[r].v;
        scale[rows[r]] += k.v * (t[edge.a] + t[edge.b]);
        trip.emplace_back(rows[r], edge.a, terms[r].d[0]);
        trip.emplace_back(rows[r], edge.b, terms[r].d[1]);
      }
    }
    for (int i = 0; i < count; ++i) {
      if (fixed[i]) {
        f[i] = t[i] - mesh.ambient_temperature;
        scale[i] = t[i] + mesh.ambient_temperature;
        trip.emplace_back(i, i, 1.0);
      } else {
        const double src = heat[i] * mesh.nodes[i].area;
        f[i] += src;
        scale[i] += std::abs(src);
      }
    }
    double norm = 0.0;
    for (int i = 0; i < count; ++i) norm = std::max(norm, std::abs(f[i]) / std::max(scale[i], 1e-300));
    if (norm <= tolerance) return t;
    Eigen::SparseMatrix<double> j(count, count);
    j.setFromTriplets(trip.begin(), trip.end());
    const Eigen::VectorXd dt = solve_linear(j, -f);
    for (int i = 0; i < count; ++i) t[i] = std::max(100.0, t[i] + dt[i]);
  }
  throw ConvergenceError("frozen-source heat solve did not converge");
}

}  // namespace ldsim
