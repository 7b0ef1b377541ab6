#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "ldsim/config.hpp"
#include "ldsim/errors.hpp"
#include "ldsim/mesh.hpp"
#include "ldsim/output.hpp"
#include "ldsim/studio.hpp"

namespace ldsim {

struct RunOptions {
  std::filesystem::path output_dir = "ldsim-out";
  int parallel = 1;  // experiments solved concurrently
  spdlog::level::level_enum log_level = spdlog::level::info;
  bool log_to_stderr = true;
};

struct ExperimentOutcome {
  std::string name;
  ExperimentKind kind = ExperimentKind::equilibrium;
  bool ok = false;
  std::string failure;
  double wall_seconds = 0.0;
};

struct RunOutcome {
  std::vector<ExperimentOutcome> experiments;  // plan order

  bool ok() const {
    return std::all_of(experiments.begin(), experiments.end(), [](const auto& e) { return e.ok; });
  }
  int exit_code() const { return ok() ? 0 : 1; }
  std::string first_failure() const {
    for (const auto& e : experiments)
      if (!e.ok) return "experiment '" + e.name + "' (" + to_string(e.kind) + "): " + e.failure;
    return {};
  }
};

namespace detail {

inline std::shared_ptr<spdlog::logger> make_run_logger(const std::filesystem::path& dir,
                                                       const RunOptions& opt) {
  std::vector<spdlog::sink_ptr> sinks;
  try {
    sinks.push_back(std::make_shared<spdlog::sinks::basic_file_sink_mt>((dir / "run.log").string(), true));
  } catch (const spdlog::spdlog_ex& e) {
    throw IoError(std::string("cannot open run log: ") + e.what());
  }
  if (opt.log_to_stderr) sinks.push_back(std::make_shared<spdlog::sinks::stderr_sink_mt>());
  auto log = std::make_shared<spdlog::logger>("ldsim", sinks.begin(), sinks.end());
  log->set_level(opt.log_level);
  log->set_pattern("%Y-%m-%dT%H:%M:%S.%e %^%l%$ %v");
  log->flush_on(spdlog::level::warn);
  return log;
}

inline const char* mode_tag(ThermalMode m) {
  return m == ThermalMode::self_consistent ? "thermal-on" : "thermal-off";
}

inline void add_report(Report& r, const ConvergenceReport& c) {
  r.add("converged", c.converged);
  r.add("iterations", c.iterations);
  r.add("residual_norm", c.residual_norm);
  if (!c.converged) r.add("message", c.message);
}

inline void add_currents(Report& r, const Discretization& disc, const DeviceState& s) {
  for (const auto& [name, i] : per_um(disc.terminal_currents(s))) r.add("I_" + name + "_A_per_um", i);
}

/// Runs one experiment into `dir`. Returns an empty string on success, the
/// failure description otherwise. I/O errors propagate.
inline std::string run_experiment(const RunPlan& plan, const Experiment& e, const Mesh& mesh,
                                  const std::filesystem::path& dir, spdlog::logger& log) {
  const std::string tag = "[" + e.name + "] ";
  const MaterialTable table = plan.material_table();
  PhysicsOptions physics = plan.physics;
  physics.thermal = plan.solver.thermal;
  Report report;
  report.add("experiment", to_string(e.kind));

  switch (e.kind) {
    case ExperimentKind::equilibrium: {
      const Discretization disc(mesh, table, physics);
      auto t0 = std::chrono::steady_clock::now();
      auto [s, rep] = solve_point(disc, neutral_guess(disc, {}), plan.solver, true);
      const double secs = seconds_since(t0);
      log.info("{}equilibrium: iterations={} residual={:.3e} wall={:.3f}s", tag, rep.iterations,
               rep.residual_norm, secs);
      add_report(report, rep);
      report.add("nodes", mesh.node_count());
      add_currents(report, disc, s);
      write_field_csv(dir / "field.csv", disc, s);
      write_report(dir / "report.txt", report);
      return rep.converged ? "" : rep.message;
    }

    case ExperimentKind::iv_sweep: {
      std::vector<ThermalMode> modes;
      if (e.thermal != ThermalSelection::off) modes.push_back(ThermalMode::self_consistent);
      if (e.thermal != ThermalSelection::on) modes.push_back(ThermalMode::isothermal);
      std::string failure;
      for (ThermalMode mode : modes) {
        const std::string m = mode_tag(mode);
        SweepOptions so;
        so.gate_contact = e.gate_contact;
        so.drain_contact = e.drain_contact;
        so.keep_states = e.dump_fields;
        so.on_point = [&](const SweepResult& r, const BiasPoint& p) {
          const double id = r.drain_current(r.points.size() - 1);
          if (p.converged)
            log.info("{}{} Vg={:g} Vd={:g} Id={:.6e} A/um Tpeak={:.3f} K iterations={} residual={:.3e} "
                     "energy_mismatch={:.2e} wall={:.3f}s",
                     tag, m, p.gate_V, p.drain_V, id, p.t_peak_K, p.iterations, p.residual_norm,
                     p.energy_mismatch, p.wall_seconds);
          else
            log.warn("{}{} Vg={:g} Vd={:g} failed after {} iterations residual={:.3e} wall={:.3f}s: {}", tag,
                     m, p.gate_V, p.drain_V, p.iterations, p.residual_norm, p.wall_seconds, p.message);
        };
        const auto sweeps =
            iv_sweep(mesh, table, physics, plan.solver, e.gate_biases, e.drain, mode, so);
        write_iv_csv(dir / ("iv_" + m + ".csv"), sweeps);

        const Discretization disc(mesh, table, [&] {
          PhysicsOptions p = physics;
          p.thermal = mode;
          return p;
        }());
        for (std::size_t g = 0; g < sweeps.size(); ++g) {
          const SweepResult& r = sweeps[g];
          const std::string key = m + ".vg" + std::to_string(g);
          report.add(key + ".gate_V", r.gate_V);
          report.add(key + ".complete", r.complete);
          if (!r.complete) report.add(key + ".failure", r.failure);
          double worst_energy = 0.0, worst_kcl = 0.0, t_max = mesh.ambient_temperature;
          for (const auto& p : r.points)
            if (p.converged) {
              worst_energy = std::max(worst_energy, p.energy_mismatch);
              worst_kcl = std::max(worst_kcl, p.current_sum_relative);
              t_max = std::max(t_max, p.t_peak_K);
            }
          report.add(key + ".max_energy_mismatch", worst_energy);
          report.add(key + ".max_current_sum_relative", worst_kcl);
          report.add(key + ".Tpeak_max_K", t_max);
          std::string ndr;
          for (const auto& [a, b] : negative_resistance_intervals(r))
            ndr += (ndr.empty() ? "" : ";") + format_double(a) + ":" + format_double(b);
          report.add(key + ".negative_resistance_V", ndr);
          if (!r.points.empty() && r.points.back().converged && mode == ThermalMode::self_consistent) {
            report.add(key + ".hotspot_x_um", r.points.back().x_peak_um);
            report.add(key + ".hotspot_y_um", r.points.back().y_peak_um);
          }
          if (e.dump_fields)
            for (std::size_t k = 0; k < r.states.size(); ++k)
              write_field_csv(dir / "fields" / m / ("g" + std::to_string(g) + "_d" + std::to_string(k) + ".csv"),
                              disc, r.states[k]);
          if (!r.complete && failure.empty())
            failure = m + " Vg=" + format_double(r.gate_V) + ": " + r.failure;
        }
      }
      write_report(dir / "report.txt", report);
      return failure;
    }

    case ExperimentKind::isotope_compare: {
      auto t0 = std::chrono::steady_clock::now();
      IsotopeComparison c;
      try {
        c = compare_isotopes(mesh, plan.materials, physics, plan.solver, e.bias, e.material);
      } catch (const ConvergenceError& err) {
        log.warn("{}isotope comparison failed: {}", tag, err.what());
        report.add("converged", false);
        report.add("message", err.what());
        write_report(dir / "report.txt", report);
        return err.what();
      }
      log.info("{}natural: iterations={} residual={:.3e}; si28: iterations={} residual={:.3e}; "
               "dT_peak={:.3f} K wall={:.3f}s",
               tag, c.report_natural.iterations, c.report_natural.residual_norm, c.report_si28.iterations,
               c.report_si28.residual_norm, c.dT_peak, seconds_since(t0));
      report.add("converged", true);
      report.add("material", c.material);
      for (const auto& [contact, v] : e.bias) report.add("V_" + contact + "_V", v);
      report.add("ambient_K", c.ambient_K);
      report.add("k300_natural_W_mK", c.k300_natural);
      report.add("k300_si28_W_mK", c.k300_si28);
      report.add("T_peak_natural_K", c.peak_natural.t_max_K);
      report.add("T_peak_si28_K", c.peak_si28.t_max_K);
      report.add("hotspot_natural_x_um", c.peak_natural.x_um);
      report.add("hotspot_natural_y_um", c.peak_natural.y_um);
      report.add("hotspot_si28_x_um", c.peak_si28.x_um);
      report.add("hotspot_si28_y_um", c.peak_si28.y_um);
      report.add("dT_peak_K", c.dT_peak);
      report.add("dT_mean_K", c.dT_mean);
      report.add("frozen_rise_ratio", c.frozen_rise_ratio);
      report.add("expected_rise_ratio", c.expected_rise_ratio);
      write_report(dir / "report.txt", report);
      write_delta_t_csv(dir / "dT_field.csv", mesh, c.dT_field);
      PhysicsOptions sc = physics;
      sc.thermal = ThermalMode::self_consistent;
      write_field_csv(dir / "field_natural.csv",
                      Discretization(mesh, plan.materials.with_isotope(Isotope::natural), sc), c.natural);
      write_field_csv(dir / "field_si28.csv",
                      Discretization(mesh, plan.materials.with_isotope(Isotope::si28), sc), c.si28);
      return "";
    }

    case ExperimentKind::profile_fit: {
      physics.thermal = ThermalMode::self_consistent;
      SolverConfig cfg = plan.solver;
      cfg.thermal = ThermalMode::self_consistent;
      const MaterialTable variant = plan.materials.with_isotope(e.isotope);
      const Discretization disc(mesh, variant, physics);
      auto t0 = std::chrono::steady_clock::now();
      auto [s, rep] = solve_operating_point(disc, cfg, e.bias);
      log.info("{}operating point: iterations={} residual={:.3e} wall={:.3f}s", tag, rep.iterations,
               rep.residual_norm, seconds_since(t0));
      report.add("isotope", to_string(e.isotope));
      for (const auto& [contact, v] : e.bias) report.add("V_" + contact + "_V", v);
      add_report(report, rep);
      if (!rep.converged) {
        write_report(dir / "report.txt", report);
        return rep.message;
      }
      write_field_csv(dir / "field.csv", disc, s);
      const Hotspot h = hotspot(disc, s);
      report.add("hotspot_x_um", h.x_um);
      report.add("hotspot_y_um", h.y_um);
      report.add("T_peak_K", h.t_max_K);
      try {
        const TempProfileFit fit = fit_vertical_profile(mesh, s, e.column_x_um.value_or(h.x_um));
        report.add("column_x_um", fit.column_x_um);
        report.add("T0_K", fit.t0_K);
        report.add("a_K", fit.a_K);
        report.add("L_um", fit.length_um);
        report.add("r_squared", fit.r_squared);
        report.add("samples", fit.samples);
        write_profile_csv(dir / "profile.csv", fit);
        log.info("{}profile fit at x={} um: T0={:.3f} K a={:.3f} K L={:.4f} um R2={:.6f}", tag,
                 fit.column_x_um, fit.t0_K, fit.a_K, fit.length_um, fit.r_squared);
      } catch (const AnalysisError& err) {
        report.add("fit_error", err.what());
        write_report(dir / "report.txt", report);
        return err.what();
      }
      write_report(dir / "report.txt", report);
      return "";
    }
  }
  return "unknown experiment kind";
}

}  // namespace detail

/// Executes every experiment of the plan, each into `<output_dir>/<name>/`.
/// Writes the normalized plan to config.json and a key=value summary.txt.
/// Convergence and analysis failures are recorded per experiment; I/O errors
/// abort the run with IoError.
inline RunOutcome run(const RunPlan& plan, const RunOptions& opt = {}) {
  validate_plan(plan);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(opt.output_dir, ec);
  if (ec || !fs::is_directory(opt.output_dir))
    throw IoError("cannot create output directory '" + opt.output_dir.string() + "'" +
                  (ec ? ": " + ec.message() : std::string()));
  auto log = detail::make_run_logger(opt.output_dir, opt);
  write_text(opt.output_dir / "config.json", print_config(plan));

  const Mesh mesh = build_mesh(plan.device.resolve(), plan.materials);
  log->info("mesh {}x{} ({} nodes), {} experiment(s), {} worker(s)", mesh.nx(), mesh.ny(), mesh.node_count(),
            plan.experiments.size(), std::max(1, opt.parallel));

  RunOutcome outcome;
  outcome.experiments.resize(plan.experiments.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr io_failure;
  std::mutex io_mutex;

  auto worker = [&] {
    for (std::size_t k = next++; k < plan.experiments.size(); k = next++) {
      const Experiment& e = plan.experiments[k];
      ExperimentOutcome& o = outcome.experiments[k];
      o.name = e.name;
      o.kind = e.kind;
      const auto t0 = std::chrono::steady_clock::now();
      log->info("[{}] start {}", e.name, to_string(e.kind));
      try {
        const fs::path dir = opt.output_dir / e.name;
        std::error_code dir_ec;
        fs::create_directories(dir, dir_ec);
        o.failure = detail::run_experiment(plan, e, mesh, dir, *log);
      } catch (const IoError&) {
        std::lock_guard lock(io_mutex);
        if (!io_failure) io_failure = std::current_exception();
        o.failure = "output error";
      } catch (const Error& err) {
        o.failure = err.what();
      }
      o.ok = o.failure.empty();
      o.wall_seconds = detail::seconds_since(t0);
      if (o.ok) log->info("[{}] done in {:.3f}s", e.name, o.wall_seconds);
      else log->error("[{}] failed after {:.3f}s: {}", e.name, o.wall_seconds, o.failure);
    }
  };
  const int n = std::clamp<int>(opt.parallel, 1, static_cast<int>(plan.experiments.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  log->flush();
  if (io_failure) std::rethrow_exception(io_failure);

  Report summary;
  summary.add("status", outcome.ok() ? "ok" : "failed");
  for (const auto& o : outcome.experiments) {
    summary.add(o.name + ".type", to_string(o.kind));
    summary.add(o.name + ".status", o.ok ? "ok" : "failed");
    if (!o.ok) summary.add(o.name + ".failure", o.failure);
  }
  write_report(opt.output_dir / "summary.txt", summary);
  return outcome;
}

}  // namespace ldsim
