#include <gtest/gtest.h>

#include "common.hpp"
#include "ldsim/run.hpp"

using namespace ldsim;

namespace {

RunPlan diode_plan() {
  RunPlan plan;
  plan.device.kind = DeviceSection::Kind::spec;
  plan.device.spec = fixtures::diode_spec();
  Experiment eq;
  eq.name = "eq";
  plan.experiments.push_back(eq);
  Experiment iv;
  iv.kind = ExperimentKind::iv_sweep;
  iv.name = "iv";
  iv.gate_contact = "cathode";
  iv.drain_contact = "anode";
  iv.gate_biases = {0.0};
  iv.drain = {0.0, 0.6, 0.1};
  iv.thermal = ThermalSelection::both;
  plan.experiments.push_back(iv);
  Experiment iso;
  iso.kind = ExperimentKind::isotope_compare;
  iso.name = "iso";
  iso.bias = {{"anode", 0.8}};
  plan.experiments.push_back(iso);
  return plan;
}

RunOptions quiet(const std::filesystem::path& dir, int parallel = 1) {
  RunOptions o;
  o.output_dir = dir;
  o.parallel = parallel;
  o.log_to_stderr = false;
  return o;
}

/// Every output file except the log, keyed by relative path.
std::map<std::string, std::string> data_files(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "run.log")
      out[std::filesystem::relative(e.path(), dir).string()] = fixtures::read_file(e.path());
  return out;
}

}  // namespace

TEST(Run, EquilibriumOnly) {
  RunPlan plan = diode_plan();
  plan.experiments.resize(1);
  const auto dir = fixtures::scratch_dir("run-eq");
  const RunOutcome out = run(plan, quiet(dir));
  EXPECT_EQ(out.exit_code(), 0) << out.first_failure();
  EXPECT_TRUE(std::filesystem::exists(dir / "eq" / "field.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "config.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run.log"));
  EXPECT_EQ(parse_config(fixtures::read_file(dir / "config.json")), plan);
  EXPECT_NE(fixtures::read_file(dir / "summary.txt").find("status=ok"), std::string::npos);
}

TEST(Run, ConvergenceFailureKeepsPartialResults) {
  RunPlan plan = diode_plan();
  plan.experiments = {plan.experiments[1]};
  plan.experiments[0].thermal = ThermalSelection::off;
  plan.solver.max_iterations = 2;
  plan.solver.max_halvings = 0;
  plan.solver.max_bias_step = 1.0;
  const auto dir = fixtures::scratch_dir("run-fail");
  const RunOutcome out = run(plan, quiet(dir));
  EXPECT_NE(out.exit_code(), 0);
  EXPECT_FALSE(out.first_failure().empty());
  const std::string iv = fixtures::read_file(dir / "iv" / "iv_thermal-off.csv");
  EXPECT_EQ(iv.rfind("Vg_V,Vd_V,Id_A_per_um,Tpeak_K,converged\n", 0), 0u);
  EXPECT_NE(iv.find("false"), std::string::npos);
  EXPECT_NE(fixtures::read_file(dir / "summary.txt").find("iv.status=failed"), std::string::npos);
}

TEST(Run, InvalidPlanIsRejectedBeforeWriting) {
  RunPlan plan = diode_plan();
  plan.experiments[1].drain_contact = "nowhere";
  const auto dir = fixtures::scratch_dir("run-invalid") / "out";
  EXPECT_THROW(run(plan, quiet(dir)), ConfigValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir));
}

TEST(Run, ParallelOutputIsByteIdentical) {
  const RunPlan plan = diode_plan();
  const auto a = fixtures::scratch_dir("run-serial");
  const auto b = fixtures::scratch_dir("run-parallel");
  ASSERT_TRUE(run(plan, quiet(a, 1)).ok());
  ASSERT_TRUE(run(plan, quiet(b, 3)).ok());
  const auto fa = data_files(a), fb = data_files(b);
  EXPECT_GE(fa.size(), 8u);
  EXPECT_EQ(fa, fb);
}
