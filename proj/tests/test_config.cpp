#include <gtest/gtest.h>

#include "common.hpp"
#include "ldsim/config.hpp"
#include "plan_corpus.hpp"

using namespace ldsim;

namespace {

const char* minimal = R"({"device": {"ldmos": {}}, "experiments": [{"type": "equilibrium"}]})";

std::string with_experiments(const std::string& experiments) {
  return R"({"device": {"ldmos": {}}, "experiments": )" + experiments + "}";
}

}  // namespace

TEST(ParseConfig, MinimalConfigTakesDefaults) {
  const RunPlan p = parse_config(minimal);
  EXPECT_EQ(p.device.kind, DeviceSection::Kind::ldmos);
  EXPECT_EQ(p.device.ldmos, LdmosParams{});
  EXPECT_EQ(p.materials, MaterialTable::defaults());
  EXPECT_EQ(p.physics, PhysicsOptions{});
  EXPECT_EQ(p.solver, SolverConfig{});
  ASSERT_EQ(p.experiments.size(), 1u);
  EXPECT_EQ(p.experiments[0].kind, ExperimentKind::equilibrium);
  EXPECT_EQ(p.experiments[0].name, "01-equilibrium");
  EXPECT_EQ(p.output_dir, "");
  EXPECT_EQ(p.seed, 0u);
}

TEST(ParseConfig, UnknownKeyIsNamed) {
  try {
    parse_config(R"({"device": {"ldmos": {"gat_length": 2.6}}, "experiments": [{"type": "equilibrium"}]})");
    FAIL() << "expected UnknownKeyError";
  } catch (const UnknownKeyError& e) {
    EXPECT_EQ(e.key(), "gat_length");
    EXPECT_EQ(e.path(), "device.ldmos.gat_length");
    EXPECT_NE(std::string(e.what()).find("gat_length"), std::string::npos);
  }
  EXPECT_THROW(parse_config(R"({"device": {"ldmos": {}}, "experiments": [], "colour": 1})"), UnknownKeyError);
  EXPECT_THROW(parse_config(with_experiments(R"([{"type": "equilibrium", "bias": []}])")), UnknownKeyError);
}

TEST(ParseConfig, MaterialOverride) {
  const RunPlan p = parse_config(
      R"({"device": {"ldmos": {}}, "materials": {"Si": {"k300_natural_W_mK": 142}},
          "experiments": [{"type": "equilibrium"}]})");
  EXPECT_EQ(p.materials.at("Si").isotope_k300.at(Isotope::natural), 142.0);
  EXPECT_EQ(thermal_conductivity(p.material_table().at("Si"), p.material_table().isotope(), 300.0), 142.0);
  EXPECT_EQ(p.materials.at("Si").isotope_k300.at(Isotope::si28), 200.0);
}

TEST(ParseConfig, SyntaxErrorPosition) {
  try {
    parse_config("{\n  \"device\": {\"ldmos\": {}},\n  \"experiments\": [,]\n}");
    FAIL() << "expected ConfigSyntaxError";
  } catch (const ConfigSyntaxError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 19u);
  }
  EXPECT_THROW(parse_config(""), ConfigSyntaxError);
}

TEST(ParseConfig, ErrorClassesAreDistinct) {
  EXPECT_THROW(parse_config("{"), ConfigSyntaxError);
  EXPECT_THROW(parse_config(with_experiments("[]")), ConfigValidationError);
  EXPECT_THROW(parse_config(R"({"device": {"ldmos": {"bogus": 1}}, "experiments": []})"), UnknownKeyError);
  EXPECT_FALSE((std::is_base_of_v<ConfigValidationError, UnknownKeyError>));
  EXPECT_FALSE((std::is_base_of_v<ConfigValidationError, ConfigSyntaxError>));
}

TEST(ParseConfig, InvariantViolations) {
  // unknown contact
  EXPECT_THROW(parse_config(with_experiments(
                   R"([{"type": "isotope-compare", "bias": [{"contact": "collector", "voltage_V": 1}]}])")),
               ConfigValidationError);
  EXPECT_THROW(parse_config(with_experiments(
                   R"([{"type": "iv-sweep", "gate_biases_V": [1], "drain_V": {"stop": 1}, "drain_contact": "x"}])")),
               ConfigValidationError);
  // duplicate and unsafe names
  EXPECT_THROW(parse_config(with_experiments(
                   R"([{"type": "equilibrium", "name": "a"}, {"type": "equilibrium", "name": "a"}])")),
               ConfigValidationError);
  EXPECT_THROW(parse_config(with_experiments(R"([{"type": "equilibrium", "name": "../up"}])")),
               ConfigValidationError);
  // device and model errors are reported as validation errors
  EXPECT_THROW(parse_config(R"({"device": {"ldmos": {"locos_length_um": 0}}, "experiments": [{"type": "equilibrium"}]})"),
               ConfigValidationError);
  EXPECT_THROW(parse_config(R"({"device": {"ldmos": {}}, "materials": {"Si": {"eps_r": -1}},
                                "experiments": [{"type": "equilibrium"}]})"),
               ConfigValidationError);
  // wrong types and enumerations
  EXPECT_THROW(parse_config(R"({"device": {"ldmos": {"gate_length_um": "long"}}, "experiments": [{"type": "equilibrium"}]})"),
               ConfigValidationError);
  EXPECT_THROW(parse_config(with_experiments(R"([{"type": "transient"}])")), ConfigValidationError);
  EXPECT_THROW(parse_config(R"({"device": {}, "experiments": [{"type": "equilibrium"}]})"), ConfigValidationError);
  EXPECT_THROW(parse_config(with_experiments(
                   R"([{"type": "iv-sweep", "gate_biases_V": [1], "drain_V": {"stop": 1, "step": 0}}])")),
               ConfigValidationError);
}

TEST(ParseConfig, RawSpecDevice) {
  RunPlan p;
  p.device.kind = DeviceSection::Kind::spec;
  p.device.spec = fixtures::diode_spec();
  Experiment e;
  e.name = "eq";
  p.experiments.push_back(e);
  const RunPlan q = parse_config(print_config(p));
  EXPECT_EQ(q, p);
  EXPECT_EQ(q.device.resolve(), fixtures::diode_spec());
}

TEST(ParseConfig, NewMaterialNeedsKind) {
  EXPECT_THROW(parse_config(R"({"device": {"ldmos": {}}, "materials": {"GaN": {"eps_r": 9}},
                                "experiments": [{"type": "equilibrium"}]})"),
               ConfigValidationError);
  const RunPlan p = parse_config(R"({"device": {"ldmos": {}},
      "materials": {"Si3N4": {"kind": "insulator", "eps_r": 7.5, "k300_W_mK": 20, "heat_capacity_J_cm3K": 2}},
      "experiments": [{"type": "equilibrium"}]})");
  EXPECT_EQ(p.materials.at("Si3N4").eps_r, 7.5);
}

TEST(PrintConfig, RoundTripCorpus) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const RunPlan plan = fixtures::random_plan(seed);
    ASSERT_NO_THROW(validate_plan(plan)) << "seed " << seed;
    const std::string text = print_config(plan);
    const RunPlan back = parse_config(text);
    EXPECT_EQ(back, plan) << "seed " << seed;
    EXPECT_EQ(print_config(back), text) << "seed " << seed;
  }
}

TEST(LoadConfig, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/plan.json"), ConfigError);
}
