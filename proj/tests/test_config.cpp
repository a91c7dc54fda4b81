#include <gtest/gtest.h>

#include "myo/config.hpp"
#include "myo/errors.hpp"

using namespace myo;

TEST(Config, ParseLengthUnits) {
  EXPECT_DOUBLE_EQ(parse_length(Json(0.05), "x"), 0.05);
  EXPECT_DOUBLE_EQ(parse_length(Json("52.0008mm"), "x"), 0.0520008);
  EXPECT_DOUBLE_EQ(parse_length(Json("2cm"), "x"), 0.02);
  EXPECT_DOUBLE_EQ(parse_length(Json("0.3m"), "x"), 0.3);
  EXPECT_THROW(parse_length(Json("3 furlongs"), "x"), ConfigError);
  EXPECT_THROW(parse_length(Json(true), "x"), ConfigError);
}

TEST(Config, OverridesParseJsonValues) {
  Json doc = Json::object();
  apply_override(doc, "time.t_end=0.25");
  apply_override(doc, "mesh.element=Q1");
  apply_override(doc, "mesh.divisions=[2,1,1]");
  apply_override(doc, "materials.overrides.muscle.alpha=0.4");
  EXPECT_DOUBLE_EQ(doc["time"]["t_end"].get<double>(), 0.25);
  EXPECT_EQ(doc["mesh"]["element"], "Q1");
  EXPECT_EQ(doc["mesh"]["divisions"].size(), 3u);
  EXPECT_DOUBLE_EQ(doc["materials"]["overrides"]["muscle.alpha"].get<double>(), 0.4);
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigError);
  EXPECT_THROW(apply_override(doc, "a..b=1"), ConfigError);
}

TEST(Config, UnknownKeyNamesLocation) {
  Json doc = {{"time", {{"t_end", 1.0}, {"sigma00", 3}}}};
  try {
    parse_config(doc);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("sigma00"), std::string::npos) << msg;
    EXPECT_NE(msg.find("/time"), std::string::npos) << msg;
  }
}

TEST(Config, EveryPresetParses) {
  const auto names = preset_names();
  EXPECT_GE(names.size(), 6u);
  for (const auto& name : names) {
    SCOPED_TRACE(name);
    const RunConfig cfg = parse_config(Json{{"preset", name}});
    EXPECT_EQ(cfg.study, name);
    EXPECT_NO_THROW(build_materials(cfg));
  }
  EXPECT_THROW(preset("nope"), ConfigError);
}

TEST(Config, MaterialOverridesFollowMixture) {
  MaterialSet m = MaterialSet::defaults();
  apply_material_overrides(m, Json{{"muscle.alpha", 0.4}, {"muscle.beta", 0.2}});
  EXPECT_NEAR(m.at("muscle").kappa, 7.12e6, 1.0);
  EXPECT_THROW(apply_material_overrides(m, Json{{"muscle.kappa", 5e6}}), std::exception);
  EXPECT_THROW(apply_material_overrides(m, Json{{"muscle.sigma00", 1}}), std::exception);
}

TEST(Config, PresetValuesCanBeOverridden) {
  Json doc = {{"preset", "dynamic-pull"}};
  apply_override(doc, "time.t_end=0.01");
  const RunConfig cfg = parse_config(doc);
  EXPECT_EQ(cfg.study, "dynamic-pull");
  EXPECT_DOUBLE_EQ(cfg.time.t_end, 0.01);
}
