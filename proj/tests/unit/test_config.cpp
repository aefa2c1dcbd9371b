#include <gtest/gtest.h>

#include <string>

#include <nlohmann/json.hpp>

#include "acceval/config.hpp"
#include "acceval/errors.hpp"
#include "oracles.hpp"

using namespace acceval;

namespace {

std::string key_path_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, MinimalUsesDefaults) {
  const auto cfg = parse_config(R"({"seed": 42})");
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.plant.kp_acc, -38.6);
  EXPECT_EQ(cfg.plant.ki_acc, -1.35);
  EXPECT_EQ(cfg.plant.tau_av, 0.0796);
  EXPECT_EQ(cfg.plant.a_aeb, 10.0);
  EXPECT_EQ(cfg.plant.r_aeb, -16.0);
  EXPECT_EQ(cfg.plant.ts, 0.1);
  EXPECT_EQ(cfg.plant.t_lc_max, 8.0);
  EXPECT_EQ(cfg.confidence.alpha, 0.2);
  EXPECT_EQ(cfg.confidence.beta, 0.2);
  EXPECT_EQ(cfg.model.r_k, 0.3);
  EXPECT_EQ(cfg.model.r_sigma, 0.0097);
  EXPECT_EQ(cfg.r_lc, 1325964.0 / 173592.0);
  EXPECT_EQ(cfg.injury.b0, -6.068);
  EXPECT_EQ(cfg.selected_bins(), (std::vector<std::string>{"low", "medium", "high"}));
}

TEST(Config, ErrorsCarryKeyPath) {
  EXPECT_EQ(key_path_of(R"({})"), "seed");
  EXPECT_EQ(key_path_of(R"({"seed": -1})"), "seed");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "sede": 2})"), "sede");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "plant": {"kp": 1}})"), "plant.kp");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "plant": {"tau_av": 0}})"), "plant.tau_av");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "plant": {"ts": "fast"}})"), "plant.ts");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "confidence": {"alpha": 1.5}})"), "confidence.alpha");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "events": ["conflict", "fire"]})"), "events[1]");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "bins": ["nowhere"]})"), "bins[0]");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "model": {"r_inv": {"k": 0.3, "kk": 1}}})"), "model.r_inv.kk");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "warm_start": {"conflict": {"low": {"vartheta_r": 0.5}}}})"),
            "warm_start.conflict.low");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "estimation": {"n_nature": "guess"}})"), "estimation.n_nature");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "injury": {"unit": "mph"}})"), "injury.unit");
  EXPECT_EQ(key_path_of(R"({"seed": 1, "verbose_traces": 1})"), "verbose_traces");
  EXPECT_EQ(key_path_of(R"({"seed": 1})"), "<accepted>");
}

TEST(Config, RejectsMalformedJson) {
  EXPECT_THROW(parse_config("{\"seed\": "), ConfigError);
}

TEST(Config, PrettyJsonRoundTrips) {
  const auto cfg = parse_config(R"({
    "seed": 7, "events": ["crash", "injury"], "modes": ["cmc", "is"], "bins": ["high"],
    "plant": {"r_conflict": 10.0},
    "injury": {"unit": "km/h"},
    "warm_start": {"crash": {"high": {"vartheta_r": -0.004, "vartheta_ttc": -0.45}}},
    "estimation": {"n_cap": 5000, "n_nature": "actual"},
    "output_dir": "somewhere"})");
  const auto again = parse_config(pretty_json(cfg));
  EXPECT_EQ(canonical_json(again).find("somewhere"), std::string::npos);
  EXPECT_EQ(config_hash(cfg), config_hash(again));
  EXPECT_EQ(pretty_json(cfg), pretty_json(again));
  EXPECT_EQ(again.warm_start.at("crash").at("high").vartheta_ttc, -0.45);
  EXPECT_EQ(again.injury.unit, DeltaVUnit::KilometersPerHour);
}

TEST(Config, HashMatchesIndependentFnv) {
  auto cfg = parse_config(R"({"seed": 3, "bins": ["low"]})");
  auto j = nlohmann::json::parse(canonical_json(cfg));
  j.erase("output_dir");
  EXPECT_EQ(config_hash(cfg), oracle::fnv1a(j.dump()));
  EXPECT_EQ(fnv1a64(""), 14695981039346656037ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);

  const auto h = config_hash(cfg);
  cfg.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(cfg), h);
  cfg.seed = 4;
  EXPECT_NE(config_hash(cfg), h);
}

TEST(Config, ModelSectionParses) {
  const auto cfg = parse_config(std::string(R"({"seed": 1, "model": )") +
                                model_json(ModelConfig::defaults()) + "}");
  const auto def = ModelConfig::defaults();
  EXPECT_EQ(cfg.model.v_mass, def.v_mass);
  EXPECT_EQ(cfg.model.ttc_table.size(), def.ttc_table.size());
  EXPECT_EQ(cfg.model.r_hi, def.r_hi);
}
