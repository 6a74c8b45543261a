#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qkdamage/errors.hpp"
#include "qkdamage/scenario.hpp"

using namespace qkdamage;
using nlohmann::json;

namespace {

ScenarioConfig config_for(const std::string& scenario, std::int64_t pulses = 2000) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  cfg.seed = 12345;
  cfg.pulses = pulses;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  ScenarioConfig cfg;
  merge_config(cfg, json::parse(R"({
    "scenario": "baseline", "seed": 7, "pulses": 10,
    "protocol": {"distance_km": 50, "e_misalign": 0.02},
    "detector": {"overvoltage_setpoint": 12.5, "p_threshold": 1e-3},
    "damage": {"c_onset": [0.7, 0.8]},
    "alarm": {"tolerance": 0.1, "dcr": 0.5}
  })"));
  CHECK(cfg.scenario == "baseline");
  CHECK(*cfg.seed == 7);
  CHECK(cfg.pulses == 10);
  CHECK(cfg.protocol.channel_loss_db == doctest::Approx(10.0));
  CHECK(cfg.protocol.e_misalign == 0.02);
  CHECK(cfg.setpoint() == 12.5);
  CHECK(cfg.detector.control_curve.p_threshold == 1e-3);
  CHECK(cfg.damage.c_onset.low == 0.7);
  CHECK(cfg.alarm.tol_pde == 0.1);
  CHECK(cfg.alarm.tol_dcr == 0.5);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config errors") {
  ScenarioConfig cfg;
  CHECK_THROWS_AS(merge_config(cfg, json::parse(R"({"bogus": 1})")), ConfigError);
  CHECK_THROWS_AS(merge_config(cfg, json::parse(R"({"protocol": {"loss": 1}})")), ConfigError);
  CHECK_THROWS_AS(merge_config(cfg, json::parse(R"({"seed": -3})")), ConfigError);
  CHECK_THROWS_AS(merge_config(cfg, json::parse(R"({"damage": {"b_onset": [1]}})")), ConfigError);
  CHECK_THROWS_AS(merge_config(cfg, json::parse(R"({"pulses": "many"})")), ConfigError);
  CHECK_THROWS_AS(merge_config(cfg, json::parse(R"({"format": "xml"})")), ConfigError);
  CHECK_THROWS_AS(
      merge_config(cfg, json::parse(R"({"protocol": {"distance_km": 1, "channel_loss_db": 1}})")),
      ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), ConfigError);

  ScenarioConfig missing_seed = config_for("baseline");
  missing_seed.seed.reset();
  CHECK_THROWS_AS(run_scenario(missing_seed), ConfigError);
  CHECK_THROWS_AS(run_scenario(config_for("nope")), ConfigError);
  try {
    run_scenario(config_for("nope"));
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("watchdog-defeat") != std::string::npos);
  }

  ScenarioConfig bad_damage = config_for("baseline");
  bad_damage.damage.c_onset = {0.2, 0.3};
  CHECK_THROWS_AS(run_scenario(bad_damage), ConfigError);
}

TEST_CASE("every scenario is reproducible") {
  for (const auto& name : scenario_names()) {
    CAPTURE(name);
    const ScenarioConfig cfg = config_for(name);
    const std::string a = run_scenario(cfg);
    CHECK(a == run_scenario(cfg));
    ScenarioConfig other = cfg;
    other.seed = 54321;
    CHECK(a != run_scenario(other));
  }
}

TEST_CASE("scenario setpoints") {
  CHECK(config_for("blind-and-fake").setpoint() == 11.0);
  CHECK(config_for("watchdog-defeat").setpoint() == 11.0);
  CHECK(config_for("baseline").setpoint() == 15.0);
}

TEST_CASE("damage sweep output") {
  const std::string csv = run_scenario(config_for("damage-sweep"));
  std::istringstream in(csv);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == kSweepCsvHeader);
  CHECK(first.rfind("0,", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 59);  // 0.1 to 3.0 in 0.05 steps

  ScenarioConfig as_json = config_for("damage-sweep");
  as_json.format = OutputFormat::Json;
  const json doc = json::parse(run_scenario(as_json));
  CHECK(doc["traces"].size() == 1);
  CHECK(doc["traces"][0].size() == 60);
  CHECK(doc["traces"][0][1]["exposure_power"].get<double>() == 0.1);
}

TEST_CASE("scenario documents carry the expected fields") {
  const json base = json::parse(run_scenario(config_for("baseline", 20000)));
  CHECK(base["mode"] == "single");
  CHECK(base["result"]["n_sifted"].get<std::int64_t>() > 0);
  CHECK(base.contains("analytic_qber"));

  const json fake = json::parse(run_scenario(config_for("blind-and-fake", 20000)));
  CHECK(fake["report"]["campaign"]["detectors_blinded"] == 4);
  // Default link keeps 1% misalignment, which reaches Eve's result too.
  CHECK(fake["report"]["eve_info_fraction"].get<double>() > 0.97);
  CHECK(std::abs(fake["report"]["qber_delta_vs_baseline"].get<double>()) < 0.01);

  const json wd = json::parse(run_scenario(config_for("watchdog-defeat", 20000)));
  CHECK(wd["defeated"]["alarms_raised"] == 0);
  CHECK(wd["intact_watchdog"]["alarms_raised"].get<std::int64_t>() > 0);

  const json sub = json::parse(run_scenario(config_for("dark-count-subtraction", 20000)));
  CHECK(sub["q_after_damage"].get<double>() < sub["q_expected"].get<double>());
  CHECK(sub["intercept_fraction"].get<double>() == doctest::Approx(sub["phi_max"].get<double>()));

  ScenarioConfig csv = config_for("baseline");
  csv.format = OutputFormat::Csv;
  const std::string text = run_scenario(csv);
  CHECK(text.rfind("field,value\n", 0) == 0);
  CHECK(text.find("result.qber,") != std::string::npos);
}

TEST_CASE("parallel trials are deterministic and aggregate") {
  ScenarioConfig cfg = config_for("baseline", 5000);
  cfg.trials = 4;
  const std::string a = run_scenario(cfg);
  CHECK(a == run_scenario(cfg));
  const json doc = json::parse(a);
  CHECK(doc["mode"] == "trials-parallel");

  std::int64_t sifted = 0;
  for (int i = 0; i < 4; ++i) {
    ScenarioConfig one = config_for("baseline", 5000);
    one.seed = derive_seed(12345, "trial/" + std::to_string(i));
    sifted += json::parse(run_scenario(one))["result"]["n_sifted"].get<std::int64_t>();
  }
  CHECK(doc["result"]["n_sifted"].get<std::int64_t>() == sifted);
}
