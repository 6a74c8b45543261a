#pragma once

// Named, seeded, configuration-driven scenarios behind the `simulate` CLI.
//
// Configuration is a JSON document; every key is optional except that a seed
// must come from either the file or the command line. Unknown keys are
// rejected. See README.md for the schema.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qkdamage/attacks.hpp"
#include "qkdamage/bb84.hpp"
#include "qkdamage/characterization.hpp"
#include "qkdamage/damage.hpp"

namespace qkdamage {

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"baseline",           "damage-sweep",
                                              "blind-and-fake",     "dark-count-subtraction",
                                              "efficiency-mismatch", "watchdog-defeat"};
  return names;
}

struct DetectorSettings {
  std::optional<double> overvoltage_setpoint;  // V; scenario default when unset
  double r_ballast = 400e3;
  double slot_duration = 1e-9;
  double dead_time = 1e-6;
  double eta_nominal = 0.5;
  double v_ov_nominal = 15.0;
  ControlCurve control_curve{};
};

struct AttackSettings {
  double pulse_power_factor = 1.5;  // bright-pulse power in units of p_threshold
  double campaign_confidence = 1.0;
  std::optional<double> campaign_power;        // W; planned from the profile when unset
  std::optional<double> intercept_fraction;    // subtraction exploit; auto when unset
  double watchdog_threshold = 1e-4;            // W
  int target_detector = 0;
  int max_attempts = 10;
};

struct SweepSettings {
  double start = 0.1;
  double stop = 3.0;
  double step = 0.05;

  std::vector<double> powers() const;
};

enum class OutputFormat { Csv, Json };

struct ScenarioConfig {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::int64_t pulses = 100000;
  std::string out;  // empty: stdout
  std::optional<OutputFormat> format;  // scenario default when unset
  int trials = 1;

  ProtocolParams protocol{};
  DetectorSettings detector{};
  DamageProfile damage{};
  MeasurementConfig measurement{};
  AlarmPolicy alarm{};
  AttackSettings attack{};
  SweepSettings sweep{};

  double setpoint() const;
  OutputFormat output_format() const;
  /// Throws ConfigError naming the problem.
  void validate() const;
};

/// Overlays a JSON document onto `config`. Throws ConfigError.
void merge_config(ScenarioConfig& config, const nlohmann::json& doc);
ScenarioConfig load_config_file(const std::string& path);

/// Four data detectors (and a watchdog) drawn from the profile on labeled
/// sub-streams of `seed`.
BobReceiver build_receiver(const ScenarioConfig& config, std::uint64_t seed, bool with_watchdog);

nlohmann::ordered_json to_json(const SimResult& r);
nlohmann::ordered_json to_json(const AttackReport& r);

/// Runs the configured scenario and returns the output document, byte for
/// byte what the CLI writes. Throws ConfigError or InvariantViolation.
std::string run_scenario(const ScenarioConfig& config);

}  // namespace qkdamage
