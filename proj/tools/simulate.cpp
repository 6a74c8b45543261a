// simulate: run a named laser-damage / QKD scenario.
//
// Exit codes: 0 success, 2 configuration error, 3 internal invariant
// violation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qkdamage/errors.hpp"
#include "qkdamage/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

std::string valid_scenarios() {
  std::string s;
  for (const auto& n : qkdamage::scenario_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seeded Monte Carlo of a BB84 link whose detectors an eavesdropper damages with a laser",
               "simulate"};

  std::optional<std::string> scenario;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> pulses;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> trials;

  app.add_option("--scenario", scenario, "Scenario: " + valid_scenarios());
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "Top-level 64-bit seed (required here or in the config)");
  app.add_option("--pulses", pulses, "Number of BB84 slots");
  app.add_option("--out", out, "Output path (stdout when omitted)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--trials", trials, "Independent trials, run in parallel and aggregated")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    qkdamage::ScenarioConfig cfg;
    if (config_path) cfg = qkdamage::load_config_file(*config_path);
    if (scenario) cfg.scenario = *scenario;
    if (seed) cfg.seed = *seed;
    if (pulses) cfg.pulses = *pulses;
    if (out) cfg.out = *out;
    if (format) cfg.format = *format == "csv" ? qkdamage::OutputFormat::Csv : qkdamage::OutputFormat::Json;
    if (trials) cfg.trials = *trials;

    const std::string text = qkdamage::run_scenario(cfg);
    if (cfg.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream file(cfg.out, std::ios::binary | std::ios::trunc);
      if (!file) throw qkdamage::ConfigError("cannot open output file '" + cfg.out + "'");
      file << text;
      if (!file.flush()) throw qkdamage::ConfigError("failed writing '" + cfg.out + "'");
    }
    return 0;
  } catch (const qkdamage::ConfigError& e) {
    std::cerr << "simulate: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "simulate: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
