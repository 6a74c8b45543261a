#pragma once

#include <memory>
#include <string>
#include <variant>

namespace qkdamage {

struct NoEve {};

/// Measure a `fraction` of arriving photons in a random basis and resend.
struct InterceptResend {
  double fraction = 1.0;
};

/// Intercept every arriving photon and resend the result as a bright pulse.
struct FakedState {
  double pulse_power = 0.0;  // W
};

/// Blind all four data detectors with one laser exposure, then FakedState.
struct DamageThenFakedState {
  double campaign_power = 0.0;  // W
  double pulse_power = 0.0;     // W
};

/// Lower the dark count rate of all data detectors, then intercept-resend a
/// fraction of photons. A negative fraction means "use the largest fraction
/// hidden by the dark-count credit" (see subtraction_exploit_fraction).
struct SubtractionExploit {
  double campaign_power = 0.0;  // W
  double intercept_fraction = -1.0;
};

struct WatchdogKill;

using EveStrategy = std::variant<NoEve, InterceptResend, FakedState, DamageThenFakedState,
                                 SubtractionExploit, WatchdogKill>;

/// Destroy the watchdog detector first, then run `inner`.
struct WatchdogKill {
  double campaign_power = 0.0;  // W
  std::shared_ptr<const EveStrategy> inner;
};

std::string strategy_name(const EveStrategy& strategy);

/// Throws ConfigError for fractions outside [0, 1] or negative powers.
void validate(const EveStrategy& strategy);

}  // namespace qkdamage
