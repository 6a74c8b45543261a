#pragma once

// Eve's toolbox: damage campaigns and the exploits they enable.

#include <cstdint>

#include "qkdamage/bb84.hpp"
#include "qkdamage/damage.hpp"
#include "qkdamage/strategy.hpp"

namespace qkdamage {

/// Laser power that crosses the target band's per-sample onset with
/// probability at least `confidence`: the midpoint of the part of the onset
/// range above its `confidence` quantile. Confidence 1 returns the top of
/// the range. Band a has no permanent onset and is rejected.
double plan_campaign(Band target, const DamageProfile& profile, double confidence = 0.95);

struct AttackReport {
  SimResult result;
  SimResult baseline;  // same receiver before any damage, no Eve
  double qber_delta_vs_baseline = 0.0;
  double eve_info_fraction = 0.0;
  double bob_rate_ratio_vs_baseline = 0.0;  // sifted bits, attack over baseline
  std::int64_t alarms_raised = 0;
  // Campaign outcome.
  int detectors_blinded = 0;
  bool watchdog_destroyed = false;
  double intercept_fraction = 0.0;  // fraction used by the per-slot attack
};

/// Applies the strategy's damage campaign to `bob` in place (watchdog first
/// for WatchdogKill, then all four data detectors). Returns the strategy with
/// any automatic parameter resolved.
EveStrategy apply_campaign(const EveStrategy& strategy, const ProtocolParams& params,
                           BobReceiver& bob, Rng& rng);

/// Campaign, then the per-slot attack, compared against an undamaged,
/// unattacked run on the same link randomness.
AttackReport run_attack(const EveStrategy& strategy, const ProtocolParams& params,
                        const BobReceiver& bob, std::uint64_t seed);

/// Largest intercept-resend fraction whose extra errors (0.25 per intercepted
/// sifted bit, signal-dominated regime) fit in the QBER headroom Bob gives
/// away by crediting a stale, higher dark-count calibration. Throws
/// MisuseError if q_expected < q_base_after_damage.
double subtraction_exploit_fraction(double q_expected, double q_base_after_damage);

/// Analytic QBER the receiver would show without Eve: mean efficiency and
/// mean dark probability over the four detectors.
double receiver_analytic_qber(const ProtocolParams& params, const BobReceiver& bob);

/// min / max photon detection efficiency over the four data detectors;
/// 1 when all are equal, 0 when the best one is dead.
double efficiency_mismatch_ratio(const BobReceiver& bob);

struct MismatchOutcome {
  double ratio = 1.0;
  int attempts = 0;
  bool effect_fired = false;
};

/// Exposes one data detector at increasing powers inside band b until its
/// breakdown voltage rises or attempts run out. Never exceeds the planned
/// band-b power, so band c (which undoes b) is not reached.
MismatchOutcome selective_efficiency_damage(BobReceiver& bob, int target,
                                            const DamageProfile& profile, Rng& rng,
                                            int max_attempts = 10);

}  // namespace qkdamage
