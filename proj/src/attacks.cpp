#include "qkdamage/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "qkdamage/errors.hpp"

namespace qkdamage {

std::string strategy_name(const EveStrategy& strategy) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoEve>) return "none";
        else if constexpr (std::is_same_v<T, InterceptResend>) return "intercept-resend";
        else if constexpr (std::is_same_v<T, FakedState>) return "faked-state";
        else if constexpr (std::is_same_v<T, DamageThenFakedState>) return "damage-then-faked-state";
        else if constexpr (std::is_same_v<T, SubtractionExploit>) return "subtraction-exploit";
        else return "watchdog-kill";
      },
      strategy);
}

void validate(const EveStrategy& strategy) {
  const auto power = [](double p, const char* what) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw ConfigError(std::string("strategy: ") + what + " must be a non-negative power");
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, InterceptResend>) {
          if (!(s.fraction >= 0.0 && s.fraction <= 1.0))
            throw ConfigError("strategy: intercept fraction must lie in [0, 1]");
        } else if constexpr (std::is_same_v<T, FakedState>) {
          power(s.pulse_power, "pulse_power");
        } else if constexpr (std::is_same_v<T, DamageThenFakedState>) {
          power(s.campaign_power, "campaign_power");
          power(s.pulse_power, "pulse_power");
        } else if constexpr (std::is_same_v<T, SubtractionExploit>) {
          power(s.campaign_power, "campaign_power");
          if (s.intercept_fraction > 1.0)
            throw ConfigError("strategy: intercept fraction must not exceed 1");
        } else if constexpr (std::is_same_v<T, WatchdogKill>) {
          power(s.campaign_power, "campaign_power");
          if (s.inner) validate(*s.inner);
        }
      },
      strategy);
}

double plan_campaign(Band target, const DamageProfile& profile, double confidence) {
  if (target == Band::A) throw ConfigError("plan_campaign: band a has no permanent onset");
  if (!(confidence >= 0.0 && confidence <= 1.0))
    throw ConfigError("plan_campaign: confidence must lie in [0, 1]");
  const Range& r = profile.onset(target);
  const double quantile = r.low + confidence * (r.high - r.low);
  return 0.5 * (quantile + r.high);
}

double subtraction_exploit_fraction(double q_expected, double q_base_after_damage) {
  const double budget = q_expected - q_base_after_damage;
  if (budget < 0.0) throw MisuseError("subtraction exploit: no error budget (q_expected < q_base)");
  return std::min(1.0, budget / 0.25);
}

namespace {

double mean_eta(const BobReceiver& bob) {
  double sum = 0.0;
  for (const auto& d : bob.detectors) sum += photon_detection_efficiency(d.state, d.circuit);
  return sum / 4.0;
}

double mean_dark(const BobReceiver& bob) {
  double sum = 0.0;
  for (const auto& d : bob.detectors)
    sum += dark_click_probability(d.state, d.circuit, d.state.last_exposure_time);
  return sum / 4.0;
}

void expose_all(BobReceiver& bob, double power, Rng& rng) {
  for (auto& d : bob.detectors) apply_illumination(d.state, d.thresholds, power, rng);
}

}  // namespace

double receiver_analytic_qber(const ProtocolParams& params, const BobReceiver& bob) {
  return analytic_qber(sifted_signal_probability(mean_eta(bob), params.transmittance()),
                       params.e_misalign, mean_dark(bob));
}

double efficiency_mismatch_ratio(const BobReceiver& bob) {
  double lo = 1.0;
  double hi = 0.0;
  for (const auto& d : bob.detectors) {
    const double eta = photon_detection_efficiency(d.state, d.circuit);
    lo = std::min(lo, eta);
    hi = std::max(hi, eta);
  }
  return hi > 0.0 ? lo / hi : 0.0;
}

EveStrategy apply_campaign(const EveStrategy& strategy, const ProtocolParams& params,
                           BobReceiver& bob, Rng& rng) {
  validate(strategy);
  return std::visit(
      [&](const auto& s) -> EveStrategy {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DamageThenFakedState>) {
          expose_all(bob, s.campaign_power, rng);
          return s;
        } else if constexpr (std::is_same_v<T, SubtractionExploit>) {
          const double q_expected = receiver_analytic_qber(params, bob);
          expose_all(bob, s.campaign_power, rng);
          SubtractionExploit resolved = s;
          if (resolved.intercept_fraction < 0.0) {
            const double q_after = receiver_analytic_qber(params, bob);
            resolved.intercept_fraction =
                q_after <= q_expected ? subtraction_exploit_fraction(q_expected, q_after) : 0.0;
          }
          return resolved;
        } else if constexpr (std::is_same_v<T, WatchdogKill>) {
          if (bob.watchdog)
            apply_illumination(bob.watchdog->state, bob.watchdog->thresholds, s.campaign_power, rng);
          if (!s.inner) return s;
          WatchdogKill resolved = s;
          resolved.inner =
              std::make_shared<const EveStrategy>(apply_campaign(*s.inner, params, bob, rng));
          return resolved;
        } else {
          return s;
        }
      },
      strategy);
}

namespace {

double resolved_intercept_fraction(const EveStrategy& s) {
  if (const auto* ir = std::get_if<InterceptResend>(&s)) return ir->fraction;
  if (std::holds_alternative<FakedState>(s) || std::holds_alternative<DamageThenFakedState>(s))
    return 1.0;
  if (const auto* se = std::get_if<SubtractionExploit>(&s)) return se->intercept_fraction;
  if (const auto* wk = std::get_if<WatchdogKill>(&s))
    return wk->inner ? resolved_intercept_fraction(*wk->inner) : 0.0;
  return 0.0;
}

}  // namespace

AttackReport run_attack(const EveStrategy& strategy, const ProtocolParams& params,
                        const BobReceiver& bob, std::uint64_t seed) {
  params.validate();
  bob.validate();

  BobReceiver damaged = bob;
  Rng campaign_rng = make_rng(seed, "campaign");
  const EveStrategy resolved = apply_campaign(strategy, params, damaged, campaign_rng);

  const std::uint64_t link_seed = derive_seed(seed, "link");
  AttackReport report;
  report.baseline = run_bb84(params, bob, NoEve{}, link_seed);
  report.result = run_bb84(params, damaged, resolved, link_seed);

  report.qber_delta_vs_baseline = report.result.qber - report.baseline.qber;
  report.eve_info_fraction = report.result.eve_info_fraction;
  report.bob_rate_ratio_vs_baseline =
      report.baseline.n_sifted > 0
          ? static_cast<double>(report.result.n_sifted) / report.baseline.n_sifted
          : 0.0;
  report.alarms_raised = report.result.watchdog_alarms;
  for (const auto& d : damaged.detectors)
    if (is_blinded(d.state, d.circuit)) ++report.detectors_blinded;
  report.watchdog_destroyed =
      damaged.watchdog.has_value() && !is_intact(damaged.watchdog->state.structural);
  report.intercept_fraction = resolved_intercept_fraction(resolved);
  ensure(report.bob_rate_ratio_vs_baseline >= 0.0, "negative rate ratio");
  return report;
}

MismatchOutcome selective_efficiency_damage(BobReceiver& bob, int target,
                                            const DamageProfile& profile, Rng& rng,
                                            int max_attempts) {
  if (target < 0 || target > 3) throw MisuseError("selective damage: target must be 0..3");
  if (max_attempts < 1) throw MisuseError("selective damage: need at least one attempt");

  const double start = profile.b_onset.low;
  const double stop = std::min(plan_campaign(Band::B, profile),
                               std::nextafter(profile.c_onset.low, 0.0));
  Detector& d = bob.detectors[target];
  MismatchOutcome out;
  for (int k = 1; k <= max_attempts && !out.effect_fired; ++k) {
    const double power = start + (stop - start) * k / max_attempts;
    const ExposureRecord rec = apply_illumination(d.state, d.thresholds, power, rng);
    out.attempts = k;
    out.effect_fired = std::find(rec.effects_triggered.begin(), rec.effects_triggered.end(),
                                 Band::B) != rec.effects_triggered.end();
  }
  out.ratio = efficiency_mismatch_ratio(bob);
  return out;
}

}  // namespace qkdamage
