#include "qkdamage/bb84.hpp"

#include <algorithm>
#include <cmath>

#include "qkdamage/errors.hpp"
#include "qkdamage/rng.hpp"

namespace qkdamage {

ProtocolParams ProtocolParams::at_distance(double km, double alpha_db_per_km) {
  ProtocolParams p;
  p.alpha_db_per_km = alpha_db_per_km;
  p.channel_loss_db = km * alpha_db_per_km;
  return p;
}

double ProtocolParams::transmittance() const { return std::pow(10.0, -channel_loss_db / 10.0); }

void ProtocolParams::validate() const {
  if (n_slots < 0) throw ConfigError("protocol: n_slots must be non-negative");
  if (!(channel_loss_db >= 0.0)) throw ConfigError("protocol: channel loss must be >= 0 dB");
  if (!(alpha_db_per_km >= 0.0)) throw ConfigError("protocol: alpha must be >= 0 dB/km");
  if (!(e_misalign >= 0.0 && e_misalign <= 0.5))
    throw ConfigError("protocol: e_misalign must lie in [0, 0.5]");
  if (!(f_ec >= 1.0)) throw ConfigError("protocol: f_ec must be >= 1");
}

void BobReceiver::validate() const {
  for (const auto& d : detectors) d.circuit.validate();
  if (watchdog) {
    watchdog->circuit.validate();
    if (!(watchdog_threshold > 0.0)) throw ConfigError("receiver: watchdog threshold must be positive");
  }
}

double h2(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw MisuseError("h2: argument outside [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double key_rate(double qber, double f_ec) {
  const double h = h2(qber);
  return std::max(0.0, 1.0 - h - f_ec * h);
}

double analytic_qber(double p_sig, double e_det, double d) {
  const double denom = p_sig + 2.0 * d;
  if (!(denom > 0.0)) throw MisuseError("analytic_qber: no signal and no dark counts");
  return (e_det * p_sig + d) / denom;
}

double sifted_signal_probability(double eta, double transmittance) {
  return 0.5 * eta * transmittance;
}

std::array<double, 4> faked_state_slot(int eve_bit, int eve_basis, double pulse_power,
                                       int bob_basis) {
  std::array<double, 4> powers{};
  if (bob_basis == eve_basis) {
    powers[detector_index(bob_basis, eve_bit)] = pulse_power;
  } else {
    powers[detector_index(bob_basis, 0)] = 0.5 * pulse_power;
    powers[detector_index(bob_basis, 1)] = 0.5 * pulse_power;
  }
  return powers;
}

void finalize(SimResult& r, double f_ec) {
  ensure(r.n_errors <= r.n_sifted && r.n_sifted <= r.n_detected && r.n_detected <= r.n_slots,
         "SimResult counts out of order");
  r.qber = r.n_sifted > 0 ? static_cast<double>(r.n_errors) / r.n_sifted : 0.0;
  r.key_rate_per_sifted_bit = key_rate(std::min(r.qber, 1.0), f_ec);
  r.eve_info_fraction = r.n_sifted > 0 ? static_cast<double>(r.n_eve_correct) / r.n_sifted : 0.0;
  r.detection_rate_per_slot = r.n_slots > 0 ? static_cast<double>(r.n_detected) / r.n_slots : 0.0;
}

namespace {

struct SlotBehaviour {
  double intercept_fraction = 0.0;
  double pulse_power = 0.0;  // > 0 selects bright-pulse resend
};

SlotBehaviour slot_behaviour(const EveStrategy& eve) {
  return std::visit(
      [](const auto& s) -> SlotBehaviour {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoEve>) {
          return {};
        } else if constexpr (std::is_same_v<T, InterceptResend>) {
          return {s.fraction, 0.0};
        } else if constexpr (std::is_same_v<T, FakedState>) {
          return {1.0, s.pulse_power};
        } else if constexpr (std::is_same_v<T, DamageThenFakedState>) {
          return {1.0, s.pulse_power};
        } else if constexpr (std::is_same_v<T, SubtractionExploit>) {
          return {std::max(0.0, s.intercept_fraction), 0.0};
        } else {
          return s.inner ? slot_behaviour(*s.inner) : SlotBehaviour{};
        }
      },
      eve);
}

// Click model of one detector, precomputed for a run.
struct ClickModel {
  bool alive = false;       // intact
  bool blinded = false;
  double p_dark = 0.0;      // no light
  double p_photon = 0.0;    // one photon
  double p_full = 0.0;      // bright pulse, full power
  double p_half = 0.0;      // bright pulse, half power

  double bright(double power, double full) const {
    if (power <= 0.0) return p_dark;
    return power == full ? p_full : p_half;
  }
};

ClickModel make_click_model(const Detector& d, double pulse_power) {
  ClickModel m;
  m.alive = is_intact(d.state.structural);
  if (!m.alive) return m;
  m.blinded = is_blinded(d.state, d.circuit);
  m.p_dark = geiger_click_probability(d.state, d.circuit, 0);
  m.p_photon = geiger_click_probability(d.state, d.circuit, 1);
  if (m.blinded) {
    m.p_full = bright_pulse_click_probability(d.state, d.circuit, pulse_power);
    m.p_half = bright_pulse_click_probability(d.state, d.circuit, 0.5 * pulse_power);
  } else {
    // A bright pulse saturates a detector still in Geiger mode.
    m.p_full = pulse_power > 0.0 ? 1.0 : m.p_dark;
    m.p_half = pulse_power > 0.0 ? 1.0 : m.p_dark;
  }
  return m;
}

}  // namespace

SimResult run_bb84(const ProtocolParams& params, const BobReceiver& bob, const EveStrategy& eve,
                   std::uint64_t seed) {
  params.validate();
  bob.validate();
  validate(eve);

  const SlotBehaviour behaviour = slot_behaviour(eve);
  const bool bright = behaviour.pulse_power > 0.0;
  std::array<ClickModel, 4> models;
  for (int i = 0; i < 4; ++i) models[i] = make_click_model(bob.detectors[i], behaviour.pulse_power);

  double watchdog_reading = 0.0;
  if (bob.watchdog && bright)
    watchdog_reading = watchdog_power_reading(bob.watchdog->state, behaviour.pulse_power);
  const bool bright_alarm = watchdog_reading > bob.watchdog_threshold;

  const double transmittance = params.transmittance();
  Rng rng{seed};
  SimResult r;
  r.n_slots = params.n_slots;

  for (std::int64_t slot = 0; slot < params.n_slots; ++slot) {
    const int alice_bit = bernoulli(rng, 0.5);
    const int alice_basis = bernoulli(rng, 0.5);
    const bool arrives = bernoulli(rng, transmittance);
    const bool flipped = bernoulli(rng, params.e_misalign);
    const int bob_basis = bernoulli(rng, 0.5);
    const bool intercepted = bernoulli(rng, behaviour.intercept_fraction);
    const int eve_basis = bernoulli(rng, 0.5);
    const int random_bit = bernoulli(rng, 0.5);
    const int wrong_basis_bit = bernoulli(rng, 0.5);
    std::array<double, 4> u;
    for (double& x : u) x = uniform(rng);
    const double tie_break = uniform(rng);

    // State of the light at Bob's door.
    int photon_bit = alice_bit ^ static_cast<int>(flipped);
    int photon_basis = alice_basis;
    bool have_photon = arrives;
    bool eve_knows = false;
    int eve_bit = 0;
    std::array<double, 4> pulse{};
    bool pulse_sent = false;

    if (arrives && intercepted) {
      eve_knows = true;
      eve_bit = eve_basis == photon_basis ? photon_bit : random_bit;
      if (bright) {
        have_photon = false;
        pulse = faked_state_slot(eve_bit, eve_basis, behaviour.pulse_power, bob_basis);
        pulse_sent = true;
      } else {
        photon_bit = eve_bit;
        photon_basis = eve_basis;
      }
    }
    if (pulse_sent && bright_alarm) ++r.watchdog_alarms;

    int target = -1;
    if (have_photon)
      target = detector_index(bob_basis, bob_basis == photon_basis ? photon_bit : wrong_basis_bit);

    int clicks = 0;
    int clicked = -1;
    std::array<int, 4> clicked_list{};
    for (int i = 0; i < 4; ++i) {
      const ClickModel& m = models[i];
      if (!m.alive) continue;
      double p;
      if (pulse_sent)
        p = m.bright(pulse[i], behaviour.pulse_power);
      else
        p = i == target ? m.p_photon : m.p_dark;
      if (u[i] < p) {
        clicked_list[clicks++] = i;
        clicked = i;
      }
    }
    if (clicks == 0) continue;
    if (clicks > 1) {
      if (bob.discard_double_clicks) continue;
      clicked = clicked_list[std::min(clicks - 1, static_cast<int>(tie_break * clicks))];
    }

    ++r.n_detected;
    const int bob_result_basis = clicked / 2;
    const int bob_bit = clicked % 2;
    if (bob_result_basis != alice_basis) continue;
    ++r.n_sifted;
    if (bob_bit != alice_bit) ++r.n_errors;
    if (eve_knows && eve_bit == alice_bit) ++r.n_eve_correct;
  }

  finalize(r, params.f_ec);
  return r;
}

DistanceLimit max_distance(const ProtocolParams& params, double eta, double d) {
  if (!(params.alpha_db_per_km > 0.0)) throw MisuseError("max_distance: alpha must be positive");
  const double e = params.e_misalign;
  if (eta <= 0.0) return {};
  const auto rate_at = [&](double km) {
    const double t = std::pow(10.0, -params.alpha_db_per_km * km / 10.0);
    return key_rate(analytic_qber(sifted_signal_probability(eta, t), e, d), params.f_ec);
  };
  if (!(rate_at(0.0) > 0.0)) return {};
  if (d <= 0.0) return {0.0, true};

  double lo = 0.0;
  double hi = 1.0;
  while (rate_at(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e7) return {lo, true};
  }
  while (hi - lo > 0.01) {
    const double mid = 0.5 * (lo + hi);
    (rate_at(mid) > 0.0 ? lo : hi) = mid;
  }
  return {lo, false};
}

DistanceLimit max_distance(const ProtocolParams& params, const Detector& detector) {
  if (!is_intact(detector.state.structural)) return {};
  return max_distance(params, photon_detection_efficiency(detector.state, detector.circuit),
                      dark_click_probability(detector.state, detector.circuit,
                                             detector.state.last_exposure_time));
}

}  // namespace qkdamage
