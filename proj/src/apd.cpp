#include "qkdamage/apd.hpp"

#include <algorithm>
#include <cmath>

#include "qkdamage/errors.hpp"

namespace qkdamage {

double ControlCurve::width_db(double setpoint) const {
  if (setpoint <= deterministic_below) return 0.0;
  return width_per_volt * (setpoint - deterministic_below);
}

double ControlCurve::click_probability(double setpoint, double pulse_power) const {
  if (pulse_power <= 0.0) return 0.0;
  const double width = width_db(setpoint);
  if (width <= 0.0) return pulse_power >= p_threshold ? 1.0 : 0.0;
  const double db = 10.0 * std::log10(pulse_power / p_threshold);
  return 1.0 / (1.0 + std::exp(-(db / width + kCentreShift)));
}

DetectorCircuit DetectorCircuit::for_apd(const ApdState& apd, double overvoltage) {
  DetectorCircuit c;
  c.v_bias = apd.v_br_orig + overvoltage;
  return c;
}

void DetectorCircuit::validate() const {
  if (!(v_bias > 0.0)) throw ConfigError("detector: v_bias must be positive");
  if (!(r_ballast > 0.0)) throw ConfigError("detector: r_ballast must be positive");
  if (!(eta_nominal > 0.0 && eta_nominal <= 1.0))
    throw ConfigError("detector: eta_nominal must lie in (0, 1]");
  if (!(v_ov_nominal > 0.0)) throw ConfigError("detector: v_ov_nominal must be positive");
  if (!(slot_duration > 0.0 && slot_duration < dead_time))
    throw ConfigError("detector: need 0 < slot_duration < dead_time");
  if (!(control_curve.p_threshold > 0.0))
    throw ConfigError("detector: control curve p_threshold must be positive");
  if (!(control_curve.width_per_volt >= 0.0))
    throw ConfigError("detector: control curve width_per_volt must be non-negative");
}

double overvoltage(const ApdState& state, const DetectorCircuit& circuit) {
  if (!is_intact(state.structural))
    throw MisuseError("overvoltage is undefined for a structurally destroyed diode");
  return circuit.v_bias - state.i_dark * circuit.r_ballast - state.v_br;
}

double setpoint(const ApdState& state, const DetectorCircuit& circuit) {
  return circuit.v_bias - state.v_br;
}

bool is_blinded(const ApdState& state, const DetectorCircuit& circuit) {
  return is_intact(state.structural) && overvoltage(state, circuit) <= 0.0;
}

double photon_detection_efficiency(const ApdState& state, const DetectorCircuit& circuit) {
  if (!is_intact(state.structural)) return 0.0;
  const double v_ov = overvoltage(state, circuit);
  if (v_ov <= 0.0) return 0.0;
  return circuit.eta_nominal * state.pde_scale *
         std::clamp(v_ov / circuit.v_ov_nominal, 0.0, 1.0);
}

double transient_factor(const ApdState& state, double now) {
  const double elapsed = std::max(0.0, now - state.last_exposure_time);
  return 1.0 + (state.dcr_transient_factor - 1.0) * std::exp(-elapsed / state.transient_tau);
}

double dark_click_probability(const ApdState& state, const DetectorCircuit& circuit,
                              double now) {
  if (!is_intact(state.structural) || is_blinded(state, circuit)) return 0.0;
  const double rate = state.dcr_base * transient_factor(state, now);
  return -std::expm1(-rate * circuit.slot_duration);
}

double geiger_click_probability(const ApdState& state, const DetectorCircuit& circuit,
                                int n_photons) {
  if (!is_intact(state.structural) || is_blinded(state, circuit)) return 0.0;
  const double eta = photon_detection_efficiency(state, circuit);
  const double miss_signal = std::pow(1.0 - eta, std::max(n_photons, 0));
  const double miss_dark = 1.0 - dark_click_probability(state, circuit, state.last_exposure_time);
  return 1.0 - miss_signal * miss_dark;
}

bool geiger_click(const ApdState& state, const DetectorCircuit& circuit, int n_photons,
                  Rng& rng) {
  return bernoulli(rng, geiger_click_probability(state, circuit, n_photons));
}

double bright_pulse_click_probability(const ApdState& state, const DetectorCircuit& circuit,
                                      double pulse_power) {
  if (!is_intact(state.structural)) return 0.0;
  if (!is_blinded(state, circuit))
    throw MisuseError("bright-pulse control curve applies only to a blinded detector");
  return circuit.control_curve.click_probability(setpoint(state, circuit), pulse_power);
}

double watchdog_power_reading(const ApdState& state, double incident_power) {
  if (!is_intact(state.structural)) return 0.0;
  return incident_power * state.qe_linear;
}

}  // namespace qkdamage
