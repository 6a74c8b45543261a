#pragma once

// Avalanche photodiode in a passively quenched single-photon detector.
//
// The diode sits in series with a ballast resistor fed from a high-voltage
// source. Its operating overvoltage is the source voltage minus the drop
// across the ballast (steady dark current times resistance) minus the
// breakdown voltage. Non-positive overvoltage means the detector is blind to
// single photons but still clicks on bright pulses (see ControlCurve).

#include <variant>

#include "qkdamage/rng.hpp"

namespace qkdamage {

struct Intact {};
struct OpenCircuit {};
struct Resistive {
  double resistance;  // ohms
};

/// Structural condition of the chip. Anything but Intact has no
/// photosensitivity left.
using StructuralState = std::variant<Intact, OpenCircuit, Resistive>;

inline bool is_intact(const StructuralState& s) { return std::holds_alternative<Intact>(s); }

struct ApdState {
  double v_br = 225.0;       // current breakdown voltage, V
  double v_br_orig = 225.0;  // as-manufactured breakdown voltage, V
  double dcr_base = 500.0;   // permanent dark count rate, Hz
  // Transient dark-count elevation, valid at time last_exposure_time. Decays
  // toward 1 with time constant transient_tau.
  double dcr_transient_factor = 1.0;
  double last_exposure_time = 0.0;  // s
  double transient_tau = 4.0 * 3600.0;  // s
  double i_dark = 0.0;     // steady dark current at operating bias, A
  double qe_linear = 0.6;  // photoconversion quantum efficiency at 0 V
  double pde_scale = 1.0;  // permanent multiplicative efficiency degradation
  StructuralState structural = Intact{};
  double p_max = 0.0;  // highest illumination power ever applied, W
};

/// Click response of a blinded detector to 10 ns bright pulses.
///
/// At setpoints up to deterministic_below the response is a perfect step at
/// p_threshold. Above it the step softens into a logistic in pulse power
/// expressed in dB relative to p_threshold; the logistic scale grows by
/// width_per_volt dB per volt of setpoint above the boundary, and its centre
/// sits kCentreShift scale units below p_threshold so that the threshold
/// itself always clicks with probability above one half.
struct ControlCurve {
  double p_threshold = 0.5e-3;      // W
  double deterministic_below = 11.0;  // V
  double width_per_volt = 0.15;     // dB per V

  static constexpr double kCentreShift = 0.2;

  /// Logistic scale in dB at the given setpoint; 0 means a hard step.
  double width_db(double setpoint) const;
  double click_probability(double setpoint, double pulse_power) const;
};

struct DetectorCircuit {
  double v_bias = 240.0;        // V
  double r_ballast = 400e3;     // ohm
  double slot_duration = 1e-9;  // s
  double dead_time = 1e-6;      // s
  double eta_nominal = 0.5;     // detection efficiency at v_ov_nominal
  double v_ov_nominal = 15.0;   // V
  ControlCurve control_curve{};

  /// Circuit biased `overvoltage` volts above the diode's original breakdown.
  static DetectorCircuit for_apd(const ApdState& apd, double overvoltage = 15.0);

  /// Throws ConfigError when a field is out of its physical range.
  void validate() const;
};

/// v_bias - i_dark * r_ballast - v_br. Negative when the ballast drop
/// exceeds the available excess bias. Throws MisuseError on a destroyed
/// diode.
double overvoltage(const ApdState& state, const DetectorCircuit& circuit);

/// Overvoltage the bias source is set to, ignoring dark-current loading.
/// This is the knob that selects the bright-pulse control regime.
double setpoint(const ApdState& state, const DetectorCircuit& circuit);

bool is_blinded(const ApdState& state, const DetectorCircuit& circuit);

/// Linear-in-overvoltage efficiency, clamped to the nominal point.
double photon_detection_efficiency(const ApdState& state, const DetectorCircuit& circuit);

/// Transient elevation factor at absolute time `now`.
double transient_factor(const ApdState& state, double now);

/// Probability of at least one dark count in one slot at time `now`.
double dark_click_probability(const ApdState& state, const DetectorCircuit& circuit,
                              double now);

/// Probability that a slot carrying n_photons produces a click, dark counts
/// included. Evaluated at the state's own clock (last_exposure_time).
double geiger_click_probability(const ApdState& state, const DetectorCircuit& circuit,
                                int n_photons);

bool geiger_click(const ApdState& state, const DetectorCircuit& circuit, int n_photons,
                  Rng& rng);

/// Click probability for a bright pulse on a blinded detector. Destroyed
/// diodes return 0; an intact, unblinded detector throws MisuseError since it
/// is still in Geiger mode.
double bright_pulse_click_probability(const ApdState& state, const DetectorCircuit& circuit,
                                      double pulse_power);

/// Photocurrent-based power reading, responsivity folded into qe_linear.
double watchdog_power_reading(const ApdState& state, double incident_power);

}  // namespace qkdamage
