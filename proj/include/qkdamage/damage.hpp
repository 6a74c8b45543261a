#pragma once

// Laser-damage state machine.
//
// Each physical sample gets its own onset power for every permanent effect,
// drawn once from the profile. Permanent damage is a ratchet on the highest
// power ever applied: an exposure fires every effect whose onset lies in
// (p_max_before, power], in band order. The only non-permanent effect (a) is
// a dark-count elevation that relaxes in darkness.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qkdamage/apd.hpp"
#include "qkdamage/rng.hpp"

namespace qkdamage {

enum class Band { A, B, C, D, E, F };

char band_label(Band band);
/// Accepts "a".."f" (either case). Throws ConfigError otherwise.
Band parse_band(std::string_view label);

struct Range {
  double low = 0.0;
  double high = 0.0;

  double mid() const { return 0.5 * (low + high); }
  bool contains(double x) const { return x >= low && x <= high; }
};

/// Fresh-device parameters shared by every drawn sample.
struct SampleBaseline {
  double v_br_orig = 225.0;  // V
  double dcr_base = 500.0;   // Hz
  double qe_linear = 0.6;
  double i_dark = 0.0;       // A
};

struct DamageProfile {
  SampleBaseline baseline{};

  Range a_onset{0.0, 0.25};
  Range a_factor{2.0, 5.0};
  double tau_relax = 4.0 * 3600.0;  // s

  Range b_onset{0.30, 0.45};
  Range b_dv_br{2.3, 2.5};  // V
  double b_susceptibility = 0.5;

  Range c_onset{0.50, 0.80};
  Range c_factor{1.7, 5.4};  // dark-count division

  Range d_onset{0.90, 1.20};
  Range d_factor{100.0, 100.0};  // dark-count multiplication

  Range e_onset{1.20, 1.70};
  Range e_i_dark{50e-6, 500e-6};  // A

  Range f_onset{2.0, 2.0};
  double f_open_probability = 1.0 / 3.0;
  Range f_resistance{10e3, 100e3};  // ohm

  const Range& onset(Band band) const;

  /// Throws ConfigError on empty ranges, unordered bands or bad
  /// probabilities.
  void validate() const;
};

/// Per-sample realization of a profile. Effect magnitudes are fixed at
/// sample creation, so the final permanent state depends only on the peak
/// power ever applied.
struct SampleThresholds {
  double b_onset = 0.0;
  double c_onset = 0.0;
  double d_onset = 0.0;
  double e_onset = 0.0;
  double f_onset = 0.0;
  bool b_susceptible = false;

  double b_dv_br = 0.0;
  double c_factor = 1.0;
  double d_factor = 1.0;
  double e_i_dark = 0.0;
  bool f_open_circuit = false;
  double f_resistance = 0.0;

  // Effect a is redrawn on each qualifying exposure.
  double a_upper = 0.25;
  Range a_factor{2.0, 5.0};

  double onset(Band band) const;
};

struct Sample {
  ApdState state;
  SampleThresholds thresholds;
};

Sample draw_sample(const DamageProfile& profile, Rng& rng);

struct ExposureOptions {
  double duration = 60.0;  // s
  bool bias_on = true;
  bool focused = true;
  bool ramped = false;
};

struct ExposureRecord {
  double power = 0.0;
  double duration = 60.0;
  bool bias_on = true;
  bool focused = true;
  bool ramped = false;
  std::vector<Band> effects_triggered;
  double timestamp = 0.0;  // end of exposure, on the sample's clock
};

/// Illuminates the sample for `options.duration` seconds at `power` watts.
/// The clock advances by the duration. Outcomes do not depend on the bias,
/// focus or ramp flags; they are only recorded.
ExposureRecord apply_illumination(ApdState& state, const SampleThresholds& thresholds,
                                  double power, Rng& rng, const ExposureOptions& options = {});

/// Leaves the sample in darkness for `elapsed` seconds.
ApdState relax(ApdState state, double elapsed);

}  // namespace qkdamage
