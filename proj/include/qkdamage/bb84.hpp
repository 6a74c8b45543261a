#pragma once

// BB84 over a lossy channel into a passive-basis receiver with four
// single-photon detectors, plus the analytic QBER and key-rate formulas used
// to cross-check it.

#include <array>
#include <cstdint>
#include <optional>

#include "qkdamage/apd.hpp"
#include "qkdamage/damage.hpp"
#include "qkdamage/strategy.hpp"

namespace qkdamage {

struct ProtocolParams {
  std::int64_t n_slots = 100000;
  double channel_loss_db = 0.0;
  double alpha_db_per_km = 0.2;
  double e_misalign = 0.01;
  double f_ec = 1.0;

  static ProtocolParams at_distance(double km, double alpha_db_per_km = 0.2);

  double transmittance() const;
  void validate() const;
};

/// One detector together with its bias circuit and its hidden damage
/// thresholds.
struct Detector {
  ApdState state;
  SampleThresholds thresholds;
  DetectorCircuit circuit;
};

/// Detector slot index: 2 * basis + bit, basis 0 = Z, 1 = X.
constexpr int detector_index(int basis, int bit) { return 2 * basis + bit; }

struct BobReceiver {
  std::array<Detector, 4> detectors;
  std::optional<Detector> watchdog;
  double watchdog_threshold = 1e-4;  // W, reading above this raises an alarm
  bool discard_double_clicks = true;  // otherwise a random clicked detector is kept

  void validate() const;
};

struct SimResult {
  std::int64_t n_slots = 0;
  std::int64_t n_detected = 0;
  std::int64_t n_sifted = 0;
  std::int64_t n_errors = 0;
  double qber = 0.0;
  double key_rate_per_sifted_bit = 0.0;
  double eve_info_fraction = 0.0;
  double detection_rate_per_slot = 0.0;
  std::int64_t watchdog_alarms = 0;
  // Sifted bits for which Eve holds the correct value; eve_info_fraction is
  // this over n_sifted.
  std::int64_t n_eve_correct = 0;
};

/// Binary entropy in bits. Throws MisuseError outside [0, 1].
double h2(double x);

/// Asymptotic secret fraction per sifted bit, max(0, 1 - h2(Q) - f h2(Q)).
double key_rate(double qber, double f_ec);

/// First-order sifted QBER. p_sig is the per-slot probability of a signal
/// click within the sifting basis pair (for a passive receiver that is
/// eta * T / 2), d the per-slot dark-click probability of each detector.
/// Throws MisuseError when p_sig + 2d is zero.
double analytic_qber(double p_sig, double e_det, double d);

/// Per-slot signal click probability within the sifting basis pair.
double sifted_signal_probability(double eta, double transmittance);

/// Powers reaching each of Bob's detectors when Eve resends her result as a
/// bright pulse and Bob's passive splitter picked `bob_basis`.
std::array<double, 4> faked_state_slot(int eve_bit, int eve_basis, double pulse_power,
                                       int bob_basis);

/// Recomputes the derived rate fields from the counts.
void finalize(SimResult& result, double f_ec);

/// Runs n_slots of BB84. The receiver is read, never modified. Damage
/// campaigns inside `eve` are ignored here (see run_attack); only its per-slot
/// behaviour is used. Bit-exactly reproducible for a given seed.
SimResult run_bb84(const ProtocolParams& params, const BobReceiver& bob, const EveStrategy& eve,
                   std::uint64_t seed);

struct DistanceLimit {
  double km = 0.0;
  bool unbounded = false;
};

/// Largest distance with a positive analytic key rate, to 0.01 km, for a
/// receiver built from four copies of `detector`.
DistanceLimit max_distance(const ProtocolParams& params, const Detector& detector);

/// Same, from raw efficiency and per-slot dark probability.
DistanceLimit max_distance(const ProtocolParams& params, double eta, double dark_probability);

}  // namespace qkdamage
