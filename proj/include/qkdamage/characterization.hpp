#pragma once

// Measure-expose-measure test loop with sampling noise and operator alarms.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qkdamage/apd.hpp"
#include "qkdamage/damage.hpp"
#include "qkdamage/rng.hpp"

namespace qkdamage {

struct CharacterizationRecord {
  double dcr_measured = 0.0;     // Hz, at v_br_orig + 15 V
  double pde_measured = 0.0;     // at v_br_orig + 15 V
  double v_br_measured = 0.0;    // V; 0 when no breakdown exists
  double i_dark_measured = 0.0;  // A, at v_br_orig - 5 V
  double qe_0v_measured = 0.0;   // at 0 V bias
  double exposure_power = 0.0;   // W, 0 for the baseline record
};

struct MeasurementConfig {
  double count_time = 10.0;  // s
  int n_test_pulses = 10000;
  double mu = 1.0;  // mean photons per test pulse

  static constexpr double kVbrNoise = 0.05;        // V, additive
  static constexpr double kAnalogRelNoise = 0.02;  // relative, i_dark and qe

  void validate() const;
};

enum class Parameter { Dcr, Pde, Vbr, IDark, Qe };

std::string parameter_name(Parameter p);

struct AlarmPolicy {
  // Relative tolerances, indexed by Parameter.
  double tol_dcr = 0.2;
  double tol_pde = 0.2;
  double tol_v_br = 0.2;
  double tol_i_dark = 0.2;
  double tol_qe = 0.2;
  CharacterizationRecord baseline{};

  void validate() const;
};

/// Measures the five detector parameters. The circuit is only used for its
/// ballast, slot and efficiency settings; the measurement bias is always
/// v_br_orig + 15 V.
CharacterizationRecord characterize(const ApdState& state, const DetectorCircuit& circuit,
                                    const MeasurementConfig& meas, Rng& rng);

/// Parameters whose relative deviation from the baseline exceeds tolerance,
/// in the fixed order dcr, pde, v_br, i_dark, qe_0v.
std::vector<Parameter> detect_deviation(const CharacterizationRecord& record,
                                        const AlarmPolicy& policy);

struct SweepRow {
  ExposureRecord exposure;  // power 0 and no effects for the baseline row
  CharacterizationRecord measurement;
  std::vector<Parameter> alarms;
  ApdState truth;  // device state when measured
};

/// Baseline characterization followed by expose/characterize cycles at the
/// given non-decreasing powers. The sample is mutated. The policy's baseline
/// is replaced by the measured baseline record.
std::vector<SweepRow> damage_sweep(Sample& sample, std::span<const double> powers,
                                   const DetectorCircuit& circuit, const MeasurementConfig& meas,
                                   AlarmPolicy policy, Rng& rng,
                                   const ExposureOptions& exposure = {});

inline constexpr const char* kSweepCsvHeader = "exposure_power,dcr,pde,v_br,i_dark,qe_0v,alarms";

/// Header line followed by one line per row.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows, bool header = true);

}  // namespace qkdamage
