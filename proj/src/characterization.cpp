#include "qkdamage/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "qkdamage/errors.hpp"

namespace qkdamage {

void MeasurementConfig::validate() const {
  if (!(count_time > 0.0) || n_test_pulses <= 0 || !(mu > 0.0))
    throw ConfigError("measurement: count_time, n_test_pulses and mu must be positive");
}

std::string parameter_name(Parameter p) {
  switch (p) {
    case Parameter::Dcr: return "dcr";
    case Parameter::Pde: return "pde";
    case Parameter::Vbr: return "v_br";
    case Parameter::IDark: return "i_dark";
    case Parameter::Qe: return "qe_0v";
  }
  return "?";
}

void AlarmPolicy::validate() const {
  for (double t : {tol_dcr, tol_pde, tol_v_br, tol_i_dark, tol_qe})
    if (!(t > 0.0)) throw ConfigError("alarm policy: tolerances must be positive");
}

CharacterizationRecord characterize(const ApdState& state, const DetectorCircuit& circuit,
                                    const MeasurementConfig& meas, Rng& rng) {
  meas.validate();
  CharacterizationRecord rec;

  DetectorCircuit probe = circuit;
  probe.v_bias = state.v_br_orig + 15.0;

  // Draw order is fixed regardless of the device state so that sweeps of
  // different samples stay aligned on the stream.
  const bool photosensitive = is_intact(state.structural) && !is_blinded(state, probe);
  const double rate = photosensitive
                          ? state.dcr_base * transient_factor(state, state.last_exposure_time)
                          : 0.0;
  const auto counts = std::poisson_distribution<long long>(std::max(rate * meas.count_time, 1e-300))(rng);
  rec.dcr_measured = photosensitive ? static_cast<double>(counts) / meas.count_time : 0.0;

  const double eta = photosensitive ? photon_detection_efficiency(state, probe) : 0.0;
  const double p_click = -std::expm1(-meas.mu * eta);
  const int n = meas.n_test_pulses;
  const int clicks = std::binomial_distribution<int>(n, p_click)(rng);
  if (photosensitive && clicks > 0) {
    // Invert p = 1 - exp(-mu eta); an all-click run is pulled back half a click.
    const double frac = std::min(static_cast<double>(clicks), n - 0.5) / n;
    rec.pde_measured = std::clamp(-std::log1p(-frac) / meas.mu, 0.0, 1.0);
  }

  std::normal_distribution<double> unit(0.0, 1.0);
  const double z_vbr = unit(rng);
  const double z_idark = unit(rng);
  const double z_qe = unit(rng);

  const bool intact = is_intact(state.structural);
  rec.v_br_measured = intact ? std::max(0.0, state.v_br + MeasurementConfig::kVbrNoise * z_vbr) : 0.0;

  double i_dark = 0.0;
  if (intact) {
    i_dark = state.i_dark;
  } else if (const auto* r = std::get_if<Resistive>(&state.structural)) {
    i_dark = (state.v_br_orig - 5.0) / r->resistance;
  }
  rec.i_dark_measured = std::max(0.0, i_dark * (1.0 + MeasurementConfig::kAnalogRelNoise * z_idark));

  const double qe = intact ? state.qe_linear : 0.0;
  rec.qe_0v_measured = std::clamp(qe * (1.0 + MeasurementConfig::kAnalogRelNoise * z_qe), 0.0, 1.0);
  return rec;
}

std::vector<Parameter> detect_deviation(const CharacterizationRecord& record,
                                        const AlarmPolicy& policy) {
  static constexpr double kGuard = std::numeric_limits<double>::min();
  const auto deviates = [](double value, double base, double tol) {
    return std::abs(value - base) / std::max(std::abs(base), kGuard) > tol;
  };
  const auto& b = policy.baseline;
  std::vector<Parameter> flagged;
  if (deviates(record.dcr_measured, b.dcr_measured, policy.tol_dcr)) flagged.push_back(Parameter::Dcr);
  if (deviates(record.pde_measured, b.pde_measured, policy.tol_pde)) flagged.push_back(Parameter::Pde);
  if (deviates(record.v_br_measured, b.v_br_measured, policy.tol_v_br)) flagged.push_back(Parameter::Vbr);
  if (deviates(record.i_dark_measured, b.i_dark_measured, policy.tol_i_dark))
    flagged.push_back(Parameter::IDark);
  if (deviates(record.qe_0v_measured, b.qe_0v_measured, policy.tol_qe)) flagged.push_back(Parameter::Qe);
  return flagged;
}

std::vector<SweepRow> damage_sweep(Sample& sample, std::span<const double> powers,
                                   const DetectorCircuit& circuit, const MeasurementConfig& meas,
                                   AlarmPolicy policy, Rng& rng, const ExposureOptions& exposure) {
  if (!std::is_sorted(powers.begin(), powers.end()))
    throw ConfigError("damage_sweep: exposure powers must be non-decreasing");
  if (!powers.empty() && powers.front() < 0.0)
    throw ConfigError("damage_sweep: exposure powers must be non-negative");
  meas.validate();
  policy.validate();

  std::vector<SweepRow> rows;
  rows.reserve(powers.size() + 1);

  SweepRow base;
  base.exposure.power = 0.0;
  base.exposure.timestamp = sample.state.last_exposure_time;
  base.measurement = characterize(sample.state, circuit, meas, rng);
  base.truth = sample.state;
  policy.baseline = base.measurement;
  rows.push_back(std::move(base));

  for (double p : powers) {
    SweepRow row;
    row.exposure = apply_illumination(sample.state, sample.thresholds, p, rng, exposure);
    row.measurement = characterize(sample.state, circuit, meas, rng);
    row.measurement.exposure_power = p;
    row.alarms = detect_deviation(row.measurement, policy);
    row.truth = sample.state;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows, bool header) {
  if (header) out << kSweepCsvHeader << '\n';
  for (const auto& row : rows) {
    const auto& m = row.measurement;
    std::string alarms;
    for (std::size_t i = 0; i < row.alarms.size(); ++i) {
      if (i) alarms += ';';
      alarms += parameter_name(row.alarms[i]);
    }
    out << fmt::format("{},{},{},{},{},{},{}\n", m.exposure_power, m.dcr_measured, m.pde_measured,
                       m.v_br_measured, m.i_dark_measured, m.qe_0v_measured, alarms);
  }
}

}  // namespace qkdamage
