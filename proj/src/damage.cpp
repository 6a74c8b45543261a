#include "qkdamage/damage.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "qkdamage/errors.hpp"

namespace qkdamage {

char band_label(Band band) { return static_cast<char>('a' + static_cast<int>(band)); }

Band parse_band(std::string_view label) {
  if (label.size() == 1) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(label[0])));
    if (c >= 'a' && c <= 'f') return static_cast<Band>(c - 'a');
  }
  throw ConfigError("unknown damage band '" + std::string(label) + "' (expected a..f)");
}

const Range& DamageProfile::onset(Band band) const {
  switch (band) {
    case Band::A: return a_onset;
    case Band::B: return b_onset;
    case Band::C: return c_onset;
    case Band::D: return d_onset;
    case Band::E: return e_onset;
    case Band::F: return f_onset;
  }
  throw ConfigError("unknown damage band");
}

namespace {

void check_range(const Range& r, const char* name, bool non_negative = true) {
  if (!std::isfinite(r.low) || !std::isfinite(r.high) || r.low > r.high)
    throw ConfigError(std::string("damage profile: range ") + name + " is empty or not finite");
  if (non_negative && r.low < 0.0)
    throw ConfigError(std::string("damage profile: range ") + name + " must be non-negative");
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError(std::string("damage profile: ") + name + " must lie in [0, 1]");
}

}  // namespace

void DamageProfile::validate() const {
  const std::array<std::pair<const Range*, const char*>, 12> ranges{{
      {&a_onset, "a_onset"}, {&a_factor, "a_factor"}, {&b_onset, "b_onset"},
      {&b_dv_br, "b_dv_br"}, {&c_onset, "c_onset"}, {&c_factor, "c_factor"},
      {&d_onset, "d_onset"}, {&d_factor, "d_factor"}, {&e_onset, "e_onset"},
      {&e_i_dark, "e_i_dark"}, {&f_onset, "f_onset"}, {&f_resistance, "f_resistance"},
  }};
  for (const auto& [range, name] : ranges) check_range(*range, name);

  if (a_factor.low < 1.0) throw ConfigError("damage profile: a_factor must be >= 1");
  if (c_factor.low <= 0.0 || d_factor.low <= 0.0)
    throw ConfigError("damage profile: c_factor and d_factor must be positive");
  if (f_resistance.low <= 0.0) throw ConfigError("damage profile: f_resistance must be positive");
  if (!(tau_relax > 0.0)) throw ConfigError("damage profile: tau_relax must be positive");
  check_probability(b_susceptibility, "b_susceptibility");
  check_probability(f_open_probability, "f_open_probability");

  for (int i = 0; i + 1 < 6; ++i) {
    if (!(onset(static_cast<Band>(i)).mid() < onset(static_cast<Band>(i + 1)).mid()))
      throw ConfigError("damage profile: band onset ranges must be ordered a < b < c < d < e < f");
  }
  // Needed so that rejection sampling of ordered thresholds can terminate.
  for (int i = 1; i + 1 < 6; ++i) {
    if (!(onset(static_cast<Band>(i)).low < onset(static_cast<Band>(i + 1)).high))
      throw ConfigError("damage profile: adjacent onset ranges admit no increasing draw");
  }
  if (baseline.v_br_orig <= 0.0 || baseline.dcr_base < 0.0 || baseline.i_dark < 0.0)
    throw ConfigError("damage profile: invalid baseline device parameters");
  check_probability(baseline.qe_linear, "baseline qe_linear");
}

double SampleThresholds::onset(Band band) const {
  switch (band) {
    case Band::A: return 0.0;
    case Band::B: return b_onset;
    case Band::C: return c_onset;
    case Band::D: return d_onset;
    case Band::E: return e_onset;
    case Band::F: return f_onset;
  }
  return 0.0;
}

Sample draw_sample(const DamageProfile& profile, Rng& rng) {
  profile.validate();

  Sample sample;
  ApdState& s = sample.state;
  s.v_br_orig = profile.baseline.v_br_orig;
  s.v_br = s.v_br_orig;
  s.dcr_base = profile.baseline.dcr_base;
  s.qe_linear = profile.baseline.qe_linear;
  s.i_dark = profile.baseline.i_dark;
  s.transient_tau = profile.tau_relax;

  SampleThresholds& t = sample.thresholds;
  constexpr int kMaxRedraws = 10000;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxRedraws)
      throw ConfigError("damage profile: could not draw strictly increasing thresholds");
    t.b_onset = uniform(rng, profile.b_onset.low, profile.b_onset.high);
    t.c_onset = uniform(rng, profile.c_onset.low, profile.c_onset.high);
    t.d_onset = uniform(rng, profile.d_onset.low, profile.d_onset.high);
    t.e_onset = uniform(rng, profile.e_onset.low, profile.e_onset.high);
    t.f_onset = uniform(rng, profile.f_onset.low, profile.f_onset.high);
    if (t.b_onset < t.c_onset && t.c_onset < t.d_onset && t.d_onset < t.e_onset &&
        t.e_onset < t.f_onset)
      break;
  }
  t.b_susceptible = bernoulli(rng, profile.b_susceptibility);
  t.b_dv_br = uniform(rng, profile.b_dv_br.low, profile.b_dv_br.high);
  t.c_factor = uniform(rng, profile.c_factor.low, profile.c_factor.high);
  t.d_factor = uniform(rng, profile.d_factor.low, profile.d_factor.high);
  t.e_i_dark = uniform(rng, profile.e_i_dark.low, profile.e_i_dark.high);
  t.f_open_circuit = bernoulli(rng, profile.f_open_probability);
  t.f_resistance = uniform(rng, profile.f_resistance.low, profile.f_resistance.high);
  t.a_upper = profile.a_onset.high;
  t.a_factor = profile.a_factor;
  return sample;
}

ApdState relax(ApdState state, double elapsed) {
  if (elapsed < 0.0) throw MisuseError("relax: elapsed time must be non-negative");
  state.dcr_transient_factor = transient_factor(state, state.last_exposure_time + elapsed);
  state.last_exposure_time += elapsed;
  return state;
}

namespace {

void fire(Band band, ApdState& s, const SampleThresholds& t) {
  switch (band) {
    case Band::A:
      break;
    case Band::B:
      s.v_br = s.v_br_orig + t.b_dv_br;
      break;
    case Band::C:
      // Everything but the dark count rate returns to its original value.
      s.v_br = s.v_br_orig;
      s.pde_scale = 1.0;
      s.dcr_base /= t.c_factor;
      break;
    case Band::D:
      s.dcr_base *= t.d_factor;
      break;
    case Band::E:
      s.i_dark = t.e_i_dark;
      break;
    case Band::F:
      if (t.f_open_circuit)
        s.structural = OpenCircuit{};
      else
        s.structural = Resistive{t.f_resistance};
      s.qe_linear = 0.0;
      break;
  }
}

}  // namespace

ExposureRecord apply_illumination(ApdState& state, const SampleThresholds& thresholds,
                                  double power, Rng& rng, const ExposureOptions& options) {
  if (!(power >= 0.0)) throw MisuseError("apply_illumination: power must be non-negative");
  if (!(options.duration > 0.0)) throw MisuseError("apply_illumination: duration must be positive");

  state = relax(state, options.duration);

  ExposureRecord record;
  record.power = power;
  record.duration = options.duration;
  record.bias_on = options.bias_on;
  record.focused = options.focused;
  record.ramped = options.ramped;
  record.timestamp = state.last_exposure_time;

  if (power > 0.0 && power <= thresholds.a_upper) {
    state.dcr_transient_factor = uniform(rng, thresholds.a_factor.low, thresholds.a_factor.high);
    record.effects_triggered.push_back(Band::A);
  } else if (power > thresholds.a_upper) {
    state.dcr_transient_factor = 1.0;
  }

  const double previous_max = state.p_max;
  for (Band band : {Band::B, Band::C, Band::D, Band::E, Band::F}) {
    const double onset = thresholds.onset(band);
    if (previous_max < onset && onset <= power) {
      if (band == Band::B && !thresholds.b_susceptible) continue;
      fire(band, state, thresholds);
      record.effects_triggered.push_back(band);
    }
  }
  state.p_max = std::max(previous_max, power);
  return record;
}

}  // namespace qkdamage
