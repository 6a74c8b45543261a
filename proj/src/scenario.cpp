#include "qkdamage/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <set>
#include <sstream>
#include <thread>

#include "qkdamage/errors.hpp"

namespace qkdamage {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<double> SweepSettings::powers() const {
  std::vector<double> out;
  if (!(step > 0.0)) return out;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    // Rounded to 1e-9 W so that 0.1 + k * 0.05 prints as the intended grid.
    out.push_back(std::round((start + step * static_cast<double>(i)) * 1e9) / 1e9);
  }
  return out;
}

double ScenarioConfig::setpoint() const {
  if (detector.overvoltage_setpoint) return *detector.overvoltage_setpoint;
  // The faked-state scenarios run at a deterministic-control setpoint.
  if (scenario == "blind-and-fake" || scenario == "watchdog-defeat")
    return detector.control_curve.deterministic_below;
  return 15.0;
}

OutputFormat ScenarioConfig::output_format() const {
  if (format) return *format;
  return scenario == "damage-sweep" ? OutputFormat::Csv : OutputFormat::Json;
}

void ScenarioConfig::validate() const {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), scenario) == names.end()) {
    std::string msg = "unknown scenario '" + scenario + "'; valid scenarios:";
    for (const auto& n : names) msg += " " + n;
    throw ConfigError(msg);
  }
  if (!seed) throw ConfigError("a seed is required (--seed or \"seed\" in the config file)");
  if (pulses < 0) throw ConfigError("pulses must be non-negative");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  protocol.validate();
  damage.validate();
  measurement.validate();
  alarm.validate();
  if (!(sweep.step > 0.0) || sweep.stop < sweep.start || sweep.start < 0.0)
    throw ConfigError("sweep: need 0 <= start <= stop and step > 0");
  if (attack.target_detector < 0 || attack.target_detector > 3)
    throw ConfigError("attack: target_detector must be 0..3");
  if (attack.max_attempts < 1) throw ConfigError("attack: max_attempts must be >= 1");
  if (!(attack.pulse_power_factor > 0.0)) throw ConfigError("attack: pulse_power_factor must be positive");
  if (!(attack.watchdog_threshold > 0.0)) throw ConfigError("attack: watchdog_threshold must be positive");
  if (!(attack.campaign_confidence >= 0.0 && attack.campaign_confidence <= 1.0))
    throw ConfigError("attack: campaign_confidence must lie in [0, 1]");
  if (attack.intercept_fraction && !(*attack.intercept_fraction >= 0.0 && *attack.intercept_fraction <= 1.0))
    throw ConfigError("attack: intercept_fraction must lie in [0, 1]");
  DetectorCircuit c;
  c.v_bias = damage.baseline.v_br_orig + setpoint();
  c.r_ballast = detector.r_ballast;
  c.slot_duration = detector.slot_duration;
  c.dead_time = detector.dead_time;
  c.eta_nominal = detector.eta_nominal;
  c.v_ov_nominal = detector.v_ov_nominal;
  c.control_curve = detector.control_curve;
  c.validate();
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

class Section {
 public:
  Section(const json& doc, std::string name, std::initializer_list<const char*> keys)
      : doc_(doc), name_(std::move(name)) {
    if (!doc_.is_object()) throw ConfigError(name_ + ": expected a JSON object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : doc_.items())
      if (!allowed.count(key)) throw ConfigError(name_ + ": unknown key '" + key + "'");
  }

  bool has(const char* key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }

  template <typename T>
  void read(const char* key, T& target) const {
    if (!has(key)) return;
    try {
      target = doc_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }

  template <typename T>
  void read(const char* key, std::optional<T>& target) const {
    if (!has(key)) return;
    T value{};
    read(key, value);
    target = value;
  }

  void read(const char* key, double& target) const {
    if (!has(key)) return;
    if (!doc_.at(key).is_number()) throw ConfigError(name_ + "." + key + ": expected a number");
    target = doc_.at(key).get<double>();
  }

  void read(const char* key, Range& target) const {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ConfigError(name_ + "." + key + ": expected [low, high]");
    target = {v[0].get<double>(), v[1].get<double>()};
  }

  const json& at(const char* key) const { return doc_.at(key); }

 private:
  const json& doc_;
  std::string name_;
};

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw ConfigError("format must be 'csv' or 'json', got '" + s + "'");
}

}  // namespace

void merge_config(ScenarioConfig& cfg, const json& doc) {
  const Section top(doc, "config",
                    {"scenario", "seed", "pulses", "out", "format", "trials", "protocol", "detector",
                     "damage", "measurement", "alarm", "attack", "sweep"});
  top.read("scenario", cfg.scenario);
  if (top.has("seed")) {
    if (!top.at("seed").is_number_unsigned())
      throw ConfigError("config.seed: expected an unsigned 64-bit integer");
    cfg.seed = top.at("seed").get<std::uint64_t>();
  }
  top.read("pulses", cfg.pulses);
  top.read("out", cfg.out);
  if (top.has("format")) {
    std::string f;
    top.read("format", f);
    cfg.format = parse_format(f);
  }
  top.read("trials", cfg.trials);

  if (top.has("protocol")) {
    const Section s(top.at("protocol"), "protocol",
                    {"channel_loss_db", "distance_km", "alpha_db_per_km", "e_misalign", "f_ec"});
    if (s.has("channel_loss_db") && s.has("distance_km"))
      throw ConfigError("protocol: give either channel_loss_db or distance_km, not both");
    s.read("alpha_db_per_km", cfg.protocol.alpha_db_per_km);
    s.read("channel_loss_db", cfg.protocol.channel_loss_db);
    if (s.has("distance_km")) {
      double km = 0.0;
      s.read("distance_km", km);
      cfg.protocol.channel_loss_db = km * cfg.protocol.alpha_db_per_km;
    }
    s.read("e_misalign", cfg.protocol.e_misalign);
    s.read("f_ec", cfg.protocol.f_ec);
  }
  if (top.has("detector")) {
    const Section s(top.at("detector"), "detector",
                    {"overvoltage_setpoint", "r_ballast", "slot_duration", "dead_time", "eta_nominal",
                     "v_ov_nominal", "p_threshold", "deterministic_below", "width_per_volt"});
    auto& d = cfg.detector;
    s.read("overvoltage_setpoint", d.overvoltage_setpoint);
    s.read("r_ballast", d.r_ballast);
    s.read("slot_duration", d.slot_duration);
    s.read("dead_time", d.dead_time);
    s.read("eta_nominal", d.eta_nominal);
    s.read("v_ov_nominal", d.v_ov_nominal);
    s.read("p_threshold", d.control_curve.p_threshold);
    s.read("deterministic_below", d.control_curve.deterministic_below);
    s.read("width_per_volt", d.control_curve.width_per_volt);
  }
  if (top.has("damage")) {
    const Section s(top.at("damage"), "damage",
                    {"v_br_orig", "dcr_base", "qe_linear", "i_dark", "a_onset", "a_factor",
                     "tau_relax", "b_onset", "b_dv_br", "b_susceptibility", "c_onset", "c_factor",
                     "d_onset", "d_factor", "e_onset", "e_i_dark", "f_onset",
                     "f_open_probability", "f_resistance"});
    auto& p = cfg.damage;
    s.read("v_br_orig", p.baseline.v_br_orig);
    s.read("dcr_base", p.baseline.dcr_base);
    s.read("qe_linear", p.baseline.qe_linear);
    s.read("i_dark", p.baseline.i_dark);
    s.read("a_onset", p.a_onset);
    s.read("a_factor", p.a_factor);
    s.read("tau_relax", p.tau_relax);
    s.read("b_onset", p.b_onset);
    s.read("b_dv_br", p.b_dv_br);
    s.read("b_susceptibility", p.b_susceptibility);
    s.read("c_onset", p.c_onset);
    s.read("c_factor", p.c_factor);
    s.read("d_onset", p.d_onset);
    s.read("d_factor", p.d_factor);
    s.read("e_onset", p.e_onset);
    s.read("e_i_dark", p.e_i_dark);
    s.read("f_onset", p.f_onset);
    s.read("f_open_probability", p.f_open_probability);
    s.read("f_resistance", p.f_resistance);
  }
  if (top.has("measurement")) {
    const Section s(top.at("measurement"), "measurement", {"count_time", "n_test_pulses", "mu"});
    s.read("count_time", cfg.measurement.count_time);
    s.read("n_test_pulses", cfg.measurement.n_test_pulses);
    s.read("mu", cfg.measurement.mu);
  }
  if (top.has("alarm")) {
    const Section s(top.at("alarm"), "alarm", {"tolerance", "dcr", "pde", "v_br", "i_dark", "qe_0v"});
    auto& a = cfg.alarm;
    if (s.has("tolerance")) {
      double t = 0.0;
      s.read("tolerance", t);
      a.tol_dcr = a.tol_pde = a.tol_v_br = a.tol_i_dark = a.tol_qe = t;
    }
    s.read("dcr", a.tol_dcr);
    s.read("pde", a.tol_pde);
    s.read("v_br", a.tol_v_br);
    s.read("i_dark", a.tol_i_dark);
    s.read("qe_0v", a.tol_qe);
  }
  if (top.has("attack")) {
    const Section s(top.at("attack"), "attack",
                    {"pulse_power_factor", "campaign_confidence", "campaign_power",
                     "intercept_fraction", "watchdog_threshold", "target_detector", "max_attempts"});
    auto& a = cfg.attack;
    s.read("pulse_power_factor", a.pulse_power_factor);
    s.read("campaign_confidence", a.campaign_confidence);
    s.read("campaign_power", a.campaign_power);
    s.read("intercept_fraction", a.intercept_fraction);
    s.read("watchdog_threshold", a.watchdog_threshold);
    s.read("target_detector", a.target_detector);
    s.read("max_attempts", a.max_attempts);
  }
  if (top.has("sweep")) {
    const Section s(top.at("sweep"), "sweep", {"start", "stop", "step"});
    s.read("start", cfg.sweep.start);
    s.read("stop", cfg.sweep.stop);
    s.read("step", cfg.sweep.step);
  }
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  ScenarioConfig cfg;
  merge_config(cfg, doc);
  return cfg;
}

// ---------------------------------------------------------------------------
// Receiver and serialization

namespace {

DetectorCircuit circuit_for(const ScenarioConfig& cfg, const ApdState& apd, double setpoint) {
  DetectorCircuit c = DetectorCircuit::for_apd(apd, setpoint);
  c.r_ballast = cfg.detector.r_ballast;
  c.slot_duration = cfg.detector.slot_duration;
  c.dead_time = cfg.detector.dead_time;
  c.eta_nominal = cfg.detector.eta_nominal;
  c.v_ov_nominal = cfg.detector.v_ov_nominal;
  c.control_curve = cfg.detector.control_curve;
  return c;
}

Detector draw_detector(const ScenarioConfig& cfg, std::uint64_t seed, const std::string& label) {
  Rng rng = make_rng(seed, label);
  Sample s = draw_sample(cfg.damage, rng);
  return Detector{s.state, s.thresholds, circuit_for(cfg, s.state, cfg.setpoint())};
}

}  // namespace

BobReceiver build_receiver(const ScenarioConfig& cfg, std::uint64_t seed, bool with_watchdog) {
  BobReceiver bob;
  for (int i = 0; i < 4; ++i) bob.detectors[i] = draw_detector(cfg, seed, "bob/" + std::to_string(i));
  if (with_watchdog) bob.watchdog = draw_detector(cfg, seed, "watchdog");
  bob.watchdog_threshold = cfg.attack.watchdog_threshold;
  return bob;
}

ordered_json to_json(const SimResult& r) {
  ordered_json j;
  j["n_detected"] = r.n_detected;
  j["n_sifted"] = r.n_sifted;
  j["n_errors"] = r.n_errors;
  j["qber"] = r.qber;
  j["key_rate_per_sifted_bit"] = r.key_rate_per_sifted_bit;
  j["eve_info_fraction"] = r.eve_info_fraction;
  j["detection_rate_per_slot"] = r.detection_rate_per_slot;
  j["watchdog_alarms"] = r.watchdog_alarms;
  return j;
}

ordered_json to_json(const AttackReport& r) {
  ordered_json j = to_json(r.result);
  j["qber_delta_vs_baseline"] = r.qber_delta_vs_baseline;
  j["eve_info_fraction"] = r.eve_info_fraction;
  j["bob_rate_ratio_vs_baseline"] = r.bob_rate_ratio_vs_baseline;
  j["alarms_raised"] = r.alarms_raised;
  j["baseline"] = to_json(r.baseline);
  j["campaign"] = ordered_json{{"detectors_blinded", r.detectors_blinded},
                               {"watchdog_destroyed", r.watchdog_destroyed},
                               {"intercept_fraction", r.intercept_fraction}};
  return j;
}

// ---------------------------------------------------------------------------
// Scenarios

namespace {

struct TrialOutput {
  std::vector<std::pair<std::string, SimResult>> results;
  std::vector<std::pair<std::string, AttackReport>> reports;
  ordered_json extra = ordered_json::object();
  std::vector<SweepRow> rows;
};

ProtocolParams link_params(const ScenarioConfig& cfg) {
  ProtocolParams p = cfg.protocol;
  p.n_slots = cfg.pulses;
  return p;
}

double pulse_power(const ScenarioConfig& cfg) {
  return cfg.attack.pulse_power_factor * cfg.detector.control_curve.p_threshold;
}

double campaign_power(const ScenarioConfig& cfg, Band band) {
  if (cfg.attack.campaign_power) return *cfg.attack.campaign_power;
  return plan_campaign(band, cfg.damage, cfg.attack.campaign_confidence);
}

TrialOutput scenario_baseline(const ScenarioConfig& cfg, std::uint64_t seed) {
  const BobReceiver bob = build_receiver(cfg, seed, false);
  TrialOutput out;
  out.results.emplace_back("result", run_bb84(link_params(cfg), bob, NoEve{}, derive_seed(seed, "link")));
  out.extra["analytic_qber"] = receiver_analytic_qber(link_params(cfg), bob);
  return out;
}

TrialOutput scenario_damage_sweep(const ScenarioConfig& cfg, std::uint64_t seed) {
  Rng sample_rng = make_rng(seed, "sample");
  Sample sample = draw_sample(cfg.damage, sample_rng);
  const DetectorCircuit circuit = circuit_for(cfg, sample.state, 15.0);
  Rng sweep_rng = make_rng(seed, "sweep");
  const std::vector<double> powers = cfg.sweep.powers();
  TrialOutput out;
  out.rows = damage_sweep(sample, powers, circuit, cfg.measurement, cfg.alarm, sweep_rng);
  return out;
}

TrialOutput scenario_blind_and_fake(const ScenarioConfig& cfg, std::uint64_t seed) {
  const BobReceiver bob = build_receiver(cfg, seed, false);
  const EveStrategy eve = DamageThenFakedState{campaign_power(cfg, Band::E), pulse_power(cfg)};
  TrialOutput out;
  out.reports.emplace_back("report", run_attack(eve, link_params(cfg), bob, seed));
  return out;
}

TrialOutput scenario_subtraction(const ScenarioConfig& cfg, std::uint64_t seed) {
  const ProtocolParams params = link_params(cfg);
  const BobReceiver bob = build_receiver(cfg, seed, false);
  const EveStrategy eve =
      SubtractionExploit{campaign_power(cfg, Band::C), cfg.attack.intercept_fraction.value_or(-1.0)};

  BobReceiver damaged = bob;
  Rng campaign_rng = make_rng(seed, "campaign");
  const EveStrategy resolved = apply_campaign(eve, params, damaged, campaign_rng);

  TrialOutput out;
  const double q_expected = receiver_analytic_qber(params, bob);
  const double q_after = receiver_analytic_qber(params, damaged);
  out.extra["q_expected"] = q_expected;
  out.extra["q_after_damage"] = q_after;
  out.extra["phi_max"] = q_after <= q_expected ? subtraction_exploit_fraction(q_expected, q_after) : 0.0;
  out.extra["intercept_fraction"] = std::get<SubtractionExploit>(resolved).intercept_fraction;
  out.reports.emplace_back("report", run_attack(eve, params, bob, seed));
  return out;
}

TrialOutput scenario_mismatch(const ScenarioConfig& cfg, std::uint64_t seed) {
  BobReceiver bob = build_receiver(cfg, seed, false);
  Rng rng = make_rng(seed, "mismatch");
  const MismatchOutcome m = selective_efficiency_damage(bob, cfg.attack.target_detector, cfg.damage,
                                                        rng, cfg.attack.max_attempts);
  TrialOutput out;
  ordered_json eff = ordered_json::array();
  for (const auto& d : bob.detectors) eff.push_back(photon_detection_efficiency(d.state, d.circuit));
  out.extra["target_detector"] = cfg.attack.target_detector;
  out.extra["mismatch_ratio"] = m.ratio;
  out.extra["attempts"] = m.attempts;
  out.extra["effect_fired"] = m.effect_fired;
  out.extra["efficiencies"] = eff;
  out.results.emplace_back("result", run_bb84(link_params(cfg), bob, NoEve{}, derive_seed(seed, "link")));
  return out;
}

TrialOutput scenario_watchdog(const ScenarioConfig& cfg, std::uint64_t seed) {
  const ProtocolParams params = link_params(cfg);
  const BobReceiver bob = build_receiver(cfg, seed, true);
  const EveStrategy inner = DamageThenFakedState{campaign_power(cfg, Band::E), pulse_power(cfg)};
  const EveStrategy kill =
      WatchdogKill{plan_campaign(Band::F, cfg.damage, cfg.attack.campaign_confidence),
                   std::make_shared<const EveStrategy>(inner)};
  TrialOutput out;
  out.reports.emplace_back("defeated", run_attack(kill, params, bob, seed));
  out.reports.emplace_back("intact_watchdog", run_attack(inner, params, bob, seed));
  return out;
}

using ScenarioFn = std::function<TrialOutput(const ScenarioConfig&, std::uint64_t)>;

ScenarioFn lookup(const std::string& name) {
  if (name == "baseline") return scenario_baseline;
  if (name == "damage-sweep") return scenario_damage_sweep;
  if (name == "blind-and-fake") return scenario_blind_and_fake;
  if (name == "dark-count-subtraction") return scenario_subtraction;
  if (name == "efficiency-mismatch") return scenario_mismatch;
  if (name == "watchdog-defeat") return scenario_watchdog;
  throw ConfigError("unknown scenario '" + name + "'");
}

void accumulate(SimResult& into, const SimResult& r) {
  into.n_slots += r.n_slots;
  into.n_detected += r.n_detected;
  into.n_sifted += r.n_sifted;
  into.n_errors += r.n_errors;
  into.n_eve_correct += r.n_eve_correct;
  into.watchdog_alarms += r.watchdog_alarms;
}

AttackReport combine_reports(const std::vector<const AttackReport*>& parts, double f_ec) {
  AttackReport out;
  double fraction_sum = 0.0;
  out.watchdog_destroyed = true;
  for (const AttackReport* p : parts) {
    accumulate(out.result, p->result);
    accumulate(out.baseline, p->baseline);
    out.detectors_blinded += p->detectors_blinded;
    out.watchdog_destroyed = out.watchdog_destroyed && p->watchdog_destroyed;
    fraction_sum += p->intercept_fraction;
  }
  finalize(out.result, f_ec);
  finalize(out.baseline, f_ec);
  out.qber_delta_vs_baseline = out.result.qber - out.baseline.qber;
  out.eve_info_fraction = out.result.eve_info_fraction;
  out.bob_rate_ratio_vs_baseline =
      out.baseline.n_sifted > 0 ? static_cast<double>(out.result.n_sifted) / out.baseline.n_sifted : 0.0;
  out.alarms_raised = out.result.watchdog_alarms;
  out.intercept_fraction = parts.empty() ? 0.0 : fraction_sum / static_cast<double>(parts.size());
  return out;
}

std::vector<TrialOutput> run_trials(const ScenarioConfig& cfg, const ScenarioFn& fn) {
  const std::uint64_t seed = *cfg.seed;
  if (cfg.trials == 1) return {fn(cfg, seed)};

  std::vector<TrialOutput> outputs(static_cast<std::size_t>(cfg.trials));
  std::vector<std::exception_ptr> errors(outputs.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), outputs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < outputs.size(); i += workers) {
        try {
          outputs[i] = fn(cfg, derive_seed(seed, "trial/" + std::to_string(i)));
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outputs;
}

void flatten(const ordered_json& j, const std::string& prefix, std::ostringstream& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items())
      flatten(value, prefix.empty() ? key : prefix + "." + key, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else {
    out << prefix << ',' << j.dump() << '\n';
  }
}

ordered_json sweep_rows_json(const std::vector<SweepRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    const auto& m = row.measurement;
    ordered_json alarms = ordered_json::array();
    for (Parameter p : row.alarms) alarms.push_back(parameter_name(p));
    std::string effects;
    for (Band b : row.exposure.effects_triggered) effects += band_label(b);
    arr.push_back(ordered_json{{"exposure_power", m.exposure_power},
                               {"dcr", m.dcr_measured},
                               {"pde", m.pde_measured},
                               {"v_br", m.v_br_measured},
                               {"i_dark", m.i_dark_measured},
                               {"qe_0v", m.qe_0v_measured},
                               {"alarms", alarms},
                               {"effects", effects}});
  }
  return arr;
}

}  // namespace

std::string run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const ScenarioFn fn = lookup(cfg.scenario);
  const std::vector<TrialOutput> trials = run_trials(cfg, fn);
  const bool parallel = cfg.trials > 1;
  const TrialOutput& first = trials.front();

  if (cfg.scenario == "damage-sweep") {
    if (cfg.output_format() == OutputFormat::Csv) {
      std::ostringstream csv;
      bool header = true;
      for (const auto& t : trials) {
        write_sweep_csv(csv, t.rows, header);
        header = false;
      }
      return csv.str();
    }
    ordered_json doc;
    doc["scenario"] = cfg.scenario;
    doc["seed"] = *cfg.seed;
    doc["mode"] = parallel ? "trials-parallel" : "single";
    doc["trials"] = cfg.trials;
    ordered_json traces = ordered_json::array();
    for (const auto& t : trials) traces.push_back(sweep_rows_json(t.rows));
    doc["traces"] = traces;
    return doc.dump(2) + "\n";
  }

  ordered_json doc;
  doc["scenario"] = cfg.scenario;
  doc["seed"] = *cfg.seed;
  doc["pulses"] = cfg.pulses;
  doc["mode"] = parallel ? "trials-parallel" : "single";
  doc["trials"] = cfg.trials;
  doc["setpoint_v"] = cfg.setpoint();

  if (!parallel) {
    for (const auto& [name, value] : first.extra.items()) doc[name] = value;
  } else {
    ordered_json per_trial = ordered_json::array();
    for (const auto& t : trials) per_trial.push_back(t.extra);
    if (!first.extra.empty()) doc["per_trial"] = per_trial;
  }

  for (std::size_t k = 0; k < first.results.size(); ++k) {
    SimResult total;
    for (const auto& t : trials) accumulate(total, t.results[k].second);
    finalize(total, cfg.protocol.f_ec);
    doc[first.results[k].first] = to_json(total);
  }
  for (std::size_t k = 0; k < first.reports.size(); ++k) {
    std::vector<const AttackReport*> parts;
    for (const auto& t : trials) parts.push_back(&t.reports[k].second);
    doc[first.reports[k].first] = to_json(combine_reports(parts, cfg.protocol.f_ec));
  }

  if (cfg.output_format() == OutputFormat::Json) return doc.dump(2) + "\n";
  std::ostringstream csv;
  csv << "field,value\n";
  flatten(doc, "", csv);
  return csv.str();
}

}  // namespace qkdamage
