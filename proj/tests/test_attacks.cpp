#include <doctest.h>

#include <cmath>
#include <set>

#include "qkdamage/attacks.hpp"
#include "qkdamage/errors.hpp"
#include "test_support.hpp"

using namespace qkdamage;
using namespace qkdamage::testing;

namespace {

// All four detectors blinded by a band-e campaign, biased at `setpoint`.
BobReceiver blinded_receiver(double setpoint) {
  BobReceiver bob = uniform_receiver(1.0, 0.0, setpoint);
  Rng rng{1};
  for (auto& d : bob.detectors) apply_illumination(d.state, d.thresholds, 1.5, rng);
  for (const auto& d : bob.detectors) REQUIRE(is_blinded(d.state, d.circuit));
  return bob;
}

ProtocolParams ideal_link(std::int64_t slots) {
  ProtocolParams p;
  p.n_slots = slots;
  p.e_misalign = 0.0;
  return p;
}

}  // namespace

TEST_CASE("campaign planning") {
  const DamageProfile profile;
  const double e = plan_campaign(Band::E, profile);
  CHECK(e >= 1.2 + 0.95 * 0.5);
  CHECK(e < 1.7);
  CHECK(e == doctest::Approx(1.68).epsilon(0.01));
  CHECK(plan_campaign(Band::F, profile) >= 2.0);
  CHECK(plan_campaign(Band::C, profile) >= 0.785);
  CHECK(plan_campaign(Band::C, profile) <= 0.8);
  CHECK(plan_campaign(Band::B, profile) < profile.c_onset.low);
  CHECK(plan_campaign(Band::E, profile, 1.0) == 1.7);
  CHECK_THROWS_AS(plan_campaign(Band::A, profile), ConfigError);
  CHECK_THROWS_AS(plan_campaign(parse_band("z"), profile), ConfigError);
}

TEST_CASE("planned campaign crosses the realized onset at least 95% of the time") {
  const DamageProfile profile;
  Rng rng{404};
  constexpr int kDraws = 4000;
  for (Band band : {Band::B, Band::C, Band::D, Band::E, Band::F}) {
    const double power = plan_campaign(band, profile);
    int crossed = 0;
    for (int i = 0; i < kDraws; ++i) crossed += draw_sample(profile, rng).thresholds.onset(band) <= power;
    CAPTURE(band_label(band));
    CHECK(static_cast<double>(crossed) / kDraws >= 0.95);
  }
}

TEST_CASE("faked-state attack: exhaustive enumeration at a deterministic setpoint") {
  const BobReceiver bob = blinded_receiver(11.0);
  const double pth = bob.detectors[0].circuit.control_curve.p_threshold;
  const double P = 1.5 * pth;

  double sifted_weight = 0.0;
  int cases = 0;
  for (int alice_bit = 0; alice_bit < 2; ++alice_bit)
    for (int alice_basis = 0; alice_basis < 2; ++alice_basis)
      for (int eve_basis = 0; eve_basis < 2; ++eve_basis)
        for (int bob_basis = 0; bob_basis < 2; ++bob_basis) {
          ++cases;
          // Eve's outcome: deterministic in the matching basis, a fair coin otherwise.
          for (int eve_bit = 0; eve_bit < 2; ++eve_bit) {
            const double weight = eve_basis == alice_basis ? (eve_bit == alice_bit ? 1.0 : 0.0) : 0.5;
            if (weight == 0.0) continue;
            const auto powers = faked_state_slot(eve_bit, eve_basis, P, bob_basis);
            std::set<int> clicks;
            for (int i = 0; i < 4; ++i) {
              const auto& d = bob.detectors[i];
              const double p = bright_pulse_click_probability(d.state, d.circuit, powers[i]);
              REQUIRE((p == 0.0 || p == 1.0));
              if (p == 1.0) clicks.insert(i);
            }
            if (bob_basis != eve_basis) {
              REQUIRE(clicks.empty());
              continue;
            }
            REQUIRE(clicks.size() == 1);
            const int clicked = *clicks.begin();
            REQUIRE(clicked == detector_index(eve_basis, eve_bit));
            if (bob_basis == alice_basis) {
              REQUIRE(clicked % 2 == alice_bit);  // no error, Eve knows the bit
              sifted_weight += weight;
            }
          }
        }
  CHECK(cases == 16);
  CHECK(sifted_weight / 16.0 == doctest::Approx(0.25));  // vs 0.5 for a perfect honest link
}

TEST_CASE("faked-state attack outside the power window") {
  const BobReceiver bob = blinded_receiver(11.0);
  const double pth = bob.detectors[0].circuit.control_curve.p_threshold;

  // Too weak: nothing clicks.
  ProtocolParams params = ideal_link(20000);
  SimResult weak = run_bb84(params, bob, FakedState{0.9 * pth}, 3);
  CHECK(weak.n_detected == 0);

  // Too strong: mismatched bases double-click and are discarded; what is
  // kept is still error-free and fully known to Eve.
  SimResult strong = run_bb84(params, bob, FakedState{2.5 * pth}, 3);
  CHECK(strong.n_errors == 0);
  CHECK(strong.eve_info_fraction == 1.0);
  const auto powers = faked_state_slot(0, 0, 2.5 * pth, 1);
  CHECK(bright_pulse_click_probability(bob.detectors[2].state, bob.detectors[2].circuit, powers[2]) == 1.0);
  CHECK(bright_pulse_click_probability(bob.detectors[3].state, bob.detectors[3].circuit, powers[3]) == 1.0);
}

TEST_CASE("damage then faked state: a perfect attack") {
  const BobReceiver bob = uniform_receiver(1.0, 0.0, 11.0);
  const double pth = bob.detectors[0].circuit.control_curve.p_threshold;
  const ProtocolParams params = ideal_link(100000);
  const AttackReport rep = run_attack(DamageThenFakedState{1.68, 1.5 * pth}, params, bob, 42);
  CHECK(rep.detectors_blinded == 4);
  CHECK(rep.result.n_errors == 0);
  CHECK(rep.eve_info_fraction == 1.0);
  CHECK(rep.qber_delta_vs_baseline == 0.0);
  const double sigma = 0.5 * std::sqrt(1.0 / rep.result.n_sifted + 1.0 / rep.baseline.n_sifted);
  CHECK(std::abs(rep.bob_rate_ratio_vs_baseline - 0.5) < 3.0 * sigma);
}

TEST_CASE("intercept-resend through run_attack") {
  const BobReceiver bob = uniform_receiver(0.5, 0.0);
  const AttackReport rep = run_attack(InterceptResend{1.0}, ideal_link(100000), bob, 9);
  CHECK(std::abs(rep.result.qber - 0.25) < 3.0 * binomial_sigma(0.25, rep.result.n_sifted));
  CHECK(std::abs(rep.eve_info_fraction - 0.75) < 3.0 * binomial_sigma(0.75, rep.result.n_sifted));
  CHECK(rep.baseline.qber == 0.0);
  CHECK(rep.detectors_blinded == 0);
}

TEST_CASE("killing the watchdog silences its alarms") {
  BobReceiver bob = uniform_receiver(1.0, 0.0, 11.0);
  bob.watchdog = bob.detectors[0];
  bob.watchdog_threshold = 1e-4;
  const double pth = bob.detectors[0].circuit.control_curve.p_threshold;
  const ProtocolParams params = ideal_link(20000);
  const EveStrategy inner = DamageThenFakedState{1.68, 1.5 * pth};
  const AttackReport intact = run_attack(inner, params, bob, 1);
  const AttackReport killed =
      run_attack(WatchdogKill{2.5, std::make_shared<const EveStrategy>(inner)}, params, bob, 1);
  CHECK(intact.alarms_raised > 0);
  CHECK(killed.alarms_raised == 0);
  CHECK(killed.watchdog_destroyed);
  CHECK(killed.eve_info_fraction == 1.0);
}

TEST_CASE("subtraction exploit fraction") {
  CHECK(subtraction_exploit_fraction(0.02, 0.02) == 0.0);
  const double q_exp = analytic_qber(1e-3, 0.01, 1e-5);
  const double q_new = analytic_qber(1e-3, 0.01, 2e-6);
  CHECK(q_exp == doctest::Approx(0.01961).epsilon(1e-3));
  CHECK(q_new == doctest::Approx(0.01195).epsilon(1e-3));
  CHECK(subtraction_exploit_fraction(q_exp, q_new) == doctest::Approx(0.0306).epsilon(1e-2));
  CHECK(subtraction_exploit_fraction(0.4, 0.1) == 1.0);
  CHECK_THROWS_AS(subtraction_exploit_fraction(0.01, 0.02), MisuseError);

  double prev = -1.0;
  for (double budget = 0.0; budget < 0.3; budget += 0.001) {
    const double phi = subtraction_exploit_fraction(0.05 + budget, 0.05);
    REQUIRE(phi >= prev);
    prev = phi;
  }
}

TEST_CASE("subtraction exploit hides inside the old error budget") {
  // p_sig = eta T / 2 = 1e-2, d = 1e-4 before and 2e-5 after damage.
  BobReceiver bob = uniform_receiver(0.02, 1e-4);
  ProtocolParams params;
  params.n_slots = 2000000;
  params.e_misalign = 0.01;
  const double q_exp = receiver_analytic_qber(params, bob);
  const AttackReport rep = run_attack(SubtractionExploit{0.7, -1.0}, params, bob, 8);
  CHECK(rep.intercept_fraction > 0.0);
  CHECK(rep.intercept_fraction == doctest::Approx(0.0306).epsilon(0.01));
  CHECK(rep.result.qber <= q_exp + 3.0 * binomial_sigma(q_exp, rep.result.n_sifted));
}

TEST_CASE("selective efficiency damage") {
  DamageProfile profile;
  SUBCASE("susceptible target") {
    BobReceiver bob = uniform_receiver(0.5, 1e-6);
    bob.detectors[2].thresholds.b_susceptible = true;
    Rng rng{1};
    const MismatchOutcome m = selective_efficiency_damage(bob, 2, profile, rng);
    CHECK(m.effect_fired);
    CHECK(m.ratio >= 0.833);
    CHECK(m.ratio <= 0.847);
    CHECK(m.ratio >= 0.83);
    CHECK(m.ratio <= 0.90);
    CHECK(bob.detectors[0].state.v_br == bob.detectors[0].state.v_br_orig);
  }
  SUBCASE("non-susceptible target") {
    BobReceiver bob = uniform_receiver(0.5, 1e-6);
    Rng rng{1};
    const MismatchOutcome m = selective_efficiency_damage(bob, 1, profile, rng, 5);
    CHECK_FALSE(m.effect_fired);
    CHECK(m.attempts == 5);
    CHECK(m.ratio == 1.0);
  }
  SUBCASE("two targets with the same shift give the same ratio as one") {
    BobReceiver bob = uniform_receiver(0.5, 1e-6);
    for (auto& d : bob.detectors) d.thresholds.b_susceptible = true;
    Rng rng{1};
    const double one = selective_efficiency_damage(bob, 0, profile, rng).ratio;
    const double two = selective_efficiency_damage(bob, 1, profile, rng).ratio;
    CHECK(two == doctest::Approx(one));
  }
  SUBCASE("bad target") {
    BobReceiver bob = uniform_receiver(0.5, 1e-6);
    Rng rng{1};
    CHECK_THROWS_AS(selective_efficiency_damage(bob, 4, profile, rng), MisuseError);
  }
}

TEST_CASE("strategy validation and names") {
  CHECK(strategy_name(NoEve{}) == "none");
  CHECK(strategy_name(WatchdogKill{}) == "watchdog-kill");
  CHECK_THROWS_AS(validate(EveStrategy{InterceptResend{1.5}}), ConfigError);
  CHECK_THROWS_AS(validate(EveStrategy{FakedState{-1.0}}), ConfigError);
  CHECK_NOTHROW(validate(EveStrategy{SubtractionExploit{0.7, -1.0}}));
}
