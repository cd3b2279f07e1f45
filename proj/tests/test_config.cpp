#include <cmath>

#include "dcloc/config.hpp"
#include "doctest.h"

using namespace dcloc;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "t.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("quantities with SI prefixes and units") {
  CHECK(parse_quantity("0.35mH/km", "H/km") == doctest::Approx(0.35e-3));
  CHECK(parse_quantity("350uH/km", "H/km") == doctest::Approx(0.35e-3));
  CHECK(parse_quantity("0.35 H/km", "H/km") == doctest::Approx(0.35));
  CHECK(parse_quantity("0.25ohm/km", "ohm/km") == 0.25);
  CHECK(parse_quantity("250mohm/km", "ohm/km") == doctest::Approx(0.25));
  CHECK(parse_quantity("1mΩ", "ohm") == doctest::Approx(1e-3));
  CHECK(parse_quantity("1 mOhm", "ohm") == doctest::Approx(1e-3));
  CHECK(parse_quantity("5mF", "F") == doctest::Approx(5e-3));
  CHECK(parse_quantity("10 µs", "s") == doctest::Approx(10e-6));
  CHECK(parse_quantity("10us", "s") == doctest::Approx(10e-6));
  CHECK(parse_quantity("10MHz", "Hz") == 10e6);
  CHECK(parse_quantity("1500m", "km") == doctest::Approx(1.5));
  CHECK(parse_quantity("2km", "km") == 2.0);
  CHECK(parse_quantity("2", "km") == 2.0);
  CHECK(parse_quantity("760V", "V") == 760.0);
  CHECK(parse_quantity("+3e2", "V") == 300.0);
  CHECK(std::isinf(parse_quantity("inf", "dB")));
  CHECK(parse_quantity("40dB", "dB") == 40.0);
}

TEST_CASE("malformed quantities") {
  CHECK_THROWS_AS(parse_quantity("abc", "V"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("1mH", "ohm"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("1xohm", "ohm"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("1mH", "H/km"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("inf", "V"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("1V", ""), ConfigError);
}

TEST_CASE("empty file gives the point-to-point defaults") {
  const auto f = parse_config_text("# nothing\n\n");
  const auto d = default_scenario(Configuration::point_to_point);
  CHECK(canonical_text(f.scenario) == canonical_text(d));
  CHECK_FALSE(f.sweep.has_value());
  CHECK(f.scenario.fault.distance_km == 1.0);
  CHECK(f.scenario.locator.trigger_threshold == doctest::Approx(3.8));
}

TEST_CASE("keys set the scenario") {
  const auto f = parse_config_text(R"(
configuration = point_to_point
cable.r = 0.3ohm/km      # trailing comment
cable.l = 0.4mH/km
cable.length = 3km
terminal1.clr = 2mH
terminal2.rg = 0.1ohm
fault.kind = n_ptg
fault.distance = 25%
fault.resistance = 0.5ohm
fault.inception = 20us
sim.duration = 200us
measure.sample_rate = 5MHz
measure.snr_db = 40
measure.seed = 9
locator.window = 5
locator.plateau_tolerance = 2%
locator.derivative = finite_difference
)");
  const auto& s = f.scenario;
  CHECK(s.topology.faulted_section.r_per_km == doctest::Approx(0.3));
  CHECK(s.topology.faulted_section.l_per_km == doctest::Approx(0.4e-3));
  CHECK(s.topology.line_length() == 3.0);
  CHECK(s.topology.terminal_1.clr_inductance == doctest::Approx(2e-3));
  CHECK(s.topology.terminal_2.grounding_resistance == doctest::Approx(0.1));
  CHECK(s.fault.kind == FaultKind::n_ptg);
  CHECK(s.fault.distance_km == doctest::Approx(0.75));
  CHECK(s.fault.resistance == 0.5);
  CHECK(s.fault.inception_time == doctest::Approx(20e-6));
  CHECK(s.sim.duration == doctest::Approx(200e-6));
  CHECK(s.measure.sample_rate == 5e6);
  CHECK(s.measure.noise.snr_db == 40.0);
  CHECK(s.measure.noise.seed == 9);
  CHECK(s.locator.window_samples == 5);
  CHECK(s.locator.plateau_relative_tolerance == doctest::Approx(0.02));
  CHECK(s.locator.derivative == DerivativeSource::finite_difference);
}

TEST_CASE("matched grounding follows the cable and CLR") {
  const auto f = parse_config_text("cable.r = 0.5ohm/km\nterminal1.rg = matched\nterminal2.rg = 0.2ohm\n");
  const auto& t = f.scenario.topology;
  CHECK(t.terminal_1.grounding_resistance == doctest::Approx(0.5 * 1e-3 / 0.35e-3));
  CHECK(t.terminal_2.grounding_resistance == doctest::Approx(0.2));
}

TEST_CASE("multi-terminal keys") {
  const auto f = parse_config_text("configuration = multi_terminal\nbranch.d3 = 750m\nremote.clr = 2mH\nterminal6.voltage = 700V\n");
  const auto& t = f.scenario.topology;
  CHECK(t.configuration == Configuration::multi_terminal);
  CHECK(t.branch_lengths_km[1] == doctest::Approx(0.75));
  for (const auto& r : t.remote_terminals) CHECK(r.clr_inductance == doctest::Approx(2e-3));
  CHECK(t.remote_terminals[3].initial_voltage == 700.0);
  CHECK(contains(error_of("branch.d3 = 1km\n"), "key 'branch.d3'"));
  CHECK(contains(error_of("terminal4.clr = 1mH\n"), "key 'terminal4.clr'"));
}

TEST_CASE("errors name the source, line and key") {
  const auto unknown = error_of("cable.r = 0.25ohm/km\ncable.q = 1\n");
  CHECK(contains(unknown, "t.cfg:2"));
  CHECK(contains(unknown, "key 'cable.q'"));
  CHECK(contains(unknown, "unknown key"));

  const auto bad_unit = error_of("\n\nterminal1.clr = 1mF\n");
  CHECK(contains(bad_unit, "t.cfg:3"));
  CHECK(contains(bad_unit, "key 'terminal1.clr'"));

  const auto dup = error_of("fault.resistance = 1ohm\nfault.resistance = 2ohm\n");
  CHECK(contains(dup, "t.cfg:2"));
  CHECK(contains(dup, "duplicate"));

  CHECK(contains(error_of("no equals sign\n"), "t.cfg:1"));
  CHECK(contains(error_of("fault.kind = arc\n"), "key 'fault.kind'"));
  CHECK(contains(error_of("configuration = ring\n"), "key 'configuration'"));
  CHECK(contains(error_of("locator.window = 3.5\n"), "key 'locator.window'"));
}

TEST_CASE("semantic validation") {
  CHECK_FALSE(error_of("fault.distance = 2km\n").empty());
  CHECK_FALSE(error_of("fault.distance = 0%\n").empty());
  CHECK_FALSE(error_of("measure.sample_rate = 3MHz\n").empty());
  CHECK_FALSE(error_of("locator.window = 25\n").empty());
  CHECK_FALSE(error_of("sim.duration = 5us\n").empty());
  CHECK_FALSE(error_of("fault.resistance = -1ohm\n").empty());
  CHECK(error_of("fault.distance = 1999m\n").empty());
}

TEST_CASE("canonical text round-trips and fingerprints are stable") {
  const auto f = parse_config_text("configuration = multi_terminal\nfault.distance = 0.7km\nmeasure.snr_db = 30\nlocator.window = 4\n");
  const auto text = canonical_text(f.scenario);
  const auto back = parse_config_text(text);
  CHECK(canonical_text(back.scenario) == text);
  CHECK(fingerprint(back.scenario) == fingerprint(f.scenario));
  CHECK(fingerprint(f.scenario).size() == 16);

  auto changed = f.scenario;
  changed.fault.resistance *= 2.0;
  CHECK(fingerprint(changed) != fingerprint(f.scenario));
  changed = f.scenario;
  changed.locator.window_samples = 5;
  CHECK(fingerprint(changed) != fingerprint(f.scenario));
  // Layout and unit spelling do not matter.
  CHECK(fingerprint(parse_config_text("fault.resistance=1mohm").scenario) ==
        fingerprint(parse_config_text("  fault.resistance = 0.001 Ohm  # same\n").scenario));
}

TEST_CASE("sweep expansion order and defaults") {
  const auto f = parse_config_text(R"(
fault.resistance = 0.1ohm
sweep.distances = 0.5km, 50%, 1.5km
sweep.resistances = 1mohm, 1ohm
sweep.seeds = 1, 2
)");
  REQUIRE(f.sweep.has_value());
  const auto& sw = *f.sweep;
  CHECK(sw.size() == 12);
  CHECK(sw.kinds == std::vector<FaultKind>{FaultKind::ptp});
  CHECK(sw.windows == std::vector<int>{3});
  const auto runs = sw.expand(f.scenario);
  REQUIRE(runs.size() == 12);
  CHECK(runs[0].fault.distance_km == 0.5);
  CHECK(runs[0].fault.resistance == doctest::Approx(1e-3));
  CHECK(runs[0].measure.noise.seed == 1);
  CHECK(runs[1].measure.noise.seed == 2);
  CHECK(runs[2].fault.resistance == doctest::Approx(1.0));
  CHECK(runs[4].fault.distance_km == 1.0);
  CHECK(runs[11].fault.distance_km == 1.5);
  CHECK(runs[11].fault.resistance == doctest::Approx(1.0));
  CHECK(runs[11].measure.noise.seed == 2);
}

TEST_CASE("an empty sweep list is rejected") {
  const auto e = error_of("sweep.distances =\n");
  CHECK(contains(e, "sweep.distances must not be empty"));
  CHECK(contains(error_of("sweep.windows = 3, 30\n"), "locator"));
}

}  // TEST_SUITE
