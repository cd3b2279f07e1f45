#pragma once

// Scenario configuration: flat `key = value` text with unit-suffixed values,
// e.g. `cable.l = 0.35mH/km`. Blank lines and text after '#' are ignored.
// Every key is optional; omitted keys keep the documented defaults of the
// chosen configuration. Lists (sweep.*) are comma separated.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcloc/locator.hpp"
#include "dcloc/measurement.hpp"
#include "dcloc/scenarios.hpp"

namespace dcloc {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SimulationSettings {
  double step = 10e-9;        // s
  double duration = 310e-6;   // s, whole record from t = 0
};

struct MeasurementSettings {
  double sample_rate = 10e6;  // Hz
  NoiseSpec noise;
};

/// Everything one run depends on.
struct Scenario {
  NetworkTopology topology;
  FaultSpec fault;
  SimulationSettings sim;
  MeasurementSettings measure;
  LocatorConfig locator;

  void validate() const;
};

/// Defaults for a configuration: the documented topology, fault at D1/2
/// with 1 mOhm at 10 us, and locator defaults derived from the topology.
Scenario default_scenario(Configuration configuration);

/// A distance given either in km or as a fraction of D1.
struct DistanceValue {
  double value = 0.0;
  bool relative = false;
  double resolve(double line_length) const { return relative ? value * line_length : value; }
};

struct SweepSpec {
  std::vector<FaultKind> kinds;
  std::vector<DistanceValue> distances;
  std::vector<double> resistances;
  std::vector<double> sample_rates;
  std::vector<int> windows;
  std::vector<double> snr_db;
  std::vector<std::uint64_t> seeds;

  /// Throws ConfigError when any list is empty.
  void validate() const;
  std::size_t size() const;
  /// Cross product in order kinds, distances, resistances, sample rates,
  /// windows, SNR, seeds (last varies fastest).
  std::vector<Scenario> expand(const Scenario& base) const;
};

struct ConfigFile {
  Scenario scenario;
  std::optional<SweepSpec> sweep;  // present when any sweep.* key appears
};

/// Errors name the source, the line and the key.
ConfigFile parse_config(std::istream& in, const std::string& source_name = "<config>");
ConfigFile parse_config_text(const std::string& text, const std::string& source_name = "<config>");
ConfigFile load_config(const std::string& path);

/// Parses "<number>[unit]" for the named quantity ("ohm", "H", "F", "V", "s",
/// "Hz", "km", "ohm/km", "H/km", "dB"). A bare number is in the base unit;
/// SI prefixes p n u m k M G apply to every unit.
double parse_quantity(const std::string& text, const std::string& quantity);

/// Canonical `key = value` text, SI units, fixed key order. Round-trips
/// through parse_config to an identical scenario.
std::string canonical_text(const Scenario& s);
/// Canonical key/value pairs in the same order as canonical_text.
std::vector<std::pair<std::string, std::string>> canonical_entries(const Scenario& s);

/// FNV-1a 64 of canonical_text, as 16 lowercase hex digits.
std::string fingerprint(const Scenario& s);

}  // namespace dcloc
