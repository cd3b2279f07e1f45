#include "dcloc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace dcloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double prefix_scale(char c) {
  switch (c) {
    case 'p': return 1e-12;
    case 'n': return 1e-9;
    case 'u': return 1e-6;
    case 'm': return 1e-3;
    case 'k': return 1e3;
    case 'M': return 1e6;
    case 'G': return 1e9;
    default: return 0.0;
  }
}

// Scale of a single unit such as "mohm" or "km" relative to the base of the
// quantity; 0 when the unit does not belong to it.
double unit_scale(std::string unit, const std::string& base) {
  if (base == "ohm") {
    // Accept Ohm/ohm and the Omega sign.
    for (const std::string omega : {"Ohm", "Ω"}) {
      const auto at = unit.find(omega);
      if (at != std::string::npos) unit.replace(at, omega.size(), "ohm");
    }
  }
  if (unit.size() >= 2 && unit.rfind("µ", 0) == 0) unit.replace(0, 2, "u");
  if (unit == base) return 1.0;
  if (base == "km") {
    if (unit == "m") return 1e-3;
    return 0.0;
  }
  if (unit.size() == base.size() + 1 && unit.compare(1, std::string::npos, base) == 0)
    return prefix_scale(unit[0]);
  return 0.0;
}

}  // namespace

double parse_quantity(const std::string& raw, const std::string& quantity) {
  const std::string text = trim(raw);
  if (text == "inf" || text == "+inf") {
    if (quantity == "dB") return kInf;
    throw ConfigError("'" + text + "' is only allowed for dB values");
  }
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first < last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr == first) throw ConfigError("'" + text + "' is not a number");
  if (!std::isfinite(value)) throw ConfigError("'" + text + "' is not finite");
  const std::string unit = trim(std::string(ptr, last));
  if (unit.empty()) return value;
  if (quantity.empty()) throw ConfigError("'" + text + "' takes no unit");

  const auto slash = quantity.find('/');
  double scale = 0.0;
  if (slash == std::string::npos) {
    scale = unit_scale(unit, quantity);
  } else {
    const auto uslash = unit.find('/');
    if (uslash != std::string::npos) {
      const double num = unit_scale(unit.substr(0, uslash), quantity.substr(0, slash));
      const double den = unit_scale(unit.substr(uslash + 1), quantity.substr(slash + 1));
      if (num > 0.0 && den > 0.0) scale = num / den;
    }
  }
  if (!(scale > 0.0))
    throw ConfigError("unit '" + unit + "' in '" + text + "' is not a " + quantity + " unit");
  return value * scale;
}

namespace {

DistanceValue parse_distance(const std::string& raw) {
  const std::string text = trim(raw);
  if (!text.empty() && text.back() == '%') {
    const double pct = parse_quantity(text.substr(0, text.size() - 1), "");
    return {pct / 100.0, true};
  }
  return {parse_quantity(text, "km"), false};
}

double parse_fraction(const std::string& raw) {
  const std::string text = trim(raw);
  if (!text.empty() && text.back() == '%')
    return parse_quantity(text.substr(0, text.size() - 1), "") / 100.0;
  return parse_quantity(text, "");
}

long long parse_integer(const std::string& raw) {
  const std::string text = trim(raw);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("'" + text + "' is not an integer");
  return v;
}

std::uint64_t parse_seed(const std::string& raw) {
  const std::string text = trim(raw);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("'" + text + "' is not a non-negative integer");
  return v;
}

// Pending settings that depend on other keys and resolve after the whole
// file is read.
struct Pending {
  std::optional<DistanceValue> distance;
  std::optional<double> trigger;
  std::map<int, bool> matched_rg;  // terminal index -> requested
};

TerminalSpec& terminal_ref(Scenario& s, int k) {
  if (k == 1) return s.topology.terminal_1;
  if (k == 2) return s.topology.terminal_2;
  if (s.topology.configuration != Configuration::multi_terminal)
    throw ConfigError("terminal" + std::to_string(k) + " exists only in multi_terminal");
  return s.topology.remote_terminals.at(static_cast<std::size_t>(k - 3));
}

void apply_terminal_key(Scenario& s, Pending& p, int k, const std::string& field,
                        const std::string& value) {
  auto& t = terminal_ref(s, k);
  if (field == "capacitance") {
    t.bus_capacitance = parse_quantity(value, "F");
  } else if (field == "clr") {
    t.clr_inductance = parse_quantity(value, "H");
  } else if (field == "rg") {
    if (trim(value) == "matched") {
      p.matched_rg[k] = true;
    } else {
      t.grounding_resistance = parse_quantity(value, "ohm");
      p.matched_rg.erase(k);
    }
  } else if (field == "voltage") {
    t.initial_voltage = parse_quantity(value, "V");
  } else {
    throw ConfigError("unknown key");
  }
}

void apply_key(Scenario& s, Pending& p, std::optional<SweepSpec>& sweep, const std::string& key,
               const std::string& value) {
  const auto dot = key.find('.');
  const std::string group = key.substr(0, dot);
  const std::string field = dot == std::string::npos ? std::string() : key.substr(dot + 1);

  if (key == "configuration") return;  // handled in the first pass
  if (group == "cable") {
    auto& c = s.topology.faulted_section;
    if (field == "r") c.r_per_km = parse_quantity(value, "ohm/km");
    else if (field == "l") c.l_per_km = parse_quantity(value, "H/km");
    else if (field == "length") c.length_km = parse_quantity(value, "km");
    else throw ConfigError("unknown key");
    return;
  }
  if (group.rfind("terminal", 0) == 0 && group.size() == 9 && group[8] >= '1' && group[8] <= '6') {
    apply_terminal_key(s, p, group[8] - '0', field, value);
    return;
  }
  if (group == "remote") {
    if (s.topology.configuration != Configuration::multi_terminal)
      throw ConfigError("remote terminals exist only in multi_terminal");
    for (int k = 3; k <= 6; ++k) apply_terminal_key(s, p, k, field, value);
    return;
  }
  if (group == "branch") {
    if (s.topology.configuration != Configuration::multi_terminal)
      throw ConfigError("branch lengths exist only in multi_terminal");
    if (field.size() == 2 && field[0] == 'd' && field[1] >= '2' && field[1] <= '7') {
      s.topology.branch_lengths_km.at(static_cast<std::size_t>(field[1] - '2')) =
          parse_quantity(value, "km");
      return;
    }
    throw ConfigError("unknown key");
  }
  if (group == "fault") {
    if (field == "kind") {
      try {
        s.fault.kind = parse_fault_kind(trim(value));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (field == "distance") {
      p.distance = parse_distance(value);
    } else if (field == "resistance") {
      s.fault.resistance = parse_quantity(value, "ohm");
    } else if (field == "inception") {
      s.fault.inception_time = parse_quantity(value, "s");
    } else {
      throw ConfigError("unknown key");
    }
    return;
  }
  if (group == "sim") {
    if (field == "step") s.sim.step = parse_quantity(value, "s");
    else if (field == "duration") s.sim.duration = parse_quantity(value, "s");
    else throw ConfigError("unknown key");
    return;
  }
  if (group == "measure") {
    if (field == "sample_rate") s.measure.sample_rate = parse_quantity(value, "Hz");
    else if (field == "snr_db") s.measure.noise.snr_db = parse_quantity(value, "dB");
    else if (field == "seed") s.measure.noise.seed = parse_seed(value);
    else throw ConfigError("unknown key");
    return;
  }
  if (group == "locator") {
    auto& l = s.locator;
    if (field == "window") {
      l.window_samples = static_cast<int>(parse_integer(value));
    } else if (field == "trigger_threshold") {
      p.trigger = parse_quantity(value, "V");
    } else if (field == "plateau_tolerance") {
      l.plateau_relative_tolerance = parse_fraction(value);
    } else if (field == "plateau_min_duration") {
      l.plateau_min_duration = parse_quantity(value, "s");
    } else if (field == "analysis_span") {
      l.analysis_span = parse_quantity(value, "s");
    } else if (field == "derivative") {
      try {
        l.derivative = parse_derivative_source(trim(value));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else {
      throw ConfigError("unknown key");
    }
    return;
  }
  if (group == "sweep") {
    if (!sweep) sweep.emplace();
    const auto items = split_list(value);
    if (field == "kinds") {
      sweep->kinds.clear();
      for (const auto& i : items) {
        try {
          sweep->kinds.push_back(parse_fault_kind(i));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
    } else if (field == "distances") {
      sweep->distances.clear();
      for (const auto& i : items) sweep->distances.push_back(parse_distance(i));
    } else if (field == "resistances") {
      sweep->resistances.clear();
      for (const auto& i : items) sweep->resistances.push_back(parse_quantity(i, "ohm"));
    } else if (field == "sample_rates") {
      sweep->sample_rates.clear();
      for (const auto& i : items) sweep->sample_rates.push_back(parse_quantity(i, "Hz"));
    } else if (field == "windows") {
      sweep->windows.clear();
      for (const auto& i : items) sweep->windows.push_back(static_cast<int>(parse_integer(i)));
    } else if (field == "snr_db") {
      sweep->snr_db.clear();
      for (const auto& i : items) sweep->snr_db.push_back(parse_quantity(i, "dB"));
    } else if (field == "seeds") {
      sweep->seeds.clear();
      for (const auto& i : items) sweep->seeds.push_back(parse_seed(i));
    } else {
      throw ConfigError("unknown key");
    }
    return;
  }
  throw ConfigError("unknown key");
}

struct Line {
  std::size_t number;
  std::string key;
  std::string value;
};

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& key,
                       const std::string& what) {
  std::ostringstream os;
  os << source << ':' << line << ": ";
  if (!key.empty()) os << "key '" << key << "': ";
  os << what;
  throw ConfigError(os.str());
}

}  // namespace

void Scenario::validate() const {
  try {
    topology.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(fault.distance_km > 0.0) || !(fault.distance_km < topology.line_length()))
    throw ConfigError("fault.distance must lie strictly inside (0, D1)");
  if (!(fault.resistance >= 0.0)) throw ConfigError("fault.resistance must be non-negative");
  if (!(fault.inception_time >= 0.0)) throw ConfigError("fault.inception must be non-negative");
  if (!(sim.step > 0.0)) throw ConfigError("sim.step must be positive");
  if (!(sim.duration > fault.inception_time))
    throw ConfigError("sim.duration must exceed fault.inception");
  if (!(measure.sample_rate > 0.0)) throw ConfigError("measure.sample_rate must be positive");
  const double ratio = 1.0 / (measure.sample_rate * sim.step);
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError("measure.sample_rate must divide 1/sim.step");
  if (std::isnan(measure.noise.snr_db)) throw ConfigError("measure.snr_db is not a number");
  try {
    locator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("locator: ") + e.what());
  }
}

Scenario default_scenario(Configuration configuration) {
  Scenario s;
  s.topology = default_topology(configuration);
  s.fault.kind = FaultKind::ptp;
  s.fault.distance_km = 0.5 * s.topology.line_length();
  s.fault.resistance = 1e-3;
  s.fault.inception_time = 10e-6;
  s.locator = LocatorConfig::defaults_for(s.topology);
  return s;
}

void SweepSpec::validate() const {
  const auto check = [](bool empty, const char* name) {
    if (empty) throw ConfigError(std::string("sweep.") + name + " must not be empty");
  };
  check(kinds.empty(), "kinds");
  check(distances.empty(), "distances");
  check(resistances.empty(), "resistances");
  check(sample_rates.empty(), "sample_rates");
  check(windows.empty(), "windows");
  check(snr_db.empty(), "snr_db");
  check(seeds.empty(), "seeds");
}

std::size_t SweepSpec::size() const {
  return kinds.size() * distances.size() * resistances.size() * sample_rates.size() *
         windows.size() * snr_db.size() * seeds.size();
}

std::vector<Scenario> SweepSpec::expand(const Scenario& base) const {
  validate();
  std::vector<Scenario> out;
  out.reserve(size());
  const double d1 = base.topology.line_length();
  for (auto kind : kinds)
    for (const auto& d : distances)
      for (double rf : resistances)
        for (double fs : sample_rates)
          for (int w : windows)
            for (double snr : snr_db)
              for (auto seed : seeds) {
                Scenario s = base;
                s.fault.kind = kind;
                s.fault.distance_km = d.resolve(d1);
                s.fault.resistance = rf;
                s.measure.sample_rate = fs;
                s.locator.window_samples = w;
                s.measure.noise.snr_db = snr;
                s.measure.noise.seed = seed;
                out.push_back(std::move(s));
              }
  return out;
}

ConfigFile parse_config(std::istream& in, const std::string& source) {
  std::vector<Line> lines;
  std::map<std::string, std::size_t> seen;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    const auto hash = text.find('#');
    if (hash != std::string::npos) text.erase(hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(source, number, "", "expected 'key = value'");
    Line l{number, trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
    if (l.key.empty()) fail(source, number, "", "missing key");
    if (auto it = seen.find(l.key); it != seen.end())
      fail(source, number, l.key, "duplicate key (first set on line " + std::to_string(it->second) + ")");
    seen[l.key] = number;
    lines.push_back(std::move(l));
  }

  Configuration configuration = Configuration::point_to_point;
  for (const auto& l : lines) {
    if (l.key != "configuration") continue;
    try {
      configuration = parse_configuration(l.value);
    } catch (const std::invalid_argument& e) {
      fail(source, l.number, l.key, e.what());
    }
  }

  ConfigFile file;
  file.scenario = default_scenario(configuration);
  Pending pending;
  for (const auto& l : lines) {
    try {
      apply_key(file.scenario, pending, file.sweep, l.key, l.value);
    } catch (const ConfigError& e) {
      fail(source, l.number, l.key, e.what());
    } catch (const std::out_of_range&) {
      fail(source, l.number, l.key, "index out of range");
    }
  }

  auto& s = file.scenario;
  for (const auto& [k, on] : pending.matched_rg) {
    if (!on) continue;
    auto& t = terminal_ref(s, k);
    t.grounding_resistance = matched_grounding_resistance(s.topology.faulted_section, t.clr_inductance);
  }
  if (pending.distance) s.fault.distance_km = pending.distance->resolve(s.topology.line_length());
  else s.fault.distance_km = 0.5 * s.topology.line_length();
  s.locator.trigger_threshold =
      pending.trigger.value_or(LocatorConfig::defaults_for(s.topology).trigger_threshold);

  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (file.sweep) {
    auto& sw = *file.sweep;
    // Keys absent from the file sweep over the single base value.
    const auto present = [&](const char* k) { return seen.count(std::string("sweep.") + k) > 0; };
    if (!present("kinds")) sw.kinds = {s.fault.kind};
    if (!present("distances"))
      sw.distances = {pending.distance.value_or(DistanceValue{s.fault.distance_km, false})};
    if (!present("resistances")) sw.resistances = {s.fault.resistance};
    if (!present("sample_rates")) sw.sample_rates = {s.measure.sample_rate};
    if (!present("windows")) sw.windows = {s.locator.window_samples};
    if (!present("snr_db")) sw.snr_db = {s.measure.noise.snr_db};
    if (!present("seeds")) sw.seeds = {s.measure.noise.seed};
    try {
      sw.validate();
      for (const auto& run : sw.expand(s)) run.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": " + e.what());
    }
  }
  return file;
}

ConfigFile parse_config_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  return parse_config(in, source);
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

std::vector<std::pair<std::string, std::string>> canonical_entries(const Scenario& s) {
  std::vector<std::pair<std::string, std::string>> e;
  const auto num = [](double v) { return format_number(v); };
  const auto& t = s.topology;
  e.emplace_back("configuration", to_string(t.configuration));
  e.emplace_back("cable.r", num(t.faulted_section.r_per_km) + "ohm/km");
  e.emplace_back("cable.l", num(t.faulted_section.l_per_km) + "H/km");
  e.emplace_back("cable.length", num(t.faulted_section.length_km) + "km");
  const auto terminal = [&](int k, const TerminalSpec& spec) {
    const std::string p = "terminal" + std::to_string(k) + ".";
    e.emplace_back(p + "capacitance", num(spec.bus_capacitance) + "F");
    e.emplace_back(p + "clr", num(spec.clr_inductance) + "H");
    e.emplace_back(p + "rg", num(spec.grounding_resistance) + "ohm");
    e.emplace_back(p + "voltage", num(spec.initial_voltage) + "V");
  };
  terminal(1, t.terminal_1);
  terminal(2, t.terminal_2);
  for (std::size_t k = 0; k < t.remote_terminals.size(); ++k)
    terminal(static_cast<int>(k) + 3, t.remote_terminals[k]);
  for (std::size_t k = 0; k < t.branch_lengths_km.size(); ++k)
    e.emplace_back("branch.d" + std::to_string(k + 2), num(t.branch_lengths_km[k]) + "km");
  e.emplace_back("fault.kind", to_string(s.fault.kind));
  e.emplace_back("fault.distance", num(s.fault.distance_km) + "km");
  e.emplace_back("fault.resistance", num(s.fault.resistance) + "ohm");
  e.emplace_back("fault.inception", num(s.fault.inception_time) + "s");
  e.emplace_back("sim.step", num(s.sim.step) + "s");
  e.emplace_back("sim.duration", num(s.sim.duration) + "s");
  e.emplace_back("measure.sample_rate", num(s.measure.sample_rate) + "Hz");
  e.emplace_back("measure.snr_db", s.measure.noise.enabled() ? num(s.measure.noise.snr_db) + "dB" : "inf");
  e.emplace_back("measure.seed", std::to_string(s.measure.noise.seed));
  e.emplace_back("locator.window", std::to_string(s.locator.window_samples));
  e.emplace_back("locator.trigger_threshold", num(s.locator.trigger_threshold) + "V");
  e.emplace_back("locator.plateau_tolerance", num(s.locator.plateau_relative_tolerance));
  e.emplace_back("locator.plateau_min_duration", num(s.locator.plateau_min_duration) + "s");
  e.emplace_back("locator.analysis_span", num(s.locator.analysis_span) + "s");
  e.emplace_back("locator.derivative", to_string(s.locator.derivative));
  return e;
}

std::string canonical_text(const Scenario& s) {
  std::string out;
  for (const auto& [k, v] : canonical_entries(s)) out += k + " = " + v + "\n";
  return out;
}

std::string fingerprint(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text(s)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dcloc
