#pragma once

// Simplified fault networks of a +/-380 V LVDC system: point-to-point
// pole-to-pole, point-to-point pole-to-ground, and the six-bus
// multi-terminal star. All builders return source-free discharge circuits.

#include <string>
#include <vector>

#include "dcloc/engine.hpp"

namespace dcloc {

/// Per-conductor cable constants. Lengths are in km throughout.
struct CableSection {
  double r_per_km = 0.0;  // ohm/km
  double l_per_km = 0.0;  // H/km
  double length_km = 0.0;
};

struct TerminalSpec {
  double bus_capacitance = 0.0;       // F, pole-to-pole equivalent
  double clr_inductance = 0.0;        // H per pole
  double grounding_resistance = 0.0;  // ohm, mid-point earthing
  double initial_voltage = 0.0;       // V, pole-to-pole
};

enum class FaultKind { ptp, p_ptg, n_ptg };
enum class Configuration { point_to_point, multi_terminal };

const char* to_string(FaultKind kind);
const char* to_string(Configuration configuration);
FaultKind parse_fault_kind(const std::string& text);
Configuration parse_configuration(const std::string& text);

/// Conductors carrying the fault loop: 2 for pole-to-pole, 1 otherwise.
inline int pole_count(FaultKind kind) { return kind == FaultKind::ptp ? 2 : 1; }

struct FaultSpec {
  FaultKind kind = FaultKind::ptp;
  double distance_km = 0.0;  // from terminal 1
  double resistance = 0.0;   // ohm
  double inception_time = 0.0;
};

struct NetworkTopology {
  Configuration configuration = Configuration::point_to_point;
  CableSection faulted_section;
  std::vector<double> branch_lengths_km;  // D2..D7, multi-terminal only
  TerminalSpec terminal_1;
  TerminalSpec terminal_2;
  std::vector<TerminalSpec> remote_terminals;  // buses 3..6, multi-terminal only

  double line_length() const { return faulted_section.length_km; }
  /// Throws std::invalid_argument on any violated field constraint.
  void validate() const;
};

/// Channel and probe names shared by builders, measurement and locator.
namespace channel {
inline constexpr const char* v1 = "v1";
inline constexpr const char* v_dc1 = "v_dc1";
inline constexpr const char* u1 = "u1";
inline constexpr const char* i_dc1 = "i_dc1";
inline constexpr const char* v_dc2 = "v_dc2";
inline constexpr const char* i_fault = "i_f";
std::string i_dc(int terminal);
std::string v_dc(int terminal);
std::string v_bus(int terminal);
}  // namespace channel

Circuit build_ptp_circuit(const NetworkTopology& topology, const FaultSpec& fault);
Circuit build_ptg_circuit(const NetworkTopology& topology, const FaultSpec& fault);
Circuit build_multiterminal_circuit(const NetworkTopology& topology, const FaultSpec& fault);
/// Dispatches on configuration and fault kind.
Circuit build_circuit(const NetworkTopology& topology, const FaultSpec& fault);

/// Documented defaults. Cable constants, CLR value, grounding resistance and
/// multi-terminal lengths are not published values and stay configurable.
NetworkTopology default_topology(Configuration configuration);

/// Earthing that gives the ground-return path the cable's L/R time
/// constant, r * L_n / l. Selected in configs with `rg = matched`.
double matched_grounding_resistance(const CableSection& cable, double clr_inductance);

}  // namespace dcloc
