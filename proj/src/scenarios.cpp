#include "dcloc/scenarios.hpp"

#include <cmath>
#include <stdexcept>

namespace dcloc {

const char* to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::ptp: return "PTP";
    case FaultKind::p_ptg: return "P_PTG";
    case FaultKind::n_ptg: return "N_PTG";
  }
  return "?";
}

const char* to_string(Configuration configuration) {
  return configuration == Configuration::point_to_point ? "point_to_point" : "multi_terminal";
}

FaultKind parse_fault_kind(const std::string& text) {
  if (text == "PTP" || text == "ptp") return FaultKind::ptp;
  if (text == "P_PTG" || text == "P-PTG" || text == "p_ptg") return FaultKind::p_ptg;
  if (text == "N_PTG" || text == "N-PTG" || text == "n_ptg") return FaultKind::n_ptg;
  throw std::invalid_argument("unknown fault kind '" + text + "'");
}

Configuration parse_configuration(const std::string& text) {
  if (text == "point_to_point") return Configuration::point_to_point;
  if (text == "multi_terminal") return Configuration::multi_terminal;
  throw std::invalid_argument("unknown configuration '" + text + "'");
}

namespace channel {
std::string i_dc(int terminal) { return "i_dc" + std::to_string(terminal); }
std::string v_dc(int terminal) { return "v_dc" + std::to_string(terminal); }
std::string v_bus(int terminal) { return "v" + std::to_string(terminal); }
}  // namespace channel

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void validate_terminal(const TerminalSpec& t, const std::string& label) {
  require(t.bus_capacitance > 0.0, label + ": bus capacitance must be positive");
  require(t.clr_inductance > 0.0, label + ": CLR inductance must be positive");
  require(t.grounding_resistance >= 0.0, label + ": grounding resistance must be non-negative");
  require(t.initial_voltage > 0.0, label + ": initial voltage must be positive");
}

void validate_fault(const NetworkTopology& topology, const FaultSpec& fault) {
  topology.validate();
  const double d1 = topology.line_length();
  require(fault.distance_km > 0.0 && fault.distance_km < d1,
          "fault distance must lie strictly inside (0, D1)");
  require(fault.resistance >= 0.0 && std::isfinite(fault.resistance),
          "fault resistance must be non-negative");
  require(fault.inception_time >= 0.0, "fault inception time must be non-negative");
}

// Emits the circuit pieces shared by every configuration. PTP networks are
// drawn as their single-loop equivalent (pole and return lumped, element
// values doubled); PTG networks as the faulty pole against earth.
class NetworkWriter {
 public:
  NetworkWriter(const CableSection& cable, FaultKind kind)
      : cable_(cable), kind_(kind), poles_(pole_count(kind)) {}

  Circuit& circuit() { return circuit_; }

  void terminal(int k, const TerminalSpec& spec) {
    const auto n = std::to_string(k);
    const std::string bus = "B" + n;
    const std::string cable_end = "X" + n;
    std::string reference = circuit_.ground();
    if (kind_ == FaultKind::ptp) {
      circuit_.add_capacitor("C" + n, bus, reference, spec.bus_capacitance, spec.initial_voltage);
    } else {
      // TN-S: the pole capacitor is half of the split DC link, mid-point
      // earthed through R_g.
      reference = "N" + n;
      const double sign = kind_ == FaultKind::p_ptg ? 1.0 : -1.0;
      circuit_.add_capacitor("C" + n, bus, reference, 2.0 * spec.bus_capacitance,
                             sign * spec.initial_voltage / 2.0);
      circuit_.add_resistor("Rg" + n, reference, circuit_.ground(), spec.grounding_resistance);
    }
    circuit_.add_inductor("Lclr" + n, bus, cable_end, poles_ * spec.clr_inductance);
    circuit_.probe_voltage(channel::v_bus(k), bus, reference);
    circuit_.probe_voltage(channel::v_dc(k), cable_end, reference);
    circuit_.probe_voltage("u" + n, bus, cable_end);
    circuit_.probe_current(channel::i_dc(k), "Lclr" + n);
  }

  void cable(const std::string& name, const std::string& from, const std::string& to,
             double length_km) {
    const std::string mid = "Y" + name;
    circuit_.add_resistor("Rc" + name, from, mid, poles_ * cable_.r_per_km * length_km);
    circuit_.add_inductor("Lc" + name, mid, to, poles_ * cable_.l_per_km * length_km);
  }

  void fault(const std::string& node, const FaultSpec& spec) {
    circuit_.add_switch("Sf", node, "M", spec.inception_time);
    circuit_.add_resistor("Rf", "M", circuit_.ground(), spec.resistance);
    circuit_.probe_current(channel::i_fault, "Sf");
  }

 private:
  Circuit circuit_{"gnd"};
  CableSection cable_;
  FaultKind kind_;
  double poles_;
};

Circuit build_point_to_point(const NetworkTopology& topology, const FaultSpec& fault) {
  const double d = fault.distance_km;
  NetworkWriter w(topology.faulted_section, fault.kind);
  w.terminal(1, topology.terminal_1);
  w.terminal(2, topology.terminal_2);
  w.cable("1", "X1", "F", d);
  w.cable("2", "X2", "F", topology.line_length() - d);
  w.fault("F", fault);
  return std::move(w.circuit());
}

}  // namespace

void NetworkTopology::validate() const {
  require(faulted_section.r_per_km > 0.0, "cable r must be positive");
  require(faulted_section.l_per_km > 0.0, "cable l must be positive");
  require(faulted_section.length_km > 0.0, "cable length D1 must be positive");
  validate_terminal(terminal_1, "terminal 1");
  validate_terminal(terminal_2, "terminal 2");
  if (configuration == Configuration::point_to_point) {
    require(branch_lengths_km.empty(), "point_to_point topology takes no branch lengths");
  } else {
    require(branch_lengths_km.size() == 6, "multi_terminal topology needs D2..D7");
    for (double len : branch_lengths_km) require(len > 0.0, "branch lengths must be positive");
    require(remote_terminals.size() == 4, "multi_terminal topology needs terminals for buses 3..6");
    for (std::size_t k = 0; k < remote_terminals.size(); ++k)
      validate_terminal(remote_terminals[k], "terminal " + std::to_string(k + 3));
  }
}

Circuit build_ptp_circuit(const NetworkTopology& topology, const FaultSpec& fault) {
  require(topology.configuration == Configuration::point_to_point,
          "build_ptp_circuit needs a point_to_point topology");
  require(fault.kind == FaultKind::ptp, "build_ptp_circuit needs a PTP fault");
  validate_fault(topology, fault);
  return build_point_to_point(topology, fault);
}

Circuit build_ptg_circuit(const NetworkTopology& topology, const FaultSpec& fault) {
  require(topology.configuration == Configuration::point_to_point,
          "build_ptg_circuit needs a point_to_point topology");
  require(fault.kind != FaultKind::ptp, "build_ptg_circuit needs a P_PTG or N_PTG fault");
  validate_fault(topology, fault);
  return build_point_to_point(topology, fault);
}

Circuit build_multiterminal_circuit(const NetworkTopology& topology, const FaultSpec& fault) {
  require(topology.configuration == Configuration::multi_terminal,
          "build_multiterminal_circuit needs a multi_terminal topology");
  validate_fault(topology, fault);
  const auto& len = topology.branch_lengths_km;  // D2..D7
  const double d = fault.distance_km;

  NetworkWriter w(topology.faulted_section, fault.kind);
  w.terminal(1, topology.terminal_1);
  w.terminal(2, topology.terminal_2);
  for (int k = 3; k <= 6; ++k) w.terminal(k, topology.remote_terminals[static_cast<std::size_t>(k - 3)]);
  w.cable("1a", "X1", "F", d);
  w.cable("1b", "J", "F", topology.line_length() - d);
  w.cable("2", "X2", "J", len[0]);
  w.cable("3", "X3", "J", len[1]);
  w.cable("7", "K", "J", len[5]);
  w.cable("4", "X4", "K", len[2]);
  w.cable("5", "X5", "K", len[3]);
  w.cable("6", "X6", "K", len[4]);
  w.fault("F", fault);
  return std::move(w.circuit());
}

Circuit build_circuit(const NetworkTopology& topology, const FaultSpec& fault) {
  if (topology.configuration == Configuration::multi_terminal)
    return build_multiterminal_circuit(topology, fault);
  return fault.kind == FaultKind::ptp ? build_ptp_circuit(topology, fault)
                                      : build_ptg_circuit(topology, fault);
}

double matched_grounding_resistance(const CableSection& cable, double clr_inductance) {
  return cable.r_per_km * clr_inductance / cable.l_per_km;
}

NetworkTopology default_topology(Configuration configuration) {
  NetworkTopology t;
  t.configuration = configuration;
  t.faulted_section = {0.25, 0.35e-3, 2.0};
  TerminalSpec terminal;
  terminal.bus_capacitance = 5e-3;
  terminal.clr_inductance = 1e-3;
  terminal.grounding_resistance = 0.1;
  terminal.initial_voltage = 760.0;
  t.terminal_1 = terminal;
  t.terminal_2 = terminal;
  if (configuration == Configuration::multi_terminal) {
    t.branch_lengths_km = {2.0, 1.5, 1.0, 1.0, 2.0, 0.5};
    t.remote_terminals.assign(4, terminal);
  }
  return t;
}

}  // namespace dcloc
