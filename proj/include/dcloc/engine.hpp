#pragma once

// Fixed-step transient simulation of linear R/L/C networks with ideal
// switch events. Nodal formulation with trapezoidal companion models.

#include <cstddef>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcloc {

class CircuitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BranchKind { resistor, inductor, capacitor, ideal_switch };

const char* to_string(BranchKind kind);

struct Branch {
  BranchKind kind = BranchKind::resistor;
  std::string name;
  std::string node_a;
  std::string node_b;
  double value = 0.0;          // ohm, henry or farad; unused for switches
  double initial_state = 0.0;  // inductor current a->b, or capacitor voltage v_a - v_b
  double close_time = std::numeric_limits<double>::infinity();  // switches only
};

struct VoltageProbe {
  std::string name;
  std::string node_pos;
  std::string node_neg;
};

struct CurrentProbe {
  std::string name;
  std::string branch;  // positive from node_a to node_b
};

/// A netlist over named nodes. One node is the reference (ground).
class Circuit {
 public:
  explicit Circuit(std::string ground = "0") : ground_(std::move(ground)) {}

  Circuit& add_resistor(std::string name, std::string a, std::string b, double ohms);
  Circuit& add_inductor(std::string name, std::string a, std::string b, double henry,
                        double initial_current = 0.0);
  Circuit& add_capacitor(std::string name, std::string a, std::string b, double farad,
                         double initial_voltage = 0.0);
  Circuit& add_switch(std::string name, std::string a, std::string b, double close_time);
  Circuit& add_branch(Branch branch);

  Circuit& probe_voltage(std::string name, std::string pos, std::string neg);
  Circuit& probe_current(std::string name, std::string branch);

  const std::string& ground() const { return ground_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<VoltageProbe>& voltage_probes() const { return voltage_probes_; }
  const std::vector<CurrentProbe>& current_probes() const { return current_probes_; }

  const Branch* find_branch(const std::string& name) const;
  std::vector<std::string> nodes() const;  // sorted, includes ground

 private:
  std::string ground_;
  std::vector<Branch> branches_;
  std::vector<VoltageProbe> voltage_probes_;
  std::vector<CurrentProbe> current_probes_;
};

/// Probe records on the internal time grid t0 + n * internal_step.
struct RawTrace {
  double internal_step = 0.0;
  double t0 = 0.0;
  double duration = 0.0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> samples;

  std::size_t length() const { return samples.empty() ? 0 : samples.front().size(); }
  double time(std::size_t n) const { return t0 + static_cast<double>(n) * internal_step; }
  bool has(const std::string& name) const;
  const std::vector<double>& operator[](const std::string& name) const;
};

/// Closed switches are modeled by this resistance.
inline constexpr double kSwitchOnResistance = 1e-6;

/// Assembled network ready for stepping. Immutable once built; simulate()
/// owns all mutable state so one system may be stepped from several threads.
class TransientSystem {
 public:
  static TransientSystem assemble(const Circuit& circuit);

  /// Integrate over [t_start, t_start + duration]. Switch closures are
  /// snapped to the nearest grid instant; the sample at that instant holds
  /// the pre-closure values.
  RawTrace simulate(double duration, double internal_step, double t_start = 0.0) const;

  std::size_t node_count() const;  // excluding ground
  /// Independent capacitor voltages plus independent inductor currents,
  /// counted for the topology with every switch closed.
  std::size_t state_dimension() const;

  ~TransientSystem();
  TransientSystem(TransientSystem&&) noexcept;
  TransientSystem& operator=(TransientSystem&&) noexcept;

 private:
  struct Impl;
  explicit TransientSystem(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

inline RawTrace simulate(const Circuit& circuit, double duration, double internal_step,
                         double t_start = 0.0) {
  return TransientSystem::assemble(circuit).simulate(duration, internal_step, t_start);
}

}  // namespace dcloc
