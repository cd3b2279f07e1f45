#pragma once

// Single-terminal fault location by consecutive-sample manipulation.
//
// The local loop obeys v_dc1 = d (r i1 + l di1/dt) + R_f K i1 with K
// constant once the remote current is written as a fixed multiple of i1.
// Taking di1/dt from the CLR voltage and evaluating the relation at
// t1 and t2 = t1 + w Ts eliminates the unknown R_f K, leaving
//
//   (l/Lm) alpha d^2 - (beta + (l D1/Lm) alpha) d + D1 beta = 0,
//   alpha = u1(t1) i1(t2) - u1(t2) i1(t1),
//   beta  = v_dc1(t1) i1(t2) - v_dc1(t2) i1(t1).
//
// The polynomial factors as ((l/Lm) alpha d - beta)(d - D1): one root is the
// remote terminal itself, the other carries the fault distance.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dcloc/measurement.hpp"
#include "dcloc/scenarios.hpp"

namespace dcloc {

class LocatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoTriggerError : public LocatorError {
 public:
  using LocatorError::LocatorError;
};

enum class DerivativeSource {
  clr_voltage,        // di/dt = u1 / Lm
  finite_difference,  // di/dt from centered differences of i1 (baseline)
};

const char* to_string(DerivativeSource source);
DerivativeSource parse_derivative_source(const std::string& text);

struct LocatorConfig {
  int window_samples = 3;
  double trigger_threshold = 3.8;           // V on |u1|
  double plateau_relative_tolerance = 0.01;  // fraction of D1
  double plateau_min_duration = 1e-6;        // s
  double analysis_span = 200e-6;             // s after trigger
  DerivativeSource derivative = DerivativeSource::clr_voltage;

  void validate() const;
  /// Trigger at 1 % of the pre-fault pole voltage of terminal 1.
  static LocatorConfig defaults_for(const NetworkTopology& topology);
};

/// First sample with |u1| above the trigger threshold.
std::size_t detect_fault(const Waveform& w, const LocatorConfig& config);

struct AlphaBeta {
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// alpha[n], beta[n] pair samples n and n + w; output length is size - w.
AlphaBeta alpha_beta(std::span<const double> u1, std::span<const double> i1,
                     std::span<const double> v_dc1, int w);

struct RootTrace {
  double t_start = 0.0;      // time of index 0 (the trigger sample in locate)
  double line_length = 0.0;  // D1, km
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> root_a;  // NaN where undefined
  std::vector<double> root_b;
  std::vector<double> valid_root;    // NaN where unclassified
  std::vector<double> invalid_root;  // the root not selected
  std::vector<bool> valid_mask;

  std::size_t size() const { return root_a.size(); }
};

/// Per-index roots of the distance quadratic. Lm = pole_count * clr and the
/// cable inductance of the loop is pole_count * l_per_km. Indices where the
/// leading coefficient is below 1e-12 of its record maximum are solved as a
/// linear equation (root_b NaN); a negative discriminant gives two NaNs.
RootTrace solve_distance_quadratic(const AlphaBeta& ab, double l_per_km, double clr, int pole_count,
                                   double line_length);

/// Valid roots lie strictly inside (0, D1); the root at D1 is the remote
/// terminal. When both roots qualify the one nearer the previous valid root
/// wins (nearer D1/2 before any history exists).
RootTrace classify_roots(RootTrace trace, double line_length);

struct Plateau {
  std::size_t first = 0;  // root-trace index
  std::size_t count = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double estimate = 0.0;  // median of the run, km
  double spread = 0.0;    // max - min over the run, km

  double duration() const { return t_end - t_start; }
};

class NoPlateauError : public LocatorError {
 public:
  NoPlateauError(const std::string& what, std::optional<Plateau> best)
      : LocatorError(what), best_candidate(best) {}
  std::optional<Plateau> best_candidate;
};

/// Longest run of valid roots whose spread stays within the tolerance and
/// whose duration reaches the minimum, ignoring runs that start inside the
/// solver warm-up (the first w samples after index 0).
Plateau extract_plateau(const RootTrace& trace, const LocatorConfig& config, double sample_rate);

struct LocatorResult {
  RootTrace root_trace;
  Plateau plateau;
  double distance_estimate = 0.0;
  std::size_t trigger_index = 0;
  double trigger_time = 0.0;
  std::size_t samples_used = 0;
  std::optional<double> absolute_error_km;
  std::optional<double> percent_error;  // 100 |d_hat - d| / D1
};

/// detect_fault -> alpha_beta -> solve -> classify -> extract_plateau, using
/// terminal-1 channels only.
LocatorResult locate(const Waveform& w, const NetworkTopology& topology, FaultKind fault_kind,
                     const LocatorConfig& config);

void evaluate(LocatorResult& result, double true_distance_km, double line_length);

}  // namespace dcloc
