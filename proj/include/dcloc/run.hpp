#pragma once

// One scenario end to end: build, simulate, sample, add noise, locate.

#include <optional>
#include <string>
#include <vector>

#include "dcloc/config.hpp"
#include "dcloc/estimator.hpp"
#include "dcloc/locator.hpp"
#include "dcloc/measurement.hpp"

namespace dcloc {

struct StageTiming {
  double simulate_s = 0.0;
  double measure_s = 0.0;
  double locate_s = 0.0;
};

/// Simulated, sampled and (if configured) noisy terminal record. The
/// waveform keeps the validation channels the scenario provides.
Waveform acquire(const Scenario& s, StageTiming* timing = nullptr);

enum class RunStatus { ok, no_plateau, no_trigger, locator_error };
const char* to_string(RunStatus status);

struct RunReport {
  std::string fingerprint;
  RunStatus status = RunStatus::ok;
  std::string message;  // diagnostics when status != ok
  double true_distance_km = 0.0;
  double line_length_km = 0.0;
  std::optional<double> estimate_km;  // plateau median, or best candidate on no_plateau
  std::optional<double> absolute_error_km;
  std::optional<double> percent_error;
  std::optional<Plateau> plateau;
  double trigger_time = 0.0;
  StageTiming timing;
};

/// Locates on an acquired waveform and fills the report. When the locator
/// finds no qualifying plateau, estimate and errors come from the longest
/// candidate run if one exists.
RunReport locate_waveform(const Scenario& s, const Waveform& w, LocatorResult* result = nullptr);

/// acquire + locate_waveform. Simulation errors propagate.
RunReport run_scenario(const Scenario& s);

/// Remote-current estimates for the scenario's configuration and fault kind.
struct EstimateSeries {
  std::vector<std::string> names;               // i_hat2 .. i_hatN
  std::vector<std::string> actual;              // matching simulated channels
  std::vector<std::vector<double>> estimates;
  std::vector<double> gains;                    // i_hat_k / i_dc1
};
EstimateSeries estimate_remote_currents(const Scenario& s, const Waveform& w);

/// Post-fault samples within `span` seconds of inception.
SampleWindow post_fault_window(const Scenario& s, const Waveform& w, double span);

}  // namespace dcloc
