#pragma once

// Ratio of transient voltages and remote-terminal current estimation from
// local measurements. These take the true fault distance and serve analysis
// and validation; the locator never calls them.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace dcloc {

class EstimationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// gamma = v_dc / v_bus; NaN where |v_bus| is below the voltage floor.
struct RotvSeries {
  std::vector<double> gamma;
  std::vector<bool> defined;
};

RotvSeries rotv(std::span<const double> v_dc, std::span<const double> v_bus, double voltage_floor);

/// Initial ROTV value l*d / (L + l*d).
double gamma_at_inception(double l_per_km, double distance_km, double clr);

struct RemoteEstimate {
  double gain = 0.0;
  std::vector<double> current;
  bool near_singular = false;  // fault within 0.1 % of D1 from the remote end
};

RemoteEstimate estimate_remote_current_ptp(std::span<const double> i1, double d, double line_length);
RemoteEstimate estimate_remote_current_ptg(std::span<const double> i1, double d, double line_length,
                                           double r_per_km, double rg1, double rg2);

struct MultiTerminalEstimate {
  double gain = 0.0;                          // i_hat_2 / i_1
  std::vector<double> sibling_ratios;         // i_hat_k / i_hat_2 for k = 3..6
  std::vector<std::vector<double>> currents;  // i_hat_2 .. i_hat_6
};

/// lengths = D1..D7; D7 may be zero.
double multiterminal_gain(double d, std::span<const double> lengths);
MultiTerminalEstimate estimate_remote_current_multiterminal(std::span<const double> i1, double d,
                                                            std::span<const double> lengths);

struct SampleWindow {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

struct EstimationDiagnostics {
  std::vector<double> epsilon;  // i_hat - i_actual, full length
  double nrmse = 0.0;           // RMS(epsilon) / peak |i_actual| over the window
};

EstimationDiagnostics estimation_diagnostics(std::span<const double> i_hat,
                                             std::span<const double> i_actual, SampleWindow window);

}  // namespace dcloc
