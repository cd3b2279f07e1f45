#include "dcloc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcloc {

namespace {

std::vector<double> scaled(std::span<const double> x, double gain) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [gain](double v) { return gain * v; });
  return out;
}

void check_distance(double d, double line_length) {
  if (!(line_length > 0.0)) throw EstimationError("line length must be positive");
  if (!(d > 0.0) || !(d < line_length))
    throw EstimationError("fault distance must lie strictly inside (0, D1)");
}

}  // namespace

RotvSeries rotv(std::span<const double> v_dc, std::span<const double> v_bus, double voltage_floor) {
  if (v_dc.size() != v_bus.size()) throw EstimationError("rotv: series lengths differ");
  RotvSeries out;
  out.gamma.assign(v_dc.size(), std::numeric_limits<double>::quiet_NaN());
  out.defined.assign(v_dc.size(), false);
  bool any = false;
  for (std::size_t k = 0; k < v_dc.size(); ++k) {
    if (std::abs(v_bus[k]) < voltage_floor || v_bus[k] == 0.0) continue;
    out.gamma[k] = v_dc[k] / v_bus[k];
    out.defined[k] = true;
    any = true;
  }
  if (!any) throw EstimationError("rotv: every bus-voltage sample is below the floor");
  return out;
}

double gamma_at_inception(double l_per_km, double distance_km, double clr) {
  if (!(l_per_km > 0.0) || !(distance_km > 0.0) || !(clr > 0.0))
    throw EstimationError("gamma_at_inception: inputs must be positive");
  const double ld = l_per_km * distance_km;
  return ld / (clr + ld);
}

RemoteEstimate estimate_remote_current_ptp(std::span<const double> i1, double d, double line_length) {
  check_distance(d, line_length);
  RemoteEstimate e;
  e.gain = d / (line_length - d);
  e.current = scaled(i1, e.gain);
  e.near_singular = line_length - d < 1e-3 * line_length;
  return e;
}

RemoteEstimate estimate_remote_current_ptg(std::span<const double> i1, double d, double line_length,
                                           double r_per_km, double rg1, double rg2) {
  check_distance(d, line_length);
  if (r_per_km < 0.0 || rg1 < 0.0 || rg2 < 0.0)
    throw EstimationError("resistances must be non-negative");
  const double den = r_per_km * (line_length - d) + rg2;
  if (!(den > 0.0)) throw EstimationError("remote path resistance is zero; gain undefined");
  RemoteEstimate e;
  e.gain = (r_per_km * d + rg1) / den;
  e.current = scaled(i1, e.gain);
  e.near_singular = den < 1e-3 * (r_per_km * line_length + rg1 + rg2);
  return e;
}

double multiterminal_gain(double d, std::span<const double> lengths) {
  if (lengths.size() != 7) throw EstimationError("multi-terminal estimate needs D1..D7");
  for (std::size_t k = 0; k < 6; ++k)
    if (!(lengths[k] > 0.0)) throw EstimationError("branch lengths D1..D6 must be positive");
  // D7 = 0 collapses the J-K link; the formula stays finite.
  if (!(lengths[6] >= 0.0)) throw EstimationError("branch length D7 must be non-negative");
  const double d1 = lengths[0];
  const double d2 = lengths[1];
  const double d7 = lengths[6];
  if (!(d > 0.0) || d > d1) throw EstimationError("fault distance must lie in (0, D1]");
  double bracket = 1.0 + d2 / lengths[2];
  for (std::size_t k = 3; k <= 5; ++k) bracket += d2 / (lengths[k] + d7);
  return d / (d2 + (d1 - d) * bracket);
}

MultiTerminalEstimate estimate_remote_current_multiterminal(std::span<const double> i1, double d,
                                                            std::span<const double> lengths) {
  MultiTerminalEstimate e;
  e.gain = multiterminal_gain(d, lengths);
  check_distance(d, lengths[0]);
  const double d2 = lengths[1];
  const double d7 = lengths[6];
  e.sibling_ratios = {d2 / lengths[2], d2 / (lengths[3] + d7), d2 / (lengths[4] + d7),
                      d2 / (lengths[5] + d7)};
  e.currents.push_back(scaled(i1, e.gain));
  for (double ratio : e.sibling_ratios) e.currents.push_back(scaled(i1, e.gain * ratio));
  return e;
}

EstimationDiagnostics estimation_diagnostics(std::span<const double> i_hat,
                                             std::span<const double> i_actual, SampleWindow window) {
  if (i_hat.size() != i_actual.size()) throw EstimationError("diagnostics: series lengths differ");
  if (window.end > i_hat.size() || window.begin >= window.end)
    throw EstimationError("diagnostics: empty or out-of-range window");
  EstimationDiagnostics out;
  out.epsilon.resize(i_hat.size());
  for (std::size_t k = 0; k < i_hat.size(); ++k) out.epsilon[k] = i_hat[k] - i_actual[k];
  double sum_sq = 0.0;
  double peak = 0.0;
  for (std::size_t k = window.begin; k < window.end; ++k) {
    sum_sq += out.epsilon[k] * out.epsilon[k];
    peak = std::max(peak, std::abs(i_actual[k]));
  }
  if (peak == 0.0) throw EstimationError("diagnostics: actual current is zero over the window");
  out.nrmse = std::sqrt(sum_sq / static_cast<double>(window.end - window.begin)) / peak;
  return out;
}

}  // namespace dcloc
