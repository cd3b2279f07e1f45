#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dcloc/engine.hpp"
#include "dcloc/measurement.hpp"
#include "dcloc/scenarios.hpp"

namespace dcloc::test {

inline constexpr double kInception = 10e-6;
inline constexpr double kStep = 10e-9;
inline constexpr double kRecord = 310e-6;
inline constexpr double kRate = 10e6;

inline NetworkTopology ptp_topology() { return default_topology(Configuration::point_to_point); }
inline NetworkTopology mt_topology() { return default_topology(Configuration::multi_terminal); }

inline FaultSpec fault(FaultKind kind, double d, double rf, double t0 = kInception) {
  return {kind, d, rf, t0};
}

inline RawTrace raw(const NetworkTopology& t, const FaultSpec& f, double duration = kRecord,
                    double step = kStep) {
  return simulate(build_circuit(t, f), duration, step);
}

inline Waveform record(const NetworkTopology& t, const FaultSpec& f, double duration = kRecord,
                       double rate = kRate) {
  const auto tr = raw(t, f, duration);
  return sample(tr, rate, default_channel_map(tr));
}

inline double peak_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Adds a probe for every branch so the energy balance can be evaluated.
inline Circuit with_element_probes(Circuit ckt) {
  const auto branches = ckt.branches();
  for (const auto& b : branches) {
    if (b.kind == BranchKind::capacitor) ckt.probe_voltage("E_v_" + b.name, b.node_a, b.node_b);
    else ckt.probe_current("E_i_" + b.name, b.name);
  }
  return ckt;
}

// Largest |E_stored(t) + E_dissipated(t) - E_stored(0)| relative to E_stored(0).
inline double energy_drift(const Circuit& ckt, double duration, double step) {
  const auto probed = with_element_probes(ckt);
  const auto tr = simulate(probed, duration, step);
  const auto n = tr.length();
  std::vector<double> stored(n, 0.0), power(n, 0.0);
  for (const auto& b : probed.branches()) {
    switch (b.kind) {
      case BranchKind::capacitor: {
        const auto& v = tr["E_v_" + b.name];
        for (std::size_t k = 0; k < n; ++k) stored[k] += 0.5 * b.value * v[k] * v[k];
        break;
      }
      case BranchKind::inductor: {
        const auto& i = tr["E_i_" + b.name];
        for (std::size_t k = 0; k < n; ++k) stored[k] += 0.5 * b.value * i[k] * i[k];
        break;
      }
      case BranchKind::resistor: {
        const auto& i = tr["E_i_" + b.name];
        for (std::size_t k = 0; k < n; ++k) power[k] += b.value * i[k] * i[k];
        break;
      }
      case BranchKind::ideal_switch: {
        const auto& i = tr["E_i_" + b.name];
        for (std::size_t k = 0; k < n; ++k) power[k] += kSwitchOnResistance * i[k] * i[k];
        break;
      }
    }
  }
  double dissipated = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) dissipated += 0.5 * step * (power[k] + power[k - 1]);
    worst = std::max(worst, std::abs(stored[k] + dissipated - stored[0]));
  }
  return worst / stored[0];
}

}  // namespace dcloc::test
