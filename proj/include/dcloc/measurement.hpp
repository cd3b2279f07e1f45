#pragma once

// Terminal measurements: point sampling of simulator traces, white Gaussian
// noise, the CLR-voltage derivative and a finite-difference baseline.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcloc/engine.hpp"

namespace dcloc {

class MeasurementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniformly sampled multi-channel record.
struct Waveform {
  double sample_rate = 0.0;
  double t0 = 0.0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> channels;

  std::size_t size() const { return channels.empty() ? 0 : channels.front().size(); }
  double period() const { return 1.0 / sample_rate; }
  double time(std::size_t n) const { return t0 + static_cast<double>(n) / sample_rate; }
  /// Index of the first sample at or after t.
  std::size_t index_at(double t) const;

  bool has(const std::string& name) const;
  const std::vector<double>& operator[](const std::string& name) const;
  std::vector<double>& operator[](const std::string& name);
  /// Adds or replaces a channel; length must match existing channels.
  void set(const std::string& name, std::vector<double> values);
};

/// Waveform channel name -> trace probe name, in output order.
using ChannelMap = std::vector<std::pair<std::string, std::string>>;

/// Terminal-1 channels plus whichever validation channels the trace carries.
ChannelMap default_channel_map(const RawTrace& trace);

/// Point-samples (no anti-alias filter) onto a grid of the given rate.
/// u1 is recomputed as v1 - v_dc1 whenever both are present.
Waveform sample(const RawTrace& trace, double sample_rate, const ChannelMap& channel_map);

struct NoiseSpec {
  double snr_db = std::numeric_limits<double>::infinity();  // infinity disables noise
  std::uint64_t seed = 0;

  bool enabled() const { return snr_db != std::numeric_limits<double>::infinity(); }
};

/// Adds independent zero-mean Gaussian noise to every channel. The noise
/// variance of each channel is set from its mean-square value over samples
/// at or after post_fault_start.
Waveform add_wgn(const Waveform& w, const NoiseSpec& spec, double post_fault_start);

/// di/dt recovered from the CLR voltage: u / (pole_count * L).
std::vector<double> clr_derivative(std::span<const double> u, double clr_inductance, int pole_count);

/// Centered difference, one-sided at both ends.
std::vector<double> finite_difference_derivative(std::span<const double> x, double sample_rate);

/// CSV with '# key=value' metadata lines, then header 't,<channels>'.
void write_waveform_csv(std::ostream& out, const Waveform& w,
                        const std::vector<std::pair<std::string, std::string>>& metadata);
struct WaveformFile {
  Waveform waveform;
  std::map<std::string, std::string> metadata;
};
WaveformFile read_waveform_csv(std::istream& in);

/// Shortest round-trip decimal representation used by every text writer.
std::string format_number(double value);

}  // namespace dcloc
