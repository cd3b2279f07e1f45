#include "dcloc/measurement.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "dcloc/scenarios.hpp"

namespace dcloc {

std::size_t Waveform::index_at(double t) const {
  const double k = std::ceil((t - t0) * sample_rate - 1e-6);
  if (k <= 0.0) return 0;
  return std::min(size(), static_cast<std::size_t>(k));
}

bool Waveform::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& Waveform::operator[](const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw MeasurementError("waveform has no channel '" + name + "'");
  return channels[static_cast<std::size_t>(it - names.begin())];
}

std::vector<double>& Waveform::operator[](const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw MeasurementError("waveform has no channel '" + name + "'");
  return channels[static_cast<std::size_t>(it - names.begin())];
}

void Waveform::set(const std::string& name, std::vector<double> values) {
  if (!channels.empty() && values.size() != size())
    throw MeasurementError("channel '" + name + "' length differs from the waveform");
  auto it = std::find(names.begin(), names.end(), name);
  if (it != names.end()) {
    channels[static_cast<std::size_t>(it - names.begin())] = std::move(values);
  } else {
    names.push_back(name);
    channels.push_back(std::move(values));
  }
}

ChannelMap default_channel_map(const RawTrace& trace) {
  ChannelMap map;
  for (const char* c : {channel::v1, channel::v_dc1, channel::u1, channel::i_dc1})
    map.emplace_back(c, c);
  for (const char* c : {"i_dc2", channel::v_dc2, "i_dc3", "i_dc4", "i_dc5", "i_dc6"})
    if (trace.has(c)) map.emplace_back(c, c);
  return map;
}

Waveform sample(const RawTrace& trace, double sample_rate, const ChannelMap& channel_map) {
  if (!(sample_rate > 0.0)) throw MeasurementError("sample rate must be positive");
  const double ratio = 1.0 / (sample_rate * trace.internal_step);
  const double stride_f = std::round(ratio);
  if (stride_f < 1.0 || std::abs(ratio - stride_f) > 1e-9 * ratio) {
    std::ostringstream os;
    os << "sample rate " << sample_rate << " Hz is not commensurate with the internal step "
       << trace.internal_step << " s";
    throw MeasurementError(os.str());
  }
  const auto stride = static_cast<std::size_t>(stride_f);
  const std::size_t count = trace.length() == 0 ? 0 : (trace.length() - 1) / stride + 1;

  Waveform w;
  w.sample_rate = sample_rate;
  w.t0 = trace.t0;
  for (const auto& [name, probe] : channel_map) {
    if (!trace.has(probe)) throw MeasurementError("trace has no probe '" + probe + "'");
    const auto& src = trace[probe];
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = src[k * stride];
    w.set(name, std::move(out));
  }
  if (w.has(channel::v1) && w.has(channel::v_dc1)) {
    const auto& v1 = w[channel::v1];
    const auto& vdc = w[channel::v_dc1];
    std::vector<double> u(count);
    for (std::size_t k = 0; k < count; ++k) u[k] = v1[k] - vdc[k];
    w.set(channel::u1, std::move(u));
  }
  return w;
}

Waveform add_wgn(const Waveform& w, const NoiseSpec& spec, double post_fault_start) {
  if (!spec.enabled()) return w;
  const std::size_t begin = w.index_at(post_fault_start);
  if (begin >= w.size()) throw MeasurementError("post-fault window is empty");
  const double span = static_cast<double>(w.size() - begin);
  const double noise_to_signal = std::pow(10.0, -spec.snr_db / 10.0);

  Waveform out = w;
  for (std::size_t c = 0; c < out.channels.size(); ++c) {
    auto& x = out.channels[c];
    double power = 0.0;
    for (std::size_t k = begin; k < x.size(); ++k) power += x[k] * x[k];
    power /= span;
    const double sigma = std::sqrt(power * noise_to_signal);
    if (sigma == 0.0) continue;
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& v : x) v += noise(rng);
  }
  return out;
}

std::vector<double> clr_derivative(std::span<const double> u, double clr_inductance, int pole_count) {
  if (!(clr_inductance > 0.0)) throw MeasurementError("CLR inductance must be positive");
  if (pole_count != 1 && pole_count != 2) throw MeasurementError("pole count must be 1 or 2");
  const double inv = 1.0 / (pole_count * clr_inductance);
  std::vector<double> out(u.size());
  std::transform(u.begin(), u.end(), out.begin(), [inv](double x) { return x * inv; });
  return out;
}

std::vector<double> finite_difference_derivative(std::span<const double> x, double sample_rate) {
  const std::size_t n = x.size();
  if (n < 3) throw MeasurementError("finite difference needs at least 3 samples");
  std::vector<double> out(n);
  out.front() = (x[1] - x[0]) * sample_rate;
  out.back() = (x[n - 1] - x[n - 2]) * sample_rate;
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = (x[k + 1] - x[k - 1]) * sample_rate * 0.5;
  return out;
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

void write_waveform_csv(std::ostream& out, const Waveform& w,
                        const std::vector<std::pair<std::string, std::string>>& metadata) {
  out << "# sample_rate=" << format_number(w.sample_rate) << '\n';
  out << "# t0=" << format_number(w.t0) << '\n';
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
  out << 't';
  for (const auto& n : w.names) out << ',' << n;
  out << '\n';
  for (std::size_t k = 0; k < w.size(); ++k) {
    out << format_number(w.time(k));
    for (const auto& c : w.channels) out << ',' << format_number(c[k]);
    out << '\n';
  }
}

namespace {

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw MeasurementError("line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

WaveformFile read_waveform_csv(std::istream& in) {
  WaveformFile file;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<double> times;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(line.find_first_not_of("# "));
      const auto eq = body.find('=');
      if (eq != std::string::npos) file.metadata[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (header.empty()) {
      header = split_csv(line);
      if (header.empty() || header[0] != "t")
        throw MeasurementError("line " + std::to_string(lineno) + ": header must start with 't'");
      file.waveform.names.assign(header.begin() + 1, header.end());
      file.waveform.channels.resize(header.size() - 1);
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw MeasurementError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " columns");
    times.push_back(parse_double(cells[0], lineno));
    for (std::size_t c = 1; c < cells.size(); ++c)
      file.waveform.channels[c - 1].push_back(parse_double(cells[c], lineno));
  }
  if (header.empty()) throw MeasurementError("waveform CSV has no header");
  if (times.size() < 2) throw MeasurementError("waveform CSV needs at least two rows");
  auto& w = file.waveform;
  w.t0 = times.front();
  if (auto it = file.metadata.find("sample_rate"); it != file.metadata.end())
    w.sample_rate = parse_double(it->second, 0);
  else
    w.sample_rate = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  if (auto it = file.metadata.find("t0"); it != file.metadata.end()) w.t0 = parse_double(it->second, 0);
  return file;
}

}  // namespace dcloc
