#include "dcloc/locator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace dcloc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDegeneracyFloor = 1e-12;
constexpr double kBoundaryMargin = 1e-6;  // fraction of D1

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}
}  // namespace

const char* to_string(DerivativeSource source) {
  return source == DerivativeSource::clr_voltage ? "clr_voltage" : "finite_difference";
}

DerivativeSource parse_derivative_source(const std::string& text) {
  if (text == "clr_voltage" || text == "clr") return DerivativeSource::clr_voltage;
  if (text == "finite_difference" || text == "fd") return DerivativeSource::finite_difference;
  throw std::invalid_argument("unknown derivative source '" + text + "'");
}

void LocatorConfig::validate() const {
  if (window_samples < 2 || window_samples > 20)
    throw std::invalid_argument("window_samples must be within [2, 20]");
  if (!(trigger_threshold > 0.0)) throw std::invalid_argument("trigger threshold must be positive");
  if (!(plateau_relative_tolerance > 0.0))
    throw std::invalid_argument("plateau tolerance must be positive");
  if (!(plateau_min_duration > 0.0)) throw std::invalid_argument("plateau duration must be positive");
  if (!(analysis_span > 0.0)) throw std::invalid_argument("analysis span must be positive");
}

LocatorConfig LocatorConfig::defaults_for(const NetworkTopology& topology) {
  LocatorConfig c;
  c.trigger_threshold = 0.01 * topology.terminal_1.initial_voltage / 2.0;
  return c;
}

std::size_t detect_fault(const Waveform& w, const LocatorConfig& config) {
  const auto& u1 = w[channel::u1];
  for (std::size_t k = 0; k < u1.size(); ++k)
    if (std::abs(u1[k]) > config.trigger_threshold) return k;
  std::ostringstream os;
  os << "no sample of |u1| exceeds the trigger threshold " << config.trigger_threshold << " V";
  throw NoTriggerError(os.str());
}

AlphaBeta alpha_beta(std::span<const double> u1, std::span<const double> i1,
                     std::span<const double> v_dc1, int w) {
  if (w < 1) throw LocatorError("window must be at least one sample");
  const auto n = u1.size();
  if (i1.size() != n || v_dc1.size() != n) throw LocatorError("alpha_beta: series lengths differ");
  const auto ws = static_cast<std::size_t>(w);
  if (n < ws + 1) throw LocatorError("alpha_beta: series shorter than window + 1");
  AlphaBeta ab;
  ab.alpha.resize(n - ws);
  ab.beta.resize(n - ws);
  for (std::size_t k = 0; k + ws < n; ++k) {
    const auto m = k + ws;
    ab.alpha[k] = u1[k] * i1[m] - u1[m] * i1[k];
    ab.beta[k] = v_dc1[k] * i1[m] - v_dc1[m] * i1[k];
  }
  return ab;
}

RootTrace solve_distance_quadratic(const AlphaBeta& ab, double l_per_km, double clr, int pole_count,
                                   double line_length) {
  if (!(clr > 0.0)) throw LocatorError("CLR inductance must be positive");
  if (!(l_per_km > 0.0)) throw LocatorError("cable inductance must be positive");
  if (pole_count != 1 && pole_count != 2) throw LocatorError("pole count must be 1 or 2");
  if (ab.alpha.size() != ab.beta.size()) throw LocatorError("alpha and beta lengths differ");
  const double loop_l = pole_count * l_per_km;
  const double lm = pole_count * clr;
  const double k = loop_l / lm;
  const double d1 = line_length;

  RootTrace t;
  t.line_length = d1;
  t.alpha = ab.alpha;
  t.beta = ab.beta;
  const auto n = ab.alpha.size();
  t.root_a.assign(n, kNaN);
  t.root_b.assign(n, kNaN);
  t.valid_root.assign(n, kNaN);
  t.invalid_root.assign(n, kNaN);
  t.valid_mask.assign(n, false);

  double a_max = 0.0;
  for (double a : ab.alpha) a_max = std::max(a_max, std::abs(k * a));
  const double floor = kDegeneracyFloor * a_max;

  for (std::size_t i = 0; i < n; ++i) {
    const double a = k * ab.alpha[i];
    const double b = -(ab.beta[i] + k * d1 * ab.alpha[i]);
    const double c = d1 * ab.beta[i];
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) continue;
    if (std::abs(a) <= floor) {
      if (b != 0.0) t.root_a[i] = -c / b;
      continue;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) continue;
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q == 0.0) {
      t.root_a[i] = 0.0;
      t.root_b[i] = 0.0;
      continue;
    }
    t.root_a[i] = q / a;
    t.root_b[i] = c / q;
  }
  return t;
}

RootTrace classify_roots(RootTrace trace, double line_length) {
  const double margin = kBoundaryMargin * line_length;
  const auto admissible = [&](double x) {
    return std::isfinite(x) && x > margin && x < line_length - margin;
  };
  std::optional<double> previous;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double ra = trace.root_a[i];
    const double rb = trace.root_b[i];
    const bool ok_a = admissible(ra);
    const bool ok_b = admissible(rb);
    trace.valid_mask[i] = ok_a || ok_b;
    if (!ok_a && !ok_b) {
      trace.valid_root[i] = kNaN;
      trace.invalid_root[i] = kNaN;
      continue;
    }
    bool pick_a = ok_a;
    if (ok_a && ok_b) {
      const double ref = previous.value_or(0.5 * line_length);
      pick_a = std::abs(ra - ref) <= std::abs(rb - ref);
    }
    trace.valid_root[i] = pick_a ? ra : rb;
    trace.invalid_root[i] = pick_a ? rb : ra;
    previous = trace.valid_root[i];
  }
  return trace;
}

Plateau extract_plateau(const RootTrace& trace, const LocatorConfig& config, double sample_rate) {
  if (!(sample_rate > 0.0)) throw LocatorError("sample rate must be positive");
  const double tol = config.plateau_relative_tolerance * trace.line_length;
  const auto warmup = static_cast<std::size_t>(std::max(config.window_samples, 0));
  const double min_span = config.plateau_min_duration * sample_rate * (1.0 - 1e-9);
  const auto& x = trace.valid_root;

  std::optional<Plateau> best;     // qualifying
  std::optional<Plateau> longest;  // any duration
  const auto consider = [&](std::size_t first, std::size_t count) {
    Plateau p;
    p.first = first;
    p.count = count;
    p.t_start = trace.t_start + static_cast<double>(first) / sample_rate;
    p.t_end = trace.t_start + static_cast<double>(first + count - 1) / sample_rate;
    if (!longest || count > longest->count) longest = p;
    if (static_cast<double>(count - 1) >= min_span && (!best || count > best->count)) best = p;
  };

  // Longest window with max - min <= tol inside each run of valid indices.
  std::size_t i = warmup;
  while (i < trace.size()) {
    if (!trace.valid_mask[i]) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < trace.size() && trace.valid_mask[run_end]) ++run_end;
    std::deque<std::size_t> hi, lo;
    std::size_t left = i;
    std::size_t best_len = 0, best_left = i;
    for (std::size_t right = i; right < run_end; ++right) {
      while (!hi.empty() && x[hi.back()] <= x[right]) hi.pop_back();
      hi.push_back(right);
      while (!lo.empty() && x[lo.back()] >= x[right]) lo.pop_back();
      lo.push_back(right);
      while (x[hi.front()] - x[lo.front()] > tol) {
        ++left;
        if (hi.front() < left) hi.pop_front();
        if (lo.front() < left) lo.pop_front();
      }
      if (right - left + 1 > best_len) {
        best_len = right - left + 1;
        best_left = left;
      }
    }
    consider(best_left, best_len);
    i = run_end;
  }

  const auto finish = [&](Plateau p) {
    std::vector<double> values(x.begin() + static_cast<std::ptrdiff_t>(p.first),
                               x.begin() + static_cast<std::ptrdiff_t>(p.first + p.count));
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    p.spread = *mx - *mn;
    p.estimate = median(std::move(values));
    return p;
  };
  if (best) return finish(*best);
  std::ostringstream os;
  os << "no plateau of valid roots within " << tol << " km lasting " << config.plateau_min_duration
     << " s";
  if (longest) {
    const auto cand = finish(*longest);
    os << "; best candidate " << cand.estimate << " km over " << cand.count << " samples";
    throw NoPlateauError(os.str(), cand);
  }
  throw NoPlateauError(os.str(), std::nullopt);
}

LocatorResult locate(const Waveform& w, const NetworkTopology& topology, FaultKind fault_kind,
                     const LocatorConfig& config) {
  config.validate();
  const int poles = pole_count(fault_kind);
  const double clr = topology.terminal_1.clr_inductance;
  const double d1 = topology.line_length();
  const auto& i1 = w[channel::i_dc1];
  const auto& vdc = w[channel::v_dc1];
  const auto& u_meas = w[channel::u1];

  LocatorResult r;
  r.trigger_index = detect_fault(w, config);
  r.trigger_time = w.time(r.trigger_index);

  const auto ws = static_cast<std::size_t>(config.window_samples);
  const auto n0 = r.trigger_index;
  if (n0 + ws >= w.size()) throw LocatorError("record ends before the first full window after trigger");
  const auto span = static_cast<std::size_t>(std::llround(config.analysis_span * w.sample_rate));
  const std::size_t last = std::min(n0 + span, w.size() - 1 - ws);  // last t1 index
  const std::size_t count = last - n0 + 1 + ws;

  std::vector<double> u;
  if (config.derivative == DerivativeSource::clr_voltage) {
    u.assign(u_meas.begin() + static_cast<std::ptrdiff_t>(n0),
             u_meas.begin() + static_cast<std::ptrdiff_t>(n0 + count));
  } else {
    const auto didt = finite_difference_derivative(i1, w.sample_rate);
    u.resize(count);
    for (std::size_t k = 0; k < count; ++k) u[k] = poles * clr * didt[n0 + k];
  }
  const std::span<const double> i_s(i1.data() + n0, count);
  const std::span<const double> v_s(vdc.data() + n0, count);

  const auto ab = alpha_beta(u, i_s, v_s, config.window_samples);
  auto trace = solve_distance_quadratic(ab, topology.faulted_section.l_per_km, clr, poles, d1);
  trace = classify_roots(std::move(trace), d1);
  trace.t_start = r.trigger_time;
  r.plateau = extract_plateau(trace, config, w.sample_rate);
  r.distance_estimate = r.plateau.estimate;
  r.samples_used = r.plateau.count;
  r.root_trace = std::move(trace);
  return r;
}

void evaluate(LocatorResult& result, double true_distance_km, double line_length) {
  const double err = std::abs(result.distance_estimate - true_distance_km);
  result.absolute_error_km = err;
  result.percent_error = 100.0 * err / line_length;
}

}  // namespace dcloc
