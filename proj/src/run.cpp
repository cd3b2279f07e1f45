#include "dcloc/run.hpp"

#include <chrono>
#include <cmath>

namespace dcloc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

}  // namespace

Waveform acquire(const Scenario& s, StageTiming* timing) {
  s.validate();
  auto t = Clock::now();
  const auto trace = simulate(build_circuit(s.topology, s.fault), s.sim.duration, s.sim.step);
  if (timing) timing->simulate_s = seconds_since(t);
  t = Clock::now();
  auto w = sample(trace, s.measure.sample_rate, default_channel_map(trace));
  w = add_wgn(w, s.measure.noise, s.fault.inception_time);
  if (timing) timing->measure_s = seconds_since(t);
  return w;
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::ok: return "ok";
    case RunStatus::no_plateau: return "no_plateau";
    case RunStatus::no_trigger: return "no_trigger";
    case RunStatus::locator_error: return "locator_error";
  }
  return "?";
}

RunReport locate_waveform(const Scenario& s, const Waveform& w, LocatorResult* result) {
  RunReport r;
  r.fingerprint = fingerprint(s);
  r.true_distance_km = s.fault.distance_km;
  r.line_length_km = s.topology.line_length();
  const auto set_estimate = [&](double d_hat) {
    r.estimate_km = d_hat;
    r.absolute_error_km = std::abs(d_hat - r.true_distance_km);
    r.percent_error = 100.0 * *r.absolute_error_km / r.line_length_km;
  };
  const auto t = Clock::now();
  try {
    auto lr = locate(w, s.topology, s.fault.kind, s.locator);
    evaluate(lr, s.fault.distance_km, s.topology.line_length());
    r.plateau = lr.plateau;
    r.trigger_time = lr.trigger_time;
    set_estimate(lr.distance_estimate);
    if (result) *result = std::move(lr);
  } catch (const NoPlateauError& e) {
    r.status = RunStatus::no_plateau;
    r.message = e.what();
    if (e.best_candidate) {
      r.plateau = e.best_candidate;
      set_estimate(e.best_candidate->estimate);
    }
  } catch (const NoTriggerError& e) {
    r.status = RunStatus::no_trigger;
    r.message = e.what();
  } catch (const LocatorError& e) {
    r.status = RunStatus::locator_error;
    r.message = e.what();
  }
  r.timing.locate_s = seconds_since(t);
  return r;
}

RunReport run_scenario(const Scenario& s) {
  StageTiming timing;
  const auto w = acquire(s, &timing);
  auto r = locate_waveform(s, w);
  timing.locate_s = r.timing.locate_s;
  r.timing = timing;
  return r;
}

EstimateSeries estimate_remote_currents(const Scenario& s, const Waveform& w) {
  const auto& i1 = w[channel::i_dc1];
  const auto& topo = s.topology;
  const double d = s.fault.distance_km;
  const double d1 = topo.line_length();
  EstimateSeries out;
  if (topo.configuration == Configuration::multi_terminal) {
    std::vector<double> lengths{d1};
    lengths.insert(lengths.end(), topo.branch_lengths_km.begin(), topo.branch_lengths_km.end());
    auto e = estimate_remote_current_multiterminal(i1, d, lengths);
    for (std::size_t k = 0; k < e.currents.size(); ++k) {
      const int terminal = static_cast<int>(k) + 2;
      out.names.push_back("i_hat" + std::to_string(terminal));
      out.actual.push_back(channel::i_dc(terminal));
      out.gains.push_back(k == 0 ? e.gain : e.gain * e.sibling_ratios[k - 1]);
      out.estimates.push_back(std::move(e.currents[k]));
    }
  } else {
    RemoteEstimate e = s.fault.kind == FaultKind::ptp
                           ? estimate_remote_current_ptp(i1, d, d1)
                           : estimate_remote_current_ptg(i1, d, d1, topo.faulted_section.r_per_km,
                                                         topo.terminal_1.grounding_resistance,
                                                         topo.terminal_2.grounding_resistance);
    out.names.push_back("i_hat2");
    out.actual.push_back(channel::i_dc(2));
    out.gains.push_back(e.gain);
    out.estimates.push_back(std::move(e.current));
  }
  for (const auto& name : out.actual)
    if (!w.has(name)) throw EstimationError("waveform lacks validation channel '" + name + "'");
  return out;
}

SampleWindow post_fault_window(const Scenario& s, const Waveform& w, double span) {
  const std::size_t begin = w.index_at(s.fault.inception_time);
  const std::size_t end = w.index_at(s.fault.inception_time + span);
  return {begin, std::max(end, std::min(begin + 1, w.size()))};
}

}  // namespace dcloc
