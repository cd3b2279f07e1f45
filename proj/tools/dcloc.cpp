// dcloc: simulate, locate, sweep and estimate from the command line.
//
// Exit codes: 0 success, 1 usage or config error, 2 no plateau (or no
// trigger), 3 simulation failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "dcloc/config.hpp"
#include "dcloc/engine.hpp"
#include "dcloc/run.hpp"
#include "json.hpp"

namespace {

using dcloc::Scenario;
using json = nlohmann::ordered_json;

enum Exit { kOk = 0, kUsage = 1, kNoPlateau = 2, kSimulation = 3 };

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> sample_rate;
  std::optional<int> window;
  std::string snr_db;
  bool timing = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "scenario config file");
  cmd->add_option("--out", f.out, "output path ('-' for stdout)");
  cmd->add_option("--seed", f.seed, "noise seed");
  cmd->add_option("--sample-rate", f.sample_rate, "sample rate in Hz");
  cmd->add_option("--window", f.window, "locator window in samples");
  cmd->add_option("--snr-db", f.snr_db, "noise SNR in dB, or inf");
}

void apply_overrides(Scenario& s, const CommonFlags& f) {
  if (f.seed) s.measure.noise.seed = *f.seed;
  if (f.sample_rate) s.measure.sample_rate = *f.sample_rate;
  if (f.window) s.locator.window_samples = *f.window;
  if (!f.snr_db.empty()) s.measure.noise.snr_db = dcloc::parse_quantity(f.snr_db, "dB");
  s.validate();
}

dcloc::ConfigFile load(const CommonFlags& f) {
  if (f.config.empty()) {
    dcloc::ConfigFile c;
    c.scenario = dcloc::default_scenario(dcloc::Configuration::point_to_point);
    return c;
  }
  return dcloc::load_config(f.config);
}

// Writes to the named file, or stdout for "" and "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
      file_.open(path);
      if (!file_) throw dcloc::ConfigError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json report_json(const Scenario& s, const dcloc::RunReport& r, bool timing) {
  json j;
  j["fingerprint"] = r.fingerprint;
  j["status"] = dcloc::to_string(r.status);
  j["configuration"] = dcloc::to_string(s.topology.configuration);
  j["kind"] = dcloc::to_string(s.fault.kind);
  j["true_distance_km"] = r.true_distance_km;
  j["line_length_km"] = r.line_length_km;
  j["resistance_ohm"] = s.fault.resistance;
  j["sample_rate_hz"] = s.measure.sample_rate;
  j["snr_db"] = s.measure.noise.enabled() ? json(s.measure.noise.snr_db) : json("inf");
  j["seed"] = s.measure.noise.seed;
  j["estimate_km"] = r.estimate_km ? number(*r.estimate_km) : json(nullptr);
  j["absolute_error_km"] = r.absolute_error_km ? number(*r.absolute_error_km) : json(nullptr);
  j["percent_error"] = r.percent_error ? number(*r.percent_error) : json(nullptr);
  j["percent_error_basis"] = "100*|d_hat-d|/D1";
  j["trigger_time_s"] = r.trigger_time;
  if (r.plateau) {
    j["plateau"] = {{"t_start_s", r.plateau->t_start},
                    {"t_end_s", r.plateau->t_end},
                    {"duration_s", r.plateau->duration()},
                    {"samples", r.plateau->count},
                    {"spread_km", r.plateau->spread}};
  } else {
    j["plateau"] = nullptr;
  }
  j["locator"] = {{"window", s.locator.window_samples},
                  {"trigger_threshold_v", s.locator.trigger_threshold},
                  {"plateau_tolerance", s.locator.plateau_relative_tolerance},
                  {"plateau_min_duration_s", s.locator.plateau_min_duration},
                  {"analysis_span_s", s.locator.analysis_span},
                  {"derivative", dcloc::to_string(s.locator.derivative)}};
  if (!r.message.empty()) j["message"] = r.message;
  if (timing)
    j["timing_s"] = {{"simulate", r.timing.simulate_s},
                     {"measure", r.timing.measure_s},
                     {"locate", r.timing.locate_s}};
  return j;
}

std::vector<std::pair<std::string, std::string>> metadata(const Scenario& s) {
  std::vector<std::pair<std::string, std::string>> m{{"fingerprint", dcloc::fingerprint(s)}};
  for (const auto& [k, v] : dcloc::canonical_entries(s)) m.emplace_back("config." + k, v);
  return m;
}

// Scenario embedded in a waveform CSV by `simulate`.
std::optional<Scenario> embedded_scenario(const dcloc::WaveformFile& file) {
  std::string text;
  for (const auto& [k, v] : file.metadata)
    if (k.rfind("config.", 0) == 0) text += k.substr(7) + " = " + v + "\n";
  if (text.empty()) return std::nullopt;
  return dcloc::parse_config_text(text, "waveform metadata").scenario;
}

int cmd_simulate(const CommonFlags& f) {
  auto cfg = load(f);
  apply_overrides(cfg.scenario, f);
  const auto w = dcloc::acquire(cfg.scenario);
  Output out(f.out);
  dcloc::write_waveform_csv(out.stream(), w, metadata(cfg.scenario));
  return kOk;
}

int cmd_locate(const CommonFlags& f, const std::string& waveform_path, const std::string& root_trace_path) {
  Scenario s;
  dcloc::Waveform w;
  dcloc::StageTiming timing;
  if (!waveform_path.empty()) {
    std::ifstream in(waveform_path);
    if (!in) throw dcloc::ConfigError("cannot open waveform '" + waveform_path + "'");
    auto file = dcloc::read_waveform_csv(in);
    if (!f.config.empty()) {
      s = dcloc::load_config(f.config).scenario;
    } else if (auto embedded = embedded_scenario(file)) {
      s = *embedded;
    } else {
      throw dcloc::ConfigError("waveform carries no scenario metadata; pass --config");
    }
    if (f.sample_rate || !f.snr_db.empty() || f.seed)
      throw dcloc::ConfigError("--sample-rate, --snr-db and --seed apply only when simulating");
    w = std::move(file.waveform);
    s.measure.sample_rate = w.sample_rate;
    apply_overrides(s, f);
    for (const char* c : {dcloc::channel::u1, dcloc::channel::i_dc1, dcloc::channel::v_dc1})
      if (!w.has(c)) throw dcloc::MeasurementError(std::string("waveform lacks channel '") + c + "'");
  } else {
    s = load(f).scenario;
    apply_overrides(s, f);
    w = dcloc::acquire(s, &timing);
  }

  dcloc::LocatorResult lr;
  auto r = dcloc::locate_waveform(s, w, &lr);
  timing.locate_s = r.timing.locate_s;
  r.timing = timing;
  Output out(f.out);
  out.stream() << report_json(s, r, f.timing).dump() << '\n';

  if (!root_trace_path.empty() && r.status == dcloc::RunStatus::ok) {
    Output rt(root_trace_path);
    auto& os = rt.stream();
    const auto& t = lr.root_trace;
    os << "# fingerprint=" << r.fingerprint << '\n';
    os << "t,root_a,root_b,valid,alpha,beta\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double time = t.t_start + static_cast<double>(k) / w.sample_rate;
      os << dcloc::format_number(time) << ',' << dcloc::format_number(t.root_a[k]) << ','
         << dcloc::format_number(t.root_b[k]) << ',' << dcloc::format_number(t.valid_root[k]) << ','
         << dcloc::format_number(t.alpha[k]) << ',' << dcloc::format_number(t.beta[k]) << '\n';
    }
  }
  if (r.status != dcloc::RunStatus::ok) {
    std::cerr << "dcloc: " << dcloc::to_string(r.status) << ": " << r.message << '\n';
    return r.status == dcloc::RunStatus::locator_error ? kUsage : kNoPlateau;
  }
  return kOk;
}

int cmd_sweep(const CommonFlags& f, unsigned jobs) {
  if (f.config.empty()) throw dcloc::ConfigError("sweep needs --config");
  if (f.out.empty() || f.out == "-") throw dcloc::ConfigError("sweep needs --out <directory>");
  auto cfg = dcloc::load_config(f.config);
  if (!cfg.sweep) throw dcloc::ConfigError(f.config + ": no sweep.* keys");
  auto& sw = *cfg.sweep;
  if (f.seed) sw.seeds = {*f.seed};
  if (f.sample_rate) sw.sample_rates = {*f.sample_rate};
  if (f.window) sw.windows = {*f.window};
  if (!f.snr_db.empty()) sw.snr_db = {dcloc::parse_quantity(f.snr_db, "dB")};
  const auto runs = sw.expand(cfg.scenario);
  for (const auto& s : runs) s.validate();
  std::cerr << "dcloc sweep: " << runs.size() << " runs\n";

  std::vector<json> rows(runs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const auto& s = runs[i];
      try {
        rows[i] = report_json(s, dcloc::run_scenario(s), f.timing);
      } catch (const std::exception& e) {
        dcloc::RunReport failed;
        failed.fingerprint = dcloc::fingerprint(s);
        failed.true_distance_km = s.fault.distance_km;
        failed.line_length_km = s.topology.line_length();
        rows[i] = report_json(s, failed, false);
        rows[i]["status"] = "simulation_error";
        rows[i]["message"] = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::filesystem::create_directories(f.out);
  Output csv((std::filesystem::path(f.out) / "results.csv").string());
  Output jsonl((std::filesystem::path(f.out) / "runs.jsonl").string());
  auto& c = csv.stream();
  c << "run,fingerprint,configuration,kind,distance_km,resistance_ohm,sample_rate_hz,window,snr_db,seed,"
       "status,estimate_km,absolute_error_km,percent_error,plateau_start_s,plateau_end_s,"
       "plateau_duration_s";
  if (f.timing) c << ",simulate_s,measure_s,locate_s";
  c << '\n';
  const auto cell = [](const json& v) -> std::string {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return dcloc::format_number(v.get<double>());
    return v.dump();
  };
  std::size_t failures = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& j = rows[i];
    if (j["status"] != "ok") ++failures;
    const json& p = j["plateau"];
    c << i << ',' << cell(j["fingerprint"]) << ',' << cell(j["configuration"]) << ',' << cell(j["kind"])
      << ',' << cell(j["true_distance_km"]) << ',' << cell(j["resistance_ohm"]) << ','
      << cell(j["sample_rate_hz"]) << ',' << cell(j["locator"]["window"]) << ',' << cell(j["snr_db"]) << ','
      << cell(j["seed"]) << ',' << cell(j["status"]) << ',' << cell(j["estimate_km"]) << ','
      << cell(j["absolute_error_km"]) << ',' << cell(j["percent_error"]) << ','
      << (p.is_null() ? "" : cell(p["t_start_s"])) << ',' << (p.is_null() ? "" : cell(p["t_end_s"])) << ','
      << (p.is_null() ? "" : cell(p["duration_s"]));
    if (f.timing) {
      const bool has = j.contains("timing_s");
      c << ',' << (has ? cell(j["timing_s"]["simulate"]) : "") << ','
        << (has ? cell(j["timing_s"]["measure"]) : "") << ',' << (has ? cell(j["timing_s"]["locate"]) : "");
    }
    c << '\n';
    jsonl.stream() << j.dump() << '\n';
  }
  std::cerr << "dcloc sweep: " << runs.size() - failures << " ok, " << failures << " not ok\n";
  return kOk;
}

int cmd_estimate(const CommonFlags& f, double window_s) {
  auto cfg = load(f);
  apply_overrides(cfg.scenario, f);
  const auto& s = cfg.scenario;
  const auto w = dcloc::acquire(s);
  const auto est = dcloc::estimate_remote_currents(s, w);
  const auto window = dcloc::post_fault_window(s, w, window_s);

  auto meta = metadata(s);
  meta.emplace_back("nrmse_window_s", dcloc::format_number(window_s));
  json summary;
  summary["fingerprint"] = dcloc::fingerprint(s);
  summary["configuration"] = dcloc::to_string(s.topology.configuration);
  summary["kind"] = dcloc::to_string(s.fault.kind);
  summary["distance_km"] = s.fault.distance_km;
  summary["resistance_ohm"] = s.fault.resistance;
  summary["nrmse_window_s"] = window_s;

  dcloc::Waveform table;
  table.sample_rate = w.sample_rate;
  table.t0 = w.t0;
  table.set(dcloc::channel::i_dc1, w[dcloc::channel::i_dc1]);
  for (std::size_t k = 0; k < est.names.size(); ++k) {
    const auto diag = dcloc::estimation_diagnostics(est.estimates[k], w[est.actual[k]], window);
    const std::string suffix = est.names[k].substr(5);  // terminal number
    table.set(est.names[k], est.estimates[k]);
    table.set(est.actual[k], w[est.actual[k]]);
    table.set("eps" + suffix, diag.epsilon);
    meta.emplace_back("gain" + suffix, dcloc::format_number(est.gains[k]));
    meta.emplace_back("nrmse" + suffix, dcloc::format_number(diag.nrmse));
    summary["gain" + suffix] = est.gains[k];
    summary["nrmse" + suffix] = diag.nrmse;
  }
  Output out(f.out);
  dcloc::write_waveform_csv(out.stream(), table, meta);
  if (!f.out.empty() && f.out != "-") std::cout << summary.dump() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-terminal LVDC fault location"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, locate_flags, sweep_flags, estimate_flags;
  auto* simulate = app.add_subcommand("simulate", "simulate a scenario and write its waveform CSV");
  add_common(simulate, simulate_flags);

  std::string waveform_path, root_trace_path;
  auto* locate = app.add_subcommand("locate", "locate a fault from a waveform CSV or a config");
  add_common(locate, locate_flags);
  locate->add_option("--waveform", waveform_path, "waveform CSV written by simulate");
  locate->add_option("--root-trace", root_trace_path, "write the per-sample root trace CSV here");
  locate->add_flag("--timing", locate_flags.timing, "include wall-clock stage timing");

  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "run the cross product of a sweep config");
  add_common(sweep, sweep_flags);
  sweep->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
  sweep->add_flag("--timing", sweep_flags.timing, "include wall-clock stage timing");

  double window_s = 100e-6;
  auto* estimate = app.add_subcommand("estimate", "remote-current estimates and their NRMSE");
  add_common(estimate, estimate_flags);
  estimate->add_option("--nrmse-window", window_s, "post-fault NRMSE window in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(simulate_flags);
    if (locate->parsed()) return cmd_locate(locate_flags, waveform_path, root_trace_path);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, jobs);
    if (estimate->parsed()) return cmd_estimate(estimate_flags, window_s);
  } catch (const dcloc::CircuitError& e) {
    std::cerr << "dcloc: circuit error: " << e.what() << '\n';
    return kSimulation;
  } catch (const dcloc::SimulationError& e) {
    std::cerr << "dcloc: simulation failed: " << e.what() << '\n';
    return kSimulation;
  } catch (const std::exception& e) {
    std::cerr << "dcloc: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
