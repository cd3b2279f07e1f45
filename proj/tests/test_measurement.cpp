#include <sstream>

#include "doctest.h"
#include "support.hpp"

using namespace dcloc;
using namespace dcloc::test;

namespace {

RawTrace ptp_trace(double duration = kRecord) {
  return raw(ptp_topology(), fault(FaultKind::ptp, 1.0, 0.1), duration);
}

double snr_db(std::span<const double> clean, std::span<const double> noisy, std::size_t begin) {
  double ps = 0.0, pn = 0.0;
  for (std::size_t k = begin; k < clean.size(); ++k) {
    ps += clean[k] * clean[k];
    pn += (noisy[k] - clean[k]) * (noisy[k] - clean[k]);
  }
  return 10.0 * std::log10(ps / pn);
}

std::vector<double> slice(const std::vector<double>& x, std::size_t begin, std::size_t end) {
  return {x.begin() + static_cast<std::ptrdiff_t>(begin), x.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace

TEST_SUITE("measurement") {

TEST_CASE("10 MS/s from a 10 ns trace keeps every tenth point") {
  const auto tr = ptp_trace(50e-6);
  const auto w = sample(tr, 10e6, default_channel_map(tr));
  CHECK(w.size() == (tr.length() - 1) / 10 + 1);
  CHECK(w.sample_rate == 10e6);
  for (const char* name : {channel::v1, channel::v_dc1, channel::i_dc1})
    for (std::size_t k = 0; k < w.size(); ++k) REQUIRE(w[name][k] == tr[name][10 * k]);
  CHECK(w.time(w.size() - 1) == doctest::Approx(50e-6).epsilon(1e-12));
}

TEST_CASE("sampling at the internal rate is the identity") {
  const auto tr = ptp_trace(20e-6);
  const auto w = sample(tr, 1.0 / kStep, default_channel_map(tr));
  REQUIRE(w.size() == tr.length());
  for (const auto& [name, probe] : default_channel_map(tr)) {
    if (name == channel::u1) continue;
    CAPTURE(name);
    CHECK(w[name] == tr[probe]);
  }
}

TEST_CASE("sample rejects non-commensurate rates and missing probes") {
  const auto tr = ptp_trace(20e-6);
  CHECK_THROWS_AS(sample(tr, 3e6, default_channel_map(tr)), MeasurementError);
  CHECK_THROWS_AS(sample(tr, 200e6, default_channel_map(tr)), MeasurementError);
  CHECK_THROWS_AS(sample(tr, 0.0, default_channel_map(tr)), MeasurementError);
  CHECK_THROWS_AS(sample(tr, 10e6, {{"x", "no_such_probe"}}), MeasurementError);
}

TEST_CASE("u1 equals v1 - v_dc1 sample-wise") {
  const auto tr = ptp_trace(60e-6);
  const auto w = sample(tr, 10e6, default_channel_map(tr));
  const auto& u = w[channel::u1];
  const auto& v1 = w[channel::v1];
  const auto& vdc = w[channel::v_dc1];
  for (std::size_t k = 0; k < w.size(); ++k)
    REQUIRE(std::abs(u[k] - (v1[k] - vdc[k])) <= 1e-9 * std::max(std::abs(v1[k]), 1.0));
}

TEST_CASE("infinite SNR leaves the waveform unchanged") {
  const auto w = record(ptp_topology(), fault(FaultKind::ptp, 1.0, 0.1), 50e-6);
  const auto out = add_wgn(w, NoiseSpec{}, kInception);
  CHECK(out.names == w.names);
  CHECK(out.channels == w.channels);
}

TEST_CASE("noise is deterministic for a fixed seed") {
  const auto w = record(ptp_topology(), fault(FaultKind::ptp, 1.0, 0.1), 50e-6);
  const auto a = add_wgn(w, {40.0, 7}, kInception);
  const auto b = add_wgn(w, {40.0, 7}, kInception);
  const auto c = add_wgn(w, {40.0, 8}, kInception);
  CHECK(a.channels == b.channels);
  CHECK(a.channels != c.channels);
  CHECK(a.channels != w.channels);
}

TEST_CASE("realized post-fault SNR is within 1 dB of the target") {
  // 100 MS/s over 310 us gives ~3e4 post-fault samples per channel.
  const auto tr = ptp_trace();
  const auto w = sample(tr, 100e6, default_channel_map(tr));
  const auto begin = w.index_at(kInception);
  REQUIRE(w.size() - begin >= 10000);
  for (double target : {20.0, 40.0}) {
    const auto noisy = add_wgn(w, {target, 3}, kInception);
    for (const auto& name : w.names) {
      CAPTURE(target);
      CAPTURE(name);
      CHECK(std::abs(snr_db(w[name], noisy[name], begin) - target) <= 1.0);
    }
  }
}

TEST_CASE("add_wgn needs a post-fault window") {
  const auto w = record(ptp_topology(), fault(FaultKind::ptp, 1.0, 0.1), 5e-6);
  CHECK_THROWS_AS(add_wgn(w, {40.0, 1}, 1.0), MeasurementError);
}

TEST_CASE("clr_derivative arithmetic") {
  const std::vector<double> zero(16, 0.0);
  for (double v : clr_derivative(zero, 1e-3, 2)) CHECK(v == 0.0);
  const std::vector<double> u(16, 760.0);
  for (double v : clr_derivative(u, 1e-3, 2)) CHECK(v == doctest::Approx(380e3));
  for (double v : clr_derivative(u, 1e-3, 1)) CHECK(v == doctest::Approx(760e3));
  CHECK_THROWS_AS(clr_derivative(u, 0.0, 2), MeasurementError);
  CHECK_THROWS_AS(clr_derivative(u, 1e-3, 3), MeasurementError);
}

TEST_CASE("clr_derivative is linear") {
  std::vector<double> u(64), v(64), mix(64);
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k] = std::sin(0.3 * static_cast<double>(k)) * 400.0;
    v[k] = 50.0 - 1.5 * static_cast<double>(k);
  }
  const double a = -2.5, b = 0.75;
  for (std::size_t k = 0; k < u.size(); ++k) mix[k] = a * u[k] + b * v[k];
  const auto du = clr_derivative(u, 1e-3, 2);
  const auto dv = clr_derivative(v, 1e-3, 2);
  const auto dm = clr_derivative(mix, 1e-3, 2);
  for (std::size_t k = 0; k < u.size(); ++k)
    CHECK(dm[k] == doctest::Approx(a * du[k] + b * dv[k]).epsilon(1e-12));
}

TEST_CASE("finite difference of a ramp and of a constant") {
  const double fs = 10e6;
  std::vector<double> ramp(20), flat(20, 4.2);
  for (std::size_t k = 0; k < ramp.size(); ++k) ramp[k] = 3e5 * static_cast<double>(k) / fs;
  for (double v : finite_difference_derivative(ramp, fs)) CHECK(v == doctest::Approx(3e5).epsilon(1e-9));
  for (double v : finite_difference_derivative(flat, fs)) CHECK(v == 0.0);
  CHECK_THROWS_AS(finite_difference_derivative(std::vector<double>{1.0, 2.0}, fs), MeasurementError);
}

TEST_CASE("clean PTP: CLR derivative agrees with finite differences of i_dc1") {
  const auto w = record(ptp_topology(), fault(FaultKind::ptp, 1.0, 0.1));
  const auto clr = clr_derivative(w[channel::u1], ptp_topology().terminal_1.clr_inductance, 2);
  const auto fd = finite_difference_derivative(w[channel::i_dc1], w.sample_rate);
  // di/dt jumps at inception, so the centered difference is skipped there.
  const auto begin = w.index_at(kInception) + 1;
  const auto end = w.index_at(kInception + 100e-6);
  std::vector<double> diff;
  for (std::size_t k = begin; k < end; ++k) diff.push_back(fd[k] - clr[k]);
  CHECK(rms(diff) <= 0.01 * rms(slice(clr, begin, end)));
}

TEST_CASE("under 40 dB noise finite differences err more than the CLR derivative") {
  const double clr_l = ptp_topology().terminal_1.clr_inductance;
  const auto clean = record(ptp_topology(), fault(FaultKind::ptp, 1.0, 0.1));
  const auto truth = clr_derivative(clean[channel::u1], clr_l, 2);
  const auto begin = clean.index_at(kInception) + 1;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CAPTURE(seed);
    const auto noisy = add_wgn(clean, {40.0, seed}, kInception);
    const auto via_clr = clr_derivative(noisy[channel::u1], clr_l, 2);
    const auto via_fd = finite_difference_derivative(noisy[channel::i_dc1], noisy.sample_rate);
    std::vector<double> e_clr, e_fd;
    for (std::size_t k = begin; k < clean.size(); ++k) {
      e_clr.push_back(via_clr[k] - truth[k]);
      e_fd.push_back(via_fd[k] - truth[k]);
    }
    CHECK(rms(e_fd) > rms(e_clr));
  }
}

TEST_CASE("waveform CSV round trip") {
  auto w = record(ptp_topology(), fault(FaultKind::ptp, 0.3, 0.5), 30e-6);
  w = add_wgn(w, {30.0, 11}, kInception);
  std::stringstream ss;
  write_waveform_csv(ss, w, {{"fingerprint", "abc123"}, {"note", "x=y"}});
  const std::string text = ss.str();
  CHECK(text.rfind("# sample_rate=", 0) == 0);
  CHECK(text.find("\nt,v1,v_dc1,u1,i_dc1,i_dc2,v_dc2\n") != std::string::npos);

  const auto back = read_waveform_csv(ss);
  CHECK(back.metadata.at("fingerprint") == "abc123");
  CHECK(back.metadata.at("note") == "x=y");
  CHECK(back.waveform.sample_rate == w.sample_rate);
  CHECK(back.waveform.t0 == w.t0);
  CHECK(back.waveform.names == w.names);
  CHECK(back.waveform.channels == w.channels);
}

TEST_CASE("malformed waveform CSV is rejected") {
  std::istringstream no_header("# sample_rate=1\n");
  CHECK_THROWS_AS(read_waveform_csv(no_header), MeasurementError);
  std::istringstream ragged("t,a\n0,1\n1e-7\n");
  CHECK_THROWS_AS(read_waveform_csv(ragged), MeasurementError);
  std::istringstream junk("t,a\n0,1\n1e-7,zz\n");
  CHECK_THROWS_AS(read_waveform_csv(junk), MeasurementError);
}

TEST_CASE("format_number round-trips") {
  for (double v : {0.0, 1e-7, 1.0 / 3.0, -760.0, 6.02214076e23}) CHECK(std::stod(format_number(v)) == v);
}

}  // TEST_SUITE
