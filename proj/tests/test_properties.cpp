#include <random>

#include "dcloc/estimator.hpp"
#include "dcloc/locator.hpp"
#include "doctest.h"

using namespace dcloc;

namespace {

constexpr int kTrials = 1000;

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
  std::vector<double> series(std::size_t n, double scale) {
    std::vector<double> x(n);
    for (auto& v : x) v = uniform(-scale, scale);
    return x;
  }
};

std::pair<double, double> sorted_roots(const RootTrace& t, std::size_t k) {
  double a = t.root_a[k], b = t.root_b[k];
  if (std::isnan(a) || (!std::isnan(b) && b < a)) std::swap(a, b);
  return {a, b};
}

bool close(double x, double y, double rel) {
  if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
  return std::abs(x - y) <= rel * std::max({std::abs(x), std::abs(y), 1.0});
}

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("root identity: a b = D1 (a + b - D1)") {
  Rng rng(101);
  int checked = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const double d1 = rng.uniform(0.1, 20.0);
    const double l = rng.log_uniform(1e-5, 1e-2);
    const double clr = rng.log_uniform(1e-5, 1e-1);
    const int poles = rng.integer(1, 2);
    AlphaBeta ab{{rng.uniform(-1.0, 1.0) * rng.log_uniform(1e-3, 1e6)},
                 {rng.uniform(-1.0, 1.0) * rng.log_uniform(1e-3, 1e6)}};
    const auto t = solve_distance_quadratic(ab, l, clr, poles, d1);
    const double a = t.root_a[0], b = t.root_b[0];
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    ++checked;
    const double lhs = a * b;
    const double rhs = d1 * (a + b - d1);
    CAPTURE(a);
    CAPTURE(b);
    CAPTURE(d1);
    CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max({std::abs(lhs), std::abs(rhs), d1 * d1}));
  }
  CHECK(checked == kTrials);
}

TEST_CASE("swapping t1 and t2 negates alpha and beta and keeps the roots") {
  Rng rng(202);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(8, 40));
    const int w = rng.integer(2, static_cast<int>(std::min<std::size_t>(n - 1, 20)));
    const auto u = rng.series(n, 500.0), i = rng.series(n, 2e3), v = rng.series(n, 800.0);
    std::vector<double> ur(u.rbegin(), u.rend()), ir(i.rbegin(), i.rend()), vr(v.rbegin(), v.rend());
    const auto fwd = alpha_beta(u, i, v, w);
    const auto rev = alpha_beta(ur, ir, vr, w);
    const std::size_t m = fwd.alpha.size();
    REQUIRE(rev.alpha.size() == m);
    const auto tf = solve_distance_quadratic(fwd, 0.35e-3, 1e-3, 2, 2.0);
    const auto tr = solve_distance_quadratic(rev, 0.35e-3, 1e-3, 2, 2.0);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t j = m - 1 - k;
      REQUIRE(close(rev.alpha[j], -fwd.alpha[k], 1e-12));
      REQUIRE(close(rev.beta[j], -fwd.beta[k], 1e-12));
      const auto [fa, fb] = sorted_roots(tf, k);
      const auto [ra, rb] = sorted_roots(tr, j);
      REQUIRE(close(fa, ra, 1e-9));
      REQUIRE(close(fb, rb, 1e-9));
    }
  }
}

TEST_CASE("joint scaling of u1, i1 and v_dc1 leaves the roots unchanged") {
  Rng rng(303);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = 24;
    const int w = rng.integer(2, 20);
    const double k = (rng.integer(0, 1) ? 1.0 : -1.0) * rng.log_uniform(1e-3, 1e3);
    auto u = rng.series(n, 500.0), i = rng.series(n, 2e3), v = rng.series(n, 800.0);
    const auto base = alpha_beta(u, i, v, w);
    for (std::size_t m = 0; m < n; ++m) {
      u[m] *= k;
      i[m] *= k;
      v[m] *= k;
    }
    const auto scaled = alpha_beta(u, i, v, w);
    const auto ws = static_cast<std::size_t>(w);
    // alpha and beta are differences of products; rounding is relative to the terms.
    const auto term_scale = [&](const std::vector<double>& x, std::size_t m) {
      return std::abs(x[m] * i[m + ws]) + std::abs(x[m + ws] * i[m]);
    };
    const auto tb = solve_distance_quadratic(base, 0.35e-3, 1e-3, 1, 2.0);
    const auto ts = solve_distance_quadratic(scaled, 0.35e-3, 1e-3, 1, 2.0);
    for (std::size_t m = 0; m < base.alpha.size(); ++m) {
      REQUIRE(std::abs(scaled.alpha[m] - k * k * base.alpha[m]) <= 1e-14 * term_scale(u, m));
      REQUIRE(std::abs(scaled.beta[m] - k * k * base.beta[m]) <= 1e-14 * term_scale(v, m));
      const auto [ba, bb] = sorted_roots(tb, m);
      const auto [sa, sb] = sorted_roots(ts, m);
      REQUIRE(close(ba, sa, 1e-9));
      REQUIRE(close(bb, sb, 1e-9));
    }
  }
}

TEST_CASE("PTP gain symmetry gain(d) gain(D1 - d) = 1") {
  Rng rng(404);
  const std::vector<double> one{1.0};
  for (int trial = 0; trial < kTrials; ++trial) {
    const double d1 = rng.uniform(0.1, 50.0);
    const double d = rng.uniform(0.001, 0.999) * d1;
    const double g = estimate_remote_current_ptp(one, d, d1).gain;
    const double h = estimate_remote_current_ptp(one, d1 - d, d1).gain;
    REQUIRE(g * h == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("initial ROTV lies in (0, 1), rises with d and falls with the CLR") {
  Rng rng(505);
  for (int trial = 0; trial < kTrials; ++trial) {
    const double l = rng.log_uniform(1e-5, 1e-2);
    const double clr = rng.log_uniform(1e-5, 1e-1);
    const double d = rng.log_uniform(1e-3, 100.0);
    const double g = gamma_at_inception(l, d, clr);
    REQUIRE(g > 0.0);
    REQUIRE(g < 1.0);
    REQUIRE(gamma_at_inception(l, d * 1.01, clr) > g);
    REQUIRE(gamma_at_inception(l, d, clr * 1.01) < g);
  }
}

TEST_CASE("classification never keeps a root outside (0, D1)") {
  Rng rng(606);
  for (int trial = 0; trial < kTrials; ++trial) {
    const double d1 = rng.uniform(0.5, 10.0);
    const std::size_t n = 16;
    AlphaBeta ab{rng.series(n, 1e4), rng.series(n, 1e4)};
    const auto t = classify_roots(solve_distance_quadratic(ab, 0.35e-3, 1e-3, 2, d1), d1);
    for (std::size_t k = 0; k < n; ++k) {
      if (!t.valid_mask[k]) {
        REQUIRE(std::isnan(t.valid_root[k]));
        continue;
      }
      REQUIRE(t.valid_root[k] > 0.0);
      REQUIRE(t.valid_root[k] < d1);
      REQUIRE((t.valid_root[k] == t.root_a[k] || t.valid_root[k] == t.root_b[k]));
    }
  }
}

}  // TEST_SUITE
