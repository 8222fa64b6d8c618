#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rimdpe/caf.hpp"
#include "rimdpe/interference.hpp"

using namespace rimdpe;

namespace {

Scenario sky(std::size_t sats, double fs, double duration) {
  Scenario sc;
  sc.receiver.position = geodetic_to_ecef(42.34, -71.09, 20.0);
  sc.receiver.clock_bias = 3.0e-7;
  sc.satellites = default_constellation(sc.receiver, static_cast<int>(sats));
  sc.sample_rate = fs;
  sc.duration = duration;
  sc.noise_variance = 2.0;
  return sc;
}

std::array<int, 1023> oracle_chips(const PrnCode& c) {
  std::array<int, 1023> out{};
  for (int n = 0; n < 1023; ++n) out[n] = c.chips[n];
  return out;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("matched CAF of a noiseless satellite") {
  Scenario sc = sky(1, 5e6, 1e-3);
  sc.satellites[0].carrier_phase = 0.0;
  sc.satellites[0].amplitude = 0.8;
  ComplexSignal x = synthesize_noiseless(sc);
  const auto& s = sc.satellites[0];
  PrnCode code = gen_ca_code(s.prn_id);
  const double tau = delay(sc.receiver, s);
  const double fd = doppler(sc.receiver, s, sc.carrier_freq);
  const double n = static_cast<double>(x.size());

  CafValue v = caf(x, code, tau, fd);
  CHECK(std::abs(v.value) == doctest::Approx(n * 0.8).epsilon(0.005));
  CHECK(std::abs(v.value.imag()) < 1e-6 * n);

  PrnCode other = gen_ca_code(s.prn_id == 2 ? 3 : 2);
  CHECK(std::abs(caf(x, other, tau, fd).value) <= 65.0 / 1023.0 * n * 0.8 * 1.1);

  // Half a cycle of residual Doppler over the 1 ms block: |sinc| = 2/π.
  double loss = std::abs(caf(x, code, tau, fd + 500.0).value) / (n * 0.8);
  CHECK(loss == doctest::Approx(2.0 / oracle::kPi).epsilon(0.05 / 0.637));

  ComplexSignal short_x = x;
  short_x.samples.resize(100);
  CHECK_THROWS_AS(caf(short_x, code, tau, fd), std::invalid_argument);
}

TEST_CASE("robust CAF") {
  Scenario sc = sky(3, 5e6, 1e-3);
  ComplexSignal x = synthesize_noiseless(sc);
  const auto& s = sc.satellites[1];
  PrnCode code = gen_ca_code(s.prn_id);
  const double tau = delay(sc.receiver, s), fd = doppler(sc.receiver, s, sc.carrier_freq);
  CafValue plain = caf(x, code, tau, fd);
  CHECK(robust_caf(x, RimConfig{}, code, tau, fd).value == plain.value);

  double peak = 0.0;
  for (const cplx& v : x.samples) peak = std::max(peak, std::abs(v));
  RimConfig loose;
  loose.chain = {{Domain::time, ZmnlSpec::huber(2.0 * peak)}};
  CHECK(rel(robust_caf(x, loose, code, tau, fd).value, plain.value) < 1e-10);
}

TEST_CASE("frequency-domain RIM restores the CAF peak under CW") {
  Scenario sc = sky(1, 5e6, 1e-3);
  sc.cn0_dbhz = {44.0};
  std::mt19937_64 rng(3);
  const ComplexSignal clean = synthesize(sc, rng);
  ComplexSignal x = clean;
  ComplexSignal cw = scale_to_jn(gen_cw({300e3, 0.0, 1.0}, x.size(), 5e6), {40.0}, 2.0);
  for (std::size_t n = 0; n < x.size(); ++n) x.samples[n] += cw.samples[n];

  const auto& s = sc.satellites[0];
  PrnCode code = gen_ca_code(s.prn_id);
  std::vector<double> taus;
  for (int k = 0; k < 5000; ++k) taus.push_back(k / 5e6);
  const std::vector<double> dops = {doppler(sc.receiver, s, sc.carrier_freq)};
  auto peak_to_floor = [&](const ComplexSignal& y) {
    CafGrid g = caf_grid(y, code, taus, dops);
    double peak = 0.0, mean = 0.0;
    for (const cplx& v : g.values) {
      peak = std::max(peak, std::norm(v));
      mean += std::norm(v);
    }
    return peak / (mean / static_cast<double>(g.values.size()));
  };
  RimConfig fd = RimConfig::scheme("fd", ZmnlSpec::huber_mad(), 5000);
  // Interference-free, the ratio is about 1 + N·SNR_sample ≈ 26; CW at JN 40
  // buries the peak and notching most of the band costs well under 3 dB.
  const double free = peak_to_floor(clean);
  CHECK(free > 15.0);
  CHECK(peak_to_floor(x) < 0.25 * free);
  CHECK(peak_to_floor(apply_rim(x, fd)) > 0.5 * free);
}

TEST_CASE("CAF grid against the pointwise oracle") {
  Scenario sc = sky(2, 5e6, 2e-3);
  sc.cn0_dbhz = {50.0, 47.0};
  std::mt19937_64 rng(8);
  ComplexSignal x = synthesize(sc, rng);
  const auto& s = sc.satellites[0];
  PrnCode code = gen_ca_code(s.prn_id);
  auto chips = oracle_chips(code);
  const double tau0 = delay(sc.receiver, s), fd0 = doppler(sc.receiver, s, sc.carrier_freq);

  auto check_subgrid = [&](const ComplexSignal& sig, const std::vector<double>& taus,
                           const std::vector<double>& dops) {
    CafGrid g = caf_grid(sig, code, taus, dops);
    REQUIRE(g.values.size() == taus.size() * dops.size());
    double worst = 0.0;
    for (std::size_t d = 0; d < dops.size(); d += std::max<std::size_t>(1, dops.size() / 4)) {
      for (std::size_t t = 0; t < taus.size(); t += std::max<std::size_t>(1, taus.size() / 4)) {
        cplx want = oracle::caf(sig.samples, sig.sample_rate, chips, taus[t], dops[d]);
        worst = std::max(worst, std::abs(g.at(d, t) - want) / std::abs(want));
      }
    }
    return worst;
  };

  SUBCASE("full code period (circular correlation path)") {
    std::vector<double> taus;
    for (int k = 0; k < 20000; ++k) taus.push_back(k / 20e6);
    CHECK(check_subgrid(x, taus, {fd0 - 500.0, fd0, fd0 + 250.0, fd0 + 750.0}) < 1e-8);
  }
  SUBCASE("narrow window (direct path)") {
    std::vector<double> taus;
    for (int k = -2; k < 2; ++k) taus.push_back(tau0 + k * 0.37e-7);
    CHECK(check_subgrid(x, taus, {fd0 - 250.0, fd0, fd0 + 250.0, fd0 + 500.0}) < 1e-8);
  }
  SUBCASE("partial code period (pointwise path)") {
    ComplexSignal part = x;
    part.samples.resize(7500);
    std::vector<double> taus;
    for (int k = -8; k < 8; ++k) taus.push_back(tau0 + k * 1e-7);
    CHECK(check_subgrid(part, taus, {fd0, fd0 + 100.0}) < 1e-8);
  }
  SUBCASE("noiseless peak sits on the true cell") {
    ComplexSignal clean = synthesize_noiseless(sc);
    std::vector<double> taus, dops;
    for (int k = -40; k <= 40; ++k) taus.push_back(tau0 + k / 20e6);
    for (int k = -4; k <= 4; ++k) dops.push_back(fd0 + 250.0 * k);
    CafGrid g = caf_grid(clean, code, taus, dops);
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.values.size(); ++i) {
      if (std::norm(g.values[i]) > std::norm(g.values[best])) best = i;
    }
    CHECK(std::abs(static_cast<int>(best % taus.size()) - 40) <= 1);
    CHECK(std::abs(static_cast<int>(best / taus.size()) - 4) <= 1);
  }
  SUBCASE("all-zero signal") {
    ComplexSignal z = x;
    std::fill(z.samples.begin(), z.samples.end(), cplx{});
    CafGrid g = caf_grid(z, code, {0.0, 1e-6, 2e-6}, {0.0, 500.0});
    for (const cplx& v : g.values) CHECK(v == cplx{});
  }
  CHECK_THROWS_AS(caf_grid(x, code, {}, {0.0}), std::invalid_argument);
}

TEST_CASE("band-limited CAF grid against time-domain correlation") {
  // Small case so the oracle can synthesize the replica harmonic by harmonic.
  const double fs = 2e6, bw = 0.9e6;
  const long h = 900;
  Scenario sc = sky(1, fs, 2e-3);
  sc.frontend_bandwidth = bw;
  sc.cn0_dbhz = {48.0};
  std::mt19937_64 rng(4);
  ComplexSignal x = synthesize_frontend(sc, rng);
  const auto& s = sc.satellites[0];
  PrnCode code = gen_ca_code(s.prn_id);
  auto chips = oracle_chips(code);
  std::vector<cplx> coeffs;
  for (long k = -h; k <= h; ++k) coeffs.push_back(oracle::chip_fourier(chips, k));

  const double tau0 = delay(sc.receiver, s), fd0 = doppler(sc.receiver, s, sc.carrier_freq);
  const std::vector<double> taus = {tau0, tau0 + 0.13e-6, tau0 - 0.61e-6};
  const std::vector<double> dops = {fd0, fd0 + 300.0};
  CafGrid g = bandlimited_caf_grid(x, code, taus, dops, bw);
  for (std::size_t d = 0; d < dops.size(); ++d) {
    for (std::size_t t = 0; t < taus.size(); ++t) {
      cplx want{0.0, 0.0};
      for (std::size_t n = 0; n < x.size(); ++n) {
        double tn = static_cast<double>(n) / fs;
        want += x.samples[n] * std::polar(1.0, -2.0 * oracle::kPi * dops[d] * tn) *
                std::conj(oracle::bandlimited_code(coeffs, h, tn - taus[t]));
      }
      CHECK(rel(g.at(d, t), want) < 1e-9);
    }
  }
  ComplexSignal part = x;
  part.samples.resize(3000);
  CHECK_THROWS_AS(bandlimited_caf_grid(part, code, taus, dops, bw), std::invalid_argument);
  CHECK_THROWS_AS(bandlimited_caf_grid(x, code, taus, dops, 1.0e6), std::invalid_argument);
}

TEST_CASE("DPE cost") {
  // One satellite: |CAF| = N·|a| per block exactly, free of cross-PRN terms.
  Scenario lone = sky(1, 5e6, 2e-3);
  const ComplexSignal x1 = synthesize_noiseless(lone);
  const double lone_peak = 2.0 * std::pow(5000.0 * std::abs(effective_amplitude(lone, 0)), 2);
  CHECK(dpe_cost(x1, lone.receiver, lone) == doctest::Approx(lone_peak).epsilon(1e-9));
  CafOptions first;
  first.max_blocks = 1;
  CHECK(dpe_cost(x1, lone.receiver, lone, first) ==
        doctest::Approx(lone_peak / 2.0).epsilon(1e-9));

  Scenario sc = sky(7, 5e6, 2e-3);
  ComplexSignal x = synthesize_noiseless(sc);
  double expected = 0.0;
  for (std::size_t i = 0; i < sc.satellites.size(); ++i) {
    expected += 2.0 * std::pow(5000.0 * std::abs(effective_amplitude(sc, i)), 2);
  }
  const double at_truth = dpe_cost(x, sc.receiver, sc);
  // Six interfering Gold codes shift each |CAF|² by a few percent.
  CHECK(at_truth == doctest::Approx(expected).epsilon(0.1));

  ReceiverState far = sc.receiver;
  far.position += Vec3(6e3, -5e3, 5.5e3);
  CHECK(dpe_cost(x, far, sc) < 0.1 * at_truth);

  Scenario rotated = sc;
  for (auto& s : rotated.satellites) s.carrier_phase += 1.234;
  CHECK(dpe_cost(synthesize_noiseless(rotated), sc.receiver, rotated) ==
        doctest::Approx(at_truth).epsilon(1e-12));

}

TEST_CASE("fast DPE evaluator with the sampled-chip replica") {
  Scenario sc = sky(5, 5e6, 3e-3);
  sc.cn0_dbhz.assign(5, 45.0);
  std::mt19937_64 rng(13);
  ComplexSignal x = synthesize(sc, rng);
  DpeCostEvaluator ev(x, sc, sc.receiver);
  CHECK(ev.num_blocks() == 3);
  CHECK(ev(sc.receiver) == doctest::Approx(dpe_cost(x, sc.receiver, sc)).epsilon(1e-9));

  ReceiverState moved = sc.receiver;
  moved.position += Vec3(40.0, -25.0, 10.0);
  moved.clock_bias += 20.0 / kSpeedOfLight;
  CHECK(ev(moved) == doctest::Approx(dpe_cost(x, moved, sc)).epsilon(1e-6));

  DpeCostEvaluator tab(x, sc, sc.receiver);
  tab.tabulate(300.0);
  CHECK(tab.tabulated());
  for (std::size_t i = 0; i < sc.satellites.size(); ++i) {
    double tau = delay(moved, sc.satellites[i]);
    CHECK(tab.channel_power(i, moved) ==
          doctest::Approx(ev.channel_power_at(i, tau, 0.0)).epsilon(1e-9));
  }
}

TEST_CASE("fast DPE evaluator with the band-limited replica") {
  Scenario sc = sky(4, 5e6, 2e-3);
  sc.frontend_bandwidth = 2.45e6;
  sc.cn0_dbhz.assign(4, 45.0);
  std::mt19937_64 rng(14);
  ComplexSignal x = synthesize_frontend(sc, rng);
  CafOptions opt;
  opt.replica_bandwidth = 2.45e6;
  DpeCostEvaluator ev(x, sc, sc.receiver, opt);

  ReceiverState moved = sc.receiver;
  moved.position += Vec3(-31.0, 12.0, 7.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < sc.satellites.size(); ++i) {
    const auto& s = sc.satellites[i];
    PrnCode code = gen_ca_code(s.prn_id);
    const double fd = doppler(sc.receiver, s, sc.carrier_freq);
    const double tau = delay(moved, s);
    std::vector<cplx> rep = bandlimited_code_period(code, tau, 5e6, 2.45e6);
    double want = 0.0;
    for (std::size_t b = 0; b < 2; ++b) {
      cplx acc{0.0, 0.0};
      for (std::size_t m = 0; m < 5000; ++m) {
        std::size_t n = b * 5000 + m;
        acc += x.samples[n] * std::conj(rep[m]) *
               std::polar(1.0, -2.0 * oracle::kPi * fd * static_cast<double>(n) / 5e6);
      }
      want += std::norm(acc);
    }
    CHECK(ev.channel_power(i, moved) == doctest::Approx(want).epsilon(1e-9));
    peak = std::max(peak, ev.channel_power_at(i, delay(sc.receiver, s), 0.0));
  }
  CHECK_THROWS_AS((void)ev.channel_power_at(0, 1e-3, 10.0), std::invalid_argument);

  DpeCostEvaluator tab(x, sc, sc.receiver, opt);
  tab.tabulate(500.0);
  std::mt19937_64 pick(15);
  std::uniform_real_distribution<double> off(-400.0, 400.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    ReceiverState r = sc.receiver;
    r.position += Vec3(off(pick), off(pick), off(pick));
    for (std::size_t i = 0; i < sc.satellites.size(); ++i) {
      worst = std::max(worst, std::abs(tab.channel_power(i, r) - ev.channel_power(i, r)));
    }
  }
  CHECK(worst < 1e-6 * peak);

  CafOptions odd = opt;
  odd.block_samples = 7000;
  CHECK_THROWS_AS(DpeCostEvaluator(x, sc, sc.receiver, odd), std::invalid_argument);
}

TEST_CASE("block layout") {
  auto [len, count] = resolve_blocks(10000, 5e6, {});
  CHECK(len == 5000);
  CHECK(count == 2);
  CafOptions o;
  o.max_blocks = 1;
  CHECK(resolve_blocks(10000, 5e6, o).second == 1);
  o = {};
  o.block_samples = 3000;
  CHECK(resolve_blocks(10000, 5e6, o) == std::pair<std::size_t, std::size_t>{3000, 3});
}
