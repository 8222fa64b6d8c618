#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rimdpe/interference.hpp"
#include "rimdpe/rim.hpp"
#include "rimdpe/signal_synth.hpp"

using namespace rimdpe;

namespace {

std::vector<cplx> gaussian(std::size_t n, double variance, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
  std::vector<cplx> x(n);
  for (auto& v : x) v = {g(rng), g(rng)};
  return x;
}

ComplexSignal as_signal(std::vector<cplx> x, double fs = 1e6) {
  ComplexSignal s;
  s.samples = std::move(x);
  s.sample_rate = fs;
  return s;
}

}  // namespace

TEST_CASE("huber nonlinearity") {
  const double th = 2.0;
  CHECK(huber_zmnl({1.0, 0.0}, th) == cplx(1.0, 0.0));
  cplx z = std::polar(2.0 * th, oracle::kPi / 3.0);
  cplx out = huber_zmnl(z, th);
  CHECK(std::abs(out - std::polar(th, oracle::kPi / 3.0)) < 1e-15);
  CHECK(huber_zmnl({0.0, 0.0}, th) == cplx{});
}

TEST_CASE("complex signum") {
  cplx out = complex_signum_zmnl({3.0, 4.0});
  CHECK(out.real() == doctest::Approx(0.6));
  CHECK(out.imag() == doctest::Approx(0.8));
  CHECK(complex_signum_zmnl({0.0, 0.0}) == cplx{});
  for (double r : {1e-6, 0.3, 7.0, 1e6}) {
    CHECK(std::abs(complex_signum_zmnl(std::polar(r, 2.0))) == doctest::Approx(1.0));
  }
}

TEST_CASE("myriad nonlinearity") {
  const double kc = 4.0;
  CHECK(myriad_zmnl({0.0, 0.0}, kc) == cplx{});
  CHECK(std::abs(myriad_zmnl(std::polar(2.0, 0.4), kc)) == doctest::Approx(1.0));
  // Kc·r/(Kc + r²) peaks at r = √Kc.
  for (double r = 0.05; r < 40.0; r *= 1.1) {
    CHECK(std::abs(myriad_zmnl({r, 0.0}, kc)) <= 1.0 + 1e-15);
  }
  CHECK(std::abs(myriad_zmnl({1e6, 0.0}, kc)) == doctest::Approx(kc / 1e6).epsilon(1e-6));
}

TEST_CASE("MAD scale estimator") {
  std::vector<cplx> flat(1000, {2.0, 2.0});
  CHECK(estimate_sigma_mad(flat) == 0.0);
  CHECK_THROWS_AS(estimate_sigma_mad(std::vector<cplx>{}), std::invalid_argument);

  std::vector<cplx> x = gaussian(100000, 2.0, 11);
  CHECK(estimate_sigma_mad(x) == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
  CHECK(estimate_component_sigma(x) == doctest::Approx(1.0).epsilon(0.02));

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * oracle::kPi);
  for (std::size_t n = 0; n < x.size(); n += 100) x[n] = std::polar(100.0, ph(rng));
  CHECK(estimate_sigma_mad(x) == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("zmnl application") {
  ComplexSignal x = as_signal(gaussian(50000, 2.0, 21));
  CHECK(apply_zmnl(x, ZmnlSpec::identity()).samples == x.samples);

  double peak = 0.0;
  for (const cplx& v : x.samples) peak = std::max(peak, std::abs(v));
  CHECK(apply_zmnl(x, ZmnlSpec::huber(peak)).samples == x.samples);

  // Th = 1.345 σ̂ with σ̂ per component; Rayleigh tail P(|z| > Th) = e^{−Th²/2σ²}.
  ComplexSignal y = apply_zmnl(x, ZmnlSpec::huber_mad(1.345));
  double th = resolve_threshold(ZmnlSpec::huber_mad(1.345), x.samples);
  std::size_t clipped = 0;
  for (std::size_t n = 0; n < x.size(); ++n) clipped += y.samples[n] != x.samples[n];
  double fraction = static_cast<double>(clipped) / static_cast<double>(x.size());
  CHECK(fraction == doctest::Approx(std::exp(-1.345 * 1.345 / 2.0)).epsilon(0.03));
  CHECK(th == doctest::Approx(1.345 * estimate_component_sigma(x.samples)));

  CHECK_THROWS_AS(ZmnlSpec::huber(-1.0).validate(), std::invalid_argument);
}

TEST_CASE("unitary transforms") {
  ComplexSignal x = as_signal(gaussian(1000, 1.0, 31));
  ComplexSignal xf = forward_transform(x);
  auto ref = oracle::dft(x.samples);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    worst = std::max(worst, std::abs(xf.samples[k] - ref[k] / std::sqrt(1000.0)));
  }
  CHECK(worst < 1e-10);

  ComplexSignal back = inverse_transform(xf);
  double err = 0.0, e_in = 0.0, e_out = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    err += std::norm(back.samples[k] - x.samples[k]);
    e_in += std::norm(x.samples[k]);
    e_out += std::norm(xf.samples[k]);
  }
  CHECK(std::sqrt(err / 1000.0) < 1e-10);
  CHECK(e_out == doctest::Approx(e_in).epsilon(1e-10));

  ComplexSignal c = as_signal(std::vector<cplx>(256, {1.5, -0.5}));
  ComplexSignal cf = forward_transform(c);
  CHECK(std::abs(cf.samples[0] - cplx(1.5, -0.5) * 16.0) < 1e-12);
  for (std::size_t k = 1; k < 256; ++k) CHECK(std::abs(cf.samples[k]) < 1e-12);
}

TEST_CASE("RIM chains") {
  ComplexSignal x = as_signal(gaussian(4000, 0.01, 41));
  CHECK(apply_rim(x, RimConfig{}).samples == x.samples);

  SUBCASE("time-domain clipping is local") {
    const double th = 1.0;
    x.samples[1234] = std::polar(100.0 * th, 0.77);
    RimConfig rc;
    rc.chain = {{Domain::time, ZmnlSpec::huber(th)}};
    ComplexSignal y = apply_rim(x, rc);
    CHECK(std::abs(y.samples[1234] - std::polar(th, 0.77)) < 1e-12);
    for (std::size_t n = 0; n < x.size(); ++n) {
      if (n != 1234) CHECK(y.samples[n] == x.samples[n]);
    }
  }

  SUBCASE("frequency-domain clipping removes a strong CW") {
    Scenario sc;
    sc.receiver.position = geodetic_to_ecef(42.34, -71.09, 20.0);
    sc.satellites = default_constellation(sc.receiver, 7);
    sc.sample_rate = 5e6;
    sc.duration = 1e-3;
    sc.cn0_dbhz.assign(7, 44.0);
    sc.noise_variance = 2.0;
    ComplexSignal clean = synthesize(sc, std::uint64_t{7});
    ComplexSignal cw = scale_to_jn(gen_cw({300e3, 0.2, 1.0}, clean.size(), 5e6), {40.0}, 2.0);
    ComplexSignal jammed = clean;
    for (std::size_t n = 0; n < clean.size(); ++n) jammed.samples[n] += cw.samples[n];

    RimConfig fd = RimConfig::scheme("fd", ZmnlSpec::huber_mad(1.345), 5000);
    double ratio = mean_power(apply_rim(jammed, fd).samples) / mean_power(clean.samples);
    CHECK(std::abs(10.0 * std::log10(ratio)) < 3.0);
    CHECK(mean_power(jammed.samples) / mean_power(clean.samples) > 1000.0);
  }
}

TEST_CASE("scheme names") {
  ZmnlSpec z = ZmnlSpec::huber_mad();
  CHECK(RimConfig::scheme("none", z, 0).chain.empty());
  auto td = RimConfig::scheme("td", z, 0);
  REQUIRE(td.chain.size() == 1);
  CHECK(td.chain[0].domain == Domain::time);
  auto tf = RimConfig::scheme("dd-tf", z, 0);
  REQUIRE(tf.chain.size() == 2);
  CHECK(tf.chain[0].domain == Domain::time);
  CHECK(tf.chain[1].domain == Domain::frequency);
  auto ft = RimConfig::scheme("dd-ft", z, 0);
  CHECK(ft.chain[0].domain == Domain::frequency);
  CHECK(ft.chain[1].domain == Domain::time);
  CHECK_THROWS_AS(RimConfig::scheme("tdf", z, 0), std::invalid_argument);

  RimConfig three;
  three.chain = {{Domain::time, z}, {Domain::time, z}, {Domain::frequency, z}};
  CHECK_THROWS_AS(three.validate(), std::invalid_argument);
}

TEST_CASE("RIM is deterministic") {
  ComplexSignal x = as_signal(gaussian(10000, 2.0, 51));
  RimConfig rc = RimConfig::scheme("dd-tf", ZmnlSpec::huber_mad(), 5000);
  CHECK(apply_rim(x, rc).samples == apply_rim(x, rc).samples);
}
