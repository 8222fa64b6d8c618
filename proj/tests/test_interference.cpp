#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rimdpe/interference.hpp"

using namespace rimdpe;

TEST_CASE("CW tone") {
  SUBCASE("DC") {
    ComplexSignal x = gen_cw({0.0, 0.0, 2.0}, 100, 1e6);
    for (const cplx& v : x.samples) {
      CHECK(v.real() == doctest::Approx(2.0));
      CHECK(v.imag() == doctest::Approx(0.0));
    }
  }
  SUBCASE("constant envelope") {
    ComplexSignal x = gen_cw({123.4e3, 0.7, 3.0}, 5000, 5e6);
    for (const cplx& v : x.samples) CHECK(std::abs(v) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("quarter sample rate lands in bin N/4") {
    const std::size_t n = 64;
    ComplexSignal x = gen_cw({0.25e6, 0.3, 1.0}, n, 1e6);
    auto spec = oracle::dft(x.samples);
    const double peak = std::abs(spec[n / 4]);
    CHECK(peak == doctest::Approx(static_cast<double>(n)).epsilon(1e-9));
    for (std::size_t k = 0; k < n; ++k) {
      if (k != n / 4) CHECK(std::abs(spec[k]) < 1e-10 * peak);
    }
  }
}

TEST_CASE("DME pulse pairs") {
  DmeSpec spec;
  SUBCASE("no pairs without a pair rate") {
    spec.pair_rate = 0.0;
    std::mt19937_64 rng(1);
    ComplexSignal x = gen_dme(spec, 20000, 20e6, rng);
    for (const cplx& v : x.samples) CHECK(v == cplx{});
  }
  SUBCASE("single pair geometry") {
    const double fs = 100e6;
    const double t0 = 20e-6;  // on a sample instant
    ComplexSignal x = gen_dme_pair(spec, t0, 6000, fs);
    auto idx = [&](double t) { return static_cast<std::size_t>(std::llround(t * fs)); };
    CHECK(std::abs(x.samples[idx(t0)]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(x.samples[idx(t0 + 12e-6)]) == doctest::Approx(1.0).epsilon(1e-6));

    // e^{−α t²/2} = 1/2 at t = √(2 ln 2 / α).
    const double fwhm = 2.0 * std::sqrt(2.0 * std::log(2.0) / spec.pulse_width_param);
    CHECK(fwhm == doctest::Approx(3.5e-6).epsilon(0.01));
    std::size_t above = 0;
    for (std::size_t n = 0; n < idx(t0 + 6e-6); ++n) above += std::abs(x.samples[n]) >= 0.5;
    CHECK(std::abs(static_cast<double>(above) - fwhm * fs) <= 2.0);
  }
  SUBCASE("frequency offset leaves the envelope") {
    spec.freq_offset = -450e3;
    ComplexSignal a = gen_dme_pair(spec, 10e-6, 2000, 20e6);
    spec.freq_offset = 0.0;
    ComplexSignal b = gen_dme_pair(spec, 10e-6, 2000, 20e6);
    for (std::size_t n = 0; n < a.size(); ++n) {
      CHECK(std::abs(a.samples[n]) == doctest::Approx(std::abs(b.samples[n])).epsilon(1e-12));
    }
  }
  SUBCASE("Poisson rate sets the mean energy") {
    const double fs = 4e6;
    const std::size_t n = 4000000;  // 1 s
    std::mt19937_64 rng(5);
    ComplexSignal x = gen_dme(spec, n, fs, rng);
    double energy = 0.0;
    for (const cplx& v : x.samples) energy += std::norm(v);
    // Each pulse contributes fs·∫e^{−α t²} dt = fs·√(π/α).
    double expected = spec.pair_rate * 1.0 * 2.0 * fs * std::sqrt(oracle::kPi / spec.pulse_width_param);
    CHECK(energy == doctest::Approx(expected).epsilon(0.1));
  }
  SUBCASE("seeded") {
    std::mt19937_64 a(17), b(17);
    CHECK(gen_dme(spec, 50000, 20e6, a).samples == gen_dme(spec, 50000, 20e6, b).samples);
  }
}

TEST_CASE("JN scaling") {
  ComplexSignal pair = gen_dme_pair(DmeSpec{}, 5e-6, 1000, 20e6);
  ComplexSignal a = scale_to_jn(pair, {0.0}, 1.0);
  double peak = 0.0;
  for (const cplx& v : a.samples) peak = std::max(peak, std::norm(v));
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));

  ComplexSignal b = scale_to_jn(pair, {20.0}, 2.0);
  peak = 0.0;
  for (const cplx& v : b.samples) peak = std::max(peak, std::norm(v));
  CHECK(peak == doctest::Approx(200.0).epsilon(1e-12));

  ComplexSignal cw = gen_cw({1e5, 0.0, 0.3}, 500, 5e6);
  ComplexSignal c = scale_to_jn(cw, {10.0}, 2.0);
  const double k = c.samples[0].real() / cw.samples[0].real();
  for (std::size_t n = 0; n < cw.size(); ++n) {
    CHECK(std::abs(c.samples[n] - k * cw.samples[n]) < 1e-12);
    CHECK(std::norm(c.samples[n]) == doctest::Approx(20.0).epsilon(1e-12));
  }

  ComplexSignal zero;
  zero.sample_rate = 1e6;
  zero.samples.assign(10, cplx{});
  CHECK_THROWS_AS(scale_to_jn(zero, {0.0}, 1.0), std::invalid_argument);
}

TEST_CASE("JN from a free-space link") {
  // 1 kW at 100 km on 1176.45 MHz: FSPL = 20 log10(4π d f / c) ≈ 133.86 dB.
  const double f = 1176.45e6, d = 100e3;
  const double fspl = 20.0 * std::log10(4.0 * oracle::kPi * d * f / 299792458.0);
  CHECK(fspl == doctest::Approx(133.86).epsilon(1e-4));
  CHECK(jn_from_link(30.0, d, f, -140.0) == doctest::Approx(30.0 - fspl + 140.0));
}
