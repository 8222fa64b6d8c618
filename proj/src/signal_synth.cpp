#include "rimdpe/signal_synth.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rimdpe/fft.hpp"

namespace rimdpe {

namespace {

// G2 phase-selector tap pairs (1-based stages) for PRN 1..37.
constexpr std::array<std::array<int, 2>, 37> kG2Taps{{
    {2, 6},  {3, 7},  {4, 8},  {5, 9},  {1, 9},  {2, 10}, {1, 8},  {2, 9},
    {3, 10}, {2, 3},  {3, 4},  {5, 6},  {6, 7},  {7, 8},  {8, 9},  {9, 10},
    {1, 4},  {2, 5},  {3, 6},  {4, 7},  {5, 8},  {6, 9},  {1, 3},  {4, 6},
    {5, 7},  {6, 8},  {7, 9},  {8, 10}, {1, 6},  {2, 7},  {3, 8},  {4, 9},
    {5, 10}, {4, 10}, {1, 7},  {2, 8},  {4, 10},
}};

// Chip boundaries that land within this many chips of an integer are treated
// as exactly on it, so equal times computed along different paths agree.
constexpr double kChipEpsilon = 1e-9;

}  // namespace

PrnCode gen_ca_code(int prn_id) {
  if (prn_id < 1 || prn_id > 37) {
    throw std::invalid_argument("PRN " + std::to_string(prn_id) +
                                " outside 1..37");
  }
  std::array<int, 10> g1;
  std::array<int, 10> g2;
  g1.fill(1);
  g2.fill(1);
  const auto& taps = kG2Taps[static_cast<std::size_t>(prn_id - 1)];

  PrnCode code;
  code.prn_id = prn_id;
  for (int i = 0; i < kCaCodeLength; ++i) {
    int g2i = g2[static_cast<std::size_t>(taps[0] - 1)] ^
              g2[static_cast<std::size_t>(taps[1] - 1)];
    int bit = g1[9] ^ g2i;
    code.chips[static_cast<std::size_t>(i)] = bit != 0 ? -1 : 1;

    int f1 = g1[2] ^ g1[9];
    int f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
    for (int s = 9; s > 0; --s) {
      g1[static_cast<std::size_t>(s)] = g1[static_cast<std::size_t>(s - 1)];
      g2[static_cast<std::size_t>(s)] = g2[static_cast<std::size_t>(s - 1)];
    }
    g1[0] = f1;
    g2[0] = f2;
  }
  return code;
}

int chip_index(const PrnCode& code, double t) {
  double chips = std::floor(t * code.chip_rate + kChipEpsilon);
  double wrapped = std::fmod(chips, static_cast<double>(kCaCodeLength));
  if (wrapped < 0) wrapped += kCaCodeLength;
  return static_cast<int>(wrapped);
}

int sample_code(const PrnCode& code, double delay, std::int64_t n,
                double sample_rate) {
  double t = static_cast<double>(n) / sample_rate - delay;
  return code.chips[static_cast<std::size_t>(chip_index(code, t))];
}

cplx effective_amplitude(const Scenario& scenario, std::size_t sat_index) {
  const auto& sat = scenario.satellites.at(sat_index);
  if (scenario.cn0_dbhz.empty()) return sat.amplitude;
  double power = scenario.noise_variance *
                 std::pow(10.0, scenario.cn0_dbhz[sat_index] / 10.0) /
                 scenario.sample_rate;
  return std::sqrt(power) * sat.amplitude / std::abs(sat.amplitude);
}

namespace {

// Σ_i α_i code_i(n) e^{j(2π f_{d,i} n T_s + φ_i)}, code_i(n) supplied per
// satellite by `code_of(i)`, a callable returning a function of n.
template <class CodeOf>
ComplexSignal modulate(const Scenario& scenario, CodeOf code_of) {
  const std::size_t n_samples = scenario.num_samples();
  const double fs = scenario.sample_rate;
  ComplexSignal x{std::vector<cplx>(n_samples, cplx{0.0, 0.0}), fs};

  constexpr std::size_t kAnchor = 1024;
  for (std::size_t i = 0; i < scenario.satellites.size(); ++i) {
    const auto& sat = scenario.satellites[i];
    auto code = code_of(i);
    double fd = doppler(scenario.receiver, sat, scenario.carrier_freq);
    cplx alpha = effective_amplitude(scenario, i);
    double w = 2.0 * std::numbers::pi * fd / fs;
    cplx step = std::polar(1.0, w);
    cplx rot{1.0, 0.0};
    for (std::size_t n = 0; n < n_samples; ++n) {
      if (n % kAnchor == 0) {
        // Re-anchor the phasor recursion to keep rounding drift negligible.
        double phase = std::fmod(w * static_cast<double>(n),
                                 2.0 * std::numbers::pi);
        rot = std::polar(1.0, phase + sat.carrier_phase);
      }
      x.samples[n] += alpha * code(n) * rot;
      rot *= step;
    }
  }
  return x;
}

}  // namespace

ComplexSignal synthesize_noiseless(const Scenario& scenario) {
  scenario.validate(true);
  const double fs = scenario.sample_rate;
  return modulate(scenario, [&](std::size_t i) {
    const auto& sat = scenario.satellites[i];
    PrnCode code = gen_ca_code(sat.prn_id);
    double tau = delay(scenario.receiver, sat);
    return [code, tau, fs](std::size_t n) {
      return static_cast<double>(
          sample_code(code, tau, static_cast<std::int64_t>(n), fs));
    };
  });
}

std::vector<cplx> chip_harmonics(const PrnCode& code, double bandwidth) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  const double period = kCaCodeLength / code.chip_rate;
  const auto h = static_cast<long>(std::floor(bandwidth * period + 1e-9));
  std::vector<cplx> chips(kCaCodeLength);
  for (std::size_t m = 0; m < chips.size(); ++m) chips[m] = code.chips[m];
  std::vector<cplx> chip_dft(kCaCodeLength);
  fft::forward(chips, chip_dft);

  // Harmonic k of the chip sequence's DFT times the spectrum of one
  // rectangular chip centred half a chip in.
  std::vector<cplx> out(static_cast<std::size_t>(2 * h + 1));
  const double len = kCaCodeLength;
  for (long k = -h; k <= h; ++k) {
    double x = static_cast<double>(k) / len;
    double sinc = k == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    long km = k % kCaCodeLength;
    if (km < 0) km += kCaCodeLength;
    out[static_cast<std::size_t>(k + h)] = chip_dft[static_cast<std::size_t>(km)] *
                                           (sinc / len) *
                                           std::polar(1.0, -std::numbers::pi * x);
  }
  return out;
}

std::vector<cplx> bandlimited_code_period(const PrnCode& code, double delay,
                                          double sample_rate, double bandwidth) {
  const double period = kCaCodeLength / code.chip_rate;
  const double np = period * sample_rate;
  const auto n_period = static_cast<std::size_t>(std::llround(np));
  if (n_period == 0 || std::abs(np - static_cast<double>(n_period)) > 1e-6) {
    throw std::invalid_argument(
        "band-limited synthesis needs a whole number of samples per code period");
  }
  if (!(bandwidth > 0.0) || !(bandwidth < sample_rate / 2.0)) {
    throw std::invalid_argument("front-end bandwidth must lie in (0, sample_rate/2)");
  }
  const std::vector<cplx> c = chip_harmonics(code, bandwidth);
  const auto h = static_cast<long>(c.size() / 2);
  double shift = std::fmod(delay, period);
  if (shift < 0.0) shift += period;
  std::vector<cplx> spectrum(n_period, cplx{0.0, 0.0});
  for (long k = -h; k <= h; ++k) {
    double cycles = static_cast<double>(k) * shift / period;
    cycles -= std::floor(cycles);
    long kn = k % static_cast<long>(n_period);
    if (kn < 0) kn += static_cast<long>(n_period);
    spectrum[static_cast<std::size_t>(kn)] +=
        c[static_cast<std::size_t>(k + h)] * std::polar(1.0, -2.0 * std::numbers::pi * cycles);
  }
  std::vector<cplx> out(n_period);
  fft::backward(spectrum, out);
  return out;
}

ComplexSignal synthesize_noiseless_frontend(const Scenario& scenario) {
  scenario.validate(true);
  if (!(scenario.frontend_bandwidth > 0.0)) {
    throw std::invalid_argument("scenario has no front-end bandwidth");
  }
  return modulate(scenario, [&](std::size_t i) {
    const auto& sat = scenario.satellites[i];
    auto period = std::make_shared<std::vector<cplx>>(bandlimited_code_period(
        gen_ca_code(sat.prn_id), delay(scenario.receiver, sat), scenario.sample_rate,
        scenario.frontend_bandwidth));
    return [period](std::size_t n) { return (*period)[n % period->size()]; };
  });
}

ComplexSignal synthesize_frontend(const Scenario& scenario, std::mt19937_64& rng) {
  ComplexSignal x = synthesize_noiseless_frontend(scenario);
  add_noise(x, scenario.noise_variance, rng);
  return lowpass_frontend(x, scenario.frontend_bandwidth);
}

void add_noise(ComplexSignal& x, double variance, std::mt19937_64& rng) {
  if (variance <= 0.0) return;
  std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
  for (auto& s : x.samples) {
    double re = gauss(rng);
    double im = gauss(rng);
    s += cplx{re, im};
  }
}

ComplexSignal synthesize(const Scenario& scenario, std::mt19937_64& rng) {
  ComplexSignal x = synthesize_noiseless(scenario);
  add_noise(x, scenario.noise_variance, rng);
  return x;
}

ComplexSignal synthesize(const Scenario& scenario, std::uint64_t noise_seed) {
  std::mt19937_64 rng(noise_seed);
  return synthesize(scenario, rng);
}

ComplexSignal lowpass_frontend(const ComplexSignal& x, double bandwidth) {
  if (!(bandwidth > 0.0) || !(bandwidth < x.sample_rate / 2.0)) {
    throw std::invalid_argument(
        "front-end bandwidth must lie in (0, sample_rate/2)");
  }
  const std::size_t n = x.size();
  std::vector<cplx> spectrum(n);
  fft::forward(x.samples, spectrum);
  const double df = x.sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    double f = (k <= n / 2) ? static_cast<double>(k) * df
                            : (static_cast<double>(k) - static_cast<double>(n)) * df;
    if (std::abs(f) > bandwidth) spectrum[k] = 0.0;
  }
  ComplexSignal y{std::vector<cplx>(n), x.sample_rate};
  fft::backward(spectrum, y.samples);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& s : y.samples) s *= scale;
  return y;
}

}  // namespace rimdpe
