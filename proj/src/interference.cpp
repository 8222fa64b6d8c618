#include "rimdpe/interference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rimdpe/constellation.hpp"

namespace rimdpe {

namespace {

// Pulses are evaluated out to this many standard deviations of g(t).
constexpr double kPulseSupportSigmas = 8.0;

void add_pulse(std::vector<cplx>& out, const DmeSpec& spec, double center,
               double sample_rate) {
  const double sigma_t = 1.0 / std::sqrt(spec.pulse_width_param);
  const double half = kPulseSupportSigmas * sigma_t;
  const auto n_samples = static_cast<double>(out.size());
  double first = std::max(0.0, std::ceil((center - half) * sample_rate));
  double last = std::min(n_samples - 1.0, std::floor((center + half) * sample_rate));
  for (double n = first; n <= last; n += 1.0) {
    double t = n / sample_rate;
    double dt = t - center;
    double env = spec.amplitude * std::exp(-0.5 * spec.pulse_width_param * dt * dt);
    double phase = 2.0 * std::numbers::pi * spec.freq_offset * t;
    out[static_cast<std::size_t>(n)] += std::polar(env, phase);
  }
}

void check_dme(const DmeSpec& spec) {
  if (!(spec.pair_spacing > 0.0) || !(spec.pair_rate >= 0.0) ||
      !(spec.amplitude >= 0.0) || !(spec.pulse_width_param > 0.0)) {
    throw std::invalid_argument("invalid DME specification");
  }
}

}  // namespace

ComplexSignal gen_cw(const CwSpec& spec, std::size_t n_samples,
                     double sample_rate) {
  if (!(spec.amplitude >= 0.0)) {
    throw std::invalid_argument("CW amplitude must be non-negative");
  }
  if (!(std::abs(spec.freq_offset) < sample_rate / 2.0)) {
    throw std::invalid_argument("CW frequency offset beyond Nyquist");
  }
  ComplexSignal out{std::vector<cplx>(n_samples), sample_rate};
  const double w = 2.0 * std::numbers::pi * spec.freq_offset / sample_rate;
  for (std::size_t n = 0; n < n_samples; ++n) {
    double phase = std::fmod(w * static_cast<double>(n), 2.0 * std::numbers::pi);
    out.samples[n] = std::polar(spec.amplitude, phase + spec.phase);
  }
  return out;
}

ComplexSignal gen_dme(const DmeSpec& spec, std::size_t n_samples,
                      double sample_rate, std::mt19937_64& rng) {
  check_dme(spec);
  ComplexSignal out{std::vector<cplx>(n_samples), sample_rate};
  if (spec.pair_rate == 0.0 || n_samples == 0) return out;

  // Arrivals start early enough that pairs straddling t = 0 are included.
  const double lead = spec.pair_spacing +
                      kPulseSupportSigmas / std::sqrt(spec.pulse_width_param);
  const double end = static_cast<double>(n_samples) / sample_rate + lead;
  std::exponential_distribution<double> gap(spec.pair_rate);
  for (double t = -2.0 * lead + gap(rng); t < end; t += gap(rng)) {
    add_pulse(out.samples, spec, t, sample_rate);
    add_pulse(out.samples, spec, t + spec.pair_spacing, sample_rate);
  }
  return out;
}

ComplexSignal gen_dme_pair(const DmeSpec& spec, double t0,
                           std::size_t n_samples, double sample_rate) {
  check_dme(spec);
  ComplexSignal out{std::vector<cplx>(n_samples), sample_rate};
  add_pulse(out.samples, spec, t0, sample_rate);
  add_pulse(out.samples, spec, t0 + spec.pair_spacing, sample_rate);
  return out;
}

ComplexSignal scale_to_jn(const ComplexSignal& i, JnSpec jn,
                          double noise_variance) {
  double peak = 0.0;
  for (const auto& s : i.samples) peak = std::max(peak, std::norm(s));
  if (!(peak > 0.0)) {
    throw std::invalid_argument("cannot scale an all-zero interference signal");
  }
  double target = noise_variance * std::pow(10.0, jn.jn_db / 10.0);
  double gain = std::sqrt(target / peak);
  ComplexSignal out = i;
  for (auto& s : out.samples) s *= gain;
  return out;
}

double jn_from_link(double tx_power_dbw, double distance_m, double freq_hz,
                    double noise_power_dbw) {
  double lambda = kSpeedOfLight / freq_hz;
  double fspl_db = 20.0 * std::log10(4.0 * std::numbers::pi * distance_m / lambda);
  return tx_power_dbw - fspl_db - noise_power_dbw;
}

}  // namespace rimdpe
