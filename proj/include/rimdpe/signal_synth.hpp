#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "rimdpe/constellation.hpp"
#include "rimdpe/signal.hpp"

namespace rimdpe {

inline constexpr double kCaChipRate = 1.023e6;
inline constexpr int kCaCodeLength = 1023;

/// One period of a GPS L1 C/A spreading code, chips mapped 0 → +1, 1 → −1.
struct PrnCode {
  int prn_id = 0;
  std::array<std::int8_t, kCaCodeLength> chips{};
  double chip_rate = kCaChipRate;
};

/// Gold code from the G1/G2 10-stage LFSR pair with the G2 phase selector of
/// `prn_id` (1..37). Throws std::invalid_argument outside that range.
PrnCode gen_ca_code(int prn_id);

/// Index of the chip active at time t (seconds), periodic extension.
int chip_index(const PrnCode& code, double t);

/// Zero-order-hold sample of the periodically extended code at n/fs − delay.
int sample_code(const PrnCode& code, double delay, std::int64_t n,
                double sample_rate);

/// |α_i| after applying the CN0 override of the scenario, if any.
cplx effective_amplitude(const Scenario& scenario, std::size_t sat_index);

/// Σ_i α_i c_i(nT_s − τ_i) e^{j(2π f_{d,i} n T_s + φ_i)}, no noise.
ComplexSignal synthesize_noiseless(const Scenario& scenario);

/// Noiseless signal plus circular complex Gaussian noise of variance σ_n².
/// Deterministic given the generator state.
ComplexSignal synthesize(const Scenario& scenario, std::mt19937_64& rng);
ComplexSignal synthesize(const Scenario& scenario, std::uint64_t noise_seed);

/// Fourier coefficients C_k, |k| ≤ floor(bandwidth·T), of the rectangular-chip
/// code waveform c(t) = Σ_k C_k e^{j2πkt/T}, T the code period. Element k + H
/// holds C_k. Throws std::invalid_argument unless bandwidth > 0.
std::vector<cplx> chip_harmonics(const PrnCode& code, double bandwidth);

/// One code period of the chip waveform passed through the ideal ±bandwidth
/// front-end filter before sampling, delayed by `delay`:
/// Σ_{|k|/T ≤ B} C_k e^{j2πk(nT_s − delay)/T}, T the code period and C_k the
/// Fourier coefficients of the rectangular-chip code. Throws
/// std::invalid_argument unless a code period is a whole number of samples
/// and 0 < bandwidth < sample_rate / 2.
std::vector<cplx> bandlimited_code_period(const PrnCode& code, double delay,
                                          double sample_rate, double bandwidth);

/// As synthesize_noiseless, with each code filtered by the front end ahead of
/// sampling (bandlimited_code_period at the scenario's frontend_bandwidth).
ComplexSignal synthesize_noiseless_frontend(const Scenario& scenario);

/// synthesize_noiseless_frontend plus noise, then lowpass_frontend: the
/// front end seen as an analog filter ahead of the sampler.
ComplexSignal synthesize_frontend(const Scenario& scenario, std::mt19937_64& rng);

/// Adds circular complex Gaussian noise of total variance `variance`.
void add_noise(ComplexSignal& x, double variance, std::mt19937_64& rng);

/// Ideal brick-wall low-pass: zeroes DFT bins with |f| > bandwidth.
/// Throws std::invalid_argument unless 0 < bandwidth < sample_rate / 2.
ComplexSignal lowpass_frontend(const ComplexSignal& x, double bandwidth);

}  // namespace rimdpe
