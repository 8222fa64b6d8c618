#pragma once

#include <random>

#include "rimdpe/signal.hpp"

namespace rimdpe {

/// Constant-envelope continuous-wave jammer.
struct CwSpec {
  double freq_offset = 0.0;  // Hz
  double phase = 0.0;        // rad
  double amplitude = 1.0;    // linear
};

/// DME pulse-pair interferer. Defaults are the X-mode ground-station values.
struct DmeSpec {
  double pulse_width_param = 4.5e11;  // Gaussian α_p, s^-2
  double pair_spacing = 12e-6;        // s
  double pair_rate = 2700.0;          // pairs per second
  double amplitude = 1.0;             // linear peak of a single pulse
  double freq_offset = 0.0;           // Hz
};

/// Jamming-to-noise ratio, JN = α_I² / σ_n², in dB.
struct JnSpec {
  double jn_db = 0.0;
};

/// i[n] = α_I e^{j(2π f_CW n T_s + φ_CW)}.
ComplexSignal gen_cw(const CwSpec& spec, std::size_t n_samples,
                     double sample_rate);

/// Poisson-timed Gaussian pulse pairs,
/// Σ_k α [g(t − t_k) + g(t − t_k − Δt)] e^{j2π f t}, g(t) = e^{−α_p t²/2}.
ComplexSignal gen_dme(const DmeSpec& spec, std::size_t n_samples,
                      double sample_rate, std::mt19937_64& rng);

/// Deterministic single pulse pair whose first pulse is centred at `t0`.
ComplexSignal gen_dme_pair(const DmeSpec& spec, double t0,
                           std::size_t n_samples, double sample_rate);

/// Rescales `i` so that max |i[n]|² / σ_n² = 10^{JN/10}.
/// Throws std::invalid_argument for an all-zero input.
ComplexSignal scale_to_jn(const ComplexSignal& i, JnSpec jn,
                          double noise_variance);

/// JN in dB of a transmitter seen through free-space path loss
/// 20·log10(4πd/λ), for a receiver noise power `noise_power_dbw`.
double jn_from_link(double tx_power_dbw, double distance_m, double freq_hz,
                    double noise_power_dbw);

}  // namespace rimdpe
