#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace rimdpe {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kGpsL1Frequency = 1575.42e6;

using Vec3 = Eigen::Vector3d;

/// Dynamic receiver parameters: position, velocity, clock bias and drift.
struct ReceiverState {
  Vec3 position = Vec3::Zero();  // ECEF, m
  Vec3 velocity = Vec3::Zero();  // m/s
  double clock_bias = 0.0;       // s
  double clock_drift = 0.0;      // s/s

  /// Throws std::invalid_argument when a component is not finite, or when
  /// `terrestrial` is set and the position norm is outside [6.2e6, 7.5e6] m.
  void validate(bool terrestrial = false) const;
};

struct SatelliteState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double clock_bias = 0.0;
  std::complex<double> amplitude{1.0, 0.0};
  double carrier_phase = 0.0;  // rad
  int prn_id = 1;
  // Optional range bias (atmosphere, ephemeris). Zero in every experiment.
  double range_bias = 0.0;
};

struct Scenario {
  ReceiverState receiver;
  std::vector<SatelliteState> satellites;
  double carrier_freq = kGpsL1Frequency;
  double sample_rate = 5e6;
  double duration = 10e-3;
  // Per-satellite CN0. When non-empty it overrides |amplitude| (phase kept).
  std::vector<double> cn0_dbhz;
  double noise_variance = 2.0;       // complex noise variance σ_n²
  double frontend_bandwidth = 0.0;   // one-sided, Hz; 0 disables the filter

  /// Number of samples N = duration · sample_rate (rounded).
  [[nodiscard]] std::size_t num_samples() const;
  /// Samples in one 1 ms C/A code period.
  [[nodiscard]] std::size_t samples_per_code_period() const;

  /// Throws std::invalid_argument when the scenario breaks its invariants.
  /// Signal synthesis passes allow_empty_sky to produce noise-only captures.
  void validate(bool allow_empty_sky = false) const;
};

/// Geometric pseudorange ‖p − p_i‖ + c(δt − δt_i) + range_bias, in meters.
/// Throws std::domain_error for coincident receiver/satellite positions.
double pseudorange(const ReceiverState& rx, const SatelliteState& sat);

/// Propagation delay τ_i = pseudorange / c.
double delay(const ReceiverState& rx, const SatelliteState& sat);

/// Doppler shift −(v_i − v)ᵀu_i (1 + δṫ) f_c / c, u_i the receiver-to-satellite
/// unit vector.
double doppler(const ReceiverState& rx, const SatelliteState& sat,
               double carrier_freq);

/// Delay gradient w.r.t. receiver position, one row per satellite:
/// row_i = (p − p_i)ᵀ / (c‖p − p_i‖).
Eigen::MatrixX3d geometry_jacobian(const ReceiverState& rx,
                                   const std::vector<SatelliteState>& sats);

/// A deterministic 7-satellite-style sky: `count` satellites on a 26 560 km
/// orbit radius seen from `receiver`, spread in azimuth and elevation, with
/// tangential orbital velocities. PRNs are taken from `prns` (cycled).
std::vector<SatelliteState> default_constellation(
    const ReceiverState& receiver, int count,
    const std::vector<int>& prns = {1, 3, 7, 11, 17, 23, 28, 5, 14, 31});

/// WGS-84 geodetic (deg, deg, m) to ECEF.
Vec3 geodetic_to_ecef(double lat_deg, double lon_deg, double height_m);

}  // namespace rimdpe
