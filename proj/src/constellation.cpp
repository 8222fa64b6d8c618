#include "rimdpe/constellation.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace rimdpe {

namespace {

constexpr double kCodePeriod = 1e-3;

Vec3 line_of_sight(const ReceiverState& rx, const SatelliteState& sat,
                   double* range) {
  Vec3 diff = sat.position - rx.position;
  double r = diff.norm();
  if (!(r > 0.0)) {
    throw std::domain_error("satellite PRN " + std::to_string(sat.prn_id) +
                            " coincides with the receiver position");
  }
  if (range != nullptr) *range = r;
  return diff / r;
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

void ReceiverState::validate(bool terrestrial) const {
  if (!position.allFinite() || !velocity.allFinite() ||
      !std::isfinite(clock_bias) || !std::isfinite(clock_drift)) {
    throw std::invalid_argument("receiver state has non-finite components");
  }
  if (terrestrial) {
    double r = position.norm();
    if (r < 6.2e6 || r > 7.5e6) {
      throw std::invalid_argument("terrestrial receiver position norm " +
                                  std::to_string(r) +
                                  " m outside [6.2e6, 7.5e6]");
    }
  }
}

std::size_t Scenario::num_samples() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

std::size_t Scenario::samples_per_code_period() const {
  return static_cast<std::size_t>(std::llround(kCodePeriod * sample_rate));
}

void Scenario::validate(bool allow_empty_sky) const {
  receiver.validate();
  if (satellites.empty() && !allow_empty_sky) {
    throw std::invalid_argument("scenario has no satellites");
  }
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw std::invalid_argument("sample_rate must be positive");
  }
  if (frontend_bandwidth < 0.0 || 2.0 * frontend_bandwidth >= sample_rate) {
    throw std::invalid_argument(
        "sample_rate must exceed twice the front-end bandwidth");
  }
  double n = duration * sample_rate;
  if (!(n >= 1.0) || std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n)) {
    throw std::invalid_argument(
        "duration x sample_rate must be a positive integer");
  }
  if (!(noise_variance >= 0.0)) {
    throw std::invalid_argument("noise_variance must be non-negative");
  }
  if (!cn0_dbhz.empty() && cn0_dbhz.size() != satellites.size()) {
    throw std::invalid_argument("cn0_dbhz must have one entry per satellite");
  }
  for (const auto& sat : satellites) {
    if (sat.prn_id < 1 || sat.prn_id > 37) {
      throw std::invalid_argument("PRN " + std::to_string(sat.prn_id) +
                                  " outside 1..37");
    }
    if (!(std::abs(sat.amplitude) > 0.0)) {
      throw std::invalid_argument("satellite amplitude must be nonzero");
    }
    if ((sat.position - receiver.position).norm() == 0.0) {
      throw std::invalid_argument("satellite coincides with receiver");
    }
  }
}

double pseudorange(const ReceiverState& rx, const SatelliteState& sat) {
  double range = 0.0;
  line_of_sight(rx, sat, &range);
  return range + kSpeedOfLight * (rx.clock_bias - sat.clock_bias) +
         sat.range_bias;
}

double delay(const ReceiverState& rx, const SatelliteState& sat) {
  return pseudorange(rx, sat) / kSpeedOfLight;
}

double doppler(const ReceiverState& rx, const SatelliteState& sat,
               double carrier_freq) {
  Vec3 u = line_of_sight(rx, sat, nullptr);
  double radial = (sat.velocity - rx.velocity).dot(u);
  return -radial * (1.0 + rx.clock_drift) * carrier_freq / kSpeedOfLight;
}

Eigen::MatrixX3d geometry_jacobian(const ReceiverState& rx,
                                   const std::vector<SatelliteState>& sats) {
  Eigen::MatrixX3d jac(static_cast<Eigen::Index>(sats.size()), 3);
  for (std::size_t i = 0; i < sats.size(); ++i) {
    Vec3 u = line_of_sight(rx, sats[i], nullptr);
    jac.row(static_cast<Eigen::Index>(i)) = -u.transpose() / kSpeedOfLight;
  }
  return jac;
}

Vec3 geodetic_to_ecef(double lat_deg, double lon_deg, double height_m) {
  constexpr double a = 6378137.0;
  constexpr double f = 1.0 / 298.257223563;
  constexpr double e2 = f * (2.0 - f);
  double lat = deg2rad(lat_deg);
  double lon = deg2rad(lon_deg);
  double n = a / std::sqrt(1.0 - e2 * std::sin(lat) * std::sin(lat));
  return {(n + height_m) * std::cos(lat) * std::cos(lon),
          (n + height_m) * std::cos(lat) * std::sin(lon),
          (n * (1.0 - e2) + height_m) * std::sin(lat)};
}

std::vector<SatelliteState> default_constellation(
    const ReceiverState& receiver, int count, const std::vector<int>& prns) {
  // (elevation, azimuth) in degrees
  static constexpr std::array<std::array<double, 2>, 10> kSky{{{80, 30},
                                                               {50, 100},
                                                               {35, 200},
                                                               {60, 260},
                                                               {25, 330},
                                                               {40, 150},
                                                               {20, 60},
                                                               {30, 290},
                                                               {15, 240},
                                                               {70, 180}}};
  if (count < 1 || count > static_cast<int>(kSky.size())) {
    throw std::invalid_argument("default_constellation supports 1..10 satellites");
  }
  if (prns.empty()) throw std::invalid_argument("empty PRN list");
  constexpr double kOrbitRadius = 26560e3;
  constexpr double kOrbitSpeed = 3874.0;
  constexpr double kInclination = 55.0;

  const Vec3& p = receiver.position;
  Vec3 up = p.normalized();
  Vec3 east = Vec3::UnitZ().cross(up);
  if (east.norm() < 1e-9) east = Vec3::UnitX();
  east.normalize();
  Vec3 north = up.cross(east);

  std::vector<SatelliteState> sats;
  for (int i = 0; i < count; ++i) {
    double el = deg2rad(kSky[static_cast<std::size_t>(i)][0]);
    double az = deg2rad(kSky[static_cast<std::size_t>(i)][1]);
    Vec3 u = std::cos(el) * (std::sin(az) * east + std::cos(az) * north) +
             std::sin(el) * up;
    double pu = p.dot(u);
    double range =
        -pu + std::sqrt(pu * pu - p.squaredNorm() + kOrbitRadius * kOrbitRadius);

    SatelliteState sat;
    sat.position = p + range * u;
    double raan = deg2rad(40.0 * i);
    Vec3 normal(std::sin(deg2rad(kInclination)) * std::cos(raan),
                std::sin(deg2rad(kInclination)) * std::sin(raan),
                std::cos(deg2rad(kInclination)));
    Vec3 along = normal.cross(sat.position);
    if (along.norm() < 1e-6 * sat.position.norm()) {
      along = Vec3::UnitZ().cross(sat.position);
    }
    sat.velocity = kOrbitSpeed * along.normalized();
    sat.prn_id = prns[static_cast<std::size_t>(i) % prns.size()];
    sat.carrier_phase = 0.7 * i;
    sats.push_back(sat);
  }
  return sats;
}

}  // namespace rimdpe
