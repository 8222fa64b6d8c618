#include "doctest.h"

#include <cmath>

#include "rimdpe/constellation.hpp"

using namespace rimdpe;

namespace {

SatelliteState sat_at(const Vec3& p, const Vec3& v = Vec3::Zero()) {
  SatelliteState s;
  s.position = p;
  s.velocity = v;
  return s;
}

}  // namespace

TEST_CASE("pseudorange over one light-second") {
  SatelliteState s = sat_at({1.0e7, -2.0e6, 3.0e6});
  ReceiverState rx;
  rx.position = s.position + Vec3(3.0, 4.0, 12.0).normalized() * kSpeedOfLight;
  CHECK(pseudorange(rx, s) == doctest::Approx(kSpeedOfLight).epsilon(1e-14));
  CHECK(delay(rx, s) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pseudorange rejects coincident positions") {
  SatelliteState s = sat_at({1.0e7, 0.0, 0.0});
  ReceiverState rx;
  rx.position = s.position;
  CHECK_THROWS_AS(pseudorange(rx, s), std::domain_error);
}

TEST_CASE("pseudorange along the x axis") {
  ReceiverState rx;
  rx.position = {6378137.0, 0.0, 0.0};
  SatelliteState s = sat_at({26578137.0, 0.0, 0.0});
  CHECK(pseudorange(rx, s) == doctest::Approx(20200000.0).epsilon(1e-15));
  CHECK(delay(rx, s) == doctest::Approx(20200000.0 / 299792458.0).epsilon(1e-15));
  CHECK(delay(rx, s) == doctest::Approx(67.38e-3).epsilon(1e-4));

  rx.clock_bias = 1e-6;
  s.clock_bias = 0.25e-6;
  s.range_bias = 4.0;
  CHECK(pseudorange(rx, s) ==
        doctest::Approx(20200000.0 + 0.75e-6 * 299792458.0 + 4.0).epsilon(1e-15));
}

TEST_CASE("doppler") {
  ReceiverState rx;
  rx.position = {6378137.0, 0.0, 0.0};
  rx.velocity = {10.0, -5.0, 2.0};

  SUBCASE("equal velocities") {
    SatelliteState s = sat_at({26578137.0, 1e6, 0.0}, rx.velocity);
    CHECK(doppler(rx, s, kGpsL1Frequency) == doctest::Approx(0.0));
  }
  SUBCASE("tangential motion") {
    rx.velocity.setZero();
    SatelliteState s = sat_at({26578137.0, 0.0, 0.0}, {0.0, 3000.0, 1000.0});
    CHECK(std::abs(doppler(rx, s, kGpsL1Frequency)) < 1e-9);
  }
  SUBCASE("receding at 1 km/s") {
    rx.velocity.setZero();
    SatelliteState s = sat_at({26578137.0, 0.0, 0.0}, {1000.0, 0.0, 0.0});
    double expected = -1000.0 * 1575.42e6 / 299792458.0;
    CHECK(doppler(rx, s, kGpsL1Frequency) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(doppler(rx, s, kGpsL1Frequency) == doctest::Approx(-5255.04).epsilon(1e-5));
  }
}

TEST_CASE("geometry jacobian") {
  SUBCASE("overhead satellite") {
    ReceiverState rx;
    rx.position = {0.0, 0.0, 6.4e6};
    Eigen::MatrixX3d j = geometry_jacobian(rx, {sat_at({0.0, 0.0, 2.66e7})});
    CHECK(j(0, 0) == doctest::Approx(0.0));
    CHECK(j(0, 1) == doctest::Approx(0.0));
    CHECK(j(0, 2) == doctest::Approx(-1.0 / kSpeedOfLight).epsilon(1e-14));
  }
  SUBCASE("unit rows and finite differences") {
    ReceiverState rx;
    rx.position = geodetic_to_ecef(42.34, -71.09, 20.0);
    auto sats = default_constellation(rx, 7);
    Eigen::MatrixX3d j = geometry_jacobian(rx, sats);
    REQUIRE(j.rows() == 7);
    for (int i = 0; i < 7; ++i) {
      CHECK(j.row(i).norm() == doctest::Approx(1.0 / kSpeedOfLight).epsilon(1e-12));
      for (int a = 0; a < 3; ++a) {
        const double h = 1.0;
        ReceiverState up = rx, dn = rx;
        up.position[a] += h;
        dn.position[a] -= h;
        double fd = (delay(up, sats[i]) - delay(dn, sats[i])) / (2.0 * h);
        CHECK(fd == doctest::Approx(j(i, a)).epsilon(1e-6).scale(1.0 / kSpeedOfLight));
      }
    }
  }
}

TEST_CASE("geodetic to ECEF") {
  Vec3 eq = geodetic_to_ecef(0.0, 0.0, 0.0);
  CHECK(eq.x() == doctest::Approx(6378137.0));
  CHECK(std::abs(eq.y()) < 1e-6);
  CHECK(std::abs(eq.z()) < 1e-6);
  Vec3 pole = geodetic_to_ecef(90.0, 0.0, 0.0);
  CHECK(pole.z() == doctest::Approx(6356752.314245).epsilon(1e-12));
  Vec3 up = geodetic_to_ecef(0.0, 90.0, 100.0);
  CHECK(up.y() == doctest::Approx(6378237.0));
}

TEST_CASE("default constellation is above the horizon") {
  ReceiverState rx;
  rx.position = geodetic_to_ecef(42.34, -71.09, 20.0);
  auto sats = default_constellation(rx, 7);
  REQUIRE(sats.size() == 7);
  Vec3 up = rx.position.normalized();
  for (const auto& s : sats) {
    CHECK(s.position.norm() == doctest::Approx(26560e3).epsilon(1e-9));
    CHECK((s.position - rx.position).normalized().dot(up) > std::sin(10.0 * M_PI / 180.0));
  }
  for (std::size_t i = 0; i < sats.size(); ++i) {
    for (std::size_t k = i + 1; k < sats.size(); ++k) CHECK(sats[i].prn_id != sats[k].prn_id);
  }
}

TEST_CASE("receiver and scenario validation") {
  ReceiverState rx;
  rx.position = {6.4e6, 0.0, 0.0};
  CHECK_NOTHROW(rx.validate(true));
  rx.position = {1.0e6, 0.0, 0.0};
  CHECK_THROWS_AS(rx.validate(true), std::invalid_argument);
  CHECK_NOTHROW(rx.validate(false));
  rx.clock_bias = std::nan("");
  CHECK_THROWS_AS(rx.validate(false), std::invalid_argument);

  Scenario sc;
  sc.receiver.position = geodetic_to_ecef(0.0, 0.0, 0.0);
  sc.satellites = default_constellation(sc.receiver, 4);
  sc.sample_rate = 5e6;
  sc.duration = 2e-3;
  CHECK(sc.num_samples() == 10000);
  CHECK(sc.samples_per_code_period() == 5000);
  CHECK_NOTHROW(sc.validate());
  sc.sample_rate = -1.0;
  CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
}
