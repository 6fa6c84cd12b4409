#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "berrysim/errors.hpp"
#include "berrysim/finger_kinematics.hpp"

using namespace berrysim;

namespace {
constexpr double kPi = 3.14159265358979323846;
const GripperGeometry kDefaults{};
}  // namespace

TEST_CASE("spool retraction is arc length of the servo rotation") {
  const FingerKinematics kin(kDefaults);
  CHECK(kin.tendon_retraction_from_servo(0.0) == 0.0);
  // hand computation: pi * 7 and (pi/2) * 7
  CHECK(kin.tendon_retraction_from_servo(180.0) == doctest::Approx(21.991148575128552).epsilon(1e-12));
  CHECK(kin.tendon_retraction_from_servo(90.0) == doctest::Approx(10.995574287564276).epsilon(1e-12));
  CHECK_THROWS_AS(kin.tendon_retraction_from_servo(-1.0), std::domain_error);
  CHECK_THROWS_AS(kin.tendon_retraction_from_servo(180.5), std::domain_error);
}

TEST_CASE("spool retraction is linear in angle") {
  const FingerKinematics kin(kDefaults);
  for (double a : {10.0, 35.0, 80.0}) {
    for (double b : {5.0, 45.0, 90.0}) {
      const double sum = kin.tendon_retraction_from_servo(a + b);
      const double parts =
          kin.tendon_retraction_from_servo(a) + kin.tendon_retraction_from_servo(b);
      CHECK(sum == doctest::Approx(parts).epsilon(1e-12));
    }
  }
}

TEST_CASE("curvature map is linear with a calibrated gain and saturates") {
  const FingerKinematics kin(kDefaults);
  const FingerConfiguration neutral = kin.curvature_from_retraction(0.0);
  CHECK(neutral.curvature_per_mm == 0.0);
  CHECK_FALSE(neutral.saturated);
  CHECK(neutral.segment_length_mm == doctest::Approx(16.0));

  const double g = kin.curvature_gain_per_mm2();
  for (double r : {1.0, 5.0, 12.5, 21.0}) {
    CHECK(kin.curvature_from_retraction(r).curvature_per_mm == doctest::Approx(g * r).epsilon(1e-12));
  }
  // full travel reaches the closing curvature exactly
  const double full = kin.full_travel_mm();
  CHECK(kin.curvature_from_retraction(full).curvature_per_mm ==
        doctest::Approx(kin.closing_curvature_per_mm()).epsilon(1e-12));

  const FingerConfiguration beyond = kin.curvature_from_retraction(full + 3.0);
  CHECK(beyond.saturated);
  CHECK(beyond.curvature_per_mm == doctest::Approx(kin.closing_curvature_per_mm()));

  CHECK_THROWS_AS(kin.curvature_from_retraction(-0.1), std::domain_error);
}

TEST_CASE("straight finger forward kinematics matches trigonometry") {
  const FingerKinematics kin(kDefaults);
  const FingertipState tip = kin.pcc_forward(kin.curvature_from_retraction(0.0));
  // 22 + 32*sin(60), 32*cos(60)
  CHECK(tip.radial_mm == doctest::Approx(49.712812921102035).epsilon(1e-12));
  CHECK(tip.axial_mm == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(tip.tangent_angle_rad == doctest::Approx(kPi / 3.0).epsilon(1e-12));

  // tip-to-base distance is the full length for a straight finger
  const double dx = tip.radial_mm - 22.0;
  CHECK(std::sqrt(dx * dx + tip.axial_mm * tip.axial_mm) == doctest::Approx(32.0).epsilon(1e-12));
}

TEST_CASE("pcc chord is shorter than the arc for any positive curvature") {
  const FingerKinematics kin(kDefaults);
  for (double kappa : {1e-4, 1e-3, 0.01, 0.05, 0.118, 0.13}) {
    FingerConfiguration config;
    config.curvature_per_mm = kappa;
    const FingertipState tip = kin.pcc_forward(config);
    const double dx = tip.radial_mm - 22.0;
    const double chord = std::sqrt(dx * dx + tip.axial_mm * tip.axial_mm);
    CHECK(chord < 32.0);
  }
}

TEST_CASE("pcc forward at vanishing curvature converges to the straight formula") {
  const FingerKinematics kin(kDefaults);
  FingerConfiguration tiny;
  tiny.curvature_per_mm = 1e-9;
  const FingertipState a = kin.pcc_forward(tiny);
  const FingertipState b = kin.pcc_forward(FingerConfiguration{});
  CHECK(std::abs(a.radial_mm - b.radial_mm) < 1e-6);
  CHECK(std::abs(a.axial_mm - b.axial_mm) < 1e-6);
}

TEST_CASE("aperture opens wide at neutral and closes strictly monotonically") {
  const FingerKinematics kin(kDefaults);
  // wide open: well beyond the 31 mm design maximum
  const double open_ap = kin.grasp_aperture(kin.curvature_from_retraction(0.0));
  CHECK(open_ap == doctest::Approx(96.42562584220407).epsilon(1e-9));
  CHECK(open_ap > 31.0);

  double prev = open_ap;
  const double full = kin.full_travel_mm();
  for (int i = 1; i <= 100; ++i) {
    const double ap = kin.grasp_aperture(kin.curvature_from_retraction(full * i / 100.0));
    CHECK(ap < prev);
    prev = ap;
  }
  // fully closed: still nonnegative, 0 would mean fingertip pads meeting
  CHECK(prev >= 0.0);
  CHECK(prev == doctest::Approx(16.993653151359027).epsilon(1e-9));
}

TEST_CASE("apertures 31 mm and 17 mm are reachable; 31 comes first") {
  const FingerKinematics kin(kDefaults);
  const auto r31 = kin.retraction_for_aperture(31.0);
  const auto r17 = kin.retraction_for_aperture(17.0);
  REQUIRE(r31.has_value());
  REQUIRE(r17.has_value());
  CHECK(*r31 < *r17);  // aperture decreases with retraction
  CHECK(kin.grasp_aperture(kin.curvature_from_retraction(*r31)) == doctest::Approx(31.0).epsilon(1e-9));
  CHECK(kin.grasp_aperture(kin.curvature_from_retraction(*r17)) == doctest::Approx(17.0).epsilon(1e-9));

  // fingertips of the three fingers stay apart at the 17 mm grip
  const auto tips = kin.fingertip_positions(kin.curvature_from_retraction(*r17));
  REQUIRE(tips.size() == 3);
  for (size_t i = 0; i < tips.size(); ++i) {
    for (size_t j = i + 1; j < tips.size(); ++j) {
      const double dx = tips[i][0] - tips[j][0];
      const double dy = tips[i][1] - tips[j][1];
      const double dz = tips[i][2] - tips[j][2];
      CHECK(std::sqrt(dx * dx + dy * dy + dz * dz) > 0.0);
    }
  }

  // targets outside the achievable range are rejected
  CHECK_FALSE(kin.retraction_for_aperture(120.0).has_value());
  CHECK_FALSE(kin.retraction_for_aperture(10.0).has_value());
}

TEST_CASE("neutral fingers clear the camera FOV cone") {
  const FingerKinematics kin(kDefaults);
  CHECK(kin.fov_clearance(kin.curvature_from_retraction(0.0)));
}

TEST_CASE("fingers parallel to the axis enter the cone past 22/tan(40)") {
  // hypothetical 0 deg opening: the straight finger runs at radius 22 up to
  // axial 32 > 26.22 mm where the 40 deg half-angle cone swallows it
  GripperGeometry geo = kDefaults;
  geo.opening_angle_deg = 0.0;
  const FingerKinematics kin(geo);
  CHECK_FALSE(kin.fov_clearance(kin.curvature_from_retraction(0.0)));

  // a finger short enough to stop before the crossing stays clear
  GripperGeometry short_geo = geo;
  short_geo.finger_neutral_length_mm = 20.0;  // < 22/tan(40 deg) = 26.22
  const FingerKinematics short_kin(short_geo);
  CHECK(short_kin.fov_clearance(short_kin.curvature_from_retraction(0.0)));
}

TEST_CASE("a 180 degree FOV leaves no clear finger") {
  GripperGeometry geo = kDefaults;
  geo.camera_fov_deg = 180.0;
  const FingerKinematics kin(geo);
  CHECK_FALSE(kin.fov_clearance(kin.curvature_from_retraction(0.0)));
}

TEST_CASE("geometry validation names the offending field") {
  GripperGeometry geo = kDefaults;
  geo.opening_angle_deg = 95.0;
  CHECK_THROWS_WITH_AS(geo.validate(), doctest::Contains("opening_angle_deg"),
                       berrysim::ValidationError);
}
