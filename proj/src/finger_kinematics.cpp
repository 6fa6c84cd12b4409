#include "berrysim/finger_kinematics.hpp"

#include <cmath>
#include <stdexcept>

#include "berrysim/errors.hpp"

namespace berrysim {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

// sin(x)/x, stable through x = 0.
double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// Marching state along a finger centreline in the bending plane.
struct ArcState {
  double radial;
  double axial;
  double tangent;  // angle from the gripper axis

  // Advance along an arc of given curvature by arc length s. Uses the exact
  // chord form: chord = s*sinc(ks/2) at direction tangent - ks/2.
  void advance(double curvature, double s) {
    const double half = 0.5 * curvature * s;
    const double chord = s * sinc(half);
    radial += chord * std::sin(tangent - half);
    axial += chord * std::cos(tangent - half);
    tangent -= curvature * s;
  }
};

}  // namespace

void GripperGeometry::validate(const std::string& p) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError(p + "." + field + ": " + why);
  };
  if (!(finger_neutral_length_mm > 0)) fail("finger_neutral_length_mm", "must be > 0");
  if (segment_count != 2) fail("segment_count", "must be 2 (medial bone split)");
  if (!(opening_angle_deg > 0 && opening_angle_deg < 90))
    fail("opening_angle_deg", "must be in (0, 90)");
  if (!(base_radius_mm > 0)) fail("base_radius_mm", "must be > 0");
  if (!(spool_diameter_mm > 0)) fail("spool_diameter_mm", "must be > 0");
  if (!(servo_range_deg > 0)) fail("servo_range_deg", "must be > 0");
  if (finger_count < 2) fail("finger_count", "must be >= 2");
  if (!(camera_fov_deg > 0 && camera_fov_deg < 180))
    fail("camera_fov_deg", "must be in (0, 180)");
  if (!(base_diameter_mm > 0)) fail("base_diameter_mm", "must be > 0");
  if (!(sensor_palm_offset_mm >= 0)) fail("sensor_palm_offset_mm", "must be >= 0");
  if (!(finger_thickness_mm > 0)) fail("finger_thickness_mm", "must be > 0");
}

FingerKinematics::FingerKinematics(const GripperGeometry& geometry) : geo_(geometry) {
  if (!(geo_.finger_neutral_length_mm > 0) || !(geo_.spool_diameter_mm > 0) ||
      !(geo_.servo_range_deg > 0)) {
    throw std::invalid_argument("FingerKinematics: lengths and servo range must be positive");
  }
  full_travel_mm_ = deg2rad(geo_.servo_range_deg) * geo_.spool_diameter_mm / 2.0;

  // Closure curvature. The fingertip radial distance r(k) has a unique
  // stationary point k* on (0, (phi0+pi)/L); it is a minimum (closest tip
  // approach to the axis). Solve the stationarity condition
  //   u*sin(phi0-u) = cos(phi0-u) - cos(phi0),  u = L*k
  // by bisection, then, if the tip pad would cross the axis before k*, use
  // that earlier root of r(k) = thickness/2 instead.
  const double phi0 = deg2rad(geo_.opening_angle_deg);
  const double len = geo_.finger_neutral_length_mm;
  auto stationarity = [&](double u) {
    return u * std::sin(phi0 - u) - std::cos(phi0 - u) + std::cos(phi0);
  };
  double lo = 1e-9, hi = phi0 + kPi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (stationarity(mid) < 0.0 ? lo : hi) = mid;
  }
  double k_star = 0.5 * (lo + hi) / len;

  const double pad = geo_.finger_thickness_mm / 2.0;
  if (tip_radial(k_star) < pad) {
    double klo = 0.0, khi = k_star;  // r is strictly decreasing on (0, k*)
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (klo + khi);
      (tip_radial(mid) > pad ? klo : khi) = mid;
    }
    k_star = 0.5 * (klo + khi);
  }
  closing_curvature_ = k_star;
  gain_ = closing_curvature_ / full_travel_mm_;
}

double FingerKinematics::tendon_retraction_from_servo(double servo_angle_deg) const {
  if (servo_angle_deg < 0.0 || servo_angle_deg > geo_.servo_range_deg) {
    throw std::domain_error("servo angle outside [0, " +
                            std::to_string(geo_.servo_range_deg) + "] deg");
  }
  return deg2rad(servo_angle_deg) * geo_.spool_diameter_mm / 2.0;
}

FingerConfiguration FingerKinematics::curvature_from_retraction(double retraction_mm) const {
  if (retraction_mm < 0.0) throw std::domain_error("tendon retraction must be >= 0");
  FingerConfiguration config;
  config.segment_length_mm = geo_.finger_neutral_length_mm / geo_.segment_count;
  config.tendon_retraction_mm = retraction_mm;
  if (retraction_mm > full_travel_mm_) {
    config.curvature_per_mm = closing_curvature_;
    config.saturated = true;
  } else {
    config.curvature_per_mm = gain_ * retraction_mm;
  }
  return config;
}

FingertipState FingerKinematics::pcc_forward(const FingerConfiguration& config) const {
  ArcState st{geo_.base_radius_mm, 0.0, deg2rad(geo_.opening_angle_deg)};
  for (int seg = 0; seg < geo_.segment_count; ++seg) {
    st.advance(config.curvature_per_mm, config.segment_length_mm);
  }
  return {st.radial, st.axial, st.tangent};
}

std::vector<PlanarPoint> FingerKinematics::arc_points(const FingerConfiguration& config,
                                                      int samples_per_segment) const {
  std::vector<PlanarPoint> pts;
  pts.reserve(static_cast<size_t>(geo_.segment_count) * samples_per_segment + 1);
  ArcState seg_start{geo_.base_radius_mm, 0.0, deg2rad(geo_.opening_angle_deg)};
  pts.push_back({seg_start.radial, seg_start.axial});
  for (int seg = 0; seg < geo_.segment_count; ++seg) {
    for (int i = 1; i <= samples_per_segment; ++i) {
      ArcState st = seg_start;
      st.advance(config.curvature_per_mm,
                 config.segment_length_mm * i / samples_per_segment);
      pts.push_back({st.radial, st.axial});
    }
    seg_start.advance(config.curvature_per_mm, config.segment_length_mm);
  }
  return pts;
}

double FingerKinematics::tip_radial(double curvature) const {
  FingerConfiguration c;
  c.curvature_per_mm = curvature;
  c.segment_length_mm = geo_.finger_neutral_length_mm / geo_.segment_count;
  return pcc_forward(c).radial_mm;
}

double FingerKinematics::grasp_aperture(const FingerConfiguration& config) const {
  const double pad = geo_.finger_thickness_mm / 2.0;
  return 2.0 * std::max(0.0, pcc_forward(config).radial_mm - pad);
}

bool FingerKinematics::fov_clearance(const FingerConfiguration& config,
                                     int samples_per_segment) const {
  constexpr double tol = 1e-3;  // mm
  const double half = deg2rad(geo_.camera_fov_deg / 2.0);
  const bool half_space = half >= kPi / 2.0 - 1e-12;
  const double tan_half = half_space ? 0.0 : std::tan(half);
  for (const PlanarPoint& p : arc_points(config, samples_per_segment)) {
    if (p.axial_mm <= tol) continue;  // behind or on the palm plane
    if (half_space || p.radial_mm < p.axial_mm * tan_half - tol) return false;
  }
  return true;
}

std::optional<double> FingerKinematics::retraction_for_aperture(double aperture_mm) const {
  const double open_ap = grasp_aperture(curvature_from_retraction(0.0));
  const double closed_ap = grasp_aperture(curvature_from_retraction(full_travel_mm_));
  if (aperture_mm > open_ap || aperture_mm < closed_ap) return std::nullopt;
  double lo = 0.0, hi = full_travel_mm_;  // aperture strictly decreasing
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (grasp_aperture(curvature_from_retraction(mid)) > aperture_mm ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<std::array<double, 3>> FingerKinematics::fingertip_positions(
    const FingerConfiguration& config) const {
  const FingertipState tip = pcc_forward(config);
  std::vector<std::array<double, 3>> out;
  out.reserve(geo_.finger_count);
  for (int i = 0; i < geo_.finger_count; ++i) {
    const double az = 2.0 * kPi * i / geo_.finger_count;
    out.push_back({tip.radial_mm * std::cos(az), tip.radial_mm * std::sin(az),
                   tip.axial_mm});
  }
  return out;
}

}  // namespace berrysim
