#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace berrysim {

// Dimensional parameters of the three-finger tendon gripper. All lengths in
// millimetres, angles in degrees. Defaults mirror the hardware build.
struct GripperGeometry {
  double finger_neutral_length_mm = 32.0;
  int segment_count = 2;               // bending sections split by the medial bone
  double opening_angle_deg = 60.0;     // finger tilt from the gripper axis
  double base_radius_mm = 22.0;        // finger base offset from the central axis
  double spool_diameter_mm = 14.0;
  double servo_range_deg = 180.0;
  int finger_count = 3;                // spaced equidistantly, pitch 360/count
  double camera_fov_deg = 80.0;        // full angle of the endoscope cone
  double base_diameter_mm = 45.0;
  double sensor_palm_offset_mm = 5.0;  // ripeness sensor sits this far behind the palm plane
  double finger_thickness_mm = 3.0;    // ventral pad offset = half of this

  // Throws ValidationError naming the offending field.
  void validate(const std::string& field_prefix = "gripper") const;
};

// Equal-curvature state of one finger (all fingers share it: single tendon).
struct FingerConfiguration {
  double curvature_per_mm = 0.0;
  double segment_length_mm = 16.0;
  double tendon_retraction_mm = 0.0;
  bool saturated = false;  // retraction was clamped at the closure limit
};

// Point on a finger centreline in the bending plane: radial distance from the
// gripper axis and axial distance from the palm plane.
struct PlanarPoint {
  double radial_mm = 0.0;
  double axial_mm = 0.0;
};

struct FingertipState {
  double radial_mm = 0.0;
  double axial_mm = 0.0;
  double tangent_angle_rad = 0.0;  // from the gripper axis; decreases as the finger curls
};

// Constant-curvature model of the tendon finger and the aperture/clearance
// queries built on it. Construction solves the one free constant of the
// retraction->curvature map: full servo travel is pinned to the closure
// curvature (fingertip ventral surface at the axis when reachable, otherwise
// the curvature of closest fingertip approach).
class FingerKinematics {
 public:
  explicit FingerKinematics(const GripperGeometry& geometry);

  const GripperGeometry& geometry() const { return geo_; }

  // Tendon retraction produced by a servo angle via the spool: arc length.
  // Throws std::domain_error outside [0, servo_range].
  double tendon_retraction_from_servo(double servo_angle_deg) const;

  double full_travel_mm() const { return full_travel_mm_; }
  double curvature_gain_per_mm2() const { return gain_; }
  double closing_curvature_per_mm() const { return closing_curvature_; }

  // Linear map curvature = gain * retraction, clamped (with saturated flag)
  // at the closure limit. Throws std::domain_error for negative retraction.
  FingerConfiguration curvature_from_retraction(double retraction_mm) const;

  // Chains the two circular-arc segments from the base offset; kappa = 0
  // degenerates to the straight finger.
  FingertipState pcc_forward(const FingerConfiguration& config) const;

  // Centreline samples (including base and tip), samples_per_segment per arc.
  std::vector<PlanarPoint> arc_points(const FingerConfiguration& config,
                                      int samples_per_segment = 64) const;

  // Opening diameter measured at the fingertip contact (ventral) surface.
  double grasp_aperture(const FingerConfiguration& config) const;

  // True iff no sampled finger point lies inside the camera's FOV cone
  // (apex at the gripper centre on the palm plane, axis = gripper axis).
  bool fov_clearance(const FingerConfiguration& config,
                     int samples_per_segment = 64) const;

  // Inverse of grasp_aperture by bisection; nullopt when the target aperture
  // is outside the achievable range.
  std::optional<double> retraction_for_aperture(double aperture_mm) const;

  // Fingertip positions of all fingers in 3D (x, y, z), fingers at equal
  // angular pitch around the gripper axis.
  std::vector<std::array<double, 3>> fingertip_positions(
      const FingerConfiguration& config) const;

 private:
  double tip_radial(double curvature) const;

  GripperGeometry geo_;
  double full_travel_mm_ = 0.0;
  double closing_curvature_ = 0.0;
  double gain_ = 0.0;
};

}  // namespace berrysim
