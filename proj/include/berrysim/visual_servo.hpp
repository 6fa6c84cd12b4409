#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "berrysim/grasp_dynamics.hpp"
#include "berrysim/optics_scene.hpp"
#include "berrysim/pose.hpp"
#include "berrysim/rng.hpp"

namespace berrysim {

// 2x2 image Jacobian over end-effector (x, y): px of image motion per mm of
// Cartesian motion. The z axis is handled by the bounding-box depth estimator.
using ImageJacobian = Eigen::Matrix2d;

struct ServoParams {
  double speed_gain = 1.0;           // in (0, 1]
  double pixel_tolerance_px = 5.0;
  double depth_tolerance_mm = 10.0;
  double jog_step_mm = 2.0;
  int iteration_cap = 100;           // per-berry detect/act cycles
  double assumed_diameter_mm = 19.1; // fed to the depth estimator
  double condition_bound = 1e6;      // Jacobian usable below this condition number

  void validate(const std::string& field_prefix = "servo") const;
};

enum class ServoPhase { Calibrate, Center, Approach, Grasp, Deposit, Done };

std::string to_string(ServoPhase phase);

struct TrajectoryRow {
  int step = 0;
  ServoPhase phase = ServoPhase::Calibrate;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::optional<double> pixel_error_px;
  std::optional<double> estimated_depth_mm;
};

struct DetectionRow {
  int tick = 0;
  BoundingBox box;
};

// Secant Jacobian from jogging: observe_target maps an end-effector offset
// (applied, observed, then undone) to the target's image coordinates; nullopt
// means the target was lost and calibration fails.
std::optional<ImageJacobian> estimate_image_jacobian(
    const std::function<std::optional<Eigen::Vector2d>(const Eigen::Vector3d&)>&
        observe_target,
    double jog_step_mm);

// Convenience overload used by tests and the loop: jog the camera through the
// scene and track one berry by id through the detector.
std::optional<ImageJacobian> calibrate_jacobian(const Scene& scene,
                                                const CameraModel& camera,
                                                const DetectorParams& detector,
                                                int target_berry_id,
                                                double jog_step_mm, Rng& rng);

// (dx, dy) = gain * J^-1 * (principal point - box centre); nullopt when the
// Jacobian is singular/ill-conditioned and must be recalibrated.
std::optional<Eigen::Vector2d> centering_step(const ImageJacobian& jacobian,
                                              double speed_gain,
                                              const Eigen::Vector2d& pixel_error,
                                              double condition_bound = 1e6);

// Move half the estimated remaining distance, stopping short at the standoff.
double approach_step(double estimated_depth_mm, double standoff_mm);

// Grasp hand-off: the orchestrator senses/classifies/pulls and reports back.
struct GraspResult {
  DetachOutcome outcome = DetachOutcome::StillOnStem;
  std::optional<Ripeness> classification;
  std::optional<ReflectanceReading> reading;
};
using GraspHandler =
    std::function<GraspResult(BerryInstance& berry, double palm_gap_mm, Rng& rng)>;

struct BerryServoStats {
  int servo_iterations = 0;
  int approach_steps = 0;
  DetachOutcome outcome = DetachOutcome::Undetected;
  GraspResult grasp;
  double initial_center_u = 0.0;  // image u when first targeted
};

struct IbvsResult {
  std::vector<TrajectoryRow> trajectory;
  std::vector<DetectionRow> detections;
  std::map<int, BerryServoStats> per_berry;  // keyed by berry id
  std::vector<int> resolution_order;         // berry ids in harvest-attempt order
  bool nonconvergence = false;
};

// The harvesting protocol loop: detect, target the left-most berry, calibrate
// the Jacobian when stale, centre within pixel tolerance, approach by half
// the estimated depth, grasp at depth tolerance, deposit, repeat until no
// unresolved berry is detected. Mutates the scene (detached berries).
IbvsResult run_ibvs(Scene& scene, CameraModel camera, const DetectorParams& detector,
                    const ServoParams& params, double standoff_mm, const Pose& home,
                    const Eigen::Vector3d& clamshell_position,
                    const GraspHandler& grasp_handler, Rng& rng);

}  // namespace berrysim
