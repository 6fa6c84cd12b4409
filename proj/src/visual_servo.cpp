#include "berrysim/visual_servo.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "berrysim/errors.hpp"

namespace berrysim {

void ServoParams::validate(const std::string& p) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError(p + "." + field + ": " + why);
  };
  if (!(speed_gain > 0 && speed_gain <= 1)) fail("speed_gain", "must be in (0, 1]");
  if (!(pixel_tolerance_px > 0)) fail("pixel_tolerance_px", "must be > 0");
  if (!(depth_tolerance_mm > 0)) fail("depth_tolerance_mm", "must be > 0");
  if (!(jog_step_mm > 0)) fail("jog_step_mm", "must be > 0");
  if (iteration_cap < 1) fail("iteration_cap", "must be >= 1");
  if (!(assumed_diameter_mm > 0)) fail("assumed_diameter_mm", "must be > 0");
  if (!(condition_bound > 1)) fail("condition_bound", "must be > 1");
}

std::string to_string(ServoPhase phase) {
  switch (phase) {
    case ServoPhase::Calibrate: return "Calibrate";
    case ServoPhase::Center: return "Center";
    case ServoPhase::Approach: return "Approach";
    case ServoPhase::Grasp: return "Grasp";
    case ServoPhase::Deposit: return "Deposit";
    case ServoPhase::Done: return "Done";
  }
  return "Unknown";
}

std::optional<ImageJacobian> estimate_image_jacobian(
    const std::function<std::optional<Eigen::Vector2d>(const Eigen::Vector3d&)>&
        observe_target,
    double jog_step_mm) {
  if (!(jog_step_mm > 0)) throw std::domain_error("jog step must be > 0");
  const auto base = observe_target(Eigen::Vector3d::Zero());
  if (!base) return std::nullopt;
  ImageJacobian jacobian;
  for (int axis = 0; axis < 2; ++axis) {
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
    offset[axis] = jog_step_mm;
    const auto jogged = observe_target(offset);
    if (!jogged) return std::nullopt;
    jacobian.col(axis) = (*jogged - *base) / jog_step_mm;
  }
  return jacobian;
}

std::optional<ImageJacobian> calibrate_jacobian(const Scene& scene,
                                                const CameraModel& camera,
                                                const DetectorParams& detector,
                                                int target_berry_id,
                                                double jog_step_mm, Rng& rng) {
  auto observe = [&](const Eigen::Vector3d& offset) -> std::optional<Eigen::Vector2d> {
    CameraModel jogged = camera;
    jogged.pose.position += camera.pose.rotation * offset;
    for (const BoundingBox& box : detect(scene, jogged, detector, rng)) {
      if (box.berry_id == target_berry_id)
        return Eigen::Vector2d(box.center_u, box.center_v);
    }
    return std::nullopt;
  };
  return estimate_image_jacobian(observe, jog_step_mm);
}

std::optional<Eigen::Vector2d> centering_step(const ImageJacobian& jacobian,
                                              double speed_gain,
                                              const Eigen::Vector2d& pixel_error,
                                              double condition_bound) {
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(jacobian,
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smin = svd.singularValues()(1);
  const double smax = svd.singularValues()(0);
  if (!(smin > 0) || smax / smin > condition_bound) return std::nullopt;
  return speed_gain * svd.solve(pixel_error);
}

double approach_step(double estimated_depth_mm, double standoff_mm) {
  return 0.5 * (estimated_depth_mm - standoff_mm);
}

namespace {

// Straight-line pose interpolation used for the deposit/retreat motions.
void interpolate_move(CameraModel& camera, const Eigen::Vector3d& goal, int steps,
                      int& step_counter, std::vector<TrajectoryRow>& trajectory) {
  const Eigen::Vector3d start = camera.pose.position;
  if ((goal - start).norm() < 1e-12) return;
  for (int i = 1; i <= steps; ++i) {
    camera.pose.position = start + (goal - start) * (static_cast<double>(i) / steps);
    trajectory.push_back({++step_counter, ServoPhase::Deposit, camera.pose.position,
                          std::nullopt, std::nullopt});
  }
}

}  // namespace

IbvsResult run_ibvs(Scene& scene, CameraModel camera, const DetectorParams& detector,
                    const ServoParams& params, double standoff_mm, const Pose& home,
                    const Eigen::Vector3d& clamshell_position,
                    const GraspHandler& grasp_handler, Rng& rng) {
  constexpr int kDepositSteps = 20;
  IbvsResult result;
  camera.pose = home;
  int step = 0;
  int tick = 0;
  result.trajectory.push_back(
      {step, ServoPhase::Calibrate, camera.pose.position, std::nullopt, std::nullopt});

  std::set<int> resolved;
  int current_target = -1;
  std::optional<ImageJacobian> jacobian;

  auto tick_detect = [&]() {
    const std::vector<BoundingBox> boxes = detect(scene, camera, detector, rng);
    ++tick;
    for (const BoundingBox& box : boxes) result.detections.push_back({tick, box});
    return boxes;
  };
  auto log_move = [&](ServoPhase phase, std::optional<double> err,
                      std::optional<double> depth) {
    result.trajectory.push_back({++step, phase, camera.pose.position, err, depth});
  };

  // Jacobian calibration with jog motions recorded in the trajectory.
  auto calibrate_with_logging = [&](int berry_id,
                                    double jog_mm) -> std::optional<ImageJacobian> {
    auto observe = [&](const Eigen::Vector3d& offset) -> std::optional<Eigen::Vector2d> {
      const Eigen::Vector3d saved = camera.pose.position;
      const bool moved = offset.squaredNorm() > 0.0;
      if (moved) {
        camera.pose.position = saved + camera.pose.rotation * offset;
        log_move(ServoPhase::Calibrate, std::nullopt, std::nullopt);
      }
      std::optional<Eigen::Vector2d> coords;
      for (const BoundingBox& box : tick_detect()) {
        if (box.berry_id == berry_id) {
          coords = Eigen::Vector2d(box.center_u, box.center_v);
          break;
        }
      }
      if (moved) {
        camera.pose.position = saved;
        log_move(ServoPhase::Calibrate, std::nullopt, std::nullopt);
      }
      return coords;
    };
    return estimate_image_jacobian(observe, jog_mm);
  };

  auto resolve = [&](int berry_id, DetachOutcome outcome, const GraspResult& grasp) {
    BerryServoStats& stats = result.per_berry[berry_id];
    stats.outcome = outcome;
    stats.grasp = grasp;
    resolved.insert(berry_id);
    result.resolution_order.push_back(berry_id);
    if (outcome == DetachOutcome::NonConvergence) result.nonconvergence = true;
    current_target = -1;
    jacobian.reset();
  };

  while (true) {
    const std::vector<BoundingBox> boxes = tick_detect();
    std::vector<BoundingBox> open;
    for (const BoundingBox& box : boxes) {
      if (!resolved.count(box.berry_id)) open.push_back(box);
    }
    if (open.empty()) {
      // The stopping rule (zero identified berries) is evaluated from the
      // home pose; elsewhere it usually means the target slipped out of
      // frame, so retreat and look again.
      if ((camera.pose.position - home.position).norm() < 1e-9) {
        log_move(ServoPhase::Done, std::nullopt, std::nullopt);
        break;
      }
      interpolate_move(camera, home.position, kDepositSteps, step, result.trajectory);
      jacobian.reset();
      continue;
    }
    const BoundingBox target = *select_target(open);
    if (target.berry_id != current_target) {
      current_target = target.berry_id;
      jacobian.reset();
      BerryServoStats& stats = result.per_berry[current_target];
      if (stats.servo_iterations == 0) stats.initial_center_u = target.center_u;
    }
    BerryServoStats& stats = result.per_berry[current_target];
    if (++stats.servo_iterations > params.iteration_cap) {
      resolve(target.berry_id, DetachOutcome::NonConvergence, {});
      interpolate_move(camera, home.position, kDepositSteps, step, result.trajectory);
      continue;
    }

    const double est_depth = estimate_depth(target, params.assumed_diameter_mm, camera);
    const Eigen::Vector2d pixel_error(camera.cx() - target.center_u,
                                      camera.cy() - target.center_v);
    const double err_norm = pixel_error.norm();

    if (err_norm >= params.pixel_tolerance_px) {
      if (!jacobian) {
        // Jog sized for a fixed image-space displacement: a constant metric
        // jog overshoots the frame once the target is close (f/Z blows up),
        // and is noise-dominated when it is far. jog_step_mm caps the
        // far-field jog.
        constexpr double kJogTargetShiftPx = 60.0;
        const double depth_scaled =
            est_depth * kJogTargetShiftPx / camera.focal_length_px();
        const double jog = std::clamp(depth_scaled, 0.1, params.jog_step_mm);
        jacobian = calibrate_with_logging(current_target, jog);
        continue;  // lost-or-done either way: next tick re-detects fresh
      }
      const auto correction =
          centering_step(*jacobian, params.speed_gain, pixel_error, params.condition_bound);
      if (!correction) {
        jacobian.reset();  // ill-conditioned: recalibrate
        continue;
      }
      camera.pose.position += camera.pose.rotation *
                              Eigen::Vector3d((*correction)(0), (*correction)(1), 0.0);
      log_move(ServoPhase::Center, err_norm, est_depth);
    } else if (est_depth >= params.depth_tolerance_mm) {
      const double dz = approach_step(est_depth, standoff_mm);
      camera.pose.position += camera.pose.rotation * Eigen::Vector3d(0.0, 0.0, dz);
      ++stats.approach_steps;
      jacobian.reset();  // depth changed: f/Z scale is stale
      log_move(ServoPhase::Approach, err_norm, est_depth);
    } else {
      // Converged: gripper is in position for harvesting.
      result.trajectory.push_back(
          {++step, ServoPhase::Grasp, camera.pose.position, err_norm, est_depth});
      auto berry = std::find_if(scene.berries.begin(), scene.berries.end(),
                                [&](const BerryInstance& b) { return b.id == current_target; });
      const Eigen::Vector3d local = camera.pose.to_local(berry->position_mm);
      const double palm_gap = local.z() - standoff_mm;
      const GraspResult grasp = grasp_handler(*berry, palm_gap, rng);
      if (grasp.outcome == DetachOutcome::Detached) {
        berry->attached = false;
        interpolate_move(camera, clamshell_position, kDepositSteps, step,
                         result.trajectory);
      }
      interpolate_move(camera, home.position, kDepositSteps, step, result.trajectory);
      resolve(berry->id, grasp.outcome, grasp);
    }
  }
  return result;
}

}  // namespace berrysim
