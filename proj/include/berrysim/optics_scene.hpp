#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "berrysim/pose.hpp"
#include "berrysim/rng.hpp"

namespace berrysim {

enum class Ripeness { Ripe, Unripe };

struct BerryInstance {
  int id = 0;
  Eigen::Vector3d position_mm = Eigen::Vector3d::Zero();  // world frame
  double diameter_mm = 19.1;
  Ripeness ripeness = Ripeness::Ripe;
  double latent_reflectance = 0.0;       // analog counts, sampled at scene build
  double latent_retention_force_n = 0.0; // sampled at scene build
  bool attached = true;
};

// Immutable per-tick snapshot; the orchestrator mutates berries between ticks.
struct Scene {
  std::vector<BerryInstance> berries;
};

// Pinhole model matched to the endoscope. Principal point is the image
// centre; focal length derives from the horizontal FOV.
struct CameraModel {
  int image_width_px = 1280;
  int image_height_px = 720;
  double horizontal_fov_deg = 80.0;
  Pose pose;  // camera frame == end-effector frame (eye-in-hand)

  double focal_length_px() const;
  double cx() const { return image_width_px / 2.0; }
  double cy() const { return image_height_px / 2.0; }

  void validate(const std::string& field_prefix = "camera") const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct BoundingBox {
  double center_u = 0.0;
  double center_v = 0.0;
  double width = 0.0;
  double height = 0.0;
  double confidence = 1.0;
  int berry_id = -1;  // simulator bookkeeping; a real detector has no IDs
};

// Detector stub knobs. Zero sigmas give exact projections.
struct DetectorParams {
  double center_jitter_px = 2.0;      // sigma of the per-axis centre jitter
  double size_jitter_frac = 0.03;     // sigma of the multiplicative size jitter
  double max_detection_range_mm = 600.0;

  void validate(const std::string& field_prefix = "detector") const;
};

// World point -> pixel; nullopt when the point is behind the camera (Z <= 0).
std::optional<PixelPoint> project(const Eigen::Vector3d& world_point_mm,
                                  const CameraModel& camera);

// One box per visible attached berry: centre in-image, within range, not
// occluded (a nearer berry's projected disk covering the centre). Boxes are
// emitted in berry-id order; draws consume the RNG deterministically.
std::vector<BoundingBox> detect(const Scene& scene, const CameraModel& camera,
                                const DetectorParams& params, Rng& rng);

// Pinhole inversion from apparent size: depth = f * assumed_d / mean(w, h).
// Throws std::domain_error when the apparent size is not positive.
double estimate_depth(const BoundingBox& box, double assumed_diameter_mm,
                      const CameraModel& camera);

// Left-most rule: minimum center_u, ties broken by minimum center_v.
std::optional<BoundingBox> select_target(const std::vector<BoundingBox>& boxes);

}  // namespace berrysim
