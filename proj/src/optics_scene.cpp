#include "berrysim/optics_scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "berrysim/errors.hpp"

namespace berrysim {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double CameraModel::focal_length_px() const {
  return (image_width_px / 2.0) / std::tan(horizontal_fov_deg * kPi / 360.0);
}

void CameraModel::validate(const std::string& p) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError(p + "." + field + ": " + why);
  };
  if (image_width_px <= 0) fail("image_width_px", "must be > 0");
  if (image_height_px <= 0) fail("image_height_px", "must be > 0");
  if (!(horizontal_fov_deg > 0 && horizontal_fov_deg < 180))
    fail("horizontal_fov_deg", "must be in (0, 180)");
}

void DetectorParams::validate(const std::string& p) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError(p + "." + field + ": " + why);
  };
  if (center_jitter_px < 0) fail("center_jitter_px", "must be >= 0");
  if (size_jitter_frac < 0) fail("size_jitter_frac", "must be >= 0");
  if (!(max_detection_range_mm > 0)) fail("max_detection_range_mm", "must be > 0");
}

std::optional<PixelPoint> project(const Eigen::Vector3d& world_point_mm,
                                  const CameraModel& camera) {
  const Eigen::Vector3d q = camera.pose.to_local(world_point_mm);
  if (q.z() <= 0.0) return std::nullopt;
  const double f = camera.focal_length_px();
  return PixelPoint{camera.cx() + f * q.x() / q.z(),
                    camera.cy() + f * q.y() / q.z()};
}

std::vector<BoundingBox> detect(const Scene& scene, const CameraModel& camera,
                                const DetectorParams& params, Rng& rng) {
  struct Candidate {
    int berry_id;
    double u, v, z, disk_radius_px, size_px;
  };
  const double f = camera.focal_length_px();

  std::vector<Candidate> candidates;
  for (const BerryInstance& berry : scene.berries) {
    if (!berry.attached) continue;
    const Eigen::Vector3d q = camera.pose.to_local(berry.position_mm);
    if (q.z() <= 0.0 || q.z() > params.max_detection_range_mm) continue;
    const double u = camera.cx() + f * q.x() / q.z();
    const double v = camera.cy() + f * q.y() / q.z();
    if (u < 0.0 || u > camera.image_width_px || v < 0.0 || v > camera.image_height_px)
      continue;
    const double size = f * berry.diameter_mm / q.z();
    candidates.push_back({berry.id, u, v, q.z(), 0.5 * size, size});
  }

  std::vector<BoundingBox> boxes;
  boxes.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    bool occluded = false;
    for (const Candidate& other : candidates) {
      if (other.berry_id == c.berry_id || other.z >= c.z) continue;
      const double du = other.u - c.u, dv = other.v - c.v;
      if (std::sqrt(du * du + dv * dv) < other.disk_radius_px) {
        occluded = true;
        break;
      }
    }
    if (occluded) continue;
    BoundingBox box;
    box.berry_id = c.berry_id;
    box.center_u = c.u + rng.normal(0.0, params.center_jitter_px);
    box.center_v = c.v + rng.normal(0.0, params.center_jitter_px);
    box.width = std::max(1e-3, c.size_px * (1.0 + rng.normal(0.0, params.size_jitter_frac)));
    box.height = std::max(1e-3, c.size_px * (1.0 + rng.normal(0.0, params.size_jitter_frac)));
    box.confidence = rng.uniform(0.5, 1.0);
    boxes.push_back(box);
  }
  return boxes;
}

double estimate_depth(const BoundingBox& box, double assumed_diameter_mm,
                      const CameraModel& camera) {
  const double apparent = 0.5 * (box.width + box.height);
  if (!(apparent > 0.0)) throw std::domain_error("bounding box apparent size must be > 0");
  return camera.focal_length_px() * assumed_diameter_mm / apparent;
}

std::optional<BoundingBox> select_target(const std::vector<BoundingBox>& boxes) {
  if (boxes.empty()) return std::nullopt;
  const BoundingBox* best = &boxes.front();
  for (const BoundingBox& b : boxes) {
    if (b.center_u < best->center_u ||
        (b.center_u == best->center_u && b.center_v < best->center_v)) {
      best = &b;
    }
  }
  return *best;
}

}  // namespace berrysim
