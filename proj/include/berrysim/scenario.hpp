#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "berrysim/finger_kinematics.hpp"
#include "berrysim/grasp_dynamics.hpp"
#include "berrysim/optics_scene.hpp"
#include "berrysim/ripeness.hpp"
#include "berrysim/visual_servo.hpp"

namespace berrysim {

enum class ControlMode { Ibvs, Manual };

// One explicitly placed berry. Latents default to draws from the configured
// distributions at scene build; overrides pin them (useful for exact tests
// and for plastic-berry setups).
struct BerrySpec {
  Eigen::Vector3d position_mm = Eigen::Vector3d::Zero();
  double diameter_mm = 19.1;
  Ripeness ripeness = Ripeness::Ripe;
  std::optional<double> latent_reflectance;
  std::optional<double> retention_force_n;
};

// Procedural berry placement: uniform positions in a box, uniform diameters,
// Bernoulli ripeness mix.
struct BerryGenerator {
  int count = 0;
  double ripe_fraction = 1.0;
  Eigen::Vector3d min_corner_mm = Eigen::Vector3d(-100, -50, 300);
  Eigen::Vector3d max_corner_mm = Eigen::Vector3d(100, 50, 450);
  double min_diameter_mm = 17.0;
  double max_diameter_mm = 31.0;
};

// Full run configuration. Every field has a documented default; a minimal
// scenario file only lists berries.
struct Scenario {
  int version = 1;
  std::uint64_t seed = 0;
  ControlMode control_mode = ControlMode::Ibvs;
  bool ripeness_gate = true;  // off for plastic-berry setups: every grasp pulls

  GripperGeometry gripper;
  CameraModel camera;
  DetectorParams detector;
  SensorConfig sensor;
  ReflectanceDistribution reflectance;
  std::optional<double> classification_threshold;  // default: midpoint of class means
  RetentionModel retention;
  GraspParams grasp;
  ServoParams servo;

  Eigen::Vector3d home_position_mm = Eigen::Vector3d::Zero();
  Eigen::Vector3d clamshell_position_mm = Eigen::Vector3d(150, 120, 60);

  std::vector<BerrySpec> berries;
  std::optional<BerryGenerator> generator;
  bool allow_diameter_override = false;  // lifts the 17..31 mm diameter bound
  bool allow_out_of_range = false;       // lifts the within-detection-range bound

  double threshold() const;  // effective classification threshold
  void validate() const;     // throws ValidationError with a field path
};

// Parse/serialize. Unknown keys are rejected so typos surface as errors.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

// Load from a file path; bare preset names resolve against the preset search
// path (BERRYSIM_PRESETS env var, then the built-in preset directory).
Scenario load_scenario(const std::string& path_or_preset);
std::string resolve_scenario_path(const std::string& path_or_preset);

}  // namespace berrysim
