#include "berrysim/scenario.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "berrysim/errors.hpp"

#ifndef BERRYSIM_PRESET_DIR
#define BERRYSIM_PRESET_DIR ""
#endif

namespace berrysim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw ValidationError(path + ": " + why);
}

// Typed getters with field-path diagnostics.
template <typename T>
void get_to(const json& j, const std::string& path, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    fail(path + "." + key, e.what());
  }
}

void get_vec3(const json& j, const std::string& path, const char* key,
              Eigen::Vector3d& out) {
  if (!j.contains(key)) return;
  const json& arr = j.at(key);
  if (!arr.is_array() || arr.size() != 3) fail(path + "." + key, "expected [x, y, z]");
  for (int i = 0; i < 3; ++i) {
    if (!arr[i].is_number()) fail(path + "." + key, "expected [x, y, z] of numbers");
    out[i] = arr[i].get<double>();
  }
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> known) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) fail(path + "." + it.key(), "unknown field");
  }
}

Ripeness ripeness_from_string(const std::string& s, const std::string& path) {
  if (s == "ripe") return Ripeness::Ripe;
  if (s == "unripe") return Ripeness::Unripe;
  fail(path, "expected \"ripe\" or \"unripe\"");
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

double Scenario::threshold() const {
  if (classification_threshold) return *classification_threshold;
  return 0.5 * (reflectance.ripe_mean + reflectance.unripe_mean);
}

void Scenario::validate() const {
  if (version != 1) throw ValidationError("version: unsupported (expected 1)");
  gripper.validate("gripper");
  camera.validate("camera");
  detector.validate("detector");
  sensor.validate("sensor");
  reflectance.validate("reflectance");
  retention.validate("retention");
  grasp.validate("grasp");
  servo.validate("servo");

  if (berries.empty() && !generator) {
    // An empty scene is legal (the loop stops immediately); only flag the
    // combination of an explicit generator with a nonsensical count.
  }
  if (generator) {
    if (generator->count < 0) throw ValidationError("generator.count: must be >= 0");
    if (!(generator->ripe_fraction >= 0 && generator->ripe_fraction <= 1))
      throw ValidationError("generator.ripe_fraction: must be in [0, 1]");
    if (!(generator->min_diameter_mm <= generator->max_diameter_mm))
      throw ValidationError("generator.min_diameter_mm: must be <= max_diameter_mm");
    if (!allow_diameter_override &&
        (generator->min_diameter_mm < 17.0 || generator->max_diameter_mm > 31.0))
      throw ValidationError(
          "generator.diameter: outside the 17..31 mm design range "
          "(set allow_diameter_override to lift)");
  }
  for (size_t i = 0; i < berries.size(); ++i) {
    const std::string path = "berries[" + std::to_string(i) + "]";
    const BerrySpec& b = berries[i];
    if (!(b.diameter_mm > 0)) throw ValidationError(path + ".diameter_mm: must be > 0");
    if (!allow_diameter_override && (b.diameter_mm < 17.0 || b.diameter_mm > 31.0))
      throw ValidationError(path + ".diameter_mm: outside the 17..31 mm design range "
                            "(set allow_diameter_override to lift)");
    if (b.retention_force_n && !(*b.retention_force_n >= 0))
      throw ValidationError(path + ".retention_force_n: must be >= 0");
    if (control_mode == ControlMode::Ibvs && !allow_out_of_range) {
      const double dist = (b.position_mm - home_position_mm).norm();
      if (dist > detector.max_detection_range_mm)
        throw ValidationError(path + ".position_mm: " + std::to_string(dist) +
                              " mm from home exceeds detector.max_detection_range_mm "
                              "(set allow_out_of_range to lift)");
    }
  }
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  check_keys(j, "$",
             {"version", "seed", "control_mode", "ripeness_gate", "gripper", "camera",
              "detector", "sensor", "reflectance", "classification_threshold",
              "retention", "grasp", "servo", "home_position_mm", "clamshell_position_mm",
              "berries", "generator", "allow_diameter_override", "allow_out_of_range"});
  get_to(j, "$", "version", s.version);
  get_to(j, "$", "seed", s.seed);
  if (j.contains("control_mode")) {
    const std::string mode = j.at("control_mode").get<std::string>();
    if (mode == "ibvs") s.control_mode = ControlMode::Ibvs;
    else if (mode == "manual") s.control_mode = ControlMode::Manual;
    else fail("$.control_mode", "expected \"ibvs\" or \"manual\"");
  }
  get_to(j, "$", "ripeness_gate", s.ripeness_gate);

  if (j.contains("gripper")) {
    const json& g = j.at("gripper");
    check_keys(g, "$.gripper",
               {"finger_neutral_length_mm", "segment_count", "opening_angle_deg",
                "base_radius_mm", "spool_diameter_mm", "servo_range_deg", "finger_count",
                "camera_fov_deg", "base_diameter_mm", "sensor_palm_offset_mm",
                "finger_thickness_mm"});
    get_to(g, "$.gripper", "finger_neutral_length_mm", s.gripper.finger_neutral_length_mm);
    get_to(g, "$.gripper", "segment_count", s.gripper.segment_count);
    get_to(g, "$.gripper", "opening_angle_deg", s.gripper.opening_angle_deg);
    get_to(g, "$.gripper", "base_radius_mm", s.gripper.base_radius_mm);
    get_to(g, "$.gripper", "spool_diameter_mm", s.gripper.spool_diameter_mm);
    get_to(g, "$.gripper", "servo_range_deg", s.gripper.servo_range_deg);
    get_to(g, "$.gripper", "finger_count", s.gripper.finger_count);
    get_to(g, "$.gripper", "camera_fov_deg", s.gripper.camera_fov_deg);
    get_to(g, "$.gripper", "base_diameter_mm", s.gripper.base_diameter_mm);
    get_to(g, "$.gripper", "sensor_palm_offset_mm", s.gripper.sensor_palm_offset_mm);
    get_to(g, "$.gripper", "finger_thickness_mm", s.gripper.finger_thickness_mm);
  }
  if (j.contains("camera")) {
    const json& c = j.at("camera");
    check_keys(c, "$.camera", {"image_width_px", "image_height_px", "horizontal_fov_deg"});
    get_to(c, "$.camera", "image_width_px", s.camera.image_width_px);
    get_to(c, "$.camera", "image_height_px", s.camera.image_height_px);
    get_to(c, "$.camera", "horizontal_fov_deg", s.camera.horizontal_fov_deg);
  }
  if (j.contains("detector")) {
    const json& d = j.at("detector");
    check_keys(d, "$.detector",
               {"center_jitter_px", "size_jitter_frac", "max_detection_range_mm"});
    get_to(d, "$.detector", "center_jitter_px", s.detector.center_jitter_px);
    get_to(d, "$.detector", "size_jitter_frac", s.detector.size_jitter_frac);
    get_to(d, "$.detector", "max_detection_range_mm", s.detector.max_detection_range_mm);
  }
  if (j.contains("sensor")) {
    const json& n = j.at("sensor");
    check_keys(n, "$.sensor",
               {"wavelength_nm", "led_count", "incident_angle_deg", "supply_voltage_v",
                "divider_resistor_kohm", "baseline_r0", "measurement_noise_sigma",
                "contact_tolerance_mm"});
    get_to(n, "$.sensor", "wavelength_nm", s.sensor.wavelength_nm);
    get_to(n, "$.sensor", "led_count", s.sensor.led_count);
    get_to(n, "$.sensor", "incident_angle_deg", s.sensor.incident_angle_deg);
    get_to(n, "$.sensor", "supply_voltage_v", s.sensor.supply_voltage_v);
    get_to(n, "$.sensor", "divider_resistor_kohm", s.sensor.divider_resistor_kohm);
    get_to(n, "$.sensor", "baseline_r0", s.sensor.baseline_r0);
    get_to(n, "$.sensor", "measurement_noise_sigma", s.sensor.measurement_noise_sigma);
    get_to(n, "$.sensor", "contact_tolerance_mm", s.sensor.contact_tolerance_mm);
  }
  if (j.contains("reflectance")) {
    const json& r = j.at("reflectance");
    check_keys(r, "$.reflectance", {"ripe_mean", "ripe_sigma", "unripe_mean", "unripe_sigma"});
    get_to(r, "$.reflectance", "ripe_mean", s.reflectance.ripe_mean);
    get_to(r, "$.reflectance", "ripe_sigma", s.reflectance.ripe_sigma);
    get_to(r, "$.reflectance", "unripe_mean", s.reflectance.unripe_mean);
    get_to(r, "$.reflectance", "unripe_sigma", s.reflectance.unripe_sigma);
  }
  if (j.contains("classification_threshold")) {
    double t = 0;
    get_to(j, "$", "classification_threshold", t);
    s.classification_threshold = t;
  }
  if (j.contains("retention")) {
    const json& r = j.at("retention");
    check_keys(r, "$.retention", {"ripe", "unripe"});
    auto load_class = [&](const char* key, ClassRetention& c) {
      if (!r.contains(key)) return;
      const json& k = r.at(key);
      const std::string path = std::string("$.retention.") + key;
      check_keys(k, path, {"mean_n", "sigma_n", "min_n", "max_n"});
      get_to(k, path, "mean_n", c.mean_n);
      get_to(k, path, "sigma_n", c.sigma_n);
      get_to(k, path, "min_n", c.min_n);
      get_to(k, path, "max_n", c.max_n);
    };
    load_class("ripe", s.retention.ripe);
    load_class("unripe", s.retention.unripe);
  }
  if (j.contains("grasp")) {
    const json& g = j.at("grasp");
    check_keys(g, "$.grasp", {"pull_capacity_n", "slip_failure_prob", "force_pull"});
    get_to(g, "$.grasp", "pull_capacity_n", s.grasp.pull_capacity_n);
    get_to(g, "$.grasp", "slip_failure_prob", s.grasp.slip_failure_prob);
    get_to(g, "$.grasp", "force_pull", s.grasp.force_pull);
  }
  if (j.contains("servo")) {
    const json& v = j.at("servo");
    check_keys(v, "$.servo",
               {"speed_gain", "pixel_tolerance_px", "depth_tolerance_mm", "jog_step_mm",
                "iteration_cap", "assumed_diameter_mm", "condition_bound"});
    get_to(v, "$.servo", "speed_gain", s.servo.speed_gain);
    get_to(v, "$.servo", "pixel_tolerance_px", s.servo.pixel_tolerance_px);
    get_to(v, "$.servo", "depth_tolerance_mm", s.servo.depth_tolerance_mm);
    get_to(v, "$.servo", "jog_step_mm", s.servo.jog_step_mm);
    get_to(v, "$.servo", "iteration_cap", s.servo.iteration_cap);
    get_to(v, "$.servo", "assumed_diameter_mm", s.servo.assumed_diameter_mm);
    get_to(v, "$.servo", "condition_bound", s.servo.condition_bound);
  }
  get_vec3(j, "$", "home_position_mm", s.home_position_mm);
  get_vec3(j, "$", "clamshell_position_mm", s.clamshell_position_mm);

  if (j.contains("berries")) {
    const json& arr = j.at("berries");
    if (!arr.is_array()) fail("$.berries", "expected an array");
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "$.berries[" + std::to_string(i) + "]";
      const json& b = arr[i];
      check_keys(b, path,
                 {"position_mm", "diameter_mm", "ripeness", "latent_reflectance",
                  "retention_force_n"});
      BerrySpec spec;
      get_vec3(b, path, "position_mm", spec.position_mm);
      get_to(b, path, "diameter_mm", spec.diameter_mm);
      if (b.contains("ripeness"))
        spec.ripeness = ripeness_from_string(b.at("ripeness").get<std::string>(),
                                             path + ".ripeness");
      if (b.contains("latent_reflectance"))
        spec.latent_reflectance = b.at("latent_reflectance").get<double>();
      if (b.contains("retention_force_n"))
        spec.retention_force_n = b.at("retention_force_n").get<double>();
      s.berries.push_back(spec);
    }
  }
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    check_keys(g, "$.generator",
               {"count", "ripe_fraction", "min_corner_mm", "max_corner_mm",
                "min_diameter_mm", "max_diameter_mm"});
    BerryGenerator gen;
    get_to(g, "$.generator", "count", gen.count);
    get_to(g, "$.generator", "ripe_fraction", gen.ripe_fraction);
    get_vec3(g, "$.generator", "min_corner_mm", gen.min_corner_mm);
    get_vec3(g, "$.generator", "max_corner_mm", gen.max_corner_mm);
    get_to(g, "$.generator", "min_diameter_mm", gen.min_diameter_mm);
    get_to(g, "$.generator", "max_diameter_mm", gen.max_diameter_mm);
    s.generator = gen;
  }
  get_to(j, "$", "allow_diameter_override", s.allow_diameter_override);
  get_to(j, "$", "allow_out_of_range", s.allow_out_of_range);

  s.validate();
  return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  json j;
  j["version"] = s.version;
  j["seed"] = s.seed;
  j["control_mode"] = s.control_mode == ControlMode::Ibvs ? "ibvs" : "manual";
  j["ripeness_gate"] = s.ripeness_gate;
  j["gripper"] = {{"finger_neutral_length_mm", s.gripper.finger_neutral_length_mm},
                  {"segment_count", s.gripper.segment_count},
                  {"opening_angle_deg", s.gripper.opening_angle_deg},
                  {"base_radius_mm", s.gripper.base_radius_mm},
                  {"spool_diameter_mm", s.gripper.spool_diameter_mm},
                  {"servo_range_deg", s.gripper.servo_range_deg},
                  {"finger_count", s.gripper.finger_count},
                  {"camera_fov_deg", s.gripper.camera_fov_deg},
                  {"base_diameter_mm", s.gripper.base_diameter_mm},
                  {"sensor_palm_offset_mm", s.gripper.sensor_palm_offset_mm},
                  {"finger_thickness_mm", s.gripper.finger_thickness_mm}};
  j["camera"] = {{"image_width_px", s.camera.image_width_px},
                 {"image_height_px", s.camera.image_height_px},
                 {"horizontal_fov_deg", s.camera.horizontal_fov_deg}};
  j["detector"] = {{"center_jitter_px", s.detector.center_jitter_px},
                   {"size_jitter_frac", s.detector.size_jitter_frac},
                   {"max_detection_range_mm", s.detector.max_detection_range_mm}};
  j["sensor"] = {{"wavelength_nm", s.sensor.wavelength_nm},
                 {"led_count", s.sensor.led_count},
                 {"incident_angle_deg", s.sensor.incident_angle_deg},
                 {"supply_voltage_v", s.sensor.supply_voltage_v},
                 {"divider_resistor_kohm", s.sensor.divider_resistor_kohm},
                 {"baseline_r0", s.sensor.baseline_r0},
                 {"measurement_noise_sigma", s.sensor.measurement_noise_sigma},
                 {"contact_tolerance_mm", s.sensor.contact_tolerance_mm}};
  j["reflectance"] = {{"ripe_mean", s.reflectance.ripe_mean},
                      {"ripe_sigma", s.reflectance.ripe_sigma},
                      {"unripe_mean", s.reflectance.unripe_mean},
                      {"unripe_sigma", s.reflectance.unripe_sigma}};
  if (s.classification_threshold) j["classification_threshold"] = *s.classification_threshold;
  j["retention"] = {{"ripe",
                     {{"mean_n", s.retention.ripe.mean_n},
                      {"sigma_n", s.retention.ripe.sigma_n},
                      {"min_n", s.retention.ripe.min_n},
                      {"max_n", s.retention.ripe.max_n}}},
                    {"unripe",
                     {{"mean_n", s.retention.unripe.mean_n},
                      {"sigma_n", s.retention.unripe.sigma_n},
                      {"min_n", s.retention.unripe.min_n},
                      {"max_n", s.retention.unripe.max_n}}}};
  j["grasp"] = {{"pull_capacity_n", s.grasp.pull_capacity_n},
                {"slip_failure_prob", s.grasp.slip_failure_prob},
                {"force_pull", s.grasp.force_pull}};
  j["servo"] = {{"speed_gain", s.servo.speed_gain},
                {"pixel_tolerance_px", s.servo.pixel_tolerance_px},
                {"depth_tolerance_mm", s.servo.depth_tolerance_mm},
                {"jog_step_mm", s.servo.jog_step_mm},
                {"iteration_cap", s.servo.iteration_cap},
                {"assumed_diameter_mm", s.servo.assumed_diameter_mm},
                {"condition_bound", s.servo.condition_bound}};
  j["home_position_mm"] = vec3_to_json(s.home_position_mm);
  j["clamshell_position_mm"] = vec3_to_json(s.clamshell_position_mm);
  j["berries"] = json::array();
  for (const BerrySpec& b : s.berries) {
    json e = {{"position_mm", vec3_to_json(b.position_mm)},
              {"diameter_mm", b.diameter_mm},
              {"ripeness", b.ripeness == Ripeness::Ripe ? "ripe" : "unripe"}};
    if (b.latent_reflectance) e["latent_reflectance"] = *b.latent_reflectance;
    if (b.retention_force_n) e["retention_force_n"] = *b.retention_force_n;
    j["berries"].push_back(e);
  }
  if (s.generator) {
    j["generator"] = {{"count", s.generator->count},
                      {"ripe_fraction", s.generator->ripe_fraction},
                      {"min_corner_mm", vec3_to_json(s.generator->min_corner_mm)},
                      {"max_corner_mm", vec3_to_json(s.generator->max_corner_mm)},
                      {"min_diameter_mm", s.generator->min_diameter_mm},
                      {"max_diameter_mm", s.generator->max_diameter_mm}};
  }
  j["allow_diameter_override"] = s.allow_diameter_override;
  j["allow_out_of_range"] = s.allow_out_of_range;
  return j;
}

std::string resolve_scenario_path(const std::string& path_or_preset) {
  namespace fs = std::filesystem;
  if (fs::exists(path_or_preset)) return path_or_preset;
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("BERRYSIM_PRESETS")) dirs.emplace_back(env);
  if (std::string(BERRYSIM_PRESET_DIR).size()) dirs.emplace_back(BERRYSIM_PRESET_DIR);
  for (const fs::path& dir : dirs) {
    for (const std::string& name : {path_or_preset, path_or_preset + ".json"}) {
      const fs::path candidate = dir / name;
      if (fs::exists(candidate)) return candidate.string();
    }
  }
  throw ValidationError("scenario not found: " + path_or_preset);
}

Scenario load_scenario(const std::string& path_or_preset) {
  const std::string path = resolve_scenario_path(path_or_preset);
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": parse error: " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace berrysim
