// pybind11 surface: the core operations plus JSON-string entry points for
// whole runs, so python callers get dicts via json.loads.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "berrysim/errors.hpp"
#include "berrysim/harness.hpp"

namespace py = pybind11;
using namespace berrysim;

namespace {

std::string run_scenario_json(const std::string& path, const std::string& out_dir,
                              std::optional<std::uint64_t> seed) {
  const Scenario scenario = load_scenario(path);
  const RunResult result = run(scenario, seed);
  if (!out_dir.empty()) write_artifacts(result, scenario, out_dir);
  return report_to_json(result).dump();
}

std::string monte_carlo_json(const std::string& path, int trials,
                             std::optional<std::uint64_t> seed,
                             const std::string& out_dir) {
  const Scenario scenario = load_scenario(path);
  const MonteCarloResult mc = monte_carlo(scenario, trials, seed);
  if (!out_dir.empty()) write_monte_carlo_artifacts(mc, scenario, out_dir);
  return monte_carlo_to_json(mc).dump();
}

}  // namespace

PYBIND11_MODULE(_berrysim, m) {
  m.doc() = "Deterministic tendon-gripper harvesting simulator (core bindings)";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NotSeparableError>(m, "NotSeparableError", PyExc_ValueError);
  py::register_exception<NotInContactError>(m, "NotInContactError", PyExc_RuntimeError);
  py::register_exception<InfeasibleTargetError>(m, "InfeasibleTargetError",
                                                PyExc_ValueError);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform01", &Rng::uniform01)
      .def("uniform", &Rng::uniform, py::arg("lo"), py::arg("hi"))
      .def("normal", &Rng::normal, py::arg("mean") = 0.0, py::arg("sigma") = 1.0)
      .def("bernoulli", &Rng::bernoulli, py::arg("p"));
  m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("index"));

  py::enum_<Ripeness>(m, "Ripeness")
      .value("Ripe", Ripeness::Ripe)
      .value("Unripe", Ripeness::Unripe);
  py::enum_<DetachOutcome>(m, "DetachOutcome")
      .value("Detached", DetachOutcome::Detached)
      .value("StillOnStem", DetachOutcome::StillOnStem)
      .value("Slip", DetachOutcome::Slip)
      .value("SkippedUnripe", DetachOutcome::SkippedUnripe)
      .value("NonConvergence", DetachOutcome::NonConvergence)
      .value("Undetected", DetachOutcome::Undetected);
  py::enum_<ThresholdMode>(m, "ThresholdMode")
      .value("MeanMidpoint", ThresholdMode::MeanMidpoint)
      .value("MinError", ThresholdMode::MinError);

  py::class_<GripperGeometry>(m, "GripperGeometry")
      .def(py::init<>())
      .def_readwrite("finger_neutral_length_mm", &GripperGeometry::finger_neutral_length_mm)
      .def_readwrite("segment_count", &GripperGeometry::segment_count)
      .def_readwrite("opening_angle_deg", &GripperGeometry::opening_angle_deg)
      .def_readwrite("base_radius_mm", &GripperGeometry::base_radius_mm)
      .def_readwrite("spool_diameter_mm", &GripperGeometry::spool_diameter_mm)
      .def_readwrite("servo_range_deg", &GripperGeometry::servo_range_deg)
      .def_readwrite("finger_count", &GripperGeometry::finger_count)
      .def_readwrite("camera_fov_deg", &GripperGeometry::camera_fov_deg)
      .def_readwrite("base_diameter_mm", &GripperGeometry::base_diameter_mm)
      .def_readwrite("sensor_palm_offset_mm", &GripperGeometry::sensor_palm_offset_mm)
      .def_readwrite("finger_thickness_mm", &GripperGeometry::finger_thickness_mm)
      .def("validate", [](const GripperGeometry& g) { g.validate(); });

  py::class_<FingerConfiguration>(m, "FingerConfiguration")
      .def(py::init<>())
      .def_readwrite("curvature_per_mm", &FingerConfiguration::curvature_per_mm)
      .def_readwrite("segment_length_mm", &FingerConfiguration::segment_length_mm)
      .def_readwrite("tendon_retraction_mm", &FingerConfiguration::tendon_retraction_mm)
      .def_readonly("saturated", &FingerConfiguration::saturated);

  py::class_<FingertipState>(m, "FingertipState")
      .def_readonly("radial_mm", &FingertipState::radial_mm)
      .def_readonly("axial_mm", &FingertipState::axial_mm)
      .def_readonly("tangent_angle_rad", &FingertipState::tangent_angle_rad);

  py::class_<PlanarPoint>(m, "PlanarPoint")
      .def_readonly("radial_mm", &PlanarPoint::radial_mm)
      .def_readonly("axial_mm", &PlanarPoint::axial_mm);

  py::class_<FingerKinematics>(m, "FingerKinematics")
      .def(py::init<const GripperGeometry&>(), py::arg("geometry"))
      .def("tendon_retraction_from_servo", &FingerKinematics::tendon_retraction_from_servo,
           py::arg("servo_angle_deg"))
      .def("full_travel_mm", &FingerKinematics::full_travel_mm)
      .def("curvature_gain_per_mm2", &FingerKinematics::curvature_gain_per_mm2)
      .def("closing_curvature_per_mm", &FingerKinematics::closing_curvature_per_mm)
      .def("curvature_from_retraction", &FingerKinematics::curvature_from_retraction,
           py::arg("retraction_mm"))
      .def("pcc_forward", &FingerKinematics::pcc_forward, py::arg("config"))
      .def("arc_points", &FingerKinematics::arc_points, py::arg("config"),
           py::arg("samples_per_segment") = 64)
      .def("grasp_aperture", &FingerKinematics::grasp_aperture, py::arg("config"))
      .def("fov_clearance", &FingerKinematics::fov_clearance, py::arg("config"),
           py::arg("samples_per_segment") = 64)
      .def("retraction_for_aperture", &FingerKinematics::retraction_for_aperture,
           py::arg("aperture_mm"))
      .def("fingertip_positions", &FingerKinematics::fingertip_positions,
           py::arg("config"));

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def_readwrite("position", &Pose::position)
      .def_readwrite("rotation", &Pose::rotation);

  py::class_<CameraModel>(m, "CameraModel")
      .def(py::init<>())
      .def_readwrite("image_width_px", &CameraModel::image_width_px)
      .def_readwrite("image_height_px", &CameraModel::image_height_px)
      .def_readwrite("horizontal_fov_deg", &CameraModel::horizontal_fov_deg)
      .def_readwrite("pose", &CameraModel::pose)
      .def("focal_length_px", &CameraModel::focal_length_px)
      .def("cx", &CameraModel::cx)
      .def("cy", &CameraModel::cy);

  py::class_<PixelPoint>(m, "PixelPoint")
      .def_readonly("u", &PixelPoint::u)
      .def_readonly("v", &PixelPoint::v);

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def_readwrite("center_u", &BoundingBox::center_u)
      .def_readwrite("center_v", &BoundingBox::center_v)
      .def_readwrite("width", &BoundingBox::width)
      .def_readwrite("height", &BoundingBox::height)
      .def_readwrite("confidence", &BoundingBox::confidence)
      .def_readwrite("berry_id", &BoundingBox::berry_id);

  py::class_<BerryInstance>(m, "BerryInstance")
      .def(py::init<>())
      .def_readwrite("id", &BerryInstance::id)
      .def_readwrite("position_mm", &BerryInstance::position_mm)
      .def_readwrite("diameter_mm", &BerryInstance::diameter_mm)
      .def_readwrite("ripeness", &BerryInstance::ripeness)
      .def_readwrite("latent_reflectance", &BerryInstance::latent_reflectance)
      .def_readwrite("latent_retention_force_n", &BerryInstance::latent_retention_force_n)
      .def_readwrite("attached", &BerryInstance::attached);

  py::class_<Scene>(m, "Scene")
      .def(py::init<>())
      .def_readwrite("berries", &Scene::berries);

  py::class_<DetectorParams>(m, "DetectorParams")
      .def(py::init<>())
      .def_readwrite("center_jitter_px", &DetectorParams::center_jitter_px)
      .def_readwrite("size_jitter_frac", &DetectorParams::size_jitter_frac)
      .def_readwrite("max_detection_range_mm", &DetectorParams::max_detection_range_mm);

  m.def("project", &project, py::arg("world_point_mm"), py::arg("camera"));
  m.def("detect", &detect, py::arg("scene"), py::arg("camera"), py::arg("params"),
        py::arg("rng"));
  m.def("estimate_depth", &estimate_depth, py::arg("box"), py::arg("assumed_diameter_mm"),
        py::arg("camera"));
  m.def("select_target", &select_target, py::arg("boxes"));

  py::class_<SensorConfig>(m, "SensorConfig")
      .def(py::init<>())
      .def_readwrite("wavelength_nm", &SensorConfig::wavelength_nm)
      .def_readwrite("led_count", &SensorConfig::led_count)
      .def_readwrite("incident_angle_deg", &SensorConfig::incident_angle_deg)
      .def_readwrite("supply_voltage_v", &SensorConfig::supply_voltage_v)
      .def_readwrite("divider_resistor_kohm", &SensorConfig::divider_resistor_kohm)
      .def_readwrite("baseline_r0", &SensorConfig::baseline_r0)
      .def_readwrite("measurement_noise_sigma", &SensorConfig::measurement_noise_sigma)
      .def_readwrite("contact_tolerance_mm", &SensorConfig::contact_tolerance_mm);

  py::class_<ReflectanceDistribution>(m, "ReflectanceDistribution")
      .def(py::init<>())
      .def_readwrite("ripe_mean", &ReflectanceDistribution::ripe_mean)
      .def_readwrite("ripe_sigma", &ReflectanceDistribution::ripe_sigma)
      .def_readwrite("unripe_mean", &ReflectanceDistribution::unripe_mean)
      .def_readwrite("unripe_sigma", &ReflectanceDistribution::unripe_sigma);

  py::class_<ReflectanceReading>(m, "ReflectanceReading")
      .def_readonly("r0", &ReflectanceReading::r0)
      .def_readonly("rb", &ReflectanceReading::rb)
      .def_readonly("rf", &ReflectanceReading::rf)
      .def_readonly("berry_id", &ReflectanceReading::berry_id);

  m.def("sample_latent_reflectance", &sample_latent_reflectance, py::arg("ripeness"),
        py::arg("dist"), py::arg("rng"));
  m.def("measure", &measure, py::arg("berry"), py::arg("sensor"), py::arg("palm_gap_mm"),
        py::arg("rng"));
  m.def(
      "fit_threshold",
      [](const std::vector<double>& ripe, const std::vector<double>& unripe,
         ThresholdMode mode) { return fit_threshold(ripe, unripe, mode); },
      py::arg("ripe_samples"), py::arg("unripe_samples"),
      py::arg("mode") = ThresholdMode::MeanMidpoint);
  m.def("classify", &classify, py::arg("rf"), py::arg("threshold"));

  py::class_<ClassRetention>(m, "ClassRetention")
      .def(py::init<>())
      .def_readwrite("mean_n", &ClassRetention::mean_n)
      .def_readwrite("sigma_n", &ClassRetention::sigma_n)
      .def_readwrite("min_n", &ClassRetention::min_n)
      .def_readwrite("max_n", &ClassRetention::max_n);

  py::class_<RetentionModel>(m, "RetentionModel")
      .def(py::init<>())
      .def_readwrite("ripe", &RetentionModel::ripe)
      .def_readwrite("unripe", &RetentionModel::unripe);

  py::class_<GraspParams>(m, "GraspParams")
      .def(py::init<>())
      .def_readwrite("pull_capacity_n", &GraspParams::pull_capacity_n)
      .def_readwrite("slip_failure_prob", &GraspParams::slip_failure_prob)
      .def_readwrite("force_pull", &GraspParams::force_pull);

  m.def("sample_retention", &sample_retention, py::arg("ripeness"), py::arg("model"),
        py::arg("rng"));
  m.def("attempt_detach", &attempt_detach, py::arg("retention_n"), py::arg("params"),
        py::arg("classification"), py::arg("rng"));
  m.def("detach_probability", &detach_probability, py::arg("ripeness"), py::arg("model"),
        py::arg("params"));
  m.def("calibrate_slip", &calibrate_slip, py::arg("target_efficiency"), py::arg("model"),
        py::arg("params"));
  m.def("normal_cdf", &normal_cdf, py::arg("z"));

  py::class_<ServoParams>(m, "ServoParams")
      .def(py::init<>())
      .def_readwrite("speed_gain", &ServoParams::speed_gain)
      .def_readwrite("pixel_tolerance_px", &ServoParams::pixel_tolerance_px)
      .def_readwrite("depth_tolerance_mm", &ServoParams::depth_tolerance_mm)
      .def_readwrite("jog_step_mm", &ServoParams::jog_step_mm)
      .def_readwrite("iteration_cap", &ServoParams::iteration_cap)
      .def_readwrite("assumed_diameter_mm", &ServoParams::assumed_diameter_mm)
      .def_readwrite("condition_bound", &ServoParams::condition_bound);

  m.def("calibrate_jacobian", &calibrate_jacobian, py::arg("scene"), py::arg("camera"),
        py::arg("detector"), py::arg("target_berry_id"), py::arg("jog_step_mm"),
        py::arg("rng"));
  m.def("estimate_image_jacobian", &estimate_image_jacobian, py::arg("observe_target"),
        py::arg("jog_step_mm"));
  m.def("centering_step", &centering_step, py::arg("jacobian"), py::arg("speed_gain"),
        py::arg("pixel_error"), py::arg("condition_bound") = 1e6);
  m.def("approach_step", &approach_step, py::arg("estimated_depth_mm"),
        py::arg("standoff_mm"));

  m.def("resolve_scenario_path", &resolve_scenario_path, py::arg("path_or_preset"));
  m.def("run_scenario_json", &run_scenario_json, py::arg("path"),
        py::arg("out_dir") = std::string(), py::arg("seed") = std::nullopt,
        "Run a scenario; returns the report as a JSON string. Writes artifacts "
        "when out_dir is non-empty.");
  m.def("monte_carlo_json", &monte_carlo_json, py::arg("path"), py::arg("trials"),
        py::arg("seed") = std::nullopt, py::arg("out_dir") = std::string(),
        "Run independent trials; returns the aggregate report as a JSON string.");
  m.def(
      "emit_plots",
      [](const std::string& run_dir, const std::string& plots_dir) {
        emit_plots(run_dir, plots_dir);
      },
      py::arg("run_dir"), py::arg("plots_dir") = std::string());

  m.attr("__version__") = kVersion;
}
