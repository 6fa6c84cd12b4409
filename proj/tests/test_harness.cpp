#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "berrysim/errors.hpp"
#include "berrysim/harness.hpp"

using namespace berrysim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "berrysim_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Scenario three_berry_noiseless() {
  Scenario s = scenario_from_json(nlohmann::json::parse(R"({
    "seed": 5,
    "ripeness_gate": false,
    "detector": {"center_jitter_px": 0.0, "size_jitter_frac": 0.0},
    "berries": [
      {"position_mm": [-60, 0, 400], "retention_force_n": 1.0},
      {"position_mm": [0, 0, 400], "retention_force_n": 1.0},
      {"position_mm": [60, 0, 400], "retention_force_n": 1.0}
    ]
  })"));
  return s;
}

}  // namespace

TEST_CASE("a minimal scenario file gets all documented defaults") {
  const Scenario s = scenario_from_json(nlohmann::json::parse(
      R"({"berries": [{"position_mm": [0, 0, 400]}]})"));
  CHECK(s.gripper.opening_angle_deg == 60.0);
  CHECK(s.gripper.base_radius_mm == 22.0);
  CHECK(s.gripper.spool_diameter_mm == 14.0);
  CHECK(s.camera.image_width_px == 1280);
  CHECK(s.camera.horizontal_fov_deg == 80.0);
  CHECK(s.sensor.wavelength_nm == 870.0);
  CHECK(s.sensor.divider_resistor_kohm == 560.0);
  CHECK(s.reflectance.ripe_mean == 16.78);
  CHECK(s.reflectance.unripe_mean == 21.70);
  CHECK(s.retention.ripe.mean_n == 2.06);
  CHECK(s.retention.unripe.max_n == 7.98);
  CHECK(s.grasp.pull_capacity_n == 4.0);
  CHECK(s.servo.assumed_diameter_mm == 19.1);
  CHECK(s.threshold() == doctest::Approx(19.24));
  CHECK(s.berries.size() == 1);
  CHECK(s.berries[0].diameter_mm == 19.1);
}

TEST_CASE("validation failures carry a field path") {
  CHECK_THROWS_WITH_AS(
      scenario_from_json(nlohmann::json::parse(
          R"({"gripper": {"opening_angle_deg": 95}, "berries": []})")),
      doctest::Contains("opening_angle_deg"), ValidationError);
  CHECK_THROWS_WITH_AS(
      scenario_from_json(nlohmann::json::parse(R"({"speling_error": 1})")),
      doctest::Contains("speling_error"), ValidationError);
  CHECK_THROWS_WITH_AS(
      scenario_from_json(nlohmann::json::parse(
          R"({"berries": [{"position_mm": [0,0,300], "diameter_mm": 40}]})")),
      doctest::Contains("diameter_mm"), ValidationError);
  // the diameter bound lifts with the override flag
  CHECK_NOTHROW(scenario_from_json(nlohmann::json::parse(
      R"({"allow_diameter_override": true,
          "berries": [{"position_mm": [0,0,300], "diameter_mm": 40}]})")));
}

TEST_CASE("shipped presets resolve by bare name") {
  const Scenario s = load_scenario("ur5-lab-3berry");
  CHECK(s.berries.size() == 3);
  CHECK(s.control_mode == ControlMode::Ibvs);
  CHECK_FALSE(s.ripeness_gate);
  CHECK_THROWS_AS(load_scenario("no-such-preset"), ValidationError);
}

TEST_CASE("empty scene run stops immediately with an empty report") {
  const Scenario s = scenario_from_json(nlohmann::json::parse(R"({"berries": []})"));
  const RunResult r = run(s);
  CHECK(r.records.empty());
  CHECK(r.aggregates.total_berries == 0);
  CHECK_FALSE(r.aggregates.efficiency.has_value());
  CHECK(r.exit_code() == 0);
  REQUIRE(!r.trajectory.empty());
  CHECK(r.trajectory.back().phase == ServoPhase::Done);
}

TEST_CASE("noiseless three-berry scenario detaches all in left-most order") {
  const RunResult r = run(three_berry_noiseless());
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0].berry_id == 0);  // x = -60 first
  CHECK(r.records[1].berry_id == 1);
  CHECK(r.records[2].berry_id == 2);
  for (const AttemptRecord& rec : r.records) {
    CHECK(rec.outcome == DetachOutcome::Detached);
    CHECK(rec.approach_steps == 7);
    CHECK(rec.servo_iterations > 0);
  }
  CHECK(r.aggregates.successes == 3);
  CHECK(r.exit_code() == 0);
}

TEST_CASE("the classifier gate skips unripe berries without pulling") {
  Scenario s = three_berry_noiseless();
  s.ripeness_gate = true;
  s.sensor.measurement_noise_sigma = 0.0;
  for (BerrySpec& b : s.berries) {
    b.ripeness = Ripeness::Unripe;
    b.latent_reflectance = 21.70;
    b.retention_force_n.reset();
  }
  const RunResult r = run(s);
  REQUIRE(r.records.size() == 3);
  for (const AttemptRecord& rec : r.records) {
    CHECK(rec.outcome == DetachOutcome::SkippedUnripe);
    REQUIRE(rec.classification.has_value());
    CHECK(*rec.classification == Ripeness::Unripe);
  }
  CHECK(r.aggregates.pull_attempts == 0);
  CHECK_FALSE(r.aggregates.efficiency.has_value());
}

TEST_CASE("manual mode grasps every berry without servoing") {
  Scenario s = three_berry_noiseless();
  s.control_mode = ControlMode::Manual;
  const RunResult r = run(s);
  REQUIRE(r.records.size() == 3);
  for (const AttemptRecord& rec : r.records) {
    CHECK(rec.outcome == DetachOutcome::Detached);
    CHECK(rec.servo_iterations == 0);
  }
  CHECK(r.detections.empty());
}

TEST_CASE("identical scenario and seed give byte-identical artifacts") {
  Scenario s = load_scenario("ur5-lab-3berry");
  const fs::path dir_a = temp_dir("run_a");
  const fs::path dir_b = temp_dir("run_b");
  write_artifacts(run(s), s, dir_a.string());
  write_artifacts(run(s), s, dir_b.string());
  for (const char* name : {"report.json", "trajectory.csv", "detections.csv",
                           "report_table1.csv"}) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }

  // different seed: the noisy detections differ
  const fs::path dir_c = temp_dir("run_c");
  write_artifacts(run(s, 999), s, dir_c.string());
  CHECK(slurp(dir_a / "detections.csv") != slurp(dir_c / "detections.csv"));
}

TEST_CASE("monte carlo of one trial equals the single run") {
  const Scenario s = three_berry_noiseless();
  const MonteCarloResult mc = monte_carlo(s, 1);
  const RunResult single = run(s, derive_seed(s.seed, 0));
  CHECK(mc.pooled.successes == single.aggregates.successes);
  CHECK(mc.pooled.pull_attempts == single.aggregates.pull_attempts);
  REQUIRE(mc.trials.size() == 1);
  CHECK(mc.trials[0].seed == derive_seed(s.seed, 0));
}

TEST_CASE("trial execution order cannot change monte carlo output") {
  Scenario s = load_scenario("ur5-lab-3berry");  // default detection noise
  const int trials = 6;
  const MonteCarloResult forward = monte_carlo(s, trials);
  const std::vector<int> shuffled{4, 0, 5, 2, 1, 3};
  const MonteCarloResult permuted = monte_carlo(s, trials, std::nullopt, &shuffled);
  CHECK(monte_carlo_to_json(forward).dump() == monte_carlo_to_json(permuted).dump());
}

TEST_CASE("every berry appears exactly once in the report with a terminal outcome") {
  Scenario s = load_scenario("field-reflectance-50-50");
  const RunResult r = run(s);
  REQUIRE(r.records.size() == s.berries.size());
  std::vector<int> seen(s.berries.size(), 0);
  for (const AttemptRecord& rec : r.records) seen[static_cast<size_t>(rec.berry_id)]++;
  for (int count : seen) CHECK(count == 1);
}

TEST_CASE("plot emission: converged run has a non-increasing distance column") {
  const Scenario s = load_scenario("ibvs-single-berry-400");
  const fs::path dir = temp_dir("plots_run");
  write_artifacts(run(s), s, dir.string());
  emit_plots(dir.string());

  std::ifstream in(dir / "plots" / "fig_trajectory.csv");
  REQUIRE(in.good());
  std::string line;
  double prev = 1e18;
  int distance_rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header row
      continue;
    }
    const auto last_comma = line.rfind(',');
    const std::string cell = line.substr(last_comma + 1);
    if (cell.empty()) continue;
    const double dist = std::stod(cell);
    CHECK(dist <= prev + 1e-9);
    prev = dist;
    ++distance_rows;
  }
  CHECK(distance_rows > 5);
}

TEST_CASE("plot emission: reflectance csv means land near the configured means") {
  const Scenario s = load_scenario("field-reflectance-50-50");
  const fs::path dir = temp_dir("plots_field");
  write_artifacts(run(s), s, dir.string());
  emit_plots(dir.string());

  std::ifstream in(dir / "plots" / "fig_reflectance.csv");
  REQUIRE(in.good());
  std::string line;
  double ripe_sum = 0, unripe_sum = 0;
  int ripe_n = 0, unripe_n = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string berry_id, true_class, classified, r0, rb, rf;
    std::getline(ss, berry_id, ',');
    std::getline(ss, true_class, ',');
    std::getline(ss, classified, ',');
    std::getline(ss, r0, ',');
    std::getline(ss, rb, ',');
    std::getline(ss, rf, ',');
    if (true_class == "ripe") {
      ripe_sum += std::stod(rf);
      ++ripe_n;
    } else {
      unripe_sum += std::stod(rf);
      ++unripe_n;
    }
  }
  REQUIRE(ripe_n == 50);
  REQUIRE(unripe_n == 50);
  // latent sigma 1.5 and noise 0.5 on each reading: SE ~ 0.23; allow 3 SE
  const double se = std::sqrt((1.5 * 1.5 + 2 * 0.5 * 0.5) / 50.0);
  CHECK(std::abs(ripe_sum / ripe_n - 16.78) < 3 * se);
  CHECK(std::abs(unripe_sum / unripe_n - 21.70) < 3 * se);
}

TEST_CASE("plot emission from an empty run yields headers-only files") {
  const Scenario s = scenario_from_json(nlohmann::json::parse(R"({"berries": []})"));
  const fs::path dir = temp_dir("plots_empty");
  write_artifacts(run(s), s, dir.string());
  emit_plots(dir.string());
  int data_rows = 0;
  std::ifstream in(dir / "plots" / "fig_reflectance.csv");
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++data_rows;
  }
  CHECK(header_seen);
  CHECK(data_rows == 0);
}

TEST_CASE("calibration sample CSVs parse with an optional header") {
  const fs::path dir = temp_dir("csv");
  {
    std::ofstream out(dir / "samples.csv");
    out << "reflectance\n16.5\n17.25\n18\n";
  }
  const std::vector<double> values = read_sample_csv((dir / "samples.csv").string());
  REQUIRE(values.size() == 3);
  CHECK(values[0] == 16.5);
  CHECK(values[1] == 17.25);
  CHECK(values[2] == 18.0);
}

TEST_CASE("table1 csv renders the force rows per class") {
  const Scenario s = load_scenario("field-unripe-pull-10");
  const RunResult r = run(s);
  CHECK(r.aggregates.unripe_force.count == 10);
  const std::string csv = table1_csv(r.aggregates);
  CHECK(csv.find("min_force_n") != std::string::npos);
  CHECK(csv.find("avg_force_n") != std::string::npos);
  CHECK(csv.find("pull_attempts") != std::string::npos);
}
