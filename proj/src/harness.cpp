#include "berrysim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "berrysim/errors.hpp"

namespace berrysim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string ripeness_name(Ripeness r) { return r == Ripeness::Ripe ? "ripe" : "unripe"; }

json force_stats_to_json(const ClassForceStats& s) {
  json j;
  j["count"] = s.count;
  if (s.count > 0) {
    j["min_n"] = s.min_n;
    j["max_n"] = s.max_n;
    j["mean_n"] = s.mean_n;
    j["stddev_n"] = s.stddev_n;
    j["mean_diameter_mm"] = s.mean_diameter_mm;
  }
  return j;
}

json aggregates_to_json(const HarvestAggregates& a) {
  json j;
  j["total_berries"] = a.total_berries;
  j["pull_attempts"] = a.pull_attempts;
  j["successes"] = a.successes;
  j["still_on_stem"] = a.still_on_stem;
  j["slips"] = a.slips;
  j["skipped"] = a.skipped;
  j["nonconverged"] = a.nonconverged;
  j["undetected"] = a.undetected;
  j["efficiency"] = a.efficiency ? json(*a.efficiency) : json(nullptr);
  j["classification"] = {
      {"measured", a.measured},
      {"correct", a.classified_correctly},
      {"accuracy",
       a.classification_accuracy ? json(*a.classification_accuracy) : json(nullptr)}};
  j["force_stats"] = {{"ripe", force_stats_to_json(a.ripe_force)},
                      {"unripe", force_stats_to_json(a.unripe_force)}};
  j["total_servo_iterations"] = a.total_servo_iterations;
  return j;
}

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace

Scene build_scene(const Scenario& scenario, Rng& rng) {
  Scene scene;
  int next_id = 0;
  auto fill_latents = [&](BerryInstance& berry, const std::optional<double>& refl,
                          const std::optional<double>& force) {
    berry.latent_reflectance =
        refl ? *refl : sample_latent_reflectance(berry.ripeness, scenario.reflectance, rng);
    berry.latent_retention_force_n =
        force ? *force : sample_retention(berry.ripeness, scenario.retention, rng);
  };
  for (const BerrySpec& spec : scenario.berries) {
    BerryInstance berry;
    berry.id = next_id++;
    berry.position_mm = spec.position_mm;
    berry.diameter_mm = spec.diameter_mm;
    berry.ripeness = spec.ripeness;
    fill_latents(berry, spec.latent_reflectance, spec.retention_force_n);
    scene.berries.push_back(berry);
  }
  if (scenario.generator) {
    const BerryGenerator& gen = *scenario.generator;
    for (int i = 0; i < gen.count; ++i) {
      BerryInstance berry;
      berry.id = next_id++;
      for (int axis = 0; axis < 3; ++axis)
        berry.position_mm[axis] =
            rng.uniform(gen.min_corner_mm[axis], gen.max_corner_mm[axis]);
      berry.diameter_mm = rng.uniform(gen.min_diameter_mm, gen.max_diameter_mm);
      berry.ripeness = rng.bernoulli(gen.ripe_fraction) ? Ripeness::Ripe : Ripeness::Unripe;
      fill_latents(berry, std::nullopt, std::nullopt);
      scene.berries.push_back(berry);
    }
  }
  return scene;
}

RunResult run(const Scenario& scenario, std::optional<std::uint64_t> seed_override) {
  scenario.validate();
  RunResult result;
  result.seed_used = seed_override.value_or(scenario.seed);
  Rng rng(result.seed_used);
  Scene scene = build_scene(scenario, rng);

  const FingerKinematics kinematics(scenario.gripper);
  const double threshold = scenario.threshold();

  auto grasp_handler = [&](BerryInstance& berry, double palm_gap_mm,
                           Rng& r) -> GraspResult {
    GraspResult res;
    Ripeness pull_class = Ripeness::Ripe;  // no gate: every grasped berry is pulled
    if (scenario.ripeness_gate) {
      res.reading = measure(berry, scenario.sensor, palm_gap_mm, r);
      res.classification = classify(res.reading->rf, threshold);
      pull_class = *res.classification;
    }
    // Close the fingers onto the berry; full travel if it is below the
    // minimum achievable aperture.
    (void)kinematics.retraction_for_aperture(berry.diameter_mm);
    res.outcome =
        attempt_detach(berry.latent_retention_force_n, scenario.grasp, pull_class, r);
    return res;
  };

  auto record_for = [&](const BerryInstance& berry) {
    AttemptRecord rec;
    rec.berry_id = berry.id;
    rec.true_ripeness = berry.ripeness;
    rec.retention_force_n = berry.latent_retention_force_n;
    rec.diameter_mm = berry.diameter_mm;
    return rec;
  };

  if (scenario.control_mode == ControlMode::Manual) {
    // Manual positioning (the field-campaign procedure): every berry is
    // brought to the palm directly; no servo loop, no detections.
    result.trajectory.push_back({0, ServoPhase::Grasp, scenario.home_position_mm,
                                 std::nullopt, std::nullopt});
    for (BerryInstance& berry : scene.berries) {
      AttemptRecord rec = record_for(berry);
      const GraspResult res = grasp_handler(berry, 0.0, rng);
      if (res.outcome == DetachOutcome::Detached) berry.attached = false;
      rec.classification = res.classification;
      rec.reading = res.reading;
      rec.outcome = res.outcome;
      result.records.push_back(rec);
    }
    result.trajectory.push_back({1, ServoPhase::Done, scenario.home_position_mm,
                                 std::nullopt, std::nullopt});
  } else {
    CameraModel camera = scenario.camera;
    Pose home;
    home.position = scenario.home_position_mm;
    IbvsResult ibvs = run_ibvs(scene, camera, scenario.detector, scenario.servo,
                               scenario.gripper.sensor_palm_offset_mm, home,
                               scenario.clamshell_position_mm, grasp_handler, rng);
    result.trajectory = std::move(ibvs.trajectory);
    result.detections = std::move(ibvs.detections);
    result.nonconvergence = ibvs.nonconvergence;

    // Records in harvest-attempt order, then berries never resolved.
    std::vector<bool> reported(scene.berries.size(), false);
    auto berry_by_id = [&](int id) -> const BerryInstance& {
      return *std::find_if(scene.berries.begin(), scene.berries.end(),
                           [&](const BerryInstance& b) { return b.id == id; });
    };
    for (int id : ibvs.resolution_order) {
      const BerryServoStats& stats = ibvs.per_berry.at(id);
      AttemptRecord rec = record_for(berry_by_id(id));
      rec.classification = stats.grasp.classification;
      rec.reading = stats.grasp.reading;
      rec.outcome = stats.outcome;
      rec.servo_iterations = stats.servo_iterations;
      rec.approach_steps = stats.approach_steps;
      result.records.push_back(rec);
      reported[static_cast<size_t>(id)] = true;
    }
    for (const BerryInstance& berry : scene.berries) {
      if (reported[static_cast<size_t>(berry.id)]) continue;
      AttemptRecord rec = record_for(berry);
      const auto it = ibvs.per_berry.find(berry.id);
      if (it != ibvs.per_berry.end()) {
        rec.servo_iterations = it->second.servo_iterations;
        rec.approach_steps = it->second.approach_steps;
      }
      rec.outcome = DetachOutcome::Undetected;
      result.records.push_back(rec);
    }
  }

  result.aggregates = aggregate(result.records);
  return result;
}

json report_to_json(const RunResult& result) {
  json j;
  j["version"] = kVersion;
  j["seed"] = result.seed_used;
  j["nonconvergence"] = result.nonconvergence;
  j["aggregates"] = aggregates_to_json(result.aggregates);
  j["attempts"] = json::array();
  for (const AttemptRecord& rec : result.records) {
    json e;
    e["berry_id"] = rec.berry_id;
    e["true_ripeness"] = ripeness_name(rec.true_ripeness);
    e["classification"] =
        rec.classification ? json(ripeness_name(*rec.classification)) : json(nullptr);
    if (rec.reading) {
      e["reflectance"] = {{"r0", rec.reading->r0},
                          {"rb", rec.reading->rb},
                          {"rf", rec.reading->rf}};
    } else {
      e["reflectance"] = nullptr;
    }
    e["retention_force_n"] = rec.retention_force_n;
    e["diameter_mm"] = rec.diameter_mm;
    e["outcome"] = to_string(rec.outcome);
    e["servo_iterations"] = rec.servo_iterations;
    e["approach_steps"] = rec.approach_steps;
    j["attempts"].push_back(e);
  }
  return j;
}

std::string table1_csv(const HarvestAggregates& agg) {
  const ClassForceStats& r = agg.ripe_force;
  const ClassForceStats& u = agg.unripe_force;
  auto cell = [](const ClassForceStats& s, double ClassForceStats::*field) {
    return s.count > 0 ? fmt(s.*field) : std::string();
  };
  std::ostringstream out;
  out << "parameter,ripe,unripe\n";
  out << "min_force_n," << cell(r, &ClassForceStats::min_n) << ","
      << cell(u, &ClassForceStats::min_n) << "\n";
  out << "max_force_n," << cell(r, &ClassForceStats::max_n) << ","
      << cell(u, &ClassForceStats::max_n) << "\n";
  out << "avg_force_n," << cell(r, &ClassForceStats::mean_n) << ","
      << cell(u, &ClassForceStats::mean_n) << "\n";
  out << "std_force_n," << cell(r, &ClassForceStats::stddev_n) << ","
      << cell(u, &ClassForceStats::stddev_n) << "\n";
  out << "avg_diameter_mm," << cell(r, &ClassForceStats::mean_diameter_mm) << ","
      << cell(u, &ClassForceStats::mean_diameter_mm) << "\n";
  out << "pull_attempts," << r.count << "," << u.count << "\n";
  return out.str();
}

namespace {

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::ostringstream out;
  out << "step,phase,x_mm,y_mm,z_mm,pixel_error_px,estimated_depth_mm\n";
  for (const TrajectoryRow& row : rows) {
    out << row.step << "," << to_string(row.phase) << "," << fmt(row.position.x()) << ","
        << fmt(row.position.y()) << "," << fmt(row.position.z()) << ","
        << fmt_opt(row.pixel_error_px) << "," << fmt_opt(row.estimated_depth_mm) << "\n";
  }
  return out.str();
}

std::string detections_csv(const std::vector<DetectionRow>& rows) {
  std::ostringstream out;
  out << "tick,berry_id,u_px,v_px,width_px,height_px,confidence\n";
  for (const DetectionRow& row : rows) {
    out << row.tick << "," << row.box.berry_id << "," << fmt(row.box.center_u) << ","
        << fmt(row.box.center_v) << "," << fmt(row.box.width) << ","
        << fmt(row.box.height) << "," << fmt(row.box.confidence) << "\n";
  }
  return out.str();
}

}  // namespace

void write_artifacts(const RunResult& result, const Scenario& scenario,
                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file(dir / "report.json", report_to_json(result).dump(2) + "\n");
  write_file(dir / "report_table1.csv", table1_csv(result.aggregates));
  write_file(dir / "trajectory.csv", trajectory_csv(result.trajectory));
  write_file(dir / "detections.csv", detections_csv(result.detections));
  json manifest;
  manifest["code_version"] = kVersion;
  manifest["seed"] = result.seed_used;
  manifest["generated_at"] = iso_timestamp();  // timestamps live only here
  manifest["scenario"] = scenario_to_json(scenario);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ConfidenceInterval binomial_ci(int successes, int n) {
  if (n <= 0) return {0.0, 0.0};
  const double z = 1.959963984540054;
  const double p = static_cast<double>(successes) / n;
  const double z2n = z * z / n;
  const double denom = 1.0 + z2n;
  const double centre = (p + z2n / 2.0) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / denom;
  return {centre - half, centre + half};
}

MonteCarloResult monte_carlo(const Scenario& scenario, int trials,
                             std::optional<std::uint64_t> master_seed,
                             const std::vector<int>* execution_order) {
  if (trials < 1) throw std::invalid_argument("monte_carlo requires trials >= 1");
  MonteCarloResult mc;
  mc.master_seed = master_seed.value_or(scenario.seed);

  std::vector<int> order;
  if (execution_order) {
    order = *execution_order;
    if (static_cast<int>(order.size()) != trials)
      throw std::invalid_argument("execution_order must be a permutation of 0..trials-1");
  } else {
    order.resize(trials);
    for (int i = 0; i < trials; ++i) order[i] = i;
  }

  mc.trials.resize(trials);
  std::vector<std::vector<AttemptRecord>> per_trial_records(trials);
  for (int idx : order) {
    const std::uint64_t seed = derive_seed(mc.master_seed, static_cast<std::uint64_t>(idx));
    const RunResult r = run(scenario, seed);
    TrialSummary& t = mc.trials[idx];
    t.trial = idx;
    t.seed = seed;
    t.pull_attempts = r.aggregates.pull_attempts;
    t.successes = r.aggregates.successes;
    t.efficiency = r.aggregates.efficiency;
    t.measured = r.aggregates.measured;
    t.classified_correctly = r.aggregates.classified_correctly;
    t.nonconvergence = r.nonconvergence;
    if (r.nonconvergence) mc.nonconvergence = true;
    per_trial_records[idx] = r.records;
  }
  std::vector<AttemptRecord> pooled;
  for (const auto& recs : per_trial_records)
    pooled.insert(pooled.end(), recs.begin(), recs.end());
  mc.pooled = aggregate(pooled);
  if (mc.pooled.pull_attempts > 0)
    mc.efficiency_ci = binomial_ci(mc.pooled.successes, mc.pooled.pull_attempts);
  if (mc.pooled.measured > 0)
    mc.accuracy_ci = binomial_ci(mc.pooled.classified_correctly, mc.pooled.measured);
  return mc;
}

json monte_carlo_to_json(const MonteCarloResult& mc) {
  json j;
  j["version"] = kVersion;
  j["master_seed"] = mc.master_seed;
  j["trials"] = static_cast<int>(mc.trials.size());
  j["nonconvergence"] = mc.nonconvergence;
  j["pooled"] = aggregates_to_json(mc.pooled);
  if (mc.efficiency_ci)
    j["efficiency_ci95"] = {{"lo", mc.efficiency_ci->lo}, {"hi", mc.efficiency_ci->hi}};
  if (mc.accuracy_ci)
    j["accuracy_ci95"] = {{"lo", mc.accuracy_ci->lo}, {"hi", mc.accuracy_ci->hi}};
  j["per_trial"] = json::array();
  for (const TrialSummary& t : mc.trials) {
    j["per_trial"].push_back(
        {{"trial", t.trial},
         {"seed", t.seed},
         {"pull_attempts", t.pull_attempts},
         {"successes", t.successes},
         {"efficiency", t.efficiency ? json(*t.efficiency) : json(nullptr)},
         {"measured", t.measured},
         {"correct", t.classified_correctly},
         {"nonconvergence", t.nonconvergence}});
  }
  return j;
}

void write_monte_carlo_artifacts(const MonteCarloResult& mc, const Scenario& scenario,
                                 const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file(dir / "mc_report.json", monte_carlo_to_json(mc).dump(2) + "\n");
  std::ostringstream csv;
  csv << "trial,seed,pull_attempts,successes,efficiency,measured,correct\n";
  for (const TrialSummary& t : mc.trials) {
    csv << t.trial << "," << t.seed << "," << t.pull_attempts << "," << t.successes << ","
        << fmt_opt(t.efficiency) << "," << t.measured << "," << t.classified_correctly
        << "\n";
  }
  write_file(dir / "mc_trials.csv", csv.str());
  json manifest;
  manifest["code_version"] = kVersion;
  manifest["master_seed"] = mc.master_seed;
  manifest["generated_at"] = iso_timestamp();
  manifest["scenario"] = scenario_to_json(scenario);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

void emit_plots(const std::string& run_dir, const std::string& plots_dir) {
  const fs::path dir(run_dir);
  const fs::path out = plots_dir.empty() ? dir / "plots" : fs::path(plots_dir);
  fs::create_directories(out);

  std::ifstream report_in(dir / "report.json");
  if (!report_in) throw std::runtime_error("no report.json in " + run_dir);
  json report;
  report_in >> report;

  // Reflectance scatter (one row per measured berry).
  std::ostringstream fig8;
  fig8 << "# reflectance scatter: one row per measured berry\n"
       << "# berry_id: scenario berry index; true_class: ground truth;\n"
       << "# classified: threshold decision; r0/rb/rf: analog counts\n"
       << "berry_id,true_class,classified,r0,rb,rf\n";
  for (const json& attempt : report.at("attempts")) {
    if (attempt.at("reflectance").is_null()) continue;
    const json& refl = attempt.at("reflectance");
    fig8 << attempt.at("berry_id").get<int>() << ","
         << attempt.at("true_ripeness").get<std::string>() << ","
         << attempt.at("classification").get<std::string>() << ","
         << fmt(refl.at("r0").get<double>()) << "," << fmt(refl.at("rb").get<double>())
         << "," << fmt(refl.at("rf").get<double>()) << "\n";
  }
  write_file(out / "fig_reflectance.csv", fig8.str());

  // Trajectory with a distance-to-target column for 3D plotting.
  std::ifstream traj_in(dir / "trajectory.csv");
  if (!traj_in) throw std::runtime_error("no trajectory.csv in " + run_dir);
  std::ostringstream fig9;
  fig9 << "# end-effector trajectory; distance_to_target_mm is the bounding-box\n"
       << "# depth estimate at that step (empty when no target was in view)\n"
       << "step,phase,x_mm,y_mm,z_mm,distance_to_target_mm\n";
  std::string line;
  std::getline(traj_in, line);  // header
  while (std::getline(traj_in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    cols.resize(7);
    fig9 << cols[0] << "," << cols[1] << "," << cols[2] << "," << cols[3] << ","
         << cols[4] << "," << cols[6] << "\n";
  }
  write_file(out / "fig_trajectory.csv", fig9.str());
}

std::vector<double> read_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip whitespace and a possible trailing comma cell
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || (end && *end != '\0')) {
      if (lineno == 1) continue;  // header line
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": not a number: " + line);
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace berrysim
