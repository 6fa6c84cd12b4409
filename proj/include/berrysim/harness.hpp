#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "berrysim/scenario.hpp"
#include "berrysim/visual_servo.hpp"

namespace berrysim {

inline constexpr const char* kVersion = "0.1.0";

// Everything one run produces, in memory. write_artifacts() lays it down as
// report.json / report_table1.csv / trajectory.csv / detections.csv /
// manifest.json.
struct RunResult {
  std::uint64_t seed_used = 0;
  std::vector<AttemptRecord> records;  // one per berry, terminal outcomes
  HarvestAggregates aggregates;
  std::vector<TrajectoryRow> trajectory;
  std::vector<DetectionRow> detections;
  bool nonconvergence = false;

  int exit_code() const { return nonconvergence ? 3 : 0; }
};

// Build the scene (latents sampled here) and execute the configured pipeline.
RunResult run(const Scenario& scenario,
              std::optional<std::uint64_t> seed_override = std::nullopt);

// Scene construction alone (exposed for tests): explicit berries first, then
// generated ones; ids are list order.
Scene build_scene(const Scenario& scenario, Rng& rng);

nlohmann::json report_to_json(const RunResult& result);
std::string table1_csv(const HarvestAggregates& agg);

void write_artifacts(const RunResult& result, const Scenario& scenario,
                     const std::string& out_dir);

struct TrialSummary {
  int trial = 0;
  std::uint64_t seed = 0;
  int pull_attempts = 0;
  int successes = 0;
  std::optional<double> efficiency;
  int measured = 0;
  int classified_correctly = 0;
  bool nonconvergence = false;
};

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval at 95%.
ConfidenceInterval binomial_ci(int successes, int n);

struct MonteCarloResult {
  std::uint64_t master_seed = 0;
  std::vector<TrialSummary> trials;  // ordered by trial index
  HarvestAggregates pooled;          // record-level pooling over all trials
  std::optional<ConfidenceInterval> efficiency_ci;
  std::optional<ConfidenceInterval> accuracy_ci;
  bool nonconvergence = false;
};

// Independent replicas with per-trial seeds derived from the master seed.
// `execution_order` (a permutation of 0..trials-1) only reorders execution;
// results are keyed by trial index so any order yields identical output.
MonteCarloResult monte_carlo(const Scenario& scenario, int trials,
                             std::optional<std::uint64_t> master_seed = std::nullopt,
                             const std::vector<int>* execution_order = nullptr);

nlohmann::json monte_carlo_to_json(const MonteCarloResult& result);
void write_monte_carlo_artifacts(const MonteCarloResult& result, const Scenario& scenario,
                                 const std::string& out_dir);

// Read a run directory and emit tidy per-figure CSVs (reflectance scatter and
// 3D trajectory) under <run_dir>/plots or an explicit output directory.
void emit_plots(const std::string& run_dir, const std::string& plots_dir = "");

// One-column numeric CSV (optional non-numeric header line is skipped).
std::vector<double> read_sample_csv(const std::string& path);

}  // namespace berrysim
