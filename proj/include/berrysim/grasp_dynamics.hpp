#pragma once

#include <optional>
#include <string>
#include <vector>

#include "berrysim/optics_scene.hpp"
#include "berrysim/ripeness.hpp"
#include "berrysim/rng.hpp"

namespace berrysim {

// Truncated-normal retention force parameters for one ripeness class.
struct ClassRetention {
  double mean_n = 0.0;
  double sigma_n = 1.0;
  double min_n = 0.0;
  double max_n = 1.0;
};

// Field-test force statistics: mean/std from the campaign, min/max as hard
// truncation bounds.
struct RetentionModel {
  ClassRetention ripe{2.06, 0.92, 0.03, 4.50};
  ClassRetention unripe{6.08, 1.25, 3.00, 7.98};

  const ClassRetention& for_class(Ripeness r) const {
    return r == Ripeness::Ripe ? ripe : unripe;
  }
  void validate(const std::string& field_prefix = "retention") const;
};

struct GraspParams {
  double pull_capacity_n = 4.0;    // the gripper cannot pull harder than this
  double slip_failure_prob = 0.0;  // Bernoulli mis-grasp term; field presets carry
                                   // the value calibrated to the observed efficiency
  bool force_pull = false;         // benchtop string-pull mode: pull even if unripe

  void validate(const std::string& field_prefix = "grasp") const;
};

enum class DetachOutcome {
  Detached,
  StillOnStem,
  Slip,
  SkippedUnripe,
  NonConvergence,
  Undetected,
};

std::string to_string(DetachOutcome outcome);

// Rejection sampling from normal(mean, sigma) truncated to [min, max].
double sample_retention(Ripeness ripeness, const RetentionModel& model, Rng& rng);

// One pull attempt. Unripe classification gates the pull (Skipped) unless
// force_pull is set; otherwise a slip draw may fire, and the pull succeeds
// iff pull_capacity >= retention (boundary detaches).
DetachOutcome attempt_detach(double retention_n, const GraspParams& params,
                             Ripeness classification, Rng& rng);

// Closed-form companion of attempt_detach for a pulled berry:
// (1 - slip) * P(truncated normal <= pull_capacity).
double detach_probability(Ripeness ripeness, const RetentionModel& model,
                          const GraspParams& params);

// Solve slip so that (1-slip) * force-model ceiling == target efficiency on
// ripe berries. Throws InfeasibleTargetError when target exceeds the ceiling.
double calibrate_slip(double target_efficiency, const RetentionModel& model,
                      const GraspParams& params);

// Standard normal CDF.
double normal_cdf(double z);

// Per-attempt record assembled by the harness.
struct AttemptRecord {
  int berry_id = -1;
  Ripeness true_ripeness = Ripeness::Ripe;
  std::optional<Ripeness> classification;   // absent when the gate is disabled
  std::optional<ReflectanceReading> reading;
  double retention_force_n = 0.0;
  double diameter_mm = 0.0;
  DetachOutcome outcome = DetachOutcome::Undetected;
  int servo_iterations = 0;
  int approach_steps = 0;
};

struct ClassForceStats {
  int count = 0;
  double min_n = 0.0;
  double max_n = 0.0;
  double mean_n = 0.0;
  double stddev_n = 0.0;  // sample standard deviation
  double mean_diameter_mm = 0.0;
};

struct HarvestAggregates {
  int total_berries = 0;
  int pull_attempts = 0;  // Detached + StillOnStem + Slip
  int successes = 0;
  int still_on_stem = 0;
  int slips = 0;
  int skipped = 0;
  int nonconverged = 0;
  int undetected = 0;
  std::optional<double> efficiency;  // absent when there were no pull attempts
  ClassForceStats ripe_force;        // over pulled berries, by true class
  ClassForceStats unripe_force;
  int measured = 0;  // berries with a reflectance reading
  int classified_correctly = 0;
  std::optional<double> classification_accuracy;
  long total_servo_iterations = 0;
};

HarvestAggregates aggregate(const std::vector<AttemptRecord>& records);

}  // namespace berrysim
