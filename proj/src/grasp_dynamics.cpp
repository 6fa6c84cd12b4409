#include "berrysim/grasp_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "berrysim/errors.hpp"

namespace berrysim {

void RetentionModel::validate(const std::string& p) const {
  auto check = [&](const ClassRetention& c, const std::string& name) {
    auto fail = [&](const std::string& field, const std::string& why) {
      throw ValidationError(p + "." + name + "." + field + ": " + why);
    };
    if (!(c.sigma_n > 0)) fail("sigma_n", "must be > 0");
    if (!(c.min_n <= c.mean_n)) fail("min_n", "must be <= mean_n");
    if (!(c.mean_n <= c.max_n)) fail("max_n", "must be >= mean_n");
    if (!(c.min_n < c.max_n)) fail("min_n", "must be < max_n");
  };
  check(ripe, "ripe");
  check(unripe, "unripe");
}

void GraspParams::validate(const std::string& p) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError(p + "." + field + ": " + why);
  };
  if (!(pull_capacity_n > 0)) fail("pull_capacity_n", "must be > 0");
  if (slip_failure_prob < 0 || slip_failure_prob >= 1)
    fail("slip_failure_prob", "must be in [0, 1)");
}

std::string to_string(DetachOutcome outcome) {
  switch (outcome) {
    case DetachOutcome::Detached: return "Detached";
    case DetachOutcome::StillOnStem: return "StillOnStem";
    case DetachOutcome::Slip: return "Slip";
    case DetachOutcome::SkippedUnripe: return "Skipped";
    case DetachOutcome::NonConvergence: return "NonConvergence";
    case DetachOutcome::Undetected: return "Undetected";
  }
  return "Unknown";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

double sample_retention(Ripeness ripeness, const RetentionModel& model, Rng& rng) {
  const ClassRetention& c = model.for_class(ripeness);
  double v;
  do {
    v = rng.normal(c.mean_n, c.sigma_n);
  } while (v < c.min_n || v > c.max_n);
  return v;
}

DetachOutcome attempt_detach(double retention_n, const GraspParams& params,
                             Ripeness classification, Rng& rng) {
  if (classification == Ripeness::Unripe && !params.force_pull) {
    return DetachOutcome::SkippedUnripe;  // classifier gates the pull, no draws
  }
  if (rng.bernoulli(params.slip_failure_prob)) return DetachOutcome::Slip;
  return params.pull_capacity_n >= retention_n ? DetachOutcome::Detached
                                               : DetachOutcome::StillOnStem;
}

double detach_probability(Ripeness ripeness, const RetentionModel& model,
                          const GraspParams& params) {
  const ClassRetention& c = model.for_class(ripeness);
  const double hold = 1.0 - params.slip_failure_prob;
  if (params.pull_capacity_n >= c.max_n) return hold;
  if (params.pull_capacity_n < c.min_n) return 0.0;
  const double za = (c.min_n - c.mean_n) / c.sigma_n;
  const double zb = (c.max_n - c.mean_n) / c.sigma_n;
  const double zc = (params.pull_capacity_n - c.mean_n) / c.sigma_n;
  return hold * (normal_cdf(zc) - normal_cdf(za)) / (normal_cdf(zb) - normal_cdf(za));
}

double calibrate_slip(double target_efficiency, const RetentionModel& model,
                      const GraspParams& params) {
  GraspParams no_slip = params;
  no_slip.slip_failure_prob = 0.0;
  const double ceiling = detach_probability(Ripeness::Ripe, model, no_slip);
  if (target_efficiency > ceiling) {
    throw InfeasibleTargetError("target efficiency " + std::to_string(target_efficiency) +
                                " exceeds the force-model ceiling " +
                                std::to_string(ceiling));
  }
  return std::max(0.0, 1.0 - target_efficiency / ceiling);
}

HarvestAggregates aggregate(const std::vector<AttemptRecord>& records) {
  HarvestAggregates agg;
  agg.total_berries = static_cast<int>(records.size());

  struct Acc {
    int n = 0;
    double sum = 0.0, sumsq = 0.0, dsum = 0.0;
    double lo = 0.0, hi = 0.0;
    void add(double f, double d) {
      if (n == 0) { lo = hi = f; }
      lo = std::min(lo, f);
      hi = std::max(hi, f);
      sum += f;
      sumsq += f * f;
      dsum += d;
      ++n;
    }
    ClassForceStats stats() const {
      ClassForceStats s;
      s.count = n;
      if (n == 0) return s;
      s.min_n = lo;
      s.max_n = hi;
      s.mean_n = sum / n;
      s.stddev_n = n > 1 ? std::sqrt(std::max(0.0, (sumsq - sum * sum / n) / (n - 1))) : 0.0;
      s.mean_diameter_mm = dsum / n;
      return s;
    }
  } ripe_acc, unripe_acc;

  for (const AttemptRecord& rec : records) {
    agg.total_servo_iterations += rec.servo_iterations;
    if (rec.reading) {
      ++agg.measured;
      if (rec.classification && *rec.classification == rec.true_ripeness)
        ++agg.classified_correctly;
    }
    switch (rec.outcome) {
      case DetachOutcome::Detached:
        ++agg.successes;
        break;
      case DetachOutcome::StillOnStem:
        ++agg.still_on_stem;
        break;
      case DetachOutcome::Slip:
        ++agg.slips;
        break;
      case DetachOutcome::SkippedUnripe:
        ++agg.skipped;
        break;
      case DetachOutcome::NonConvergence:
        ++agg.nonconverged;
        break;
      case DetachOutcome::Undetected:
        ++agg.undetected;
        break;
    }
    const bool pulled = rec.outcome == DetachOutcome::Detached ||
                        rec.outcome == DetachOutcome::StillOnStem ||
                        rec.outcome == DetachOutcome::Slip;
    if (pulled) {
      (rec.true_ripeness == Ripeness::Ripe ? ripe_acc : unripe_acc)
          .add(rec.retention_force_n, rec.diameter_mm);
    }
  }
  agg.pull_attempts = agg.successes + agg.still_on_stem + agg.slips;
  if (agg.pull_attempts > 0)
    agg.efficiency = static_cast<double>(agg.successes) / agg.pull_attempts;
  if (agg.measured > 0)
    agg.classification_accuracy =
        static_cast<double>(agg.classified_correctly) / agg.measured;
  agg.ripe_force = ripe_acc.stats();
  agg.unripe_force = unripe_acc.stats();
  return agg;
}

}  // namespace berrysim
