#include "berrysim/ripeness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "berrysim/errors.hpp"

namespace berrysim {

void SensorConfig::validate(const std::string& p) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError(p + "." + field + ": " + why);
  };
  if (baseline_r0 < 0) fail("baseline_r0", "must be >= 0");
  if (measurement_noise_sigma < 0) fail("measurement_noise_sigma", "must be >= 0");
  if (!(contact_tolerance_mm > 0)) fail("contact_tolerance_mm", "must be > 0");
}

void ReflectanceDistribution::validate(const std::string& p) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError(p + "." + field + ": " + why);
  };
  if (!(ripe_sigma >= 0)) fail("ripe_sigma", "must be >= 0");
  if (!(unripe_sigma >= 0)) fail("unripe_sigma", "must be >= 0");
  if (!(unripe_mean > ripe_mean))
    fail("unripe_mean", "must exceed ripe_mean (ripe berries reflect less)");
}

double sample_latent_reflectance(Ripeness ripeness, const ReflectanceDistribution& dist,
                                 Rng& rng) {
  const double mean = ripeness == Ripeness::Ripe ? dist.ripe_mean : dist.unripe_mean;
  const double sigma = ripeness == Ripeness::Ripe ? dist.ripe_sigma : dist.unripe_sigma;
  return std::max(0.0, rng.normal(mean, sigma));
}

ReflectanceReading measure(const BerryInstance& berry, const SensorConfig& sensor,
                           double palm_gap_mm, Rng& rng) {
  if (palm_gap_mm > sensor.contact_tolerance_mm) {
    throw NotInContactError("berry " + std::to_string(berry.id) +
                            " is not touching the palm (gap " +
                            std::to_string(palm_gap_mm) + " mm)");
  }
  ReflectanceReading reading;
  reading.berry_id = berry.id;
  const double ambient_noise = rng.normal(0.0, sensor.measurement_noise_sigma);
  const double lit_noise = rng.normal(0.0, sensor.measurement_noise_sigma);
  reading.r0 = sensor.baseline_r0 + ambient_noise;
  // The differential reading cancels the baseline by construction, so a
  // constant ambient shift cannot change R_f even at the bit level.
  reading.rf = berry.latent_reflectance + lit_noise - ambient_noise;
  reading.rb = reading.r0 + reading.rf;
  return reading;
}

double fit_threshold(std::span<const double> ripe_samples,
                     std::span<const double> unripe_samples, ThresholdMode mode) {
  if (ripe_samples.size() < 2 || unripe_samples.size() < 2) {
    throw std::invalid_argument("fit_threshold requires >= 2 samples per class");
  }
  const double ripe_mean =
      std::accumulate(ripe_samples.begin(), ripe_samples.end(), 0.0) / ripe_samples.size();
  const double unripe_mean =
      std::accumulate(unripe_samples.begin(), unripe_samples.end(), 0.0) /
      unripe_samples.size();
  if (!(ripe_mean < unripe_mean)) {
    throw NotSeparableError("class means are not separable (ripe " +
                            std::to_string(ripe_mean) + " vs unripe " +
                            std::to_string(unripe_mean) + ")");
  }
  const double midpoint = 0.5 * (ripe_mean + unripe_mean);
  if (mode == ThresholdMode::MeanMidpoint) return midpoint;

  // Candidate cuts: midpoints of consecutive distinct pooled values, kept
  // strictly between the class means so the output invariant holds.
  std::vector<double> pooled(ripe_samples.begin(), ripe_samples.end());
  pooled.insert(pooled.end(), unripe_samples.begin(), unripe_samples.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> candidates{midpoint};
  for (size_t i = 1; i < pooled.size(); ++i) {
    const double cut = 0.5 * (pooled[i - 1] + pooled[i]);
    if (cut > ripe_mean && cut < unripe_mean) candidates.push_back(cut);
  }
  auto errors_at = [&](double cut) {
    int e = 0;
    for (double s : ripe_samples)
      if (!(s < cut)) ++e;  // ripe must fall below the cut
    for (double s : unripe_samples)
      if (s < cut) ++e;
    return e;
  };
  double best = midpoint;
  int best_err = errors_at(midpoint);
  for (double cut : candidates) {
    const int e = errors_at(cut);
    if (e < best_err ||
        (e == best_err && std::abs(cut - midpoint) < std::abs(best - midpoint))) {
      best = cut;
      best_err = e;
    }
  }
  return best;
}

Ripeness classify(double rf, double threshold) {
  return rf < threshold ? Ripeness::Ripe : Ripeness::Unripe;
}

}  // namespace berrysim
