#pragma once

#include <span>
#include <string>

#include "berrysim/optics_scene.hpp"
#include "berrysim/rng.hpp"

namespace berrysim {

// NIR reflectance sensor. The electrical fields are retained as configuration
// metadata only; readings are abstract analog counts.
struct SensorConfig {
  double wavelength_nm = 870.0;        // metadata
  int led_count = 7;                   // metadata
  double incident_angle_deg = 35.0;    // metadata
  double supply_voltage_v = 1.85;      // metadata
  double divider_resistor_kohm = 560.0;  // metadata
  double baseline_r0 = 100.0;          // ambient steady-state counts
  double measurement_noise_sigma = 0.5;
  double contact_tolerance_mm = 15.0;  // max palm gap that still counts as touching

  void validate(const std::string& field_prefix = "sensor") const;
};

// Class-conditional reflectance model. Field-test means are the defaults;
// ripe berries reflect less at 870 nm.
struct ReflectanceDistribution {
  double ripe_mean = 16.78;
  double ripe_sigma = 1.5;
  double unripe_mean = 21.70;
  double unripe_sigma = 1.5;

  void validate(const std::string& field_prefix = "reflectance") const;
};

struct ReflectanceReading {
  double r0 = 0.0;  // ambient baseline
  double rb = 0.0;  // illuminated
  double rf = 0.0;  // rb - r0, exactly
  int berry_id = -1;
};

// Draw a berry's latent reflectance from its class normal, clamped at 0.
double sample_latent_reflectance(Ripeness ripeness, const ReflectanceDistribution& dist,
                                 Rng& rng);

// Before/after illumination readings with independent noise on each; the
// differencing cancels any constant baseline shift. Throws NotInContactError
// when the berry is not touching the palm.
ReflectanceReading measure(const BerryInstance& berry, const SensorConfig& sensor,
                           double palm_gap_mm, Rng& rng);

enum class ThresholdMode { MeanMidpoint, MinError };

// Fit a cut point from labelled calibration samples. Default: midpoint of the
// class means. MinError scans candidate cuts between the means for minimum
// misclassification. Requires >= 2 samples per class; throws
// NotSeparableError when the class means are not ordered ripe < unripe.
double fit_threshold(std::span<const double> ripe_samples,
                     std::span<const double> unripe_samples,
                     ThresholdMode mode = ThresholdMode::MeanMidpoint);

// Ripe iff rf < threshold; the boundary classifies Unripe (do not pick).
Ripeness classify(double rf, double threshold);

}  // namespace berrysim
