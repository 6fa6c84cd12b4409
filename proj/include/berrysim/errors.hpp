#pragma once

#include <stdexcept>
#include <string>

namespace berrysim {

// Scenario/config rejection; message carries the offending field path.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// fit_threshold: class means coincide (or are inverted), no cut point exists.
class NotSeparableError : public std::runtime_error {
 public:
  explicit NotSeparableError(const std::string& msg) : std::runtime_error(msg) {}
};

// measure(): berry is not touching the palm-mounted sensor.
class NotInContactError : public std::runtime_error {
 public:
  explicit NotInContactError(const std::string& msg) : std::runtime_error(msg) {}
};

// calibrate_slip(): requested efficiency exceeds the force-model ceiling.
class InfeasibleTargetError : public std::runtime_error {
 public:
  explicit InfeasibleTargetError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace berrysim
