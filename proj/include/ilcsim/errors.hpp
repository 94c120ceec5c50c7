#pragma once

#include <stdexcept>
#include <string>

namespace ilcsim {

// Measured error exceeded the configured sanity bound (bad measurement).
struct MeasurementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tooltip extraction failed (degenerate cloud, too few inliers).
struct SegmentationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inner nominal-FK loop did not reach the target within max_iter.
struct IkDivergenceError : std::runtime_error {
  IkDivergenceError(const std::string& msg, double residual_m)
      : std::runtime_error(msg), residual(residual_m) {}
  double residual;  // meters
};

// Jacobian rank-deficient after singular-value truncation.
struct SingularConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Step-response measurement saturated; identified model would be invalid.
struct IdentificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A pipeline stage could not find an upstream artifact.
struct StageDependencyError : std::runtime_error {
  StageDependencyError(const std::string& stage, const std::string& path)
      : std::runtime_error("stage '" + stage + "' requires missing file: " + path),
        missing_path(path) {}
  std::string missing_path;
};

}  // namespace ilcsim
