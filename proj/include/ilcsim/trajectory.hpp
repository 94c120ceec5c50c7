#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "ilcsim/dynamic_ilc.hpp"
#include "ilcsim/kinematic_ilc.hpp"

namespace ilcsim {

// Converged grid-node joint values, queryable by (rotation, insertion).
struct InterpolationTable {
  GridSpec grid;
  std::vector<std::vector<Eigen::Vector3d>> values;  // [rotation][insertion] -> (q1,q2,q3)

  static InterpolationTable from_grid(const CorrectionGrid& grid);
  void validate() const;
};

// Bilinear blend of the four surrounding nodes for q1..q3; q4 is the
// commanded rotation itself. Queries outside the calibrated envelope are
// rejected (no extrapolation).
JointVector interpolate(const InterpolationTable& table, double rotation_deg,
                        double insertion_mm);

struct MotionProfile {
  double rotation_amplitude_deg = 100.0;
  double rotation_frequency_hz = 2.0;
  double insertion_speed_mm_s = 0.5;
  double insertion_depth_mm = 2.0;
  double sample_time = 1e-3;  // seconds
  // Raised-cosine amplitude ramp at both ends so trials start and end at
  // rest; 0 gives the pure sinusoid.
  double ramp_time_s = 0.5;
};

struct ProfileResult {
  std::array<JointTrajectory, 4> joints;
  std::vector<double> time_s;
  std::vector<double> rotation_deg;
  std::vector<double> insertion_mm;
};

// rotation(t) = mid-range + amplitude * env(t) * sin(2 pi f t); the insertion
// ramps at insertion_speed to insertion_depth (held constant when speed = 0).
// Every sample is interpolated from the table; bound violations are rejected.
ProfileResult generate_profile(const MotionProfile& profile, const InterpolationTable& table);

// Max |dq|/dt per joint of a generated profile.
std::array<double, 4> peak_rates(const ProfileResult& profile);

}  // namespace ilcsim
