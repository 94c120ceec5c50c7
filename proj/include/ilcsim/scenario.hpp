#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ilcsim/dynamic_ilc.hpp"
#include "ilcsim/joint_dynamics.hpp"
#include "ilcsim/kinematic_ilc.hpp"
#include "ilcsim/measurement.hpp"
#include "ilcsim/robot_model.hpp"
#include "ilcsim/trajectory.hpp"
#include "ilcsim/units.hpp"

namespace ilcsim {

struct RegistrationSpec {
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  FrameRegistration build() const;
};

struct IdentificationConfig {
  std::vector<double> amplitudes;  // per joint, joint units
  int duration_samples = 1500;
  int crop = 0;  // 0 = automatic (settled + 20% margin)
  FirWindow window = FirWindow::blackman_harris;
};

struct DynamicConfig {
  double q_cutoff = 0.2;  // of Nyquist
  int q_taps = 51;
  int max_iterations = 6;
  // Per joint, joint units: 0.1 deg for the revolute joints, 10 um insertion.
  std::vector<double> thresholds{deg2rad(0.1), deg2rad(0.1), 10e-6, deg2rad(0.1)};
  double min_reduction = 10.0;
  double saturation_fraction_limit = 0.2;
};

// A fully serializable experiment description; re-running a scenario file
// bit-reproduces all numeric outputs.
struct Scenario {
  std::string name = "scenario";
  uint64_t seed = 1;
  RobotModel nominal;
  PerturbationSpec perturbation;
  uint64_t perturbation_seed = 1;
  RegistrationSpec registration;
  MeasurementNoise noise;
  GridSpec grid;
  KinematicConfig kinematic;
  std::vector<JointPlant> plants;
  IdentificationConfig identification;
  DynamicConfig dynamic;
  MotionProfile profile;

  void validate() const;
};

// Loads a scenario; the robot_file reference is resolved relative to the
// scenario file's directory.
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path,
                   const std::string& robot_file_ref);

// The bundled configuration used by the acceptance suite.
Scenario make_paper_repro_scenario();

}  // namespace ilcsim
