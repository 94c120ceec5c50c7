#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ilcsim/measurement.hpp"
#include "ilcsim/robot_model.hpp"
#include "ilcsim/verdict.hpp"

namespace ilcsim {

// Calibration grid over (tool rotation, insertion depth). Rotation in
// degrees, insertion in millimeters: these are node labels at the I/O
// boundary; joint values derived from them are SI.
struct GridSpec {
  double rotation_range_deg = 200.0;
  double rotation_step_deg = 10.0;
  double insertion_range_mm = 2.0;
  double insertion_step_mm = 0.5;

  void validate() const;  // steps must evenly divide ranges
  int rotation_count() const;
  int insertion_count() const;
  int node_count() const { return rotation_count() * insertion_count(); }
  double rotation_deg(int idx) const { return idx * rotation_step_deg; }
  double insertion_mm(int idx) const { return idx * insertion_step_mm; }
};

struct TaskError {
  Eigen::Vector3d e = Eigen::Vector3d::Zero();  // meters, reference - measured
  int rotation_index = 0;
  int insertion_index = 0;
  int iteration = 0;
};

// L = alpha * pinv(J), with small singular values truncated.
struct LearningGain {
  Eigen::Matrix3d L = Eigen::Matrix3d::Zero();
  double alpha = 1.0;
  double condition_number = 0.0;
  int truncated_directions = 0;
};

struct StopCriteria {
  double rms_threshold = 30e-6;  // meters
  double stall = 2e-6;           // meters, inter-iteration RMS change
  int max_iterations = 10;
};

struct IkOptions {
  double tolerance = 1e-7;  // meters
  int max_iterations = 50;
  double alpha = 1.0;       // step scale of the inner correction law
  double condition_threshold = 1e6;
};

struct KinematicConfig {
  double alpha = 0.7;                 // outer learning scale, (0, 1]
  int measurement_averaging = 1;      // repeated observations averaged per node
  double error_sanity_bound = 5e-3;   // meters
  StopCriteria stop;
  IkOptions ik;
};

struct NodeRecord {
  int rotation_index = 0;
  int insertion_index = 0;
  JointVector q;                 // commanded joints at this iteration
  Eigen::Vector3d measured = Eigen::Vector3d::Zero();
  Eigen::Vector3d reference = Eigen::Vector3d::Zero();
  Eigen::Vector3d error = Eigen::Vector3d::Zero();
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  std::vector<NodeRecord> nodes;
  double rms_error = 0.0;  // meters, over node error norms
  double max_error = 0.0;
};

struct CorrectionGrid {
  GridSpec grid;
  // joints[r][i]: converged joint command at rotation node r, insertion node i.
  std::vector<std::vector<JointVector>> joints;
  // Per-depth reference tooltip positions (rotation-zero anchors).
  std::vector<Eigen::Vector3d> references;
};

struct KinematicIlcResult {
  LoopVerdict verdict = LoopVerdict::max_iterations;
  CorrectionGrid grid;
  std::vector<IterationRecord> iterations;
  double final_rms = 0.0;            // meters
  double contraction_max = 0.0;      // max over nodes of ||I - L J*||, if computed
  bool contraction_available = false;
};

// One tooltip observation; the context identifies the (iteration, node,
// repeat) so implementations can derive independent deterministic streams.
struct MeasurementContext {
  int iteration = 0;
  int rotation_index = 0;
  int insertion_index = 0;
  int repeat = 0;
};
using MeasurementSource = std::function<TaskPoint(const JointVector&, const MeasurementContext&)>;

TaskError compute_error(const TaskPoint& reference, const TaskPoint& measured,
                        double sanity_bound = 5e-3);

Eigen::Vector3d joint_correction(const LearningGain& gain, const TaskError& e);

LearningGain build_gain(const RobotModel& model, const JointVector& q, double alpha,
                        std::span<const double> steps = {},
                        double condition_threshold = 1e6);

// Core of build_gain: alpha * truncated-SVD pseudoinverse of an explicit
// Jacobian. Singular values below sigma_max / condition_threshold are
// dropped; a fully truncated Jacobian raises SingularConfigurationError.
LearningGain gain_from_jacobian(const Eigen::Matrix3d& jacobian, double alpha,
                                double condition_threshold = 1e6);

// Newton-style inner loop on q1..q3 with q4 held fixed, driving the nominal
// FK onto `target`. Throws IkDivergenceError if the residual does not reach
// tolerance within max_iterations.
JointVector solve_nominal_ik(const RobotModel& model, const TaskPoint& target,
                             const JointVector& q_init, const IkOptions& opts = {});

// Contraction norm ||I - L J*||_2 of the learning update; < 1 predicts
// convergence against the true Jacobian.
double check_contraction(const LearningGain& gain, const Jacobian& j_true);

// Outer kinematic ILC loop over the grid, fed by an arbitrary measurement
// source. References are re-anchored each iteration at the rotation-zero
// node of every depth.
KinematicIlcResult run_kinematic_ilc(const RobotModel& nominal, const MeasurementSource& source,
                                     const GridSpec& grid, const KinematicConfig& config);

// Simulation convenience: measurements come from the perturbed "true" model
// through observe_tooltip; contraction diagnostics are computed against the
// true Jacobian at iteration 1.
KinematicIlcResult run_kinematic_ilc(const RobotModel& nominal, const RobotModel& true_model,
                                     const FrameRegistration& reg, const MeasurementNoise& noise,
                                     uint64_t seed, const GridSpec& grid,
                                     const KinematicConfig& config);

}  // namespace ilcsim
