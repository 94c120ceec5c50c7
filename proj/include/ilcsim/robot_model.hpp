#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ilcsim {

// Tooltip position in the robot base frame, meters.
using TaskPoint = Eigen::Vector3d;

enum class JointType { revolute, prismatic };

struct JointLimits {
  double lower = -1e9;
  double upper = 1e9;
  bool contains(double q) const { return q >= lower && q <= upper; }
};

// One row of the kinematic table: a fixed frame transform (xyz translation,
// then roll-pitch-yaw rotation) followed by joint motion about (revolute) or
// along (prismatic) the local z axis. q_effective = q + offset.
struct JointDef {
  std::string name;
  JointType type = JointType::revolute;
  Eigen::Vector3d origin_xyz = Eigen::Vector3d::Zero();
  Eigen::Vector3d origin_rpy = Eigen::Vector3d::Zero();  // radians, applied Rz(y)*Ry(p)*Rx(r)
  double offset = 0.0;
  JointLimits limits;

  Eigen::Isometry3d origin() const;
};

// Tool mounted in the last joint frame. The last joint's z axis is the
// nominal tool axis; a nominal tool (zero offset/tilt/bend) has its tip at
// (0, 0, length) and is therefore invariant under tool-roll rotation.
struct ToolGeometry {
  double length = 0.0;                                   // meters
  Eigen::Vector3d tip_offset = Eigen::Vector3d::Zero();  // meters, tool frame
  Eigen::Vector2d axis_tilt = Eigen::Vector2d::Zero();   // radians about tool x, y
  double bend = 0.0;                                     // shaft curvature, 1/m

  bool is_nominal() const;
  // offset + R_tilt * arc(length, bend); the bend is a constant-curvature
  // arc of the shaft deflecting toward local +x.
  Eigen::Vector3d tip_in_tool_frame() const;
};

// 4-DOF configuration: RCM pan (rad), RCM tilt (rad), insertion (m), roll (rad).
struct JointVector {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double q4 = 0.0;

  Eigen::Vector4d vec() const { return {q1, q2, q3, q4}; }
  Eigen::Vector3d controlled() const { return {q1, q2, q3}; }  // kinematic-loop subset
  static JointVector from(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

struct RobotModel {
  std::string name;
  TaskPoint rcm_position = TaskPoint::Zero();
  std::vector<JointDef> joints;
  ToolGeometry tool;
  double workspace_radius = 0.5;  // meters, sanity bound on |tip - rcm|

  void validate() const;  // throws std::invalid_argument on malformed models
};

// d(x,y,z)/dq for the first min(3, n_joints) joints, mixed units.
struct Jacobian {
  Eigen::Matrix<double, 3, Eigen::Dynamic> matrix;
  Eigen::VectorXd linearization_point;
};

// Bounds for sampling a "true" model around the nominal one. Magnitudes are
// drawn uniformly from [min, max]; directions/signs are drawn per seed.
struct PerturbationSpec {
  double tip_offset_min = 0.0, tip_offset_max = 0.0;  // meters, lateral
  double axis_tilt_min = 0.0, axis_tilt_max = 0.0;    // radians
  double dh_angle_max = 0.0;                          // radians, revolute joint offsets
  double dh_translation_max = 0.0;                    // meters, prismatic joint offsets
  double bend_min = 0.0, bend_max = 0.0;              // 1/m

  void validate() const;
};

TaskPoint forward_kinematics(const RobotModel& model, std::span<const double> q);
TaskPoint forward_kinematics(const RobotModel& model, const JointVector& q);

// End-effector frame after all joints (tool not applied). Exposed for tests.
Eigen::Isometry3d chain_frame(const RobotModel& model, std::span<const double> q);

// Central differences, columns for the first min(3, n_joints) joints.
// `steps` may be empty (defaults: 1e-4 rad revolute, 1e-5 m prismatic).
Jacobian numerical_jacobian(const RobotModel& model, std::span<const double> q,
                            std::span<const double> steps = {});
Jacobian numerical_jacobian(const RobotModel& model, const JointVector& q,
                            std::span<const double> steps = {});

std::vector<double> default_jacobian_steps(const RobotModel& model);

RobotModel perturb_model(const RobotModel& nominal, const PerturbationSpec& spec,
                         uint64_t seed);

RobotModel load_robot(const std::string& path);
void save_robot(const RobotModel& model, const std::string& path);

// The documented generic RCM parameterization: pan about base x, tilt about
// the rotated y, prismatic insertion along the tool axis (-z at home), and a
// distal roll joint about the tool axis.
RobotModel make_default_rcm_robot();

}  // namespace ilcsim
