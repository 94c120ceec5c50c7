#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ilcsim/robot_model.hpp"

namespace ilcsim {

// Rigid map between the imaging frame and the robot base frame.
struct FrameRegistration {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // imaging -> robot
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const;  // rotation orthonormal, det +1 (1e-12)
  Eigen::Vector3d to_robot(const Eigen::Vector3d& p_img) const {
    return rotation * p_img + translation;
  }
  Eigen::Vector3d to_imaging(const Eigen::Vector3d& p_rob) const {
    return rotation.transpose() * (p_rob - translation);
  }
};

struct MeasurementNoise {
  double sigma = 0.0;         // meters, isotropic Gaussian std in the imaging frame
  double quantization = 0.0;  // meters, voxel pitch (0 disables)

  void validate() const;
};

struct ToolPointCloud {
  std::vector<Eigen::Vector3d> points;  // meters
  Eigen::Vector3d ground_truth_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d ground_truth_axis = Eigen::Vector3d::UnitZ();  // toward the tip
  std::vector<uint8_t> outlier_label;   // 1 = injected outlier (generator bookkeeping)
};

struct SegmentationConfig {
  int min_points = 50;
  double mad_threshold = 3.0;  // remove residuals > k * MAD from the fitted surface
  int fit_max_iterations = 60;
  double fit_tolerance = 1e-14;
  // Hemisphere prior that orients the recovered axis toward the tip; in a
  // depth scan the rough insertion direction is always known.
  Eigen::Vector3d tip_direction_hint = Eigen::Vector3d::UnitZ();
};

struct CylinderFit {
  Eigen::Vector3d axis_point;   // point on the axis (closest to the centroid)
  Eigen::Vector3d axis;         // unit direction
  double radius = 0.0;
  double rms_residual = 0.0;
};

struct TooltipEstimate {
  TaskPoint tip;
  Eigen::Vector3d axis;  // unit, oriented toward the tip
  CylinderFit cylinder;
  int inliers = 0;
  int removed = 0;
};

// FK of the true model mapped through the registration, corrupted by noise
// and voxel quantization in the imaging frame, then mapped back.
TaskPoint observe_tooltip(const RobotModel& true_model, const JointVector& q,
                          const FrameRegistration& reg, const MeasurementNoise& noise,
                          uint64_t seed);

// Samples the lateral surface of a cylinder of given radius extending from
// `tip` along -axis for `length`, with surface-normal (radial) noise, plus
// uniform-box outliers inside the cylinder's bounding box.
ToolPointCloud generate_tool_cloud(const TaskPoint& tip, const Eigen::Vector3d& axis,
                                   double radius, double length, int n_points,
                                   double outlier_fraction, double noise_sigma,
                                   uint64_t seed);

// PCA axis -> least-squares cylinder fit -> MAD outlier removal -> re-fit ->
// farthest point projected onto the centerline. Throws SegmentationError on
// degenerate clouds.
TooltipEstimate extract_tooltip(const ToolPointCloud& cloud, const SegmentationConfig& config);

// Direct least-squares cylinder fit (exposed for tests).
CylinderFit fit_cylinder(const std::vector<Eigen::Vector3d>& points,
                         const Eigen::Vector3d& axis_init, const Eigen::Vector3d& point_init,
                         double radius_init, int max_iterations, double tolerance);

void save_cloud_csv(const ToolPointCloud& cloud, const std::string& path);
ToolPointCloud load_cloud_csv(const std::string& path);

}  // namespace ilcsim
