#include "ilcsim/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ilcsim/csv.hpp"
#include "ilcsim/errors.hpp"
#include "ilcsim/rng.hpp"

namespace ilcsim {

void FrameRegistration::validate() const {
  const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > 1e-12 || std::abs(rotation.determinant() - 1.0) > 1e-12)
    throw std::invalid_argument("registration rotation is not orthonormal with det +1");
  if (!translation.allFinite())
    throw std::invalid_argument("registration translation is not finite");
}

void MeasurementNoise::validate() const {
  if (sigma < 0.0 || quantization < 0.0)
    throw std::invalid_argument("noise parameters must be non-negative");
}

TaskPoint observe_tooltip(const RobotModel& true_model, const JointVector& q,
                          const FrameRegistration& reg, const MeasurementNoise& noise,
                          uint64_t seed) {
  reg.validate();
  noise.validate();
  const TaskPoint actual = forward_kinematics(true_model, q);
  Eigen::Vector3d p_img = reg.to_imaging(actual);
  if (noise.sigma > 0.0) {
    Rng rng(Rng::derive({seed, 0x6f627376ULL}));
    for (int i = 0; i < 3; ++i) p_img[i] += rng.normal(noise.sigma);
  }
  if (noise.quantization > 0.0)
    for (int i = 0; i < 3; ++i)
      p_img[i] = std::round(p_img[i] / noise.quantization) * noise.quantization;
  return reg.to_robot(p_img);
}

namespace {

// Stable orthonormal pair perpendicular to a unit vector.
void perpendicular_basis(const Eigen::Vector3d& a, Eigen::Vector3d& b1, Eigen::Vector3d& b2) {
  const Eigen::Vector3d pick =
      std::abs(a.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  b1 = a.cross(pick).normalized();
  b2 = a.cross(b1);
}

double line_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& c,
                     const Eigen::Vector3d& a) {
  const Eigen::Vector3d d = p - c;
  return (d - d.dot(a) * a).norm();
}

}  // namespace

ToolPointCloud generate_tool_cloud(const TaskPoint& tip, const Eigen::Vector3d& axis,
                                   double radius, double length, int n_points,
                                   double outlier_fraction, double noise_sigma,
                                   uint64_t seed) {
  if (!(radius > 0.0) || !(length > 0.0))
    throw std::invalid_argument("cylinder radius and length must be positive");
  if (outlier_fraction < 0.0 || outlier_fraction > 0.3)
    throw std::invalid_argument("outlier_fraction must lie in [0, 0.3]");
  if (n_points < 100) throw std::invalid_argument("tool clouds need at least 100 points");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");

  const Eigen::Vector3d a = axis.normalized();
  Eigen::Vector3d b1, b2;
  perpendicular_basis(a, b1, b2);

  const int n_outliers = static_cast<int>(std::llround(n_points * outlier_fraction));
  const int n_surface = n_points - n_outliers;

  Rng rng(Rng::derive({seed, 0x636c6f75ULL}));
  ToolPointCloud cloud;
  cloud.points.reserve(n_points);
  cloud.outlier_label.assign(n_points, 0);
  cloud.ground_truth_tip = tip;
  cloud.ground_truth_axis = a;

  for (int i = 0; i < n_surface; ++i) {
    const double s = rng.uniform(0.0, length);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    // Noise acts along the local surface normal (roughness of the binarized
    // surface), so axial coordinates stay clean.
    const double r = radius + rng.normal(noise_sigma);
    cloud.points.push_back(tip - s * a + r * (std::cos(phi) * b1 + std::sin(phi) * b2));
  }
  for (int i = 0; i < n_outliers; ++i) {
    const double s = rng.uniform(0.0, length);
    const double x = rng.uniform(-1.5 * radius, 1.5 * radius);
    const double y = rng.uniform(-1.5 * radius, 1.5 * radius);
    cloud.points.push_back(tip - s * a + x * b1 + y * b2);
    cloud.outlier_label[n_surface + i] = 1;
  }
  return cloud;
}

CylinderFit fit_cylinder(const std::vector<Eigen::Vector3d>& points,
                         const Eigen::Vector3d& axis_init, const Eigen::Vector3d& point_init,
                         double radius_init, int max_iterations, double tolerance) {
  const int n = static_cast<int>(points.size());
  if (n < 6) throw SegmentationError("too few points for a cylinder fit");

  const Eigen::Vector3d a0 = axis_init.normalized();
  Eigen::Vector3d b1, b2;
  perpendicular_basis(a0, b1, b2);

  // Parameters: axis rotation (alpha, beta) about b1/b2, lateral axis-point
  // shift (u, v) along b1/b2, radius r.
  Eigen::Matrix<double, 5, 1> p;
  p << 0.0, 0.0, 0.0, 0.0, radius_init;

  auto axis_of = [&](const Eigen::Matrix<double, 5, 1>& q) {
    return (Eigen::AngleAxisd(q[0], b1) * Eigen::AngleAxisd(q[1], b2) * a0).eval();
  };
  auto point_of = [&](const Eigen::Matrix<double, 5, 1>& q) {
    return (point_init + q[2] * b1 + q[3] * b2).eval();
  };
  auto residuals = [&](const Eigen::Matrix<double, 5, 1>& q, Eigen::VectorXd& r) {
    const Eigen::Vector3d a = axis_of(q);
    const Eigen::Vector3d c = point_of(q);
    for (int i = 0; i < n; ++i) r[i] = line_distance(points[i], c, a) - q[4];
  };

  Eigen::VectorXd res(n), res_p(n);
  Eigen::MatrixXd jac(n, 5);
  const double scale = std::max(radius_init, 1e-6);
  const double eps[5] = {1e-7, 1e-7, 1e-8 * std::max(1.0, scale / 1e-3),
                         1e-8 * std::max(1.0, scale / 1e-3), 1e-9};

  for (int iter = 0; iter < max_iterations; ++iter) {
    residuals(p, res);
    for (int k = 0; k < 5; ++k) {
      Eigen::Matrix<double, 5, 1> q = p;
      q[k] += eps[k];
      residuals(q, res_p);
      jac.col(k) = (res_p - res) / eps[k];
    }
    const Eigen::Matrix<double, 5, 5> h =
        jac.transpose() * jac + 1e-12 * Eigen::Matrix<double, 5, 5>::Identity();
    const Eigen::Matrix<double, 5, 1> step = h.ldlt().solve(-jac.transpose() * res);
    p += step;
    if (step.norm() < tolerance) break;
  }

  CylinderFit fit;
  fit.axis = axis_of(p);
  if (fit.axis.dot(a0) < 0.0) fit.axis = -fit.axis;
  fit.radius = std::abs(p[4]);
  // Canonical axis point: closest point on the axis to the input centroid.
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& q : points) centroid += q;
  centroid /= n;
  const Eigen::Vector3d c = point_of(p);
  fit.axis_point = c + (centroid - c).dot(fit.axis) * fit.axis;
  residuals(p, res);
  fit.rms_residual = std::sqrt(res.squaredNorm() / n);
  return fit;
}

TooltipEstimate extract_tooltip(const ToolPointCloud& cloud, const SegmentationConfig& config) {
  const int n = static_cast<int>(cloud.points.size());
  if (n < config.min_points)
    throw SegmentationError("cloud has fewer than the configured minimum points");

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : cloud.points) centroid += p;
  centroid /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= n;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
  if (!(evals[2] > 0.0) || evals[1] < 1e-12 * evals[2])
    throw SegmentationError("degenerate cloud: rank < 2");

  Eigen::Vector3d axis = eig.eigenvectors().col(2);
  if (axis.dot(config.tip_direction_hint) < 0.0) axis = -axis;

  double radius0 = 0.0;
  for (const auto& p : cloud.points) radius0 += line_distance(p, centroid, axis);
  radius0 /= n;

  CylinderFit fit = fit_cylinder(cloud.points, axis, centroid, radius0,
                                 config.fit_max_iterations, config.fit_tolerance);

  // Outlier rule: residual further than k*MAD from the fitted surface.
  std::vector<double> res(n);
  for (int i = 0; i < n; ++i)
    res[i] = line_distance(cloud.points[i], fit.axis_point, fit.axis) - fit.radius;
  std::vector<double> tmp = res;
  std::nth_element(tmp.begin(), tmp.begin() + n / 2, tmp.end());
  const double med = tmp[n / 2];
  for (int i = 0; i < n; ++i) tmp[i] = std::abs(res[i] - med);
  std::nth_element(tmp.begin(), tmp.begin() + n / 2, tmp.end());
  const double mad = tmp[n / 2];

  // Sub-nanometer floor so exact synthetic clouds are not trimmed on
  // floating-point residual scatter.
  const double cut = config.mad_threshold * mad + 1e-9 * fit.radius;
  std::vector<Eigen::Vector3d> inliers;
  inliers.reserve(n);
  for (int i = 0; i < n; ++i)
    if (std::abs(res[i] - med) <= cut) inliers.push_back(cloud.points[i]);

  if (static_cast<int>(inliers.size()) < config.min_points)
    throw SegmentationError("too few inliers after outlier removal");

  CylinderFit refit = fit_cylinder(inliers, fit.axis, fit.axis_point, fit.radius,
                                   config.fit_max_iterations, config.fit_tolerance);
  if (refit.axis.dot(config.tip_direction_hint) < 0.0) refit.axis = -refit.axis;

  // Farthest point along the axis direction, projected onto the centerline.
  double t_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : inliers)
    t_max = std::max(t_max, (p - refit.axis_point).dot(refit.axis));

  TooltipEstimate est;
  est.tip = refit.axis_point + t_max * refit.axis;
  est.axis = refit.axis;
  est.cylinder = refit;
  est.inliers = static_cast<int>(inliers.size());
  est.removed = n - est.inliers;
  return est;
}

void save_cloud_csv(const ToolPointCloud& cloud, const std::string& path) {
  CsvWriter csv(path);
  csv.header({"x_m", "y_m", "z_m"});
  for (const auto& p : cloud.points) csv.row({p.x(), p.y(), p.z()});
}

ToolPointCloud load_cloud_csv(const std::string& path) {
  ToolPointCloud cloud;
  for (const auto& row : read_csv(path)) {
    if (row.size() != 3) throw std::runtime_error("cloud CSV rows must be x,y,z: " + path);
    cloud.points.emplace_back(row[0], row[1], row[2]);
  }
  cloud.outlier_label.assign(cloud.points.size(), 0);
  return cloud;
}

}  // namespace ilcsim
