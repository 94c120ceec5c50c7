#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "ilcsim/errors.hpp"
#include "ilcsim/measurement.hpp"
#include "ilcsim/rng.hpp"
#include "ilcsim/units.hpp"
#include "oracles.hpp"

using namespace ilcsim;

namespace {

FrameRegistration make_registration() {
  FrameRegistration reg;
  reg.rotation = (Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ()) *
                  Eigen::AngleAxisd(-0.2, Eigen::Vector3d::UnitY()) *
                  Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitX()))
                     .toRotationMatrix();
  reg.translation = {0.03, -0.01, 0.02};
  return reg;
}

}  // namespace

TEST_CASE("noiseless observation through the identity registration is the true FK") {
  const RobotModel m = make_default_rcm_robot();
  const JointVector q{0.01, -0.02, 0.001, 0.8};
  const TaskPoint tip = forward_kinematics(m, q);
  const TaskPoint obs = observe_tooltip(m, q, FrameRegistration{}, MeasurementNoise{}, 5);
  CHECK((obs - tip).norm() == 0.0);
}

TEST_CASE("noiseless observation cancels an arbitrary registration") {
  const RobotModel m = make_default_rcm_robot();
  const JointVector q{-0.03, 0.015, 0.0004, 2.1};
  const TaskPoint tip = forward_kinematics(m, q);
  const TaskPoint obs = observe_tooltip(m, q, make_registration(), MeasurementNoise{}, 5);
  CHECK((obs - tip).norm() < 1e-12);
}

TEST_CASE("observation noise reproduces the configured standard deviation") {
  const RobotModel m = make_default_rcm_robot();
  const JointVector q{0.0, 0.0, 0.001, 0.0};
  const TaskPoint tip = forward_kinematics(m, q);
  MeasurementNoise noise;
  noise.sigma = 5e-6;

  const int n = 10000;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d sq = Eigen::Vector3d::Zero();
  for (int s = 0; s < n; ++s) {
    const Eigen::Vector3d d = observe_tooltip(m, q, make_registration(), noise, s) - tip;
    mean += d;
    sq += d.cwiseProduct(d);
  }
  mean /= n;
  for (int a = 0; a < 3; ++a) {
    const double std_a = std::sqrt(sq[a] / n - mean[a] * mean[a]);
    CHECK(std_a == doctest::Approx(5e-6).epsilon(0.10));
  }
}

TEST_CASE("registration round-trip is the identity") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    FrameRegistration reg;
    reg.rotation = (Eigen::AngleAxisd(rng.uniform(-3, 3), Eigen::Vector3d::UnitZ()) *
                    Eigen::AngleAxisd(rng.uniform(-1.5, 1.5), Eigen::Vector3d::UnitY()) *
                    Eigen::AngleAxisd(rng.uniform(-3, 3), Eigen::Vector3d::UnitX()))
                       .toRotationMatrix();
    reg.translation = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    reg.validate();
    const Eigen::Vector3d p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    CHECK((reg.to_robot(reg.to_imaging(p)) - p).norm() < 1e-12);
  }
}

TEST_CASE("malformed registrations are rejected") {
  FrameRegistration reg;
  reg.rotation(0, 0) = 2.0;
  CHECK_THROWS_AS(reg.validate(), std::invalid_argument);
  FrameRegistration mirror;
  mirror.rotation = -Eigen::Matrix3d::Identity();  // det -1
  CHECK_THROWS_AS(mirror.validate(), std::invalid_argument);
}

TEST_CASE("noiseless clouds lie exactly on the cylinder surface") {
  const Eigen::Vector3d tip(0.01, 0.02, 0.03);
  const Eigen::Vector3d axis = Eigen::Vector3d(0.3, -0.2, 0.93).normalized();
  const double radius = 150e-6;
  const ToolPointCloud cloud = generate_tool_cloud(tip, axis, radius, 2e-3, 500, 0.0, 0.0, 3);
  REQUIRE(cloud.points.size() == 500);
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d d = p - tip;
    const double dist = (d - d.dot(axis) * axis).norm();
    CHECK(std::abs(dist - radius) < 1e-15);
    // Extends from the tip along -axis only.
    CHECK(d.dot(axis) <= 1e-12);
    CHECK(d.dot(axis) >= -2e-3 - 1e-12);
  }
}

TEST_CASE("outlier count and determinism of the generator") {
  const Eigen::Vector3d tip(0, 0, 0);
  const Eigen::Vector3d axis(0, 0, 1);
  const ToolPointCloud a = generate_tool_cloud(tip, axis, 150e-6, 2e-3, 1000, 0.05, 10e-6, 7);
  int outliers = 0;
  for (uint8_t l : a.outlier_label) outliers += l;
  CHECK(outliers == 50);

  const ToolPointCloud b = generate_tool_cloud(tip, axis, 150e-6, 2e-3, 1000, 0.05, 10e-6, 7);
  REQUIRE(a.points.size() == b.points.size());
  for (size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i] == b.points[i]);
}

TEST_CASE("generator validates its inputs") {
  const Eigen::Vector3d tip(0, 0, 0), axis(0, 0, 1);
  CHECK_THROWS_AS(generate_tool_cloud(tip, axis, 0.0, 2e-3, 500, 0, 0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_tool_cloud(tip, axis, 1e-4, 2e-3, 500, 0.5, 0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_tool_cloud(tip, axis, 1e-4, 2e-3, 50, 0.0, 0, 1),
                  std::invalid_argument);
}

TEST_CASE("noiseless extraction recovers axis and tip") {
  const Eigen::Vector3d tip(0.005, -0.003, 0.02);
  const Eigen::Vector3d axis = Eigen::Vector3d(0.1, 0.2, 0.97).normalized();
  const double radius = 150e-6;
  const ToolPointCloud cloud = generate_tool_cloud(tip, axis, radius, 2e-3, 800, 0.0, 0.0, 11);

  SegmentationConfig config;
  config.tip_direction_hint = axis;
  const TooltipEstimate est = extract_tooltip(cloud, config);

  CHECK(std::acos(std::clamp(est.axis.dot(axis), -1.0, 1.0)) < 1e-6);
  CHECK((est.tip - tip).norm() < radius / 10.0);
}

TEST_CASE("extraction tolerates outliers and surface noise") {
  // 300 um diameter cannula, 5% outliers, 10 um surface noise.
  const Eigen::Vector3d tip(0.001, 0.002, -0.004);
  const Eigen::Vector3d axis = Eigen::Vector3d(-0.2, 0.4, 0.89).normalized();
  SegmentationConfig config;
  config.tip_direction_hint = (axis + Eigen::Vector3d(0.3, -0.2, 0.1)).normalized();
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const ToolPointCloud cloud =
        generate_tool_cloud(tip, axis, 150e-6, 2e-3, 1000, 0.05, 10e-6, seed);
    const TooltipEstimate est = extract_tooltip(cloud, config);
    CHECK((est.tip - tip).norm() <= 15e-6);
    CHECK(est.removed > 0);
  }
}

TEST_CASE("extraction is deterministic") {
  const Eigen::Vector3d axis(0, 0, 1);
  const ToolPointCloud cloud =
      generate_tool_cloud({0, 0, 0}, axis, 150e-6, 2e-3, 600, 0.05, 10e-6, 21);
  SegmentationConfig config;
  config.tip_direction_hint = axis;
  const TooltipEstimate a = extract_tooltip(cloud, config);
  const TooltipEstimate b = extract_tooltip(cloud, config);
  CHECK(a.tip == b.tip);
  CHECK(a.axis == b.axis);
  CHECK(a.inliers == b.inliers);
}

TEST_CASE("extraction is equivariant under rigid transforms") {
  const Eigen::Vector3d axis = Eigen::Vector3d(0.3, 0.1, 0.95).normalized();
  const ToolPointCloud cloud =
      generate_tool_cloud({0.002, -0.001, 0.01}, axis, 150e-6, 2e-3, 700, 0.0, 0.0, 31);

  SegmentationConfig config;
  config.tip_direction_hint = axis;
  const TooltipEstimate base = extract_tooltip(cloud, config);

  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(1.1, Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(-0.6, Eigen::Vector3d::UnitX()))
                                  .toRotationMatrix();
  const Eigen::Vector3d trans(0.05, -0.02, 0.01);
  ToolPointCloud moved = cloud;
  for (auto& p : moved.points) p = rot * p + trans;
  SegmentationConfig moved_config = config;
  moved_config.tip_direction_hint = rot * config.tip_direction_hint;
  const TooltipEstimate est = extract_tooltip(moved, moved_config);

  CHECK((est.tip - (rot * base.tip + trans)).norm() < 1e-9);
  CHECK((est.axis - rot * base.axis).norm() < 1e-9);
}

TEST_CASE("degenerate clouds raise segmentation errors") {
  ToolPointCloud line;
  for (int i = 0; i < 200; ++i) line.points.emplace_back(0.0, 0.0, i * 1e-5);
  CHECK_THROWS_AS(extract_tooltip(line, SegmentationConfig{}), SegmentationError);

  ToolPointCloud tiny;
  for (int i = 0; i < 5; ++i) tiny.points.emplace_back(i * 0.1, i * 0.2, 0.3);
  CHECK_THROWS_AS(extract_tooltip(tiny, SegmentationConfig{}), SegmentationError);
}

TEST_CASE("cloud CSV round-trips") {
  const ToolPointCloud cloud =
      generate_tool_cloud({0.001, 0.002, 0.003}, {0, 0, 1}, 150e-6, 2e-3, 200, 0.0, 5e-6, 17);
  const auto tmp = std::filesystem::temp_directory_path() / "ilcsim_cloud_roundtrip.csv";
  save_cloud_csv(cloud, tmp.string());
  const ToolPointCloud loaded = load_cloud_csv(tmp.string());
  REQUIRE(loaded.points.size() == cloud.points.size());
  for (size_t i = 0; i < cloud.points.size(); ++i) CHECK(loaded.points[i] == cloud.points[i]);
  std::filesystem::remove(tmp);
}
