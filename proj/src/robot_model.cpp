#include "ilcsim/robot_model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ilcsim/rng.hpp"
#include "ilcsim/units.hpp"

namespace ilcsim {

using nlohmann::json;

Eigen::Isometry3d JointDef::origin() const {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translate(origin_xyz);
  t.rotate(Eigen::AngleAxisd(origin_rpy[2], Eigen::Vector3d::UnitZ()) *
           Eigen::AngleAxisd(origin_rpy[1], Eigen::Vector3d::UnitY()) *
           Eigen::AngleAxisd(origin_rpy[0], Eigen::Vector3d::UnitX()));
  return t;
}

bool ToolGeometry::is_nominal() const {
  return tip_offset.isZero(0.0) && axis_tilt.isZero(0.0) && bend == 0.0;
}

Eigen::Vector3d ToolGeometry::tip_in_tool_frame() const {
  Eigen::Vector3d shaft;
  if (std::abs(bend) < 1e-12) {
    shaft = Eigen::Vector3d(0.0, 0.0, length);
  } else {
    // Constant-curvature arc of arclength `length`, deflecting toward +x.
    shaft = Eigen::Vector3d((1.0 - std::cos(bend * length)) / bend, 0.0,
                            std::sin(bend * length) / bend);
  }
  const Eigen::Matrix3d tilt =
      (Eigen::AngleAxisd(axis_tilt[0], Eigen::Vector3d::UnitX()) *
       Eigen::AngleAxisd(axis_tilt[1], Eigen::Vector3d::UnitY()))
          .toRotationMatrix();
  return tip_offset + tilt * shaft;
}

void RobotModel::validate() const {
  if (joints.empty()) throw std::invalid_argument("robot model has no joints");
  if (!(workspace_radius > 0.0))
    throw std::invalid_argument("workspace_radius must be positive");
  for (const auto& j : joints) {
    if (!(j.limits.lower <= j.limits.upper))
      throw std::invalid_argument("joint '" + j.name + "' has inverted limits");
    if (!j.origin_xyz.allFinite() || !j.origin_rpy.allFinite() || !std::isfinite(j.offset))
      throw std::invalid_argument("joint '" + j.name + "' has non-finite parameters");
  }
  if (!(tool.length >= 0.0)) throw std::invalid_argument("tool length must be >= 0");
}

void PerturbationSpec::validate() const {
  auto range_ok = [](double lo, double hi) { return lo >= 0.0 && hi >= lo; };
  if (!range_ok(tip_offset_min, tip_offset_max) || !range_ok(axis_tilt_min, axis_tilt_max) ||
      !range_ok(bend_min, bend_max) || dh_angle_max < 0.0 || dh_translation_max < 0.0)
    throw std::invalid_argument("perturbation magnitudes must be non-negative ranges");
}

namespace {

void check_joint_values(const RobotModel& model, std::span<const double> q) {
  if (q.size() != model.joints.size())
    throw std::invalid_argument("joint vector size does not match model");
  for (size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(q[i]))
      throw std::invalid_argument("joint '" + model.joints[i].name + "' value is not finite");
    if (!model.joints[i].limits.contains(q[i]))
      throw std::invalid_argument("joint '" + model.joints[i].name + "' value " +
                                  std::to_string(q[i]) + " outside limits");
  }
}

}  // namespace

Eigen::Isometry3d chain_frame(const RobotModel& model, std::span<const double> q) {
  Eigen::Isometry3d t(Eigen::Translation3d(model.rcm_position));
  for (size_t i = 0; i < model.joints.size(); ++i) {
    const JointDef& j = model.joints[i];
    t = t * j.origin();
    const double v = q[i] + j.offset;
    if (j.type == JointType::revolute)
      t = t * Eigen::AngleAxisd(v, Eigen::Vector3d::UnitZ());
    else
      t = t * Eigen::Translation3d(0.0, 0.0, v);
  }
  return t;
}

TaskPoint forward_kinematics(const RobotModel& model, std::span<const double> q) {
  check_joint_values(model, q);
  const TaskPoint tip = chain_frame(model, q) * model.tool.tip_in_tool_frame();
  if ((tip - model.rcm_position).norm() > model.workspace_radius)
    throw std::invalid_argument("tooltip left the configured workspace");
  return tip;
}

TaskPoint forward_kinematics(const RobotModel& model, const JointVector& q) {
  if (model.joints.size() != 4)
    throw std::invalid_argument("JointVector overload requires a 4-joint model");
  const double qa[4] = {q.q1, q.q2, q.q3, q.q4};
  return forward_kinematics(model, std::span<const double>(qa, 4));
}

std::vector<double> default_jacobian_steps(const RobotModel& model) {
  std::vector<double> steps;
  steps.reserve(model.joints.size());
  for (const auto& j : model.joints)
    steps.push_back(j.type == JointType::revolute ? 1e-4 : 1e-5);
  return steps;
}

Jacobian numerical_jacobian(const RobotModel& model, std::span<const double> q,
                            std::span<const double> steps) {
  check_joint_values(model, q);
  std::vector<double> default_steps;
  if (steps.empty()) {
    default_steps = default_jacobian_steps(model);
    steps = default_steps;
  }
  if (steps.size() != model.joints.size())
    throw std::invalid_argument("jacobian step count does not match joint count");

  const int n_cols = static_cast<int>(std::min<size_t>(3, model.joints.size()));
  Jacobian jac;
  jac.matrix.resize(3, n_cols);
  jac.linearization_point = Eigen::Map<const Eigen::VectorXd>(q.data(), q.size());

  std::vector<double> qp(q.begin(), q.end());
  for (int i = 0; i < n_cols; ++i) {
    const double h = steps[i];
    if (!(h > 0.0)) throw std::invalid_argument("jacobian step must be positive");
    if (!model.joints[i].limits.contains(q[i] + h) ||
        !model.joints[i].limits.contains(q[i] - h))
      throw std::invalid_argument("jacobian perturbation leaves joint limits for '" +
                                  model.joints[i].name + "'");
    qp[i] = q[i] + h;
    const TaskPoint fwd = forward_kinematics(model, qp);
    qp[i] = q[i] - h;
    const TaskPoint bwd = forward_kinematics(model, qp);
    qp[i] = q[i];
    jac.matrix.col(i) = (fwd - bwd) / (2.0 * h);
  }
  return jac;
}

Jacobian numerical_jacobian(const RobotModel& model, const JointVector& q,
                            std::span<const double> steps) {
  const double qa[4] = {q.q1, q.q2, q.q3, q.q4};
  return numerical_jacobian(model, std::span<const double>(qa, 4), steps);
}

RobotModel perturb_model(const RobotModel& nominal, const PerturbationSpec& spec,
                         uint64_t seed) {
  nominal.validate();
  spec.validate();
  RobotModel out = nominal;
  Rng rng(Rng::derive({seed, 0x70657274ULL}));

  for (auto& j : out.joints) {
    if (j.type == JointType::revolute)
      j.offset += rng.uniform(-spec.dh_angle_max, spec.dh_angle_max);
    else
      j.offset += rng.uniform(-spec.dh_translation_max, spec.dh_translation_max);
  }

  const double off_mag = rng.uniform(spec.tip_offset_min, spec.tip_offset_max);
  const double off_az = rng.uniform(0.0, 2.0 * kPi);
  out.tool.tip_offset +=
      off_mag * Eigen::Vector3d(std::cos(off_az), std::sin(off_az), 0.0);

  const double tilt_mag = rng.uniform(spec.axis_tilt_min, spec.axis_tilt_max);
  const double tilt_az = rng.uniform(0.0, 2.0 * kPi);
  out.tool.axis_tilt +=
      tilt_mag * Eigen::Vector2d(std::cos(tilt_az), std::sin(tilt_az));

  out.tool.bend += rng.uniform(spec.bend_min, spec.bend_max);
  return out;
}

// --- JSON schema (documented in README) -------------------------------------

namespace {

json vec_to_json(const Eigen::Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

RobotModel robot_from_json(const json& j) {
  RobotModel m;
  m.name = j.value("name", "unnamed");
  m.rcm_position = vec3_from_json(j.at("rcm_position_m"));
  m.workspace_radius = j.value("workspace_radius_m", 0.5);
  for (const auto& row : j.at("joints")) {
    JointDef jd;
    jd.name = row.value("name", "");
    const std::string type = row.at("type").get<std::string>();
    if (type == "revolute")
      jd.type = JointType::revolute;
    else if (type == "prismatic")
      jd.type = JointType::prismatic;
    else
      throw std::invalid_argument("unknown joint type: " + type);
    if (row.contains("origin_xyz_m")) jd.origin_xyz = vec3_from_json(row["origin_xyz_m"]);
    if (row.contains("origin_rpy_rad")) jd.origin_rpy = vec3_from_json(row["origin_rpy_rad"]);
    jd.offset = row.value("offset", 0.0);
    if (row.contains("limits")) {
      jd.limits.lower = row["limits"].at(0).get<double>();
      jd.limits.upper = row["limits"].at(1).get<double>();
    }
    m.joints.push_back(jd);
  }
  const json& t = j.at("tool");
  m.tool.length = t.at("length_m").get<double>();
  if (t.contains("tip_offset_m")) m.tool.tip_offset = vec3_from_json(t["tip_offset_m"]);
  if (t.contains("axis_tilt_rad")) {
    m.tool.axis_tilt[0] = t["axis_tilt_rad"].at(0).get<double>();
    m.tool.axis_tilt[1] = t["axis_tilt_rad"].at(1).get<double>();
  }
  m.tool.bend = t.value("bend_per_m", 0.0);
  m.validate();
  return m;
}

json robot_to_json(const RobotModel& m) {
  json j;
  j["name"] = m.name;
  j["rcm_position_m"] = vec_to_json(m.rcm_position);
  j["workspace_radius_m"] = m.workspace_radius;
  j["joints"] = json::array();
  for (const auto& jd : m.joints) {
    json row;
    row["name"] = jd.name;
    row["type"] = jd.type == JointType::revolute ? "revolute" : "prismatic";
    row["origin_xyz_m"] = vec_to_json(jd.origin_xyz);
    row["origin_rpy_rad"] = vec_to_json(jd.origin_rpy);
    row["offset"] = jd.offset;
    row["limits"] = json::array({jd.limits.lower, jd.limits.upper});
    j["joints"].push_back(row);
  }
  j["tool"]["length_m"] = m.tool.length;
  j["tool"]["tip_offset_m"] = vec_to_json(m.tool.tip_offset);
  j["tool"]["axis_tilt_rad"] = json::array({m.tool.axis_tilt[0], m.tool.axis_tilt[1]});
  j["tool"]["bend_per_m"] = m.tool.bend;
  return j;
}

RobotModel load_robot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open robot file: " + path);
  json j;
  in >> j;
  return robot_from_json(j);
}

void save_robot(const RobotModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write robot file: " + path);
  out << robot_to_json(model).dump(2) << '\n';
}

RobotModel make_default_rcm_robot() {
  RobotModel m;
  m.name = "rcm_default";
  m.rcm_position = {0.10, -0.02, 0.15};
  m.workspace_radius = 0.5;

  JointDef pan;
  pan.name = "pan";
  pan.type = JointType::revolute;
  pan.origin_rpy = {0.0, kPi / 2.0, 0.0};  // joint z -> base x
  pan.limits = {-1.0, 1.0};
  m.joints.push_back(pan);

  JointDef tilt;
  tilt.name = "tilt";
  tilt.type = JointType::revolute;
  tilt.origin_rpy = {-kPi / 2.0, 0.0, 0.0};  // joint z -> base y (at home)
  tilt.limits = {-1.0, 1.0};
  m.joints.push_back(tilt);

  JointDef ins;
  ins.name = "insertion";
  ins.type = JointType::prismatic;
  ins.origin_rpy = {0.0, kPi / 2.0, 0.0};  // joint z -> tool axis (-z base at home)
  ins.limits = {-0.002, 0.022};            // slight retraction margin below depth 0
  m.joints.push_back(ins);

  JointDef roll;
  roll.name = "roll";
  roll.type = JointType::revolute;
  roll.limits = {-2.0 * kPi, 2.0 * kPi};
  m.joints.push_back(roll);

  m.tool.length = 0.04;
  return m;
}

}  // namespace ilcsim
