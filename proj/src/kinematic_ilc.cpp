#include "ilcsim/kinematic_ilc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ilcsim/errors.hpp"
#include "ilcsim/rng.hpp"
#include "ilcsim/units.hpp"

namespace ilcsim {

void GridSpec::validate() const {
  if (!(rotation_step_deg > 0.0) || !(insertion_step_mm > 0.0))
    throw std::invalid_argument("grid steps must be positive");
  if (rotation_range_deg < 0.0 || insertion_range_mm < 0.0)
    throw std::invalid_argument("grid ranges must be non-negative");
  auto divides = [](double range, double step) {
    const double k = range / step;
    return std::abs(k - std::round(k)) < 1e-9;
  };
  if (!divides(rotation_range_deg, rotation_step_deg) ||
      !divides(insertion_range_mm, insertion_step_mm))
    throw std::invalid_argument("grid steps must evenly divide ranges");
}

int GridSpec::rotation_count() const {
  return static_cast<int>(std::round(rotation_range_deg / rotation_step_deg)) + 1;
}

int GridSpec::insertion_count() const {
  return static_cast<int>(std::round(insertion_range_mm / insertion_step_mm)) + 1;
}

TaskError compute_error(const TaskPoint& reference, const TaskPoint& measured,
                        double sanity_bound) {
  if (!reference.allFinite() || !measured.allFinite())
    throw std::invalid_argument("task points must be finite");
  TaskError err;
  err.e = reference - measured;
  if (err.e.norm() > sanity_bound)
    throw MeasurementError("task error " + std::to_string(err.e.norm()) +
                           " m exceeds the sanity bound; measurement likely failed");
  return err;
}

Eigen::Vector3d joint_correction(const LearningGain& gain, const TaskError& e) {
  return gain.L * e.e;
}

LearningGain gain_from_jacobian(const Eigen::Matrix3d& jacobian, double alpha,
                                double condition_threshold) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("alpha must lie in (0, 1]");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(jacobian, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  const double smax = s[0];
  if (!(smax > 0.0)) throw SingularConfigurationError("Jacobian is identically zero");

  LearningGain gain;
  gain.alpha = alpha;
  Eigen::Vector3d inv = Eigen::Vector3d::Zero();
  int kept = 0;
  for (int i = 0; i < 3; ++i) {
    if (s[i] > smax / condition_threshold) {
      inv[i] = 1.0 / s[i];
      ++kept;
    } else {
      ++gain.truncated_directions;
    }
  }
  if (kept == 0) throw SingularConfigurationError("Jacobian rank-deficient after truncation");
  gain.condition_number = smax / s[kept - 1];
  gain.L = alpha * svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return gain;
}

LearningGain build_gain(const RobotModel& model, const JointVector& q, double alpha,
                        std::span<const double> steps, double condition_threshold) {
  const Jacobian jac = numerical_jacobian(model, q, steps);
  if (jac.matrix.cols() != 3)
    throw std::invalid_argument("learning gain needs a 3-joint Jacobian");
  return gain_from_jacobian(jac.matrix, alpha, condition_threshold);
}

double check_contraction(const LearningGain& gain, const Jacobian& j_true) {
  if (j_true.matrix.cols() != 3)
    throw std::invalid_argument("contraction check needs a 3-column Jacobian");
  const Eigen::Matrix3d m = Eigen::Matrix3d::Identity() - gain.L * j_true.matrix;
  return m.jacobiSvd().singularValues()[0];
}

JointVector solve_nominal_ik(const RobotModel& model, const TaskPoint& target,
                             const JointVector& q_init, const IkOptions& opts) {
  if ((target - model.rcm_position).norm() > model.workspace_radius)
    throw std::invalid_argument("IK target outside the configured workspace");
  const auto steps = default_jacobian_steps(model);

  JointVector q = q_init;
  double residual = (target - forward_kinematics(model, q)).norm();
  if (residual <= opts.tolerance) return q;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const LearningGain gain = build_gain(model, q, opts.alpha, steps, opts.condition_threshold);
    const TaskPoint current = forward_kinematics(model, q);
    const Eigen::Vector3d dq = gain.L * (target - current);
    q.q1 += dq[0];
    q.q2 += dq[1];
    q.q3 += dq[2];
    // Keep an interior margin so Jacobian probes stay within limits.
    auto clamp_interior = [&](double v, int j) {
      const auto& lim = model.joints[j].limits;
      return std::clamp(v, lim.lower + steps[j], lim.upper - steps[j]);
    };
    q.q1 = clamp_interior(q.q1, 0);
    q.q2 = clamp_interior(q.q2, 1);
    q.q3 = clamp_interior(q.q3, 2);

    residual = (target - forward_kinematics(model, q)).norm();
    if (residual <= opts.tolerance) return q;
  }
  throw IkDivergenceError("nominal-FK inner loop did not converge; residual " +
                              std::to_string(residual) + " m",
                          residual);
}

KinematicIlcResult run_kinematic_ilc(const RobotModel& nominal, const MeasurementSource& source,
                                     const GridSpec& grid, const KinematicConfig& config) {
  grid.validate();
  nominal.validate();
  if (nominal.joints.size() != 4)
    throw std::invalid_argument("kinematic ILC requires the 4-joint RCM model");
  if (config.measurement_averaging < 1)
    throw std::invalid_argument("measurement_averaging must be >= 1");

  const int n_rot = grid.rotation_count();
  const int n_ins = grid.insertion_count();

  KinematicIlcResult result;
  result.grid.grid = grid;
  result.grid.references.assign(n_ins, Eigen::Vector3d::Zero());
  result.grid.joints.assign(n_rot, std::vector<JointVector>(n_ins));
  for (int r = 0; r < n_rot; ++r)
    for (int i = 0; i < n_ins; ++i)
      result.grid.joints[r][i] =
          JointVector{0.0, 0.0, mm_to_m(grid.insertion_mm(i)), deg2rad(grid.rotation_deg(r))};

  auto observe_node = [&](int iter, int r, int i) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int rep = 0; rep < config.measurement_averaging; ++rep) {
      MeasurementContext ctx{iter, r, i, rep};
      acc += source(result.grid.joints[r][i], ctx);
    }
    return (acc / config.measurement_averaging).eval();
  };

  double prev_rms = std::numeric_limits<double>::infinity();
  int rises = 0;

  for (int iter = 1; iter <= config.stop.max_iterations; ++iter) {
    IterationRecord rec;
    rec.iteration = iter;
    rec.nodes.reserve(grid.node_count());

    // Measure every node; the rotation-zero measurement of each depth is the
    // iteration's reference for that depth.
    std::vector<std::vector<Eigen::Vector3d>> measured(n_rot, std::vector<Eigen::Vector3d>(n_ins));
    for (int i = 0; i < n_ins; ++i)
      for (int r = 0; r < n_rot; ++r) measured[r][i] = observe_node(iter, r, i);
    for (int i = 0; i < n_ins; ++i) result.grid.references[i] = measured[0][i];

    double sum_sq = 0.0;
    for (int r = 0; r < n_rot; ++r) {
      for (int i = 0; i < n_ins; ++i) {
        NodeRecord node;
        node.rotation_index = r;
        node.insertion_index = i;
        node.q = result.grid.joints[r][i];
        node.measured = measured[r][i];
        node.reference = result.grid.references[i];
        TaskError err = compute_error(node.reference, node.measured, config.error_sanity_bound);
        err.rotation_index = r;
        err.insertion_index = i;
        err.iteration = iter;
        node.error = err.e;
        sum_sq += err.e.squaredNorm();
        rec.max_error = std::max(rec.max_error, err.e.norm());
        rec.nodes.push_back(node);
      }
    }
    rec.rms_error = std::sqrt(sum_sq / grid.node_count());
    result.iterations.push_back(rec);
    result.final_rms = rec.rms_error;

    if (rec.rms_error <= config.stop.rms_threshold) {
      result.verdict = LoopVerdict::converged;
      return result;
    }
    if (rec.rms_error > prev_rms) {
      if (++rises >= 2) {
        result.verdict = LoopVerdict::diverged;
        return result;
      }
    } else {
      rises = 0;
    }
    if (std::isfinite(prev_rms) && std::abs(prev_rms - rec.rms_error) <= config.stop.stall) {
      result.verdict = LoopVerdict::stalled;
      return result;
    }
    prev_rms = rec.rms_error;
    if (iter == config.stop.max_iterations) break;

    // Correction: move the nominal FK by alpha * error at every node. The
    // commanded q4 is the sweep variable and is never corrected.
    for (int r = 0; r < n_rot; ++r) {
      for (int i = 0; i < n_ins; ++i) {
        if (r == 0) continue;  // reference anchor, zero error by construction
        const JointVector& q = result.grid.joints[r][i];
        const Eigen::Vector3d e = rec.nodes[static_cast<size_t>(r) * n_ins + i].error;
        const TaskPoint displaced = forward_kinematics(nominal, q) + config.alpha * e;
        result.grid.joints[r][i] = solve_nominal_ik(nominal, displaced, q, config.ik);
      }
    }
  }
  result.verdict = LoopVerdict::max_iterations;
  return result;
}

KinematicIlcResult run_kinematic_ilc(const RobotModel& nominal, const RobotModel& true_model,
                                     const FrameRegistration& reg, const MeasurementNoise& noise,
                                     uint64_t seed, const GridSpec& grid,
                                     const KinematicConfig& config) {
  MeasurementSource source = [&](const JointVector& q, const MeasurementContext& ctx) {
    const uint64_t s = Rng::derive({seed, static_cast<uint64_t>(ctx.iteration),
                                    static_cast<uint64_t>(ctx.rotation_index),
                                    static_cast<uint64_t>(ctx.insertion_index),
                                    static_cast<uint64_t>(ctx.repeat)});
    return observe_tooltip(true_model, q, reg, noise, s);
  };
  KinematicIlcResult result = run_kinematic_ilc(nominal, source, grid, config);

  // Contraction diagnostic at the initial grid joints (simulation only).
  double worst = 0.0;
  const auto steps = default_jacobian_steps(nominal);
  for (int r = 0; r < grid.rotation_count(); ++r) {
    for (int i = 0; i < grid.insertion_count(); ++i) {
      const JointVector q{0.0, 0.0, mm_to_m(grid.insertion_mm(i)),
                          deg2rad(grid.rotation_deg(r))};
      const LearningGain gain = build_gain(nominal, q, config.alpha, steps);
      const Jacobian j_true = numerical_jacobian(true_model, q, steps);
      worst = std::max(worst, check_contraction(gain, j_true));
    }
  }
  result.contraction_max = worst;
  result.contraction_available = true;
  return result;
}

}  // namespace ilcsim
