#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ilcsim/joint_dynamics.hpp"
#include "ilcsim/verdict.hpp"

namespace ilcsim {

// Phase-only inversion learning gain: the FIR coefficients reversed in time.
// Applying it causally delays by acausal_shift samples; ilc_update removes
// that shift, which is legitimate because trial data is complete before each
// update.
struct LearningFilter {
  std::vector<double> f;
  int acausal_shift = 0;  // N - 1
};

// Zero-phase low-pass: a symmetric FIR applied forward-backward, so the net
// response is the squared magnitude with identically zero phase.
struct QFilter {
  std::vector<double> taps{1.0};
  double cutoff = 1.0;  // normalized to Nyquist

  static QFilter identity() { return QFilter{}; }
  // Hann windowed-sinc low-pass, odd tap count, DC gain exactly 1.
  static QFilter lowpass(double cutoff, int n_taps);
};

struct JointTrajectory {
  std::vector<double> samples;
  double sample_time = 1e-3;
  int joint_id = 0;
};

struct TrackingReport {
  std::vector<double> trajectory_error;  // signed per-sample; norms in the 3-D variant
  std::vector<double> path_error;        // min distance to the reference polyline
  double rms_trajectory = 0.0;
  double max_trajectory = 0.0;
  double rms_path = 0.0;
  double max_path = 0.0;
  std::vector<uint8_t> saturated;
  double saturation_fraction = 0.0;
};

struct DynamicIterationRecord {
  int iteration = 0;  // 1-based
  std::vector<double> u;
  std::vector<double> y;
  TrackingReport tracking;
};

struct DynamicJointResult {
  int joint_id = 0;
  LoopVerdict verdict = LoopVerdict::max_iterations;
  std::vector<DynamicIterationRecord> iterations;
  double initial_max_error = 0.0;
  double final_max_error = 0.0;
  double convergence_value = 0.0;        // sup |Q (1 - F H)|
  bool reference_rate_feasible = true;   // peak reference rate vs the actuator limit
};

struct DynamicIlcConfig {
  QFilter q;
  int max_iterations = 6;
  // Per-joint trajectory-error thresholds in joint units; a joint also counts
  // as converged when its max error shrank by min_reduction.
  std::vector<double> thresholds;
  double min_reduction = 10.0;
  double saturation_fraction_limit = 0.2;
  uint64_t seed = 0;
};

LearningFilter build_learning_filter(const FirModel& fir);

// Forward-backward filtering with odd-reflection edge padding. The input
// must be longer than the filter.
std::vector<double> apply_zero_phase(const QFilter& qf, const std::vector<double>& x);

// u_next = Q(u + aligned(f * e)).
JointTrajectory ilc_update(const JointTrajectory& u, const std::vector<double>& e,
                           const LearningFilter& f, const QFilter& qf);

// sup over frequency of |Q(e^{jw}) (1 - F(e^{jw}) H(e^{jw}))|; < 1 predicts a
// monotone error decrease for the linear unsaturated plant. F is evaluated
// with its acausal shift removed, Q as the double-pass squared magnitude.
double convergence_condition(const FirModel& fir, const LearningFilter& f, const QFilter& qf,
                             int n_frequencies = 2049);

TrackingReport tracking_metrics(const std::vector<double>& reference,
                                const std::vector<double>& actual);
TrackingReport tracking_metrics(const std::vector<Eigen::Vector3d>& reference,
                                const std::vector<Eigen::Vector3d>& actual);

// Per-joint independent ILC loops (SISO): simulate, record tracking, update
// via ilc_update until the threshold, the iteration cap, sustained
// saturation, or a divergence guard (two consecutive error increases).
std::vector<DynamicJointResult> run_dynamic_ilc(const std::vector<JointPlant>& plants,
                                                const std::vector<JointTrajectory>& references,
                                                const std::vector<LearningFilter>& filters,
                                                const std::vector<FirModel>& firs,
                                                const DynamicIlcConfig& config);

}  // namespace ilcsim
