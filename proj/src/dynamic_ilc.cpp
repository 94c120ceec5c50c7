#include "ilcsim/dynamic_ilc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "ilcsim/rng.hpp"
#include "ilcsim/units.hpp"

namespace ilcsim {

QFilter QFilter::lowpass(double cutoff, int n_taps) {
  if (!(cutoff > 0.0) || cutoff >= 1.0)
    throw std::invalid_argument("Q cutoff must lie in (0, 1) of Nyquist");
  if (n_taps < 3 || n_taps % 2 == 0)
    throw std::invalid_argument("Q filter needs an odd tap count >= 3");

  QFilter qf;
  qf.cutoff = cutoff;
  qf.taps.resize(n_taps);
  const int c = (n_taps - 1) / 2;
  const double wc = cutoff * kPi;
  double sum = 0.0;
  for (int i = 0; i < n_taps; ++i) {
    const int k = i - c;
    const double sinc = k == 0 ? wc / kPi : std::sin(wc * k) / (kPi * k);
    const double hann = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (n_taps - 1)));
    qf.taps[i] = sinc * hann;
    sum += qf.taps[i];
  }
  for (double& t : qf.taps) t /= sum;  // DC gain exactly 1
  return qf;
}

namespace {

std::vector<double> causal_filter(const std::vector<double>& taps, const std::vector<double>& x) {
  std::vector<double> y(x.size(), 0.0);
  for (size_t k = 0; k < x.size(); ++k) {
    double acc = 0.0;
    const size_t jmax = std::min(taps.size() - 1, k);
    for (size_t j = 0; j <= jmax; ++j) acc += taps[j] * x[k - j];
    y[k] = acc;
  }
  return y;
}

}  // namespace

std::vector<double> apply_zero_phase(const QFilter& qf, const std::vector<double>& x) {
  const size_t t = qf.taps.size();
  if (t == 1) {
    std::vector<double> y(x.size());
    for (size_t k = 0; k < x.size(); ++k) y[k] = qf.taps[0] * x[k];
    return y;
  }
  if (x.size() <= t)
    throw std::invalid_argument("zero-phase input must be longer than the filter");

  const size_t pad = std::min(3 * (t - 1), x.size() - 1);
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  // Odd reflection about the end values preserves local trends at the edges.
  for (size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x.front() - x[pad - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x.back() - x[x.size() - 2 - i]);

  std::vector<double> y = causal_filter(qf.taps, ext);
  std::reverse(y.begin(), y.end());
  y = causal_filter(qf.taps, y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + pad, y.begin() + pad + x.size()};
}

LearningFilter build_learning_filter(const FirModel& fir) {
  if (fir.h.empty()) throw std::invalid_argument("FIR model is empty");
  LearningFilter lf;
  lf.f.assign(fir.h.rbegin(), fir.h.rend());
  lf.acausal_shift = static_cast<int>(fir.h.size()) - 1;
  return lf;
}

JointTrajectory ilc_update(const JointTrajectory& u, const std::vector<double>& e,
                           const LearningFilter& f, const QFilter& qf) {
  const size_t n = u.samples.size();
  if (e.size() != n) throw std::invalid_argument("input and error lengths differ");
  if (f.f.empty()) throw std::invalid_argument("empty learning filter");
  if (n < 2) throw std::invalid_argument("trajectory too short for an update");

  // Error extended by odd reflection so the acausal filter sees a smooth
  // continuation instead of zeros at the trial boundaries.
  const size_t m = f.f.size();
  const size_t pad = std::min(m, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (size_t i = 0; i < pad; ++i) ext.push_back(2.0 * e.front() - e[pad - i]);
  ext.insert(ext.end(), e.begin(), e.end());
  for (size_t i = 0; i < pad; ++i) ext.push_back(2.0 * e.back() - e[n - 2 - i]);

  // Causal convolution with the reversed coefficients, then removal of the
  // acausal_shift delay, applies H(z^{-1}) to e.
  std::vector<double> v(n);
  for (size_t k = 0; k < n; ++k) {
    const size_t c = k + pad + static_cast<size_t>(f.acausal_shift);
    double acc = 0.0;
    const size_t j_lo = c >= ext.size() ? c - ext.size() + 1 : 0;
    const size_t j_hi = std::min(m - 1, c);
    for (size_t j = j_lo; j <= j_hi; ++j) acc += f.f[j] * ext[c - j];
    v[k] = u.samples[k] + acc;
  }

  JointTrajectory out = u;
  out.samples = apply_zero_phase(qf, v);
  return out;
}

namespace {

std::complex<double> response_at(const std::vector<double>& taps, double w) {
  std::complex<double> acc(0.0, 0.0);
  for (size_t k = 0; k < taps.size(); ++k)
    acc += taps[k] * std::exp(std::complex<double>(0.0, -w * static_cast<double>(k)));
  return acc;
}

}  // namespace

double convergence_condition(const FirModel& fir, const LearningFilter& f, const QFilter& qf,
                             int n_frequencies) {
  if (n_frequencies < 2) throw std::invalid_argument("need at least 2 frequency samples");
  double sup = 0.0;
  for (int i = 0; i < n_frequencies; ++i) {
    const double w = kPi * i / (n_frequencies - 1);
    const std::complex<double> h = response_at(fir.h, w);
    const std::complex<double> f_eff =
        response_at(f.f, w) * std::exp(std::complex<double>(0.0, w * f.acausal_shift));
    const double q1 = std::abs(response_at(qf.taps, w));
    const double q_eff = q1 * q1;  // forward-backward pass
    sup = std::max(sup, std::abs(q_eff * (1.0 - f_eff * h)));
  }
  return sup;
}

namespace {

void finalize_metrics(TrackingReport& r) {
  double sq_t = 0.0, sq_p = 0.0;
  for (size_t k = 0; k < r.trajectory_error.size(); ++k) {
    const double at = std::abs(r.trajectory_error[k]);
    sq_t += at * at;
    r.max_trajectory = std::max(r.max_trajectory, at);
    sq_p += r.path_error[k] * r.path_error[k];
    r.max_path = std::max(r.max_path, r.path_error[k]);
  }
  const double n = static_cast<double>(r.trajectory_error.size());
  if (n > 0) {
    r.rms_trajectory = std::sqrt(sq_t / n);
    r.rms_path = std::sqrt(sq_p / n);
  }
}

}  // namespace

TrackingReport tracking_metrics(const std::vector<double>& reference,
                                const std::vector<double>& actual) {
  if (reference.size() != actual.size())
    throw std::invalid_argument("trajectory error needs equal sample counts");
  TrackingReport r;
  r.trajectory_error.resize(reference.size());
  r.path_error.resize(reference.size());
  // In one dimension the union of consecutive reference segments is the
  // interval [min, max], so the polyline distance collapses to an interval
  // distance.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : reference) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (size_t k = 0; k < reference.size(); ++k) {
    r.trajectory_error[k] = reference[k] - actual[k];
    r.path_error[k] = std::max({0.0, lo - actual[k], actual[k] - hi});
  }
  finalize_metrics(r);
  return r;
}

TrackingReport tracking_metrics(const std::vector<Eigen::Vector3d>& reference,
                                const std::vector<Eigen::Vector3d>& actual) {
  if (reference.size() != actual.size())
    throw std::invalid_argument("trajectory error needs equal sample counts");
  if (reference.size() < 2) throw std::invalid_argument("need at least 2 samples");
  TrackingReport r;
  r.trajectory_error.resize(reference.size());
  r.path_error.resize(reference.size());
  for (size_t k = 0; k < reference.size(); ++k) {
    const Eigen::Vector3d p = actual[k];
    r.trajectory_error[k] = (reference[k] - p).norm();
    double best = std::numeric_limits<double>::infinity();
    for (size_t s = 0; s + 1 < reference.size(); ++s) {
      const Eigen::Vector3d a = reference[s];
      const Eigen::Vector3d d = reference[s + 1] - a;
      const double len2 = d.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
      best = std::min(best, (p - (a + t * d)).norm());
    }
    r.path_error[k] = best;
  }
  finalize_metrics(r);
  return r;
}

std::vector<DynamicJointResult> run_dynamic_ilc(const std::vector<JointPlant>& plants,
                                                const std::vector<JointTrajectory>& references,
                                                const std::vector<LearningFilter>& filters,
                                                const std::vector<FirModel>& firs,
                                                const DynamicIlcConfig& config) {
  const size_t n_joints = plants.size();
  if (references.size() != n_joints || filters.size() != n_joints || firs.size() != n_joints)
    throw std::invalid_argument("plants, references, and filters must align");
  if (!config.thresholds.empty() && config.thresholds.size() != n_joints)
    throw std::invalid_argument("threshold count must match joint count");
  if (config.max_iterations < 1) throw std::invalid_argument("need at least one iteration");

  std::vector<DynamicJointResult> results;
  results.reserve(n_joints);

  for (size_t j = 0; j < n_joints; ++j) {
    const JointPlant& plant = plants[j];
    const std::vector<double>& ref = references[j].samples;
    const double threshold = config.thresholds.empty() ? 0.0 : config.thresholds[j];

    DynamicJointResult res;
    res.joint_id = references[j].joint_id;
    res.convergence_value = convergence_condition(firs[j], filters[j], config.q);

    // Feasibility pre-check: the reference must not demand more rate than
    // the actuator allows. Saturation during the run is still detected; this
    // flags an infeasible trajectory design up front.
    for (size_t k = 1; k < ref.size(); ++k)
      if (std::abs(ref[k] - ref[k - 1]) > plant.saturation.rate_limit)
        res.reference_rate_feasible = false;

    JointTrajectory u = references[j];
    double prev_max = std::numeric_limits<double>::infinity();
    int rises = 0;
    SimulationOptions sim_opts;
    sim_opts.steady_state_start = true;

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
      const uint64_t seed = Rng::derive({config.seed, static_cast<uint64_t>(j),
                                         static_cast<uint64_t>(iter)});
      const SimulationResult sim = simulate_plant(plant, u.samples, seed, sim_opts);

      DynamicIterationRecord rec;
      rec.iteration = iter;
      rec.u = u.samples;
      rec.y = sim.y;
      rec.tracking = tracking_metrics(ref, sim.y);
      rec.tracking.saturated = sim.saturated;
      rec.tracking.saturation_fraction = sim.saturation_fraction;
      res.iterations.push_back(std::move(rec));

      const TrackingReport& tr = res.iterations.back().tracking;
      if (iter == 1) res.initial_max_error = tr.max_trajectory;
      res.final_max_error = tr.max_trajectory;

      if (tr.max_trajectory <= threshold) {
        res.verdict = LoopVerdict::converged;
        break;
      }
      if (sim.saturation_fraction >= config.saturation_fraction_limit) {
        res.verdict = LoopVerdict::saturation_limited;
        break;
      }
      if (tr.max_trajectory > prev_max * (1.0 + 1e-9)) {
        if (++rises >= 2) {
          res.verdict = LoopVerdict::diverged;
          break;
        }
      } else {
        rises = 0;
      }
      prev_max = tr.max_trajectory;

      if (iter == config.max_iterations) {
        const double reduction =
            res.final_max_error > 0.0 ? res.initial_max_error / res.final_max_error
                                      : std::numeric_limits<double>::infinity();
        res.verdict = (res.final_max_error <= threshold || reduction >= config.min_reduction)
                          ? LoopVerdict::converged
                          : LoopVerdict::max_iterations;
        break;
      }

      std::vector<double> e(ref.size());
      for (size_t k = 0; k < ref.size(); ++k) e[k] = ref[k] - sim.y[k];
      u = ilc_update(u, e, filters[j], config.q);
    }
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace ilcsim
