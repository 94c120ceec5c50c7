#include "ilcsim/joint_dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ilcsim/errors.hpp"
#include "ilcsim/rng.hpp"
#include "ilcsim/units.hpp"

namespace ilcsim {

namespace {

double max_pole_magnitude(const std::vector<double>& den) {
  const int order = static_cast<int>(den.size()) - 1;
  if (order <= 0) return 0.0;
  // Companion-matrix eigenvalues of the monic denominator polynomial.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(order, order);
  for (int i = 0; i < order; ++i) companion(0, i) = -den[i + 1] / den[0];
  for (int i = 1; i < order; ++i) companion(i, i - 1) = 1.0;
  const auto eigs = companion.eigenvalues();
  double mag = 0.0;
  for (int i = 0; i < order; ++i) mag = std::max(mag, std::abs(eigs[i]));
  return mag;
}

int settle_samples(const JointPlant& plant) {
  const double p = max_pole_magnitude(plant.den);
  int n = static_cast<int>(plant.num.size()) + plant.delay + 2;
  if (p > 0.0) {
    // |p|^k < 1e-14
    n += static_cast<int>(std::ceil(std::log(1e-14) / std::log(p)));
  }
  return std::min(n, 200000);
}

}  // namespace

void JointPlant::validate() const {
  if (num.empty() || den.empty() || den[0] == 0.0)
    throw std::invalid_argument("plant numerator/denominator malformed");
  if (!(sample_time > 0.0)) throw std::invalid_argument("sample_time must be positive");
  if (delay < 0) throw std::invalid_argument("delay must be non-negative");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
  if (!(saturation.pos_lower <= saturation.pos_upper) || !(saturation.rate_limit > 0.0))
    throw std::invalid_argument("saturation limits malformed");
  if (max_pole_magnitude(den) >= 1.0 - 1e-12)
    throw std::invalid_argument("plant must be stable: all poles strictly inside the unit circle");
}

double JointPlant::dc_gain() const {
  double n = 0.0, d = 0.0;
  for (double b : num) n += b;
  for (double a : den) d += a;
  return n / d;
}

double FirModel::dc_gain() const {
  double s = 0.0;
  for (double v : h) s += v;
  return s;
}

SimulationResult simulate_plant(const JointPlant& plant, const std::vector<double>& u,
                                uint64_t seed, const SimulationOptions& opts) {
  plant.validate();
  for (double v : u)
    if (!std::isfinite(v)) throw std::invalid_argument("plant input must be finite");

  const int n = static_cast<int>(u.size());
  const int warmup = opts.steady_state_start && n > 0 ? settle_samples(plant) : 0;
  const int total = n + warmup;

  std::vector<double> ext(total);
  for (int k = 0; k < warmup; ++k) ext[k] = u.empty() ? 0.0 : u[0];
  std::copy(u.begin(), u.end(), ext.begin() + warmup);

  // Delay, then the difference equation.
  std::vector<double> filt(total, 0.0);
  const auto& b = plant.num;
  const auto& a = plant.den;
  for (int k = 0; k < total; ++k) {
    double acc = 0.0;
    for (size_t i = 0; i < b.size(); ++i) {
      const int idx = k - plant.delay - static_cast<int>(i);
      if (idx >= 0) acc += b[i] * ext[idx];
    }
    for (size_t j = 1; j < a.size(); ++j) {
      const int idx = k - static_cast<int>(j);
      if (idx >= 0) acc -= a[j] * filt[idx];
    }
    filt[k] = acc / a[0];
  }

  SimulationResult result;
  result.y.resize(n);
  result.saturated.assign(n, 0);

  Rng rng(Rng::derive({seed, 0x73696d75ULL}));
  double prev = 0.0;  // actuator parked at zero before the run
  int flagged = 0;
  for (int k = 0; k < total; ++k) {
    double v = filt[k];
    if (std::isfinite(plant.saturation.rate_limit))
      v = std::clamp(v, prev - plant.saturation.rate_limit, prev + plant.saturation.rate_limit);
    v = std::clamp(v, plant.saturation.pos_lower, plant.saturation.pos_upper);
    const bool clipped = std::abs(v - filt[k]) > 1e-12 * std::max(1.0, std::abs(filt[k]));
    prev = v;
    if (k >= warmup) {
      const int i = k - warmup;
      if (clipped) {
        result.saturated[i] = 1;
        ++flagged;
      }
      result.y[i] = v + (plant.noise_sigma > 0.0 ? rng.normal(plant.noise_sigma) : 0.0);
    }
  }
  result.saturation_fraction = n > 0 ? static_cast<double>(flagged) / n : 0.0;
  result.any_saturation = flagged > 0;
  return result;
}

StepResponse measure_step_response(const JointPlant& plant, double amplitude, int duration,
                                   uint64_t seed) {
  if (amplitude == 0.0) throw std::invalid_argument("step amplitude must be nonzero");
  if (duration < 2) throw std::invalid_argument("step duration must be >= 2 samples");
  const std::vector<double> u(duration, amplitude);
  const SimulationResult sim = simulate_plant(plant, u, seed);
  if (sim.any_saturation)
    throw IdentificationError(
        "step response saturated; the identified model would be invalid, reduce the amplitude");
  StepResponse g;
  g.sample_time = plant.sample_time;
  g.input_amplitude = amplitude;
  g.g.resize(duration);
  for (int k = 0; k < duration; ++k) g.g[k] = sim.y[k] / amplitude;
  return g;
}

std::vector<double> blackman_harris_window(int n) {
  if (n < 1) throw std::invalid_argument("window length must be >= 1");
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  constexpr double a0 = 0.35875, a1 = 0.48829, a2 = 0.14128, a3 = 0.01168;
  for (int i = 0; i < n; ++i) {
    const double x = 2.0 * kPi * i / (n - 1);
    w[i] = a0 - a1 * std::cos(x) + a2 * std::cos(2.0 * x) - a3 * std::cos(3.0 * x);
  }
  return w;
}

int auto_crop_length(const StepResponse& g) {
  const int n = static_cast<int>(g.g.size());
  if (n < 2) throw std::invalid_argument("step response too short");
  const double ref = g.g.back();
  const double tol = 0.01 * std::max(std::abs(ref), 1e-12);
  int settled_at = n - 1;
  for (int k = n - 1; k >= 0; --k) {
    if (std::abs(g.g[k] - ref) >= tol) break;
    settled_at = k;
  }
  const int crop = static_cast<int>(std::ceil(1.2 * (settled_at + 1)));
  return std::clamp(crop, 2, n);
}

FirModel identify_fir(const StepResponse& g, int crop, FirWindow window) {
  const int n = static_cast<int>(g.g.size());
  if (crop < 2) throw std::invalid_argument("crop must be >= 2 samples");
  if (crop > n) throw std::invalid_argument("crop exceeds the step-response length");

  FirModel fir;
  fir.sample_time = g.sample_time;
  fir.crop_length = crop;
  fir.h.resize(crop);
  fir.h[0] = g.g[0];
  for (int k = 1; k < crop; ++k) fir.h[k] = g.g[k] - g.g[k - 1];

  // Settling detector on the trailing 10% of the crop window.
  const double ref = g.g.back();
  const double tol = 0.01 * std::max(std::abs(ref), 1e-12);
  const int tail_start = std::max(0, crop - std::max(1, crop / 10));
  for (int k = tail_start; k < crop; ++k)
    if (std::abs(g.g[k] - ref) >= tol) fir.settled = false;

  if (window == FirWindow::blackman_harris) {
    int peak = 0;
    for (int k = 1; k < crop; ++k)
      if (std::abs(fir.h[k]) > std::abs(fir.h[peak])) peak = k;
    const int half = std::max(peak, crop - 1 - peak);
    const std::vector<double> w = blackman_harris_window(2 * half + 1);
    for (int k = 0; k < crop; ++k) fir.h[k] *= w[k - peak + half];
    fir.window_applied = true;
  }
  return fir;
}

std::vector<std::complex<double>> frequency_response(const FirModel& fir, int n_frequencies) {
  if (n_frequencies < 2) throw std::invalid_argument("need at least 2 frequency samples");
  std::vector<std::complex<double>> out(n_frequencies);
  for (int i = 0; i < n_frequencies; ++i) {
    const double w = kPi * i / (n_frequencies - 1);
    std::complex<double> acc(0.0, 0.0);
    for (size_t k = 0; k < fir.h.size(); ++k)
      acc += fir.h[k] * std::exp(std::complex<double>(0.0, -w * static_cast<double>(k)));
    out[i] = acc;
  }
  return out;
}

std::vector<JointPlant> make_default_joint_plants(double sample_time) {
  auto second_order = [&](const std::string& name, double bandwidth_hz, int delay) {
    JointPlant p;
    p.name = name;
    p.sample_time = sample_time;
    const double pole = std::exp(-2.0 * kPi * bandwidth_hz * sample_time);
    const double k = (1.0 - pole) * (1.0 - pole);
    p.num = {0.0, k};  // one inherent sample of causality delay
    p.den = {1.0, -2.0 * pole, pole * pole};
    p.delay = delay;
    return p;
  };

  std::vector<JointPlant> plants;
  for (int i = 0; i < 2; ++i) {
    JointPlant p = second_order("joint" + std::to_string(i + 1), 8.0, 20);
    p.saturation.pos_lower = -1.0;
    p.saturation.pos_upper = 1.0;
    p.saturation.rate_limit = 0.05;  // rad/sample
    plants.push_back(p);
  }
  JointPlant ins = second_order("joint3", 8.0, 20);
  ins.saturation.pos_lower = -0.001;
  ins.saturation.pos_upper = 0.021;
  ins.saturation.rate_limit = 5e-4;  // m/sample
  plants.push_back(ins);

  JointPlant roll = second_order("joint4", 5.0, 5);
  roll.saturation.pos_lower = -7.0;
  roll.saturation.pos_upper = 7.0;
  roll.saturation.rate_limit = 0.1;  // rad/sample
  plants.push_back(roll);
  return plants;
}

}  // namespace ilcsim
