#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ilcsim {

struct Saturation {
  double pos_lower = -std::numeric_limits<double>::infinity();
  double pos_upper = std::numeric_limits<double>::infinity();
  double rate_limit = std::numeric_limits<double>::infinity();  // per sample
};

// Discrete LTI joint actuator: G(z) = num(z^-1)/den(z^-1) with an extra pure
// delay, output saturation applied sample-by-sample, and output noise.
struct JointPlant {
  std::string name;
  std::vector<double> num{1.0};
  std::vector<double> den{1.0};
  double sample_time = 1e-3;  // seconds
  int delay = 0;              // samples
  Saturation saturation;
  double noise_sigma = 0.0;

  void validate() const;  // all poles strictly inside the unit circle
  double dc_gain() const;
};

struct SimulationOptions {
  // Start from the steady state that holds u(0) (the robot is parked at the
  // start pose before a trial); default is zero initial state.
  bool steady_state_start = false;
};

struct SimulationResult {
  std::vector<double> y;
  std::vector<uint8_t> saturated;  // per-sample clamp flags
  double saturation_fraction = 0.0;
  bool any_saturation = false;
};

struct StepResponse {
  std::vector<double> g;  // normalized by the input amplitude
  double sample_time = 1e-3;
  double input_amplitude = 1.0;
};

enum class FirWindow { none, blackman_harris };

struct FirModel {
  std::vector<double> h;
  double sample_time = 1e-3;
  bool window_applied = false;
  int crop_length = 0;
  bool settled = true;  // settling detector outcome at the crop point
  double dc_gain() const;
};

SimulationResult simulate_plant(const JointPlant& plant, const std::vector<double>& u,
                                uint64_t seed, const SimulationOptions& opts = {});

// Applies a step of `amplitude`, records `duration` samples, normalizes.
// Throws IdentificationError if the plant saturates during the measurement.
StepResponse measure_step_response(const JointPlant& plant, double amplitude, int duration,
                                   uint64_t seed);

// h(n) = g(n) - g(n-1) truncated to `crop`; optional 4-term Blackman-Harris
// window aligned so the window peak coincides with the peak |h| sample.
FirModel identify_fir(const StepResponse& g, int crop, FirWindow window);

// Earliest settled index (1% of the final value) plus a 20% margin.
int auto_crop_length(const StepResponse& g);

// H(e^{jw}) on `n_frequencies` points spanning [0, pi].
std::vector<std::complex<double>> frequency_response(const FirModel& fir, int n_frequencies);

// 4-term Blackman-Harris window, length n (peak 1 at the center).
std::vector<double> blackman_harris_window(int n);

// Default actuator set used by the bundled scenario: joints 1-3 share a
// second-order critically damped response, joint 4 is slower with a tighter
// rate limit so direct commands show the large roll-axis lag.
std::vector<JointPlant> make_default_joint_plants(double sample_time = 1e-3);

}  // namespace ilcsim
