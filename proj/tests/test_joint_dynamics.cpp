#include <doctest.h>

#include <cmath>
#include <complex>

#include "ilcsim/errors.hpp"
#include "ilcsim/joint_dynamics.hpp"
#include "ilcsim/rng.hpp"
#include "ilcsim/units.hpp"

using namespace ilcsim;

namespace {

JointPlant identity_plant() {
  JointPlant p;
  p.name = "identity";
  return p;
}

JointPlant delay_plant(int d) {
  JointPlant p;
  p.name = "delay";
  p.delay = d;
  return p;
}

// G(z) = (1-a) / (1 - a z^-1), DC gain 1.
JointPlant first_order(double a) {
  JointPlant p;
  p.name = "first_order";
  p.num = {1.0 - a};
  p.den = {1.0, -a};
  return p;
}

std::vector<double> smooth_probe(int n, double amp = 0.4) {
  std::vector<double> u(n);
  for (int k = 0; k < n; ++k)
    u[k] = amp * (std::sin(2.0 * kPi * 3.0 * k / n) + 0.5 * std::sin(2.0 * kPi * 7.0 * k / n));
  return u;
}

}  // namespace

TEST_CASE("the identity plant passes its input through") {
  const std::vector<double> u = smooth_probe(200);
  const SimulationResult sim = simulate_plant(identity_plant(), u, 1);
  REQUIRE(sim.y.size() == u.size());
  for (size_t k = 0; k < u.size(); ++k) CHECK(sim.y[k] == u[k]);
  CHECK_FALSE(sim.any_saturation);
}

TEST_CASE("a pure delay shifts the input") {
  const std::vector<double> u = smooth_probe(100);
  const SimulationResult sim = simulate_plant(delay_plant(3), u, 1);
  for (int k = 0; k < 3; ++k) CHECK(sim.y[k] == 0.0);
  for (size_t k = 3; k < u.size(); ++k) CHECK(sim.y[k] == u[k - 3]);
}

TEST_CASE("first-order step response matches the closed form") {
  const JointPlant p = first_order(0.9);
  const std::vector<double> u(120, 1.0);
  const SimulationResult sim = simulate_plant(p, u, 1);
  for (size_t n = 0; n < u.size(); ++n)
    CHECK(sim.y[n] == doctest::Approx(1.0 - std::pow(0.9, n + 1)).epsilon(1e-12));
}

TEST_CASE("the plant is linear below saturation") {
  JointPlant p = first_order(0.85);
  p.delay = 4;
  const std::vector<double> u = smooth_probe(300);
  std::vector<double> u2 = u;
  for (double& v : u2) v *= 2.5;
  const SimulationResult a = simulate_plant(p, u, 1);
  const SimulationResult b = simulate_plant(p, u2, 1);
  for (size_t k = 0; k < u.size(); ++k)
    CHECK(b.y[k] == doctest::Approx(2.5 * a.y[k]).epsilon(1e-12));
}

TEST_CASE("unsaturated runs satisfy superposition") {
  JointPlant p = first_order(0.9);
  p.saturation.rate_limit = 10.0;
  p.saturation.pos_lower = -10.0;
  p.saturation.pos_upper = 10.0;
  const std::vector<double> u1 = smooth_probe(200, 0.3);
  std::vector<double> u2(200);
  for (int k = 0; k < 200; ++k) u2[k] = 0.2 * std::cos(2.0 * kPi * 5.0 * k / 200.0);
  std::vector<double> sum(200);
  for (int k = 0; k < 200; ++k) sum[k] = u1[k] + u2[k];

  const SimulationResult a = simulate_plant(p, u1, 1);
  const SimulationResult b = simulate_plant(p, u2, 1);
  const SimulationResult c = simulate_plant(p, sum, 1);
  REQUIRE_FALSE(a.any_saturation);
  REQUIRE_FALSE(b.any_saturation);
  REQUIRE_FALSE(c.any_saturation);
  for (int k = 0; k < 200; ++k)
    CHECK(c.y[k] == doctest::Approx(a.y[k] + b.y[k]).epsilon(1e-12));
}

TEST_CASE("saturation clamps and flags samples") {
  JointPlant p = identity_plant();
  p.saturation.pos_lower = -0.5;
  p.saturation.pos_upper = 0.5;
  p.saturation.rate_limit = 0.2;
  std::vector<double> u(20, 1.0);  // step far beyond both limits
  const SimulationResult sim = simulate_plant(p, u, 1);
  CHECK(sim.any_saturation);
  CHECK(sim.y[0] == 0.2);
  CHECK(sim.y[1] == 0.4);
  CHECK(sim.y[2] == 0.5);  // position limit takes over
  CHECK(sim.saturated[0] == 1);
  CHECK(sim.saturation_fraction > 0.5);
}

TEST_CASE("steady-state start removes the initial transient") {
  JointPlant p = first_order(0.9);
  std::vector<double> u(50, 0.7);
  SimulationOptions opts;
  opts.steady_state_start = true;
  const SimulationResult sim = simulate_plant(p, u, 1, opts);
  for (double v : sim.y) CHECK(v == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("unstable plants are rejected") {
  JointPlant p;
  p.num = {1.0};
  p.den = {1.0, -1.2};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  JointPlant integrator;
  integrator.num = {1.0};
  integrator.den = {1.0, -1.0};
  CHECK_THROWS_AS(integrator.validate(), std::invalid_argument);
}

TEST_CASE("step measurement normalizes and guards against saturation") {
  const StepResponse ones = measure_step_response(identity_plant(), 0.25, 10, 1);
  for (double g : ones.g) CHECK(g == 1.0);

  const StepResponse delayed = measure_step_response(delay_plant(3), 2.0, 8, 1);
  for (int k = 0; k < 3; ++k) CHECK(delayed.g[k] == 0.0);
  for (size_t k = 3; k < delayed.g.size(); ++k) CHECK(delayed.g[k] == 1.0);

  JointPlant limited = identity_plant();
  limited.saturation.rate_limit = 0.05;
  CHECK_THROWS_AS(measure_step_response(limited, 0.1, 10, 1), IdentificationError);
}

TEST_CASE("differencing the identity step gives a unit impulse") {
  const StepResponse g = measure_step_response(identity_plant(), 1.0, 32, 1);
  const FirModel fir = identify_fir(g, 32, FirWindow::none);
  CHECK(fir.h[0] == 1.0);
  for (size_t k = 1; k < fir.h.size(); ++k) CHECK(fir.h[k] == 0.0);
  CHECK(fir.settled);
}

TEST_CASE("differencing a first-order step gives the geometric impulse response") {
  const JointPlant p = first_order(0.9);
  const StepResponse g = measure_step_response(p, 1.0, 400, 1);
  const FirModel fir = identify_fir(g, 200, FirWindow::none);
  for (int n = 0; n < 200; ++n)
    CHECK(fir.h[n] == doctest::Approx(0.1 * std::pow(0.9, n)).epsilon(1e-10));
  CHECK(fir.dc_gain() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("identify_fir validates the crop") {
  const StepResponse g = measure_step_response(identity_plant(), 1.0, 16, 1);
  CHECK_THROWS_AS(identify_fir(g, 1, FirWindow::none), std::invalid_argument);
  CHECK_THROWS_AS(identify_fir(g, 17, FirWindow::none), std::invalid_argument);
}

TEST_CASE("the settling detector flags premature crops") {
  const JointPlant p = first_order(0.95);
  const StepResponse g = measure_step_response(p, 1.0, 400, 1);
  const FirModel early = identify_fir(g, 20, FirWindow::none);  // far from settled
  CHECK_FALSE(early.settled);
  const FirModel late = identify_fir(g, 200, FirWindow::none);
  CHECK(late.settled);
}

TEST_CASE("auto crop lands at the settled index plus margin") {
  const JointPlant p = first_order(0.9);
  const StepResponse g = measure_step_response(p, 1.0, 500, 1);
  // |g(n) - 1| = 0.9^{n+1} drops below 1% at n = 43; 20% margin on top.
  CHECK(auto_crop_length(g) == 53);
}

TEST_CASE("blackman-harris window is symmetric, positive, and unit-peak") {
  const std::vector<double> w = blackman_harris_window(101);
  for (int i = 0; i < 101; ++i) {
    CHECK(w[i] == doctest::Approx(w[100 - i]).epsilon(1e-12));
    CHECK(w[i] > 0.0);
    CHECK(w[i] <= 1.0 + 1e-12);
  }
  CHECK(w[50] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("windowing trades DC accuracy for smoothness") {
  const JointPlant p = first_order(0.9);
  const StepResponse g = measure_step_response(p, 1.0, 400, 1);
  const FirModel plain = identify_fir(g, 100, FirWindow::none);
  const FirModel windowed = identify_fir(g, 100, FirWindow::blackman_harris);
  CHECK(windowed.window_applied);
  CHECK(windowed.dc_gain() < plain.dc_gain());

  // Validation input: both FIRs reproduce the true plant output, the
  // unwindowed one within the truncation tail, the windowed one looser.
  const std::vector<double> u = smooth_probe(600, 0.8);
  const SimulationResult truth = simulate_plant(p, u, 1);
  auto fir_output = [&](const FirModel& fir) {
    std::vector<double> y(u.size(), 0.0);
    for (size_t k = 0; k < u.size(); ++k)
      for (size_t j = 0; j < fir.h.size() && j <= k; ++j) y[k] += fir.h[j] * u[k - j];
    return y;
  };
  const std::vector<double> y_plain = fir_output(plain);
  const std::vector<double> y_win = fir_output(windowed);
  double err_plain = 0.0, err_win = 0.0, scale = 0.0;
  for (size_t k = 0; k < u.size(); ++k) {
    err_plain = std::max(err_plain, std::abs(y_plain[k] - truth.y[k]));
    err_win = std::max(err_win, std::abs(y_win[k] - truth.y[k]));
    scale = std::max(scale, std::abs(truth.y[k]));
  }
  const double tail = std::pow(0.9, 100);  // sum of the dropped geometric tail
  CHECK(err_plain <= 2.0 * tail * 0.8 * u.size() / u.size() + 1e-4);
  CHECK(err_plain < err_win);
  CHECK(err_win < 0.2 * scale);
}

TEST_CASE("unwindowed FIR reconstructs the measured step exactly on the crop horizon") {
  for (const JointPlant& p :
       {first_order(0.9), first_order(0.97), make_default_joint_plants()[0],
        make_default_joint_plants()[3]}) {
    const StepResponse g = measure_step_response(p, 1.0, 800, 1);
    const int crop = auto_crop_length(g);
    const FirModel fir = identify_fir(g, crop, FirWindow::none);
    double acc = 0.0;
    for (int k = 0; k < crop; ++k) {
      acc += fir.h[k];  // convolution of h with a unit step
      CHECK(acc == doctest::Approx(g.g[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("frequency response of an impulse is flat") {
  FirModel fir;
  fir.h = {1.0};
  for (const auto& h : frequency_response(fir, 64)) {
    CHECK(std::abs(h.real() - 1.0) < 1e-15);
    CHECK(std::abs(h.imag()) < 1e-15);
  }
}

TEST_CASE("two-tap averager nulls at Nyquist") {
  FirModel fir;
  fir.h = {0.5, 0.5};
  const auto resp = frequency_response(fir, 33);
  CHECK(std::abs(resp.back()) < 1e-12);
  CHECK(std::abs(resp.front() - std::complex<double>(1.0, 0.0)) < 1e-12);
}

TEST_CASE("truncated geometric response stays within the tail bound") {
  const double a = 0.9;
  const int n_taps = 80;
  FirModel fir;
  fir.h.resize(n_taps);
  for (int n = 0; n < n_taps; ++n) fir.h[n] = (1.0 - a) * std::pow(a, n);
  const int nf = 257;
  const auto resp = frequency_response(fir, nf);
  const double bound = std::pow(a, n_taps) / (1.0 - a);
  for (int i = 0; i < nf; ++i) {
    const double w = kPi * i / (nf - 1);
    const std::complex<double> closed =
        (1.0 - a) / (1.0 - a * std::exp(std::complex<double>(0.0, -w)));
    CHECK(std::abs(resp[i] - closed) <= bound);
  }
}

TEST_CASE("default joint plants are stable with unity DC gain") {
  for (const JointPlant& p : make_default_joint_plants()) {
    p.validate();
    CHECK(p.dc_gain() == doctest::Approx(1.0).epsilon(1e-12));
  }
}
