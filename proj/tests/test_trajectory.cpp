#include <doctest.h>

#include <cmath>

#include "ilcsim/trajectory.hpp"
#include "ilcsim/units.hpp"

using namespace ilcsim;

namespace {

GridSpec test_grid() {
  GridSpec g;
  g.rotation_range_deg = 200.0;
  g.rotation_step_deg = 10.0;
  g.insertion_range_mm = 2.0;
  g.insertion_step_mm = 0.5;
  return g;
}

InterpolationTable affine_table(double a1, double b1, double c1) {
  InterpolationTable table;
  table.grid = test_grid();
  const int n_rot = table.grid.rotation_count();
  const int n_ins = table.grid.insertion_count();
  table.values.assign(n_rot, std::vector<Eigen::Vector3d>(n_ins));
  for (int r = 0; r < n_rot; ++r) {
    for (int i = 0; i < n_ins; ++i) {
      const double rot = table.grid.rotation_deg(r);
      const double ins = table.grid.insertion_mm(i);
      table.values[r][i] = {a1 + b1 * rot + c1 * ins, 2.0 * a1 - b1 * rot + 0.5 * c1 * ins,
                            -a1 + 0.25 * b1 * rot - c1 * ins};
    }
  }
  return table;
}

}  // namespace

TEST_CASE("interpolation is exact at grid nodes") {
  const InterpolationTable table = affine_table(1e-3, 2e-5, -3e-4);
  for (int r = 0; r < table.grid.rotation_count(); ++r) {
    for (int i = 0; i < table.grid.insertion_count(); ++i) {
      const JointVector q =
          interpolate(table, table.grid.rotation_deg(r), table.grid.insertion_mm(i));
      CHECK((q.controlled() - table.values[r][i]).norm() == 0.0);
      CHECK(q.q4 == deg2rad(table.grid.rotation_deg(r)));
    }
  }
}

TEST_CASE("a cell-center query averages the four corners") {
  InterpolationTable table = affine_table(0, 0, 0);
  table.values[3][2] = {1.0, 0.0, 2.0};
  table.values[4][2] = {3.0, 4.0, 0.0};
  table.values[3][3] = {-1.0, 2.0, 6.0};
  table.values[4][3] = {5.0, -2.0, 0.0};
  const JointVector q = interpolate(table, 35.0, 1.25);  // center of cell (3..4, 2..3)
  const Eigen::Vector3d mean =
      0.25 * (table.values[3][2] + table.values[4][2] + table.values[3][3] + table.values[4][3]);
  CHECK((q.controlled() - mean).norm() < 1e-15);
}

TEST_CASE("bilinear interpolation reproduces affine node fields") {
  const InterpolationTable table = affine_table(2e-3, -1.7e-5, 4.2e-4);
  for (double rot = 0.0; rot <= 200.0; rot += 3.7) {
    for (double ins = 0.0; ins <= 2.0; ins += 0.23) {
      const JointVector q = interpolate(table, rot, ins);
      const Eigen::Vector3d expected(2e-3 + -1.7e-5 * rot + 4.2e-4 * ins,
                                     4e-3 + 1.7e-5 * rot + 2.1e-4 * ins,
                                     -2e-3 + -0.25 * 1.7e-5 * rot - 4.2e-4 * ins);
      CHECK((q.controlled() - expected).norm() <= 1e-12 * expected.norm());
    }
  }
}

TEST_CASE("queries on grid lines reduce to 1-D linear interpolation") {
  InterpolationTable table = affine_table(0, 0, 0);
  table.values[5][1] = {0.7, -0.2, 1.1};
  table.values[5][2] = {-0.3, 0.8, 0.5};
  table.values[6][2] = {0.4, 0.1, -0.9};

  // Along an insertion line at a rotation node.
  for (double f : {0.0, 0.25, 0.61, 1.0}) {
    const JointVector q = interpolate(table, 50.0, 0.5 + 0.5 * f);
    const Eigen::Vector3d lerp = (1.0 - f) * table.values[5][1] + f * table.values[5][2];
    CHECK((q.controlled() - lerp).norm() < 1e-15);
  }
  // Along a rotation line at an insertion node.
  for (double f : {0.0, 0.5, 0.83}) {
    const JointVector q = interpolate(table, 50.0 + 10.0 * f, 1.0);
    const Eigen::Vector3d lerp = (1.0 - f) * table.values[5][2] + f * table.values[6][2];
    CHECK((q.controlled() - lerp).norm() < 1e-15);
  }
}

TEST_CASE("out-of-envelope queries are rejected") {
  const InterpolationTable table = affine_table(0, 1e-5, 1e-4);
  CHECK_THROWS_AS(interpolate(table, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(interpolate(table, 201.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(interpolate(table, 100.0, 2.1), std::invalid_argument);
  CHECK_THROWS_AS(interpolate(table, 100.0, -0.1), std::invalid_argument);
}

TEST_CASE("incomplete tables are rejected") {
  InterpolationTable table = affine_table(0, 1e-5, 1e-4);
  table.values.pop_back();
  CHECK_THROWS_AS(table.validate(), std::invalid_argument);
}

TEST_CASE("zero rotation amplitude degenerates to the insertion curve") {
  const InterpolationTable table = affine_table(1e-3, 3e-5, -2e-4);
  MotionProfile profile;
  profile.rotation_amplitude_deg = 0.0;
  profile.rotation_frequency_hz = 1.0;
  profile.insertion_speed_mm_s = 0.5;
  profile.insertion_depth_mm = 2.0;
  profile.ramp_time_s = 0.0;
  const ProfileResult res = generate_profile(profile, table);
  for (size_t k = 0; k < res.time_s.size(); ++k) {
    CHECK(res.joints[3].samples[k] == deg2rad(100.0));
    const JointVector q = interpolate(table, 100.0, res.insertion_mm[k]);
    CHECK(q.q1 == res.joints[0].samples[k]);
    CHECK(q.q3 == res.joints[2].samples[k]);
  }
}

TEST_CASE("zero insertion speed yields a periodic joint pattern") {
  const InterpolationTable table = affine_table(1e-3, 3e-5, -2e-4);
  MotionProfile profile;
  profile.rotation_amplitude_deg = 80.0;
  profile.rotation_frequency_hz = 1.0;
  profile.insertion_speed_mm_s = 0.0;
  profile.insertion_depth_mm = 1.5;
  profile.sample_time = 1e-3;
  profile.ramp_time_s = 0.0;
  const ProfileResult res = generate_profile(profile, table);
  const int period = 1000;  // 1 Hz at 1 kHz
  REQUIRE(static_cast<int>(res.time_s.size()) > period);
  for (size_t k = 0; k + period < res.time_s.size(); ++k) {
    CHECK(res.insertion_mm[k] == 1.5);
    for (int j = 0; j < 4; ++j)
      CHECK(res.joints[j].samples[k] ==
            doctest::Approx(res.joints[j].samples[k + period]).epsilon(1e-9));
  }
}

TEST_CASE("peak roll rate matches the analytic sinusoid derivative") {
  const InterpolationTable table = affine_table(0, 0, 0);
  MotionProfile profile;
  profile.rotation_amplitude_deg = 100.0;
  profile.rotation_frequency_hz = 2.0;
  profile.insertion_speed_mm_s = 0.5;
  profile.insertion_depth_mm = 2.0;
  profile.sample_time = 1e-3;
  profile.ramp_time_s = 0.0;
  const ProfileResult res = generate_profile(profile, table);
  const auto rates = peak_rates(res);
  const double expected = deg2rad(100.0) * 2.0 * kPi * 2.0;
  CHECK(rates[3] == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("profiles stay inside the calibrated envelope and move continuously") {
  const InterpolationTable table = affine_table(1.2e-3, -2.4e-5, 3.1e-4);
  MotionProfile profile;  // defaults: 100 deg, 2 Hz, 0.5 mm/s, 2 mm, ramps
  const ProfileResult res = generate_profile(profile, table);

  for (size_t k = 0; k < res.time_s.size(); ++k) {
    CHECK(res.rotation_deg[k] >= 0.0);
    CHECK(res.rotation_deg[k] <= 200.0);
    CHECK(res.insertion_mm[k] >= 0.0);
    CHECK(res.insertion_mm[k] <= 2.0);
  }

  // Lipschitz bound of the bilinear surface from the node differences.
  double lip_rot = 0.0, lip_ins = 0.0;
  const auto& g = table.grid;
  for (int r = 0; r + 1 < g.rotation_count(); ++r)
    for (int i = 0; i < g.insertion_count(); ++i)
      lip_rot = std::max(lip_rot, (table.values[r + 1][i] - table.values[r][i]).cwiseAbs()
                                          .maxCoeff() /
                                      g.rotation_step_deg);
  for (int r = 0; r < g.rotation_count(); ++r)
    for (int i = 0; i + 1 < g.insertion_count(); ++i)
      lip_ins = std::max(lip_ins, (table.values[r][i + 1] - table.values[r][i]).cwiseAbs()
                                          .maxCoeff() /
                                      g.insertion_step_mm);

  for (size_t k = 1; k < res.time_s.size(); ++k) {
    const double d_rot = std::abs(res.rotation_deg[k] - res.rotation_deg[k - 1]);
    const double d_ins = std::abs(res.insertion_mm[k] - res.insertion_mm[k - 1]);
    const double bound = lip_rot * d_rot + lip_ins * d_ins + 1e-12;
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(res.joints[j].samples[k] - res.joints[j].samples[k - 1]) <= bound);
    CHECK(std::abs(res.joints[3].samples[k] - res.joints[3].samples[k - 1]) ==
          doctest::Approx(deg2rad(d_rot)).epsilon(1e-9));
  }
}

TEST_CASE("profiles violating the grid bounds are rejected") {
  const InterpolationTable table = affine_table(0, 0, 0);
  MotionProfile too_wide;
  too_wide.rotation_amplitude_deg = 130.0;  // > half the 200 deg range
  CHECK_THROWS_AS(generate_profile(too_wide, table), std::invalid_argument);

  MotionProfile too_deep;
  too_deep.insertion_depth_mm = 2.5;
  CHECK_THROWS_AS(generate_profile(too_deep, table), std::invalid_argument);

  MotionProfile still;
  still.rotation_frequency_hz = 0.0;
  CHECK_THROWS_AS(generate_profile(still, table), std::invalid_argument);
}
