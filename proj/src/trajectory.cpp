#include "ilcsim/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ilcsim/units.hpp"

namespace ilcsim {

InterpolationTable InterpolationTable::from_grid(const CorrectionGrid& grid) {
  InterpolationTable table;
  table.grid = grid.grid;
  table.values.resize(grid.joints.size());
  for (size_t r = 0; r < grid.joints.size(); ++r) {
    table.values[r].reserve(grid.joints[r].size());
    for (const JointVector& q : grid.joints[r]) table.values[r].push_back(q.controlled());
  }
  table.validate();
  return table;
}

void InterpolationTable::validate() const {
  grid.validate();
  const size_t n_rot = static_cast<size_t>(grid.rotation_count());
  const size_t n_ins = static_cast<size_t>(grid.insertion_count());
  if (values.size() != n_rot) throw std::invalid_argument("interpolation table is incomplete");
  for (const auto& col : values) {
    if (col.size() != n_ins) throw std::invalid_argument("interpolation table is incomplete");
    for (const auto& v : col)
      if (!v.allFinite()) throw std::invalid_argument("interpolation table has non-finite values");
  }
}

JointVector interpolate(const InterpolationTable& table, double rotation_deg,
                        double insertion_mm) {
  const GridSpec& g = table.grid;
  const double tol = 1e-9;
  if (rotation_deg < -tol || rotation_deg > g.rotation_range_deg + tol ||
      insertion_mm < -tol || insertion_mm > g.insertion_range_mm + tol)
    throw std::invalid_argument("interpolation query outside the calibrated envelope");

  const int n_rot = g.rotation_count();
  const int n_ins = g.insertion_count();
  const double x = std::clamp(rotation_deg / g.rotation_step_deg, 0.0,
                              static_cast<double>(n_rot - 1));
  const double y = std::clamp(insertion_mm / g.insertion_step_mm, 0.0,
                              static_cast<double>(n_ins - 1));
  const int r0 = std::min(static_cast<int>(x), n_rot - 2 >= 0 ? n_rot - 2 : 0);
  const int i0 = std::min(static_cast<int>(y), n_ins - 2 >= 0 ? n_ins - 2 : 0);
  const double fx = x - r0;
  const double fy = y - i0;
  const int r1 = std::min(r0 + 1, n_rot - 1);
  const int i1 = std::min(i0 + 1, n_ins - 1);

  const Eigen::Vector3d q123 = (1.0 - fx) * (1.0 - fy) * table.values[r0][i0] +
                               fx * (1.0 - fy) * table.values[r1][i0] +
                               (1.0 - fx) * fy * table.values[r0][i1] +
                               fx * fy * table.values[r1][i1];

  JointVector q;
  q.q1 = q123[0];
  q.q2 = q123[1];
  q.q3 = q123[2];
  q.q4 = deg2rad(rotation_deg);
  return q;
}

namespace {

// Raised-cosine envelope: 0 -> 1 over [0, ramp], 1 -> 0 over [T - ramp, T].
double envelope(double t, double total, double ramp) {
  if (ramp <= 0.0) return 1.0;
  if (t < ramp) return 0.5 * (1.0 - std::cos(kPi * t / ramp));
  if (t > total - ramp) return 0.5 * (1.0 - std::cos(kPi * (total - t) / ramp));
  return 1.0;
}

}  // namespace

ProfileResult generate_profile(const MotionProfile& profile, const InterpolationTable& table) {
  table.validate();
  const GridSpec& g = table.grid;
  if (!(profile.sample_time > 0.0)) throw std::invalid_argument("sample_time must be positive");
  if (!(profile.rotation_frequency_hz > 0.0))
    throw std::invalid_argument("rotation frequency must be positive");
  if (profile.rotation_amplitude_deg < 0.0 || profile.ramp_time_s < 0.0)
    throw std::invalid_argument("amplitude and ramp time must be non-negative");
  if (profile.rotation_amplitude_deg > g.rotation_range_deg / 2.0 + 1e-9)
    throw std::invalid_argument("rotation amplitude exceeds the calibrated range");
  if (profile.insertion_depth_mm < 0.0 ||
      profile.insertion_depth_mm > g.insertion_range_mm + 1e-9)
    throw std::invalid_argument("insertion depth outside the calibrated range");
  if (profile.insertion_speed_mm_s < 0.0)
    throw std::invalid_argument("insertion speed must be non-negative");

  const double offset = g.rotation_range_deg / 2.0;
  const double active = profile.insertion_speed_mm_s > 0.0
                            ? profile.insertion_depth_mm / profile.insertion_speed_mm_s
                            : 2.0 / profile.rotation_frequency_hz;
  const double total = active + 2.0 * profile.ramp_time_s;
  const int n = static_cast<int>(std::floor(total / profile.sample_time)) + 1;

  ProfileResult out;
  out.time_s.resize(n);
  out.rotation_deg.resize(n);
  out.insertion_mm.resize(n);
  for (auto& jt : out.joints) {
    jt.sample_time = profile.sample_time;
    jt.samples.resize(n);
  }
  for (int j = 0; j < 4; ++j) out.joints[j].joint_id = j + 1;

  for (int k = 0; k < n; ++k) {
    const double t = k * profile.sample_time;
    const double env = envelope(t, total, profile.ramp_time_s);
    double rot = offset + profile.rotation_amplitude_deg * env *
                              std::sin(2.0 * kPi * profile.rotation_frequency_hz * t);
    rot = std::clamp(rot, 0.0, g.rotation_range_deg);

    double ins;
    if (profile.insertion_speed_mm_s > 0.0) {
      ins = std::clamp((t - profile.ramp_time_s) * profile.insertion_speed_mm_s, 0.0,
                       profile.insertion_depth_mm);
    } else {
      ins = profile.insertion_depth_mm;
    }

    const JointVector q = interpolate(table, rot, ins);
    out.time_s[k] = t;
    out.rotation_deg[k] = rot;
    out.insertion_mm[k] = ins;
    out.joints[0].samples[k] = q.q1;
    out.joints[1].samples[k] = q.q2;
    out.joints[2].samples[k] = q.q3;
    out.joints[3].samples[k] = q.q4;
  }
  return out;
}

std::array<double, 4> peak_rates(const ProfileResult& profile) {
  std::array<double, 4> rates{0.0, 0.0, 0.0, 0.0};
  for (int j = 0; j < 4; ++j) {
    const auto& s = profile.joints[j].samples;
    const double ts = profile.joints[j].sample_time;
    for (size_t k = 1; k < s.size(); ++k)
      rates[j] = std::max(rates[j], std::abs(s[k] - s[k - 1]) / ts);
  }
  return rates;
}

}  // namespace ilcsim
