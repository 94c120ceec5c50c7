#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately separate from the library code paths they check.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using Matrix4 = Eigen::Matrix4d;
using Vector3 = Eigen::Vector3d;

inline Matrix4 rot_x(double a) {
  Matrix4 m = Matrix4::Identity();
  m(1, 1) = std::cos(a);
  m(1, 2) = -std::sin(a);
  m(2, 1) = std::sin(a);
  m(2, 2) = std::cos(a);
  return m;
}

inline Matrix4 rot_y(double a) {
  Matrix4 m = Matrix4::Identity();
  m(0, 0) = std::cos(a);
  m(0, 2) = std::sin(a);
  m(2, 0) = -std::sin(a);
  m(2, 2) = std::cos(a);
  return m;
}

inline Matrix4 rot_z(double a) {
  Matrix4 m = Matrix4::Identity();
  m(0, 0) = std::cos(a);
  m(0, 1) = -std::sin(a);
  m(1, 0) = std::sin(a);
  m(1, 1) = std::cos(a);
  return m;
}

inline Matrix4 translate(double x, double y, double z) {
  Matrix4 m = Matrix4::Identity();
  m(0, 3) = x;
  m(1, 3) = y;
  m(2, 3) = z;
  return m;
}

// Raw homogeneous-transform composition for the default RCM chain: pan about
// base x, tilt about the rotated y, prismatic insertion along the tool axis,
// distal roll, tool tip at tip_offset + (0, 0, length) in the roll frame.
inline Vector3 rcm_tooltip(const Vector3& rcm, double tool_length, const Vector3& tip_offset,
                           double q1, double q2, double q3, double q4) {
  Matrix4 t = translate(rcm.x(), rcm.y(), rcm.z());
  t = t * rot_y(M_PI / 2.0) * rot_z(q1);
  t = t * rot_x(-M_PI / 2.0) * rot_z(q2);
  t = t * rot_y(M_PI / 2.0) * translate(0.0, 0.0, q3);
  t = t * rot_z(q4);
  Eigen::Vector4d tip_local(tip_offset.x(), tip_offset.y(), tip_offset.z() + tool_length, 1.0);
  return (t * tip_local).head<3>();
}

// Analytic Jacobian of the planar 2R chain with link lengths l1, l2:
// p = (l1 c1 + l2 c12, l1 s1 + l2 s12, 0).
inline Eigen::Matrix<double, 3, 2> planar_2r_jacobian(double l1, double l2, double q1,
                                                      double q2) {
  Eigen::Matrix<double, 3, 2> j = Eigen::Matrix<double, 3, 2>::Zero();
  const double s1 = std::sin(q1), c1 = std::cos(q1);
  const double s12 = std::sin(q1 + q2), c12 = std::cos(q1 + q2);
  j(0, 0) = -l1 * s1 - l2 * s12;
  j(0, 1) = -l2 * s12;
  j(1, 0) = l1 * c1 + l2 * c12;
  j(1, 1) = l2 * c12;
  return j;
}

// Naive O(n^2) DFT: X_k = sum_n x_n e^{-2 pi i k n / N}.
inline std::vector<std::complex<double>> dft(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t m = 0; m < n; ++m) {
      const double w = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(m) / n;
      acc += x[m] * std::complex<double>(std::cos(w), std::sin(w));
    }
    out[k] = acc;
  }
  return out;
}

// Distance from a point to a circle (center c, unit normal n, radius rho).
inline double point_to_circle(const Vector3& p, const Vector3& c, const Vector3& n,
                              double rho) {
  const Vector3 d = p - c;
  const double axial = d.dot(n);
  const double radial = (d - axial * n).norm();
  return std::sqrt(axial * axial + (radial - rho) * (radial - rho));
}

// Full linear cross-correlation argmax lag between two equal-length signals.
inline int xcorr_peak_lag(const std::vector<double>& a, const std::vector<double>& b) {
  const int n = static_cast<int>(a.size());
  double best = -1.0;
  int best_lag = 0;
  for (int lag = -(n - 1); lag <= n - 1; ++lag) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const int m = k + lag;
      if (m >= 0 && m < n) acc += a[k] * b[m];
    }
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  return best_lag;
}

}  // namespace oracle
