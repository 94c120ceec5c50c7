#pragma once

#include <numbers>

namespace ilcsim {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

// SI internally; micrometers/millimeters/degrees only at I/O boundaries.
constexpr double um_to_m(double um) { return um * 1e-6; }
constexpr double mm_to_m(double mm) { return mm * 1e-3; }
constexpr double m_to_um(double m) { return m * 1e6; }
constexpr double m_to_mm(double m) { return m * 1e3; }

}  // namespace ilcsim
