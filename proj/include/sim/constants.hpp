#pragma once

namespace sim {

// SI constants (CODATA 2018).
constexpr double kBoltzmann = 1.380649e-23;      // J/K
constexpr double kAmu = 1.66053906660e-27;       // kg
constexpr double kHbar = 1.054571817e-34;        // J*s
constexpr double kSpeedOfLight = 2.99792458e8;   // m/s

constexpr double kMassRb87 = 86.909180527 * kAmu;  // kg

// Internal units: lengths in mm, times in ms.  Velocities in mm/ms are
// numerically equal to m/s, so thermal speeds need no conversion factor.

}  // namespace sim
