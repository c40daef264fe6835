#pragma once

#include <cstdint>

#include "sim/dynamics.hpp"

namespace sim {

/// @brief Outcome of tuning the wall-reset probability to a coherence target.
struct CalibrationResult {
  double wall_reset_probability = 0.0;
  double kappa2_t2 = 0.0;       ///< fitted value at the returned probability
  int iterations = 0;           ///< bisection steps taken
  EngineConfig calibrated;      ///< base config with the tuned probability
};

/// Bisects wall_reset_probability in [p_lo, p_hi] until the fitted kappa^2 T2
/// lies within rel_tol of target_k2t2.  Every evaluation reuses the same seed
/// (common random numbers), which makes the objective exactly monotone in the
/// probability; a bracket that does not straddle the target raises
/// NumericalError.
CalibrationResult calibrate_wall_reset(const EngineConfig& base, double target_k2t2,
                                       double rel_tol, int n_repeats,
                                       std::uint64_t seed, int workers,
                                       double p_lo = 0.0, double p_hi = 0.05);

}  // namespace sim
