#include "sim/calibrate.hpp"

#include <cmath>

#include "sim/error.hpp"
#include "sim/squeezing.hpp"

namespace sim {

CalibrationResult calibrate_wall_reset(const EngineConfig& base, double target_k2t2,
                                       double rel_tol, int n_repeats,
                                       std::uint64_t seed, int workers, double p_lo,
                                       double p_hi) {
    if (target_k2t2 <= 0.0) throw ConfigError("coherence target must be positive");
    if (rel_tol <= 0.0) throw ConfigError("calibration tolerance must be positive");
    if (!(p_lo >= 0.0 && p_hi <= 1.0 && p_lo < p_hi))
        throw ConfigError("wall-reset bracket must satisfy 0 <= lo < hi <= 1");

    auto fit_at = [&](double p) {
        EngineConfig cfg = base;
        cfg.cell.wall_reset_probability = p;
        return fit_kappa2_t2(cfg, n_repeats, seed, workers).kappa2_t2;
    };

    // kappa^2 T2 falls monotonically with the reset probability
    double f_lo = fit_at(p_lo);
    double f_hi = fit_at(p_hi);
    int iterations = 2;
    if (f_lo < target_k2t2 || f_hi > target_k2t2)
        throw NumericalError("wall-reset bracket does not straddle the coherence target");

    double p = p_lo, fit = f_lo;
    const double tol = rel_tol * target_k2t2;
    if (std::abs(f_hi - target_k2t2) <= std::abs(f_lo - target_k2t2)) {
        p = p_hi;
        fit = f_hi;
    }
    while (std::abs(fit - target_k2t2) > tol && iterations < 40 &&
           (p_hi - p_lo) > 1e-9) {
        const double mid = 0.5 * (p_lo + p_hi);
        const double f_mid = fit_at(mid);
        ++iterations;
        if (f_mid > target_k2t2)
            p_lo = mid;
        else
            p_hi = mid;
        p = mid;
        fit = f_mid;
    }
    if (std::abs(fit - target_k2t2) > tol)
        throw NumericalError("calibration failed to reach the coherence target");

    CalibrationResult res;
    res.wall_reset_probability = p;
    res.kappa2_t2 = fit;
    res.iterations = iterations;
    res.calibrated = base;
    res.calibrated.cell.wall_reset_probability = p;
    return res;
}

}  // namespace sim
