#pragma once

#include <cmath>

#include "sim/error.hpp"

namespace sim {

enum class BeamShape { gaussian, tophat };

/// @brief Transverse probe profile; radius is the 1/e^2 intensity radius for
/// gaussian and the hard edge for tophat (half the quoted diameter either way).
struct BeamGeometry {
    BeamShape shape = BeamShape::gaussian;
    double radius_beam = 1.0;  ///< mm
};

/// Normalized intensity u(r) in [0, 1].
inline double beam_intensity(const BeamGeometry& b, double x, double y) {
    const double r2 = x * x + y * y;
    const double w2 = b.radius_beam * b.radius_beam;
    if (b.shape == BeamShape::tophat) return r2 <= w2 ? 1.0 : 0.0;
    return std::exp(-2.0 * r2 / w2);
}

/// @brief First two moments of u over the cell cross-section (analytic).
struct BeamMoments {
    double mean_u;
    double mean_u2;
};

BeamMoments beam_moments(const BeamGeometry& b, double radius_cell);

/// Peak intensity for a given total beam power, mW/mm^2.
double beam_peak_intensity(double power_mw, const BeamGeometry& b);

/// @brief Inputs of the coupling-rate formula.
struct CouplingParams {
    double power_peak_mw = 5.0;      ///< in-pulse optical power
    double duty_cycle = 1.0;
    double detuning_ghz = -2.5;      ///< Delta/2pi, relative to F=2 -> F'=3
    double area_mm2 = 3.785707;      ///< effective interaction area
    double atom_number = 1e10;
    double lambda_nm = 780.241;
    double gamma_natural_mhz = 6.07;  ///< natural linewidth / 2pi
    bool time_averaged = false;       ///< use duty-averaged power
};

// excited-state hyperfine offsets of the two off-resonant lines, GHz
constexpr double kDelta13Ghz = 0.42360;
constexpr double kDelta23Ghz = 0.26665;

/// Vector interaction coefficient; tends to sqrt(2) far off resonance.
/// Throws ConfigError at the poles (detuning equal to a hyperfine offset).
double vector_coefficient_a1(const CouplingParams& p);

/// Coupling rate in ms^(-1/2).  Positive for red detuning.
double effective_kappa(const CouplingParams& p);

/// Square strobe synchronized to the Larmor precession: one pulse per half
/// period, centered where |cos(Omega t)| peaks.  Returns 0 or 1.
double strobe_envelope(double t_ms, double larmor_khz, double duty_cycle);

/// @brief Per-atom coupling weights g_i = kappa_pulse * u_i / (<u> sqrt(n)).
///
/// Normalizing by the equilibrium mean intensity keeps the ensemble-average
/// collective coupling equal to kappa regardless of beam size, which is what
/// a power meter at the cell would enforce.
struct CouplingField {
    double kappa = 0.0;        ///< duty-averaged coupling, ms^(-1/2)
    double kappa_pulse = 0.0;  ///< in-pulse coupling kappa/sqrt(duty)
    double mean_u = 1.0;
    double mean_u2 = 1.0;
    double g_scale = 0.0;      ///< weight per unit u: kappa_pulse/(<u> sqrt(n))
};

CouplingField make_coupling_field(const BeamGeometry& beam, double radius_cell,
                                  double kappa, double duty_cycle, int n_sim);

inline double instantaneous_coupling(const CouplingField& f, double u) {
    return f.g_scale * u;
}

}  // namespace sim
