#include "sim/optics.hpp"

#include <cmath>

#include "sim/constants.hpp"

namespace sim {

BeamMoments beam_moments(const BeamGeometry& b, double radius_cell) {
    const double R2 = radius_cell * radius_cell;
    const double w2 = b.radius_beam * b.radius_beam;
    if (b.shape == BeamShape::tophat) {
        const double f = w2 >= R2 ? 1.0 : w2 / R2;
        return {f, f};
    }
    const double q = w2 / R2;
    const double m1 = 0.5 * q * (1.0 - std::exp(-2.0 / q));
    const double m2 = 0.25 * q * (1.0 - std::exp(-4.0 / q));
    return {m1, m2};
}

double beam_peak_intensity(double power_mw, const BeamGeometry& b) {
    const double w2 = b.radius_beam * b.radius_beam;
    if (b.shape == BeamShape::tophat) return power_mw / (M_PI * w2);
    return 2.0 * power_mw / (M_PI * w2);
}

double vector_coefficient_a1(const CouplingParams& p) {
    if (p.detuning_ghz == 0.0) throw ConfigError("detuning must be nonzero");
    const double r13 = 1.0 - kDelta13Ghz / p.detuning_ghz;
    const double r23 = 1.0 - kDelta23Ghz / p.detuning_ghz;
    if (std::fabs(r13) < 1e-9 || std::fabs(r23) < 1e-9)
        throw ConfigError("singular detuning: probe sits on a hyperfine line");
    return std::sqrt(2.0) / 100.0 * (-15.0 / r13 - 25.0 / r23 + 140.0);
}

double effective_kappa(const CouplingParams& p) {
    if (p.power_peak_mw < 0.0) throw ConfigError("negative probe power");
    if (p.power_peak_mw == 0.0) return 0.0;
    const double a1 = vector_coefficient_a1(p);
    const double power_w =
        p.power_peak_mw * 1e-3 * (p.time_averaged ? p.duty_cycle : 1.0);
    const double delta = 2.0 * M_PI * p.detuning_ghz * 1e9;  // rad/s
    const double gamma = 2.0 * M_PI * p.gamma_natural_mhz * 1e6;
    const double lambda = p.lambda_nm * 1e-9;
    const double area = p.area_mm2 * 1e-6;
    const double omega = 2.0 * M_PI * kSpeedOfLight / lambda;
    const double photon_flux = power_w * p.atom_number / (kHbar * omega);
    const double kappa_s =
        -(gamma * lambda * lambda) / (16.0 * M_PI * area * delta) * a1 *
        std::sqrt(photon_flux);
    return kappa_s * std::sqrt(1e-3);  // per sqrt(ms)
}

double strobe_envelope(double t_ms, double larmor_khz, double duty_cycle) {
    if (duty_cycle >= 1.0) return 1.0;
    if (duty_cycle <= 0.0) return 0.0;
    const double period = 0.5 / larmor_khz;  // half Larmor period, ms
    const double offset = t_ms - std::round(t_ms / period) * period;
    return std::fabs(offset) < 0.5 * duty_cycle * period ? 1.0 : 0.0;
}

CouplingField make_coupling_field(const BeamGeometry& beam, double radius_cell,
                                  double kappa, double duty_cycle, int n_sim) {
    if (duty_cycle <= 0.0 || duty_cycle > 1.0)
        throw ConfigError("duty cycle must lie in (0, 1]");
    if (n_sim < 1) throw ConfigError("ensemble size must be positive");
    const BeamMoments m = beam_moments(beam, radius_cell);
    CouplingField f;
    f.kappa = kappa;
    f.kappa_pulse = kappa / std::sqrt(duty_cycle);
    f.mean_u = m.mean_u;
    f.mean_u2 = m.mean_u2;
    f.g_scale = f.kappa_pulse / (m.mean_u * std::sqrt(static_cast<double>(n_sim)));
    return f;
}

}  // namespace sim
