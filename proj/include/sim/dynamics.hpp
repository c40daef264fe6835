#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sim/kinematics.hpp"
#include "sim/optics.hpp"
#include "sim/rng.hpp"

namespace sim {

/// @brief Relaxation model: background rate plus an intensity-proportional
/// probe rate evaluated at peak illumination.
struct DecoherenceParams {
    double gamma_background = 0.05;  ///< 1/ms, always on
    double gamma_probe_peak = 0.0;   ///< 1/ms at u = 1 inside a pulse
    double langevin_variance = 0.5;  ///< stationary spin variance
};

/// @brief Input light statistics per readout sample.
struct LightInputs {
    double shot_variance = 0.25;  ///< one-sided convention
};

/// @brief Structure-of-arrays ensemble state.
struct SpinEnsemble {
    std::vector<double> x, y, vx, vy;  ///< transit state
    std::vector<double> sx, sp;        ///< spin quadratures (rotating frame)
    std::vector<std::uint8_t> pending; ///< wall depolarization flags

    int n() const { return static_cast<int>(sx.size()); }
};

/// i.i.d. Gaussian spins with the given per-atom variance.
void init_css_ensemble(SpinEnsemble& e, int n, double variance, Rng& rng);

/// Equilibrium transit state: uniform positions, thermal velocities.
void init_positions(SpinEnsemble& e, const CellGeometry& cell, Rng& rng);

/// Collective quadratures sum(s)/sqrt(n); CSS variance equals the per-atom one.
double collective_sx(const SpinEnsemble& e);
double collective_sp(const SpinEnsemble& e);

/// @brief Pulse-train geometry and the in-pulse projection factors.
struct StrobeModel {
    double period;  ///< ms, half the Larmor period
    double width;   ///< ms, duty * period
    double cbar;    ///< mean of |cos(Omega t)| across one pulse
    double sbar;    ///< rms of sin(Omega t) across one pulse
};
StrobeModel strobe_model(double larmor_khz, double duty_cycle);

/// Reference Euler-Maruyama step of the rotating-frame Langevin update:
/// decay at gamma_i = gamma_background + gamma_probe_peak*u_i*envelope,
/// Langevin noise sqrt(2 gamma_i dt) N(0, var_l), and the backaction kick
/// g_i (cos, -sin) sqrt(dt) eta_light.  Throws on gamma_i*dt > 0.1.
void step_spin(SpinEnsemble& e, const BeamGeometry& beam, const CouplingField& field,
               const DecoherenceParams& dec, double t_ms, double dt_ms,
               double larmor_khz, double duty_cycle, double eta_light, Rng& rng);

/// One demodulated readout sample: sqrt(dt) sum_i g_i (cos sp_i - sin sx_i)
/// inside the envelope, plus the light's own quadrature eta_shot.
double readout_sample(const SpinEnsemble& e, const BeamGeometry& beam,
                      const CouplingField& field, double t_ms, double dt_ms,
                      double larmor_khz, double duty_cycle, double eta_shot);

/// @brief Full simulation parameters of one measurement configuration.
struct EngineConfig {
    CellGeometry cell;
    BeamGeometry beam;
    double kappa = 1.61;            ///< duty-averaged coupling, ms^(-1/2)
    double duty = 0.1;
    double larmor_khz = 500.0;
    double gamma_background = 0.05;  ///< 1/ms
    double gamma_probe_avg = 0.10;   ///< equilibrium-averaged probe rate, 1/ms
    double langevin_variance = 0.5;
    double shot_variance = 0.25;
    double duration_ms = 3.0;
    double dt_ms = 0.0;              ///< continuous step; 0 = 1/(40 f_L)
    int n_sim = 1024;
    bool stationary_atoms = false;   ///< freeze transit (reference runs)
    double init_spin_variance = 0.5; ///< CSS; thermal references use 5/4 of it
};

/// @brief Demodulated records of all repeats plus per-repeat ground truth.
struct MeasurementRecord {
    std::vector<std::vector<double>> samples;  ///< [repeat][k], shot included
    std::vector<std::vector<double>> atomic;   ///< shot-free part, if kept
    std::vector<double> truth_p0, truth_p1;    ///< collective sp at start/end
    std::vector<double> truth_x0, truth_x1;
    double dt = 0.0;                           ///< record spacing, ms
    double larmor_khz = 0.0;
    double duty = 1.0;
    int n_sim = 0;
    std::uint64_t seed = 0;
};

/// Number of record samples per repeat for a given configuration.
int record_length(const EngineConfig& cfg);

/// Record sample spacing in ms (strobe period when duty < 1, else dt).
double record_dt(const EngineConfig& cfg);

/// Derived peak probe rate gamma_probe_avg / (<u> duty).
double probe_peak_rate(const EngineConfig& cfg);

/// Run n_repeats independent repeats (fresh atoms, spins, and light) spread
/// over `workers` threads.  Results are slot-indexed by repeat and each
/// repeat owns random stream (seed, stream_base + repeat), so output is
/// bit-identical for any worker count.
MeasurementRecord run_measurement(const EngineConfig& cfg, int n_repeats,
                                  std::uint64_t seed, int workers,
                                  bool keep_atomic = true,
                                  std::uint64_t stream_base = 0);

/// Streaming variant: consume(repeat_index, samples, atomic) is called once
/// per repeat from worker threads (repeat indices are disjoint across
/// workers); `atomic` is empty unless keep_atomic is set.
void run_measurement_stream(
    const EngineConfig& cfg, int n_repeats, std::uint64_t seed, int workers,
    const std::function<void(int, const std::vector<double>&, const std::vector<double>&)>& consume,
    bool keep_atomic = false, std::uint64_t stream_base = 0);

/// CSV dump of one repeat: t_ms,x_out
void write_record_csv(const MeasurementRecord& rec, int repeat, const char* path);

}  // namespace sim
