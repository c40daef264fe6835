#include "sim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "sim/error.hpp"
#include "sim/kernels.hpp"

namespace sim {

namespace {
constexpr double kTwoPi = 6.283185307179586;

BeamParams beam_params(const BeamGeometry& beam) {
    BeamParams b;
    b.tophat = beam.shape == BeamShape::tophat;
    const double w2 = beam.radius_beam * beam.radius_beam;
    b.neg_two_inv_w2 = -2.0 / w2;
    b.edge_r2 = w2;
    return b;
}
}  // namespace

void init_css_ensemble(SpinEnsemble& e, int n, double variance, Rng& rng) {
    e.sx.resize(n);
    e.sp.resize(n);
    e.pending.assign(n, 0);
    const double s = std::sqrt(variance);
    for (int i = 0; i < n; ++i) {
        e.sx[i] = s * rng.normal();
        e.sp[i] = s * rng.normal();
    }
}

void init_positions(SpinEnsemble& e, const CellGeometry& cell, Rng& rng) {
    const int n = e.n();
    e.x.resize(n);
    e.y.resize(n);
    e.vx.resize(n);
    e.vy.resize(n);
    for (int i = 0; i < n; ++i) {
        sample_initial_position(cell, rng, e.x[i], e.y[i]);
        sample_initial_velocity(cell, rng, e.vx[i], e.vy[i]);
    }
}

double collective_sx(const SpinEnsemble& e) {
    double s = 0.0;
    for (double v : e.sx) s += v;
    return s / std::sqrt(static_cast<double>(e.n()));
}

double collective_sp(const SpinEnsemble& e) {
    double s = 0.0;
    for (double v : e.sp) s += v;
    return s / std::sqrt(static_cast<double>(e.n()));
}

StrobeModel strobe_model(double larmor_khz, double duty_cycle) {
    StrobeModel m;
    m.period = 0.5 / larmor_khz;
    m.width = duty_cycle * m.period;
    const double omega = kTwoPi * larmor_khz;  // rad/ms
    const double half_arg = 0.5 * omega * m.width;
    m.cbar = half_arg > 0.0 ? std::sin(half_arg) / half_arg : 1.0;
    const double full_arg = omega * m.width;
    const double sinc_full = full_arg > 0.0 ? std::sin(full_arg) / full_arg : 1.0;
    m.sbar = std::sqrt(0.5 * (1.0 - sinc_full));
    return m;
}

void step_spin(SpinEnsemble& e, const BeamGeometry& beam, const CouplingField& field,
               const DecoherenceParams& dec, double t_ms, double dt_ms,
               double larmor_khz, double duty_cycle, double eta_light, Rng& rng) {
    const double env = strobe_envelope(t_ms, larmor_khz, duty_cycle);
    const double omega = kTwoPi * larmor_khz;
    const double c = std::cos(omega * t_ms), s = std::sin(omega * t_ms);
    const double sq_dt = std::sqrt(dt_ms);
    const int n = e.n();
    for (int i = 0; i < n; ++i) {
        if (e.pending[i]) {
            e.sx[i] = std::sqrt(dec.langevin_variance) * rng.normal();
            e.sp[i] = std::sqrt(dec.langevin_variance) * rng.normal();
            e.pending[i] = 0;
        }
        const double u = beam_intensity(beam, e.x[i], e.y[i]) * env;
        const double gamma = dec.gamma_background + dec.gamma_probe_peak * u;
        if (gamma * dt_ms > 0.1)
            throw NumericalError("step-size violation: gamma*dt exceeds 0.1");
        const double g = instantaneous_coupling(field, u);
        const double noise = std::sqrt(2.0 * gamma * dt_ms);
        e.sx[i] += -gamma * e.sx[i] * dt_ms + g * c * sq_dt * eta_light +
                   noise * std::sqrt(dec.langevin_variance) * rng.normal();
        e.sp[i] += -gamma * e.sp[i] * dt_ms - g * s * sq_dt * eta_light +
                   noise * std::sqrt(dec.langevin_variance) * rng.normal();
    }
}

double readout_sample(const SpinEnsemble& e, const BeamGeometry& beam,
                      const CouplingField& field, double t_ms, double dt_ms,
                      double larmor_khz, double duty_cycle, double eta_shot) {
    const double env = strobe_envelope(t_ms, larmor_khz, duty_cycle);
    if (env == 0.0) return eta_shot;
    const double omega = kTwoPi * larmor_khz;
    const double c = std::cos(omega * t_ms), s = std::sin(omega * t_ms);
    double acc = 0.0;
    const int n = e.n();
    for (int i = 0; i < n; ++i) {
        const double g = instantaneous_coupling(field, beam_intensity(beam, e.x[i], e.y[i]));
        acc += g * (c * e.sp[i] - s * e.sx[i]);
    }
    return std::sqrt(dt_ms) * acc + eta_shot;
}

double probe_peak_rate(const EngineConfig& cfg) {
    const BeamMoments m = beam_moments(cfg.beam, cfg.cell.radius_cell);
    return cfg.gamma_probe_avg / (m.mean_u * cfg.duty);
}

namespace {

struct RunPlan {
    bool strobed;
    int n_steps;
    double step;        // record spacing = integration step
    double width;       // illuminated time per step
    double cbar, sbar;  // strobed projection factors
};

RunPlan make_plan(const EngineConfig& cfg) {
    if (cfg.n_sim <= 0 || cfg.n_sim % 4 != 0)
        throw ConfigError("n_sim must be a positive multiple of 4");
    if (cfg.duration_ms <= 0.0) throw ConfigError("duration must be positive");
    if (cfg.duty <= 0.0 || cfg.duty > 1.0) throw ConfigError("duty cycle must lie in (0, 1]");
    RunPlan p;
    p.strobed = cfg.duty < 1.0;
    if (p.strobed) {
        if (cfg.larmor_khz <= 0.0)
            throw ConfigError("stroboscopic probing needs a positive Larmor frequency");
        const StrobeModel m = strobe_model(cfg.larmor_khz, cfg.duty);
        p.step = m.period;
        p.width = m.width;
        p.cbar = m.cbar;
        p.sbar = m.sbar;
    } else {
        double dt = cfg.dt_ms;
        if (dt <= 0.0)
            dt = cfg.larmor_khz > 0.0 ? 1.0 / (40.0 * cfg.larmor_khz) : 5e-4;
        if (cfg.larmor_khz > 0.0 && dt > 1.0 / (20.0 * cfg.larmor_khz))
            throw ConfigError(
                "dt under-resolves the 2-Omega strobing: need at least 20 "
                "samples per Larmor period");
        p.step = dt;
        p.width = dt;
        p.cbar = 1.0;
        p.sbar = 1.0;
    }
    p.n_steps = static_cast<int>(std::llround(cfg.duration_ms / p.step));
    if (p.n_steps < 2) throw ConfigError("duration shorter than two record samples");
    return p;
}

struct Truth {
    double p0, p1, x0, x1;
};

/// One repeat: fresh atoms and spins, integrate, write the record.
void run_one_repeat(const EngineConfig& cfg, const RunPlan& plan, const Kernels& kern,
                    Rng rng, double* samples, double* atomic, Truth& truth,
                    std::vector<double>& noise) {
    const int n = cfg.n_sim;
    SpinEnsemble e;
    init_css_ensemble(e, n, cfg.init_spin_variance, rng);
    init_positions(e, cfg.cell, rng);

    truth.p0 = collective_sp(e);
    truth.x0 = collective_sx(e);

    const BeamParams bp = beam_params(cfg.beam);
    const double gpr_peak = probe_peak_rate(cfg);
    const double sq_shot = std::sqrt(cfg.shot_variance);
    const double sq_reset = std::sqrt(cfg.init_spin_variance);
    const double omega = kTwoPi * cfg.larmor_khz;

    SpinStepParams step_c;
    step_c.decay_bg = std::exp(-cfg.gamma_background * plan.step);
    step_c.gpr_dt = gpr_peak * plan.width;
    step_c.langevin_var = cfg.langevin_variance;

    const double g_scale =
        make_coupling_field(cfg.beam, cfg.cell.radius_cell, cfg.kappa, cfg.duty, n)
            .g_scale;
    const double pref = g_scale * std::sqrt(plan.width);

    for (int k = 0; k < plan.n_steps; ++k) {
        rng.fill_normals(noise.data(), 2 * static_cast<std::size_t>(n));
        const double eta1 = sq_shot * rng.normal();
        const double eta2 = sq_shot * rng.normal();
        const double eta_shot = sq_shot * rng.normal();

        double cos_k = plan.cbar, sin_k = plan.sbar;
        if (plan.strobed) {
            // cos- and sin-weighted light integrals over a symmetric pulse are
            // uncorrelated, hence the independent eta2
            step_c.kick_x = pref * plan.cbar * eta1;
            step_c.kick_p = -pref * plan.sbar * eta2;
        } else {
            const double t = k * plan.step;
            cos_k = std::cos(omega * t);
            sin_k = std::sin(omega * t);
            step_c.kick_x = pref * cos_k * eta1;
            step_c.kick_p = -pref * sin_k * eta1;
        }

        const SpinStepResult r = kern.spin_step(n, e.x.data(), e.y.data(), e.sx.data(),
                                                e.sp.data(), noise.data(), bp, step_c);
        const double atomic_k = plan.strobed
                                    ? pref * plan.cbar * r.sum_usp
                                    : pref * (cos_k * r.sum_usp - sin_k * r.sum_usx);
        samples[k] = atomic_k + eta_shot;
        if (atomic) atomic[k] = atomic_k;

        if (!cfg.stationary_atoms) {
            kern.advance(n, e.x.data(), e.y.data(), e.vx.data(), e.vy.data(),
                         e.pending.data(), plan.step, cfg.cell, rng);
            for (int i = 0; i < n; ++i) {
                if (!e.pending[i]) continue;
                e.sx[i] = sq_reset * rng.normal();
                e.sp[i] = sq_reset * rng.normal();
                e.pending[i] = 0;
            }
        }
    }

    truth.p1 = collective_sp(e);
    truth.x1 = collective_sx(e);
}

template <typename PerRepeat>
void run_repeats(const EngineConfig& cfg, int n_repeats, std::uint64_t seed,
                 int workers, std::uint64_t stream_base, PerRepeat&& per_repeat) {
    if (n_repeats < 1) throw ConfigError("need at least one repeat");
    workers = std::max(1, workers);
    const Kernels& kern = active_kernels();

    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&](int tid) {
        std::vector<double> noise(2 * static_cast<std::size_t>(cfg.n_sim));
        try {
            for (int r = tid; r < n_repeats; r += workers) {
                Rng rng = Rng::child(seed, stream_base + static_cast<std::uint64_t>(r));
                per_repeat(r, kern, std::move(rng), noise);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (workers == 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(body, t);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

int record_length(const EngineConfig& cfg) { return make_plan(cfg).n_steps; }

double record_dt(const EngineConfig& cfg) { return make_plan(cfg).step; }

MeasurementRecord run_measurement(const EngineConfig& cfg, int n_repeats,
                                  std::uint64_t seed, int workers, bool keep_atomic,
                                  std::uint64_t stream_base) {
    const RunPlan plan = make_plan(cfg);
    MeasurementRecord rec;
    rec.samples.assign(n_repeats, std::vector<double>(plan.n_steps));
    if (keep_atomic) rec.atomic.assign(n_repeats, std::vector<double>(plan.n_steps));
    rec.truth_p0.resize(n_repeats);
    rec.truth_p1.resize(n_repeats);
    rec.truth_x0.resize(n_repeats);
    rec.truth_x1.resize(n_repeats);
    rec.dt = plan.step;
    rec.larmor_khz = cfg.larmor_khz;
    rec.duty = cfg.duty;
    rec.n_sim = cfg.n_sim;
    rec.seed = seed;

    run_repeats(cfg, n_repeats, seed, workers, stream_base,
                [&](int r, const Kernels& kern, Rng rng, std::vector<double>& noise) {
                    Truth t{};
                    run_one_repeat(cfg, plan, kern, std::move(rng),
                                   rec.samples[r].data(),
                                   keep_atomic ? rec.atomic[r].data() : nullptr, t,
                                   noise);
                    rec.truth_p0[r] = t.p0;
                    rec.truth_p1[r] = t.p1;
                    rec.truth_x0[r] = t.x0;
                    rec.truth_x1[r] = t.x1;
                });
    return rec;
}

void run_measurement_stream(
    const EngineConfig& cfg, int n_repeats, std::uint64_t seed, int workers,
    const std::function<void(int, const std::vector<double>&, const std::vector<double>&)>& consume,
    bool keep_atomic, std::uint64_t stream_base) {
    const RunPlan plan = make_plan(cfg);
    run_repeats(cfg, n_repeats, seed, workers, stream_base,
                [&](int r, const Kernels& kern, Rng rng, std::vector<double>& noise) {
                    std::vector<double> samples(plan.n_steps);
                    std::vector<double> atomic(keep_atomic ? plan.n_steps : 0);
                    Truth t{};
                    run_one_repeat(cfg, plan, kern, std::move(rng), samples.data(),
                                   keep_atomic ? atomic.data() : nullptr, t, noise);
                    consume(r, samples, atomic);
                });
}

void write_record_csv(const MeasurementRecord& rec, int repeat, const char* path) {
    std::FILE* f = std::fopen(path, "w");
    if (!f) return;
    std::fputs("t_ms,x_out\n", f);
    const auto& s = rec.samples.at(repeat);
    for (std::size_t k = 0; k < s.size(); ++k)
        std::fprintf(f, "%.9g,%.17g\n", static_cast<double>(k) * rec.dt, s[k]);
    std::fclose(f);
}

}  // namespace sim
