// Acceptance gate: each criterion loads the shipped configs, runs the
// library pipeline, and prints exactly one PASS/FAIL line with the measured
// values against its pinned tolerance.  Exit status 0 only if every
// requested criterion passes.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sim/calibrate.hpp"
#include "sim/config.hpp"
#include "sim/error.hpp"
#include "sim/output.hpp"
#include "sim/spectra.hpp"

namespace {

int g_workers = 1;

/// Shipped configs live next to the binary or in the source tree above it.
std::string config_dir() {
    const char* env = std::getenv("SIM_CONFIG_DIR");
    if (env != nullptr && *env != '\0') return env;
    for (const char* dir : {".", "..", "../.."})
        if (std::filesystem::exists(std::filesystem::path(dir) / "fig5.cfg")) return dir;
    throw sim::ConfigError("cannot locate the shipped .cfg files; set SIM_CONFIG_DIR");
}

sim::RunConfig load_fig(const char* name) {
    return sim::load_config((std::filesystem::path(config_dir()) / name).string());
}

/// Sweep points share the master seed so paired comparisons reuse streams.
sim::RunConfig at_value(const sim::RunConfig& base, sim::SweepAxis axis,
                        const std::string& value) {
    sim::RunConfig cfg = sim::apply_sweep_value(base, axis, value);
    cfg.seed = base.seed;
    return cfg;
}

sim::SqueezingSummary run_squeezing(const sim::RunConfig& cfg) {
    std::vector<sim::SqueezingResult> batches;
    for (int b = 0; b < cfg.analysis.batches; ++b)
        batches.push_back(sim::run_squeezing_batch(cfg, b, g_workers));
    return sim::summarize_batches(batches);
}

/// @brief One spectrum curve reduced to the quantities the criteria compare.
struct SpectrumPoint {
    double background_db = 0.0;  ///< dB over shot at the documented offset
    double peak_db = 0.0;        ///< dB over shot at the line
    double line_area = 0.0;
};

SpectrumPoint run_spectrum(const sim::RunConfig& cfg) {
    const sim::WelchParams wp{cfg.analysis.rbw_khz, cfg.analysis.fmax_khz};
    const sim::SpectrumEstimate est =
        sim::spectrum_from_engine(cfg.engine, cfg.n_repeats, cfg.seed, g_workers, wp);
    const double shot = sim::shot_noise_level(cfg.engine, std::min(cfg.n_repeats, 200),
                                              cfg.seed, g_workers, wp);
    const double f0 = cfg.engine.larmor_khz + cfg.analysis.offset_khz;
    const double band = std::max(2.0, 2.0 * est.rbw_khz);
    SpectrumPoint p;
    p.background_db =
        10.0 * std::log10(sim::mean_psd_band(est, f0 - band, f0 + band) / shot);
    if (cfg.engine.larmor_khz > 0.0) {
        const double fl = cfg.engine.larmor_khz;
        const double hw = 3.0 * est.rbw_khz;
        // the line fills about one rbw bin; a band average would dilute it
        // under the pedestal, so take the tallest bin in the line window
        double peak = 0.0;
        for (std::size_t i = 0; i < est.freq_khz.size(); ++i)
            if (std::abs(est.freq_khz[i] - fl) <= hw) peak = std::max(peak, est.psd[i]);
        p.peak_db = 10.0 * std::log10(peak / shot);
        p.line_area = sim::line_area(est, fl, hw);
    }
    return p;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// --- criterion 1: squeezing gap between 0.6 mm and 2.0 mm beams -------------

Outcome criterion1() {
    const sim::RunConfig base = load_fig("fig5.cfg");
    const double xi_small =
        run_squeezing(at_value(base, sim::SweepAxis::beam_diameter, "0.6")).xi2_db;
    const double xi_big =
        run_squeezing(at_value(base, sim::SweepAxis::beam_diameter, "2.0")).xi2_db;
    const double gap = xi_small - xi_big;
    Outcome o;
    o.pass = std::abs(gap - 3.0) <= 0.5;
    o.detail = fmt("xi2(0.6 mm) - xi2(2.0 mm) = %.2f dB, target 3.0 +- 0.5 "
                   "(xi2 = %.2f / %.2f dB)",
                   gap, xi_small, xi_big);
    return o;
}

// --- criterion 2: tophat vs Gaussian at 3.4 mm -------------------------------

Outcome criterion2() {
    const sim::RunConfig base = load_fig("fig7.cfg");
    const double xi_top =
        run_squeezing(at_value(base, sim::SweepAxis::beam_shape, "tophat")).xi2_db;
    const double xi_gauss =
        run_squeezing(at_value(base, sim::SweepAxis::beam_shape, "gaussian")).xi2_db;
    Outcome o;
    o.pass = std::abs(-xi_top - 4.75) <= 0.4 && std::abs(-xi_gauss - 4.54) <= 0.4 &&
             xi_top <= xi_gauss;
    o.detail = fmt("squeezing tophat %.2f dB (target 4.75 +- 0.4), gaussian %.2f dB "
                   "(target 4.54 +- 0.4), tophat >= gaussian %s",
                   -xi_top, -xi_gauss, xi_top <= xi_gauss ? "holds" : "violated");
    return o;
}

// --- criterion 3: transit-background gap at 500 kHz --------------------------

Outcome criterion3() {
    const sim::RunConfig base = load_fig("fig3.cfg");
    const double bg_small =
        run_spectrum(at_value(base, sim::SweepAxis::beam_diameter, "0.6")).background_db;
    const double bg_big =
        run_spectrum(at_value(base, sim::SweepAxis::beam_diameter, "2.0")).background_db;
    const double gap = bg_small - bg_big;
    Outcome o;
    o.pass = std::abs(gap - 0.7) <= 0.3;
    o.detail = fmt("background(0.6 mm) - background(2 mm) = %.2f dB at +%g kHz, "
                   "target 0.7 +- 0.3 (levels %.2f / %.2f dB)",
                   gap, base.analysis.offset_khz, bg_small, bg_big);
    return o;
}

// --- criterion 4: spectral structure over the Larmor-diameter grid -----------

Outcome criterion4() {
    const sim::RunConfig base = load_fig("fig3.cfg");
    const char* larmors[] = {"30", "100", "500"};
    const char* diameters[] = {"0.6", "1", "2"};
    Outcome o;
    o.pass = true;
    for (const char* fl : larmors) {
        const sim::RunConfig row = at_value(base, sim::SweepAxis::larmor, fl);
        SpectrumPoint pts[3];
        for (int i = 0; i < 3; ++i)
            pts[i] = run_spectrum(at_value(row, sim::SweepAxis::beam_diameter, diameters[i]));

        for (int i = 0; i < 3; ++i)
            if (pts[i].peak_db < pts[i].background_db + 1.5) {
                o.pass = false;
                o.detail += fmt("[%s kHz, %s mm: peak %.2f dB not above background "
                                "%.2f dB] ",
                                fl, diameters[i], pts[i].peak_db, pts[i].background_db);
            }
        if (!(pts[0].background_db > pts[1].background_db &&
              pts[1].background_db > pts[2].background_db)) {
            o.pass = false;
            o.detail += fmt("[%s kHz: background not decreasing %.2f/%.2f/%.2f dB] ", fl,
                            pts[0].background_db, pts[1].background_db,
                            pts[2].background_db);
        }
        const double mean_area =
            (pts[0].line_area + pts[1].line_area + pts[2].line_area) / 3.0;
        double worst = 0.0;
        for (const SpectrumPoint& p : pts)
            worst = std::max(worst, std::abs(p.line_area - mean_area) / mean_area);
        if (worst > 0.10) {
            o.pass = false;
            o.detail += fmt("[%s kHz: line area spread %.1f%% > 10%%] ", fl, 100.0 * worst);
        } else {
            o.detail += fmt("[%s kHz: bg %.2f/%.2f/%.2f dB, area spread %.1f%%] ", fl,
                            pts[0].background_db, pts[1].background_db,
                            pts[2].background_db, 100.0 * worst);
        }
    }
    return o;
}

// --- criterion 5: sideband overlap orderings ----------------------------------

Outcome criterion5() {
    const sim::RunConfig base = load_fig("figA3.cfg");
    const double bg0 =
        run_spectrum(at_value(base, sim::SweepAxis::larmor, "0")).background_db;
    const double bg30 =
        run_spectrum(at_value(base, sim::SweepAxis::larmor, "30")).background_db;
    const double bg500 =
        run_spectrum(at_value(base, sim::SweepAxis::larmor, "500")).background_db;
    Outcome o;
    o.pass = bg30 > bg500 && bg0 > bg500;
    o.detail = fmt("background at Omega + offset: %.2f dB (0 kHz) / %.2f dB (30 kHz) / "
                   "%.2f dB (500 kHz); need 30 kHz > 500 kHz and 0 kHz > 500 kHz",
                   bg0, bg30, bg500);
    return o;
}

// --- criterion 6: kappa scaling at 2 mm and the small-beam penalty ------------

Outcome criterion6() {
    const sim::RunConfig base = load_fig("fig6.cfg");
    const char* kappas[] = {"1.14", "1.61", "2.28"};
    double xi_big[3], degradation[3];
    for (int i = 0; i < 3; ++i) {
        const sim::RunConfig at_kappa = at_value(base, sim::SweepAxis::kappa, kappas[i]);
        xi_big[i] = run_squeezing(at_kappa).xi2_db;
        const double xi_small =
            run_squeezing(at_value(at_kappa, sim::SweepAxis::beam_diameter, "0.6")).xi2_db;
        degradation[i] = xi_small - xi_big[i];
    }
    const bool improves = xi_big[0] > xi_big[1] && xi_big[1] > xi_big[2];
    const bool degrades = degradation[0] < degradation[1] && degradation[1] < degradation[2];
    Outcome o;
    o.pass = improves && degrades;
    o.detail = fmt("xi2(2 mm) = %.2f/%.2f/%.2f dB over kappa {1.14, 1.61, 2.28} "
                   "(monotone %s); 0.6 mm degradation = %.2f/%.2f/%.2f dB (monotone %s)",
                   xi_big[0], xi_big[1], xi_big[2], improves ? "yes" : "NO",
                   degradation[0], degradation[1], degradation[2],
                   degrades ? "yes" : "NO");
    return o;
}

// --- criterion 7: coherence calibration on a held-out seed --------------------

Outcome criterion7() {
    const sim::RunConfig base = load_fig("fig5.cfg");
    const sim::CalibrationResult cal = sim::calibrate_wall_reset(
        base.engine, base.calibrate.target_k2t2, base.calibrate.tolerance,
        base.calibrate.repeats, base.seed, g_workers);
    const int heldout_repeats = base.calibrate.repeats + base.calibrate.repeats / 2;
    const sim::CoherenceFit fit =
        sim::fit_kappa2_t2(cal.calibrated, heldout_repeats, base.seed + 9001, g_workers);
    const double err = fit.kappa2_t2 - base.calibrate.target_k2t2;
    Outcome o;
    o.pass = std::abs(err) <= 0.02;
    o.detail = fmt("calibrated wall reset %.6g (%d evaluations); held-out seed gives "
                   "kappa^2 T2 = %.4f, target %.2f +- 0.02",
                   cal.wall_reset_probability, cal.iterations, fit.kappa2_t2,
                   base.calibrate.target_k2t2);
    return o;
}

// --- criterion 8: property suite ----------------------------------------------

/// Analytic covariance of OU bin means (decay d per sample, m samples per
/// bin, stationary variance vp); the closed-form half of the conditioning
/// oracle for the homogeneous benchmark.
double ou_bin_cov(int sep, int m, double d, double vp) {
    if (sep == 0) {
        double acc = static_cast<double>(m);
        for (int l = 1; l < m; ++l) acc += 2.0 * (m - l) * std::pow(d, l);
        return vp * acc / (static_cast<double>(m) * m);
    }
    const double geo = (1.0 - std::pow(d, m)) / (1.0 - d);
    return vp * std::pow(d, sep * m - (m - 1)) * geo * geo /
           (static_cast<double>(m) * m);
}

double oracle_conditional(const std::vector<int>& feature_bins, int target_bin, int m,
                          double d, double vp, double var_shot) {
    const int b = static_cast<int>(feature_bins.size());
    Eigen::MatrixXd cf(b, b);
    Eigen::VectorXd cross(b);
    for (int i = 0; i < b; ++i) {
        cross(i) = ou_bin_cov(std::abs(feature_bins[i] - target_bin), m, d, vp);
        for (int j = 0; j < b; ++j)
            cf(i, j) = ou_bin_cov(std::abs(feature_bins[i] - feature_bins[j]), m, d, vp) +
                       (i == j ? var_shot : 0.0);
    }
    const double prior = ou_bin_cov(0, m, d, vp);
    return prior - cross.dot(cf.ldlt().solve(cross));
}

/// Stationary atoms under a cell-covering tophat at zero field: uniform
/// coupling and a pure OU spin, exactly solvable.
sim::EngineConfig homogeneous_benchmark() {
    sim::EngineConfig cfg;
    cfg.beam.shape = sim::BeamShape::tophat;
    cfg.beam.radius_beam = 2.0 * cfg.cell.radius_cell;
    cfg.kappa = 1.61;
    cfg.duty = 1.0;
    cfg.larmor_khz = 0.0;
    cfg.gamma_background = 1.61 * 1.61 / 2.26;
    cfg.gamma_probe_avg = 0.0;
    cfg.duration_ms = 3.0;
    cfg.n_sim = 32;
    cfg.stationary_atoms = true;
    return cfg;
}

double sample_variance(const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double acc = 0.0;
    for (double v : x) acc += (v - mean) * (v - mean);
    return acc / static_cast<double>(x.size() - 1);
}

/// Kolmogorov-Smirnov statistic sqrt(n) * sup |F_n - F| against cdf.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, const Cdf& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        worst = std::max(worst, std::abs(f - static_cast<double>(i) / n));
        worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return std::sqrt(n) * worst;
}

Outcome criterion8() {
    Outcome o;
    o.pass = true;
    auto report = [&o](const char* name, bool ok, const std::string& info) {
        if (!ok) {
            o.pass = false;
            o.detail += fmt("[%s FAILED: %s] ", name, info.c_str());
        }
    };

    // CSS variance 0.5 +- 1%
    {
        sim::Rng rng(4001);
        sim::SpinEnsemble e;
        sim::init_css_ensemble(e, 400000, 0.5, rng);
        const double vx = sample_variance(e.sx), vp = sample_variance(e.sp);
        report("css variance", std::abs(vx - 0.5) <= 0.005 && std::abs(vp - 0.5) <= 0.005,
               fmt("var sx %.4f, var sp %.4f", vx, vp));
    }

    // Conditional variance vs the closed-form oracle (3 standard errors),
    // plus retrodiction <= prediction on the same record.
    {
        const sim::EngineConfig cfg = homogeneous_benchmark();
        const int n_repeats = 6000, n_bins = 100;
        const sim::MeasurementRecord rec =
            sim::run_measurement(cfg, n_repeats, 4002, g_workers);
        const int n_steps = static_cast<int>(rec.samples.front().size());
        const int m = n_steps / n_bins;
        const double d = std::exp(-cfg.gamma_background * rec.dt);
        const double var_shot =
            cfg.shot_variance / (m * rec.dt * cfg.kappa * cfg.kappa);

        std::vector<int> pred_bins, retro_bins;
        for (int j = 0; j < n_bins / 2; ++j) pred_bins.push_back(j);
        for (int j = 0; j < n_bins; ++j)
            if (j != n_bins / 2) retro_bins.push_back(j);

        const sim::SqueezingResult pred = sim::estimate_conditional(
            rec, cfg, sim::TargetQuadrature::final_quadrature, sim::Estimator::prediction,
            0.5, n_bins);
        const sim::SqueezingResult retro = sim::estimate_conditional(
            rec, cfg, sim::TargetQuadrature::midpoint_quadrature,
            sim::Estimator::retrodiction, 0.5, n_bins);

        const double oracle_pred =
            oracle_conditional(pred_bins, n_bins / 2, m, d, 0.5, var_shot);
        const double oracle_retro =
            oracle_conditional(retro_bins, n_bins / 2, m, d, 0.5, var_shot);
        const double se_pred = oracle_pred *
                               std::sqrt(2.0 / (n_repeats - 1 - pred_bins.size()));
        const double se_retro = oracle_retro *
                                std::sqrt(2.0 / (n_repeats - 1 - retro_bins.size()));
        report("conditioning oracle",
               std::abs(pred.var_conditional - oracle_pred) <= 3.0 * se_pred &&
                   std::abs(retro.var_conditional - oracle_retro) <= 3.0 * se_retro,
               fmt("pred %.5f vs %.5f (se %.5f), retro %.5f vs %.5f (se %.5f)",
                   pred.var_conditional, oracle_pred, se_pred, retro.var_conditional,
                   oracle_retro, se_retro));
        report("retrodiction <= prediction (homogeneous)",
               retro.var_conditional <= pred.var_conditional,
               fmt("%.5f vs %.5f", retro.var_conditional, pred.var_conditional));
    }

    // Retrodiction <= prediction on a transit record.
    {
        sim::RunConfig cfg = load_fig("fig5.cfg");
        cfg = at_value(cfg, sim::SweepAxis::beam_diameter, "0.6");
        const sim::MeasurementRecord rec =
            sim::run_measurement(cfg.engine, 400, 4003, g_workers);
        const sim::SqueezingResult pred = sim::estimate_conditional(
            rec, cfg.engine, sim::TargetQuadrature::midpoint_quadrature,
            sim::Estimator::prediction, 0.5, cfg.analysis.bins);
        const sim::SqueezingResult retro = sim::estimate_conditional(
            rec, cfg.engine, sim::TargetQuadrature::midpoint_quadrature,
            sim::Estimator::retrodiction, 0.5, cfg.analysis.bins);
        report("retrodiction <= prediction (transit)",
               retro.var_conditional <= pred.var_conditional,
               fmt("%.5f vs %.5f", retro.var_conditional, pred.var_conditional));
    }

    // QND conservation: Omega = 0, gamma = 0, no wall resets leave the
    // measured quadrature exactly unchanged by the backaction.
    {
        sim::EngineConfig cfg;
        cfg.kappa = 2.0;
        cfg.duty = 1.0;
        cfg.larmor_khz = 0.0;
        cfg.gamma_background = 0.0;
        cfg.gamma_probe_avg = 0.0;
        cfg.cell.wall_reset_probability = 0.0;
        cfg.duration_ms = 0.5;
        cfg.dt_ms = 5e-4;
        cfg.n_sim = 16;
        const sim::MeasurementRecord rec =
            sim::run_measurement(cfg, 50, 4004, g_workers);
        bool exact = true;
        for (std::size_t r = 0; r < rec.truth_p0.size(); ++r)
            exact = exact && rec.truth_p1[r] == rec.truth_p0[r];
        report("qnd conservation", exact, "p1 != p0 under Omega = gamma = 0");
    }

    // OU relaxation reaches the stationary variance 0.5 +- 5% from a
    // zero-variance start.
    {
        sim::EngineConfig cfg;
        cfg.kappa = 0.0;
        cfg.duty = 1.0;
        cfg.larmor_khz = 0.0;
        cfg.gamma_background = 2.0;
        cfg.gamma_probe_avg = 0.0;
        cfg.duration_ms = 3.0;
        cfg.dt_ms = 2.5e-3;
        cfg.n_sim = 4;
        cfg.stationary_atoms = true;
        cfg.init_spin_variance = 0.0;
        const sim::MeasurementRecord rec =
            sim::run_measurement(cfg, 20000, 4005, g_workers, false);
        const double var = sample_variance(rec.truth_p1);
        report("ou stationary variance", std::abs(var - 0.5) <= 0.025,
               fmt("%.4f", var));
    }

    // KS tests for the equilibrium and flux-weighted speed laws, alpha 0.01.
    {
        const double sigma = 0.17;
        const int n = 20000;
        sim::Rng rng(4006);
        std::vector<double> mb(n), flux(n);
        for (int i = 0; i < n; ++i) mb[i] = sim::sample_speed_mb2d(sigma, rng);
        for (int i = 0; i < n; ++i)
            flux[i] = sim::sample_speed_flux_weighted(sigma, rng);
        const double ks_mb = ks_statistic(mb, [&](double v) {
            return 1.0 - std::exp(-v * v / (2.0 * sigma * sigma));
        });
        const double ks_flux = ks_statistic(flux, [&](double v) {
            const double z = v / (sigma * std::sqrt(2.0));
            return std::erf(z) - v * std::sqrt(2.0 / M_PI) / sigma *
                                     std::exp(-v * v / (2.0 * sigma * sigma));
        });
        // asymptotic critical value at alpha = 0.01
        report("speed-law ks", ks_mb <= 1.628 && ks_flux <= 1.628,
               fmt("mb2d %.3f, flux %.3f", ks_mb, ks_flux));
    }

    // Cosine-law wall emission: sin(angle) uniform, chi^2 over 20 bins.
    {
        sim::CellGeometry geom;
        sim::Rng rng(4007);
        const int n = 40000, bins = 20;
        std::vector<int> counts(bins, 0);
        for (int i = 0; i < n; ++i) {
            sim::AtomState s;
            s.x = geom.radius_cell;
            s.y = 0.0;
            sim::reflect_at_wall(s, geom, rng);
            const double v = std::hypot(s.vx, s.vy);
            const double sin_eps = -s.vy / v;  // emission angle about (-1, 0)
            int k = static_cast<int>((sin_eps + 1.0) / 2.0 * bins);
            k = std::clamp(k, 0, bins - 1);
            ++counts[k];
        }
        const double expected = static_cast<double>(n) / bins;
        double chi2 = 0.0;
        for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
        // chi^2 critical value, 19 dof, alpha = 0.01
        report("cosine-law chi2", chi2 <= 36.19, fmt("chi2 %.1f", chi2));
    }

    // Parseval: sum(psd) * df matches the pooled sample variance within 1%.
    {
        sim::Rng rng(4008);
        std::vector<std::vector<double>> records(4, std::vector<double>(32768));
        double acc = 0.0;
        for (auto& rec : records) {
            for (double& v : rec) v = 1.7 * rng.normal();
            acc += sample_variance(rec);
        }
        const double var = acc / static_cast<double>(records.size());
        const sim::SpectrumEstimate est =
            sim::estimate_psd(records, 5e-4, sim::WelchParams{0.5, -1.0});
        double total = 0.0;
        for (double p : est.psd) total += p;
        total *= est.df_khz;
        report("parseval", std::abs(total / var - 1.0) <= 0.01,
               fmt("sum psd df / var = %.4f", total / var));
    }

    // kappa = 0 spectrum is flat at 0 dB relative to an independent shot run.
    {
        sim::EngineConfig cfg;
        cfg.kappa = 0.0;
        cfg.duty = 1.0;
        cfg.larmor_khz = 0.0;
        cfg.duration_ms = 3.0;
        cfg.dt_ms = 5e-4;
        cfg.n_sim = 16;
        const sim::WelchParams wp{0.5, -1.0};
        const sim::SpectrumEstimate est =
            sim::spectrum_from_engine(cfg, 300, 4009, g_workers, wp);
        const double shot = sim::shot_noise_level(cfg, 300, 4010, g_workers, wp);
        const std::vector<double> db = sim::to_db_rel_shot(est, shot);
        // interior bins only: mean removal empties DC and the Nyquist bin
        // averages half as many degrees of freedom
        double mean = 0.0, worst = 0.0, worst_f = 0.0;
        for (std::size_t i = 1; i + 1 < db.size(); ++i) {
            mean += db[i];
            if (std::abs(db[i]) > worst) {
                worst = std::abs(db[i]);
                worst_f = est.freq_khz[i];
            }
        }
        mean /= static_cast<double>(db.size() - 2);
        // 300 Welch segments per run: per-bin sd ~0.35 dB, ~2k bins
        report("flat shot spectrum", std::abs(mean) <= 0.15 && worst <= 2.0,
               fmt("mean %.3f dB, worst bin %.2f dB at %.1f kHz", mean, worst, worst_f));
    }

    // Bit-exact reproducibility across worker counts.
    {
        sim::EngineConfig cfg;
        cfg.beam.radius_beam = 0.5;
        cfg.duration_ms = 0.5;
        cfg.n_sim = 8;
        const sim::MeasurementRecord one = sim::run_measurement(cfg, 48, 4011, 1);
        const sim::MeasurementRecord three = sim::run_measurement(cfg, 48, 4011, 3);
        report("worker reproducibility",
               one.samples == three.samples && one.atomic == three.atomic &&
                   one.truth_p1 == three.truth_p1,
               "records differ between 1 and 3 workers");
    }

    if (o.pass) o.detail = "10 properties checked";
    return o;
}

using CriterionFn = Outcome (*)();
constexpr CriterionFn kCriteria[] = {criterion1, criterion2, criterion3, criterion4,
                                     criterion5, criterion6, criterion7, criterion8};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
            if (only < 1 || only > 8) {
                std::fprintf(stderr, "criterion must be in 1..8\n");
                return 2;
            }
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
            return 2;
        }
    }
    g_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("SIM_WORKERS"); env != nullptr && *env != '\0')
        g_workers = std::max(1, std::atoi(env));

    bool all_pass = true;
    for (int n = 1; n <= 8; ++n) {
        if (only != 0 && n != only) continue;
        Outcome o;
        try {
            o = kCriteria[n - 1]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = fmt("exception: %s", e.what());
        }
        std::printf("criterion %d: %s  %s\n", n, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
