#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sim/calibrate.hpp"
#include "sim/config.hpp"
#include "sim/error.hpp"
#include "sim/output.hpp"
#include "sim/spectra.hpp"

namespace {

using nlohmann::json;

/// Options shared by all subcommands, after flag/env/config resolution.
struct CliRun {
    std::string config_path;
    std::string sweep_arg;
    std::string out_dir;
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> workers_flag;
};

std::uint64_t env_u64(const char* name, std::uint64_t fallback) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return fallback;
    char* end = nullptr;
    const unsigned long long out = std::strtoull(v, &end, 10);
    if (end == v || *end != '\0')
        throw sim::ConfigError(std::string(name) + " must be an unsigned integer, got '" +
                               v + "'");
    return out;
}

struct Resolved {
    sim::RunConfig cfg;
    int workers = 1;
    std::string out_dir;
};

Resolved resolve(const CliRun& run) {
    Resolved r;
    r.cfg = sim::load_config(run.config_path);

    r.cfg.seed = env_u64("SIM_SEED", r.cfg.seed);
    if (run.seed_flag) r.cfg.seed = *run.seed_flag;

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    r.workers = static_cast<int>(env_u64("SIM_WORKERS", hw));
    if (run.workers_flag) r.workers = *run.workers_flag;
    if (r.workers < 1 || r.workers > 4096)
        throw sim::ConfigError("worker count must be in [1, 4096]");

    r.out_dir = run.out_dir.empty() ? r.cfg.output_dir : run.out_dir;
    std::filesystem::create_directories(r.out_dir);
    return r;
}

/// Sweep points: the base config alone when no sweep was given.
struct SweepPoint {
    sim::RunConfig cfg;
    std::string label;   ///< filename suffix, empty for the bare run
    std::string axis;    ///< axis name, empty for the bare run
    std::string value;
};

std::vector<SweepPoint> expand_sweep(const sim::RunConfig& base,
                                     const std::string& sweep_arg) {
    std::vector<SweepPoint> points;
    if (sweep_arg.empty()) {
        points.push_back({base, "", "", ""});
        return points;
    }
    const sim::SweepSpec spec = sim::parse_sweep(sweep_arg);
    for (const std::string& value : spec.values) {
        SweepPoint p;
        p.cfg = sim::apply_sweep_value(base, spec.axis, value);
        p.cfg.seed = base.seed;  // sweeps share the master seed (paired streams)
        p.label = "_" + sim::sweep_label(spec.axis, value);
        p.axis = sim::sweep_axis_name(spec.axis);
        p.value = value;
        points.push_back(p);
    }
    return points;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

/// Background level (dB over shot) in a +-2 kHz band at the documented
/// offset from the line.
double background_db(const sim::SpectrumEstimate& est, double larmor_khz,
                     double offset_khz, double shot_level) {
    const double f0 = larmor_khz + offset_khz;
    const double band = std::max(2.0, 2.0 * est.rbw_khz);
    const double level = sim::mean_psd_band(est, f0 - band, f0 + band);
    return 10.0 * std::log10(level / shot_level);
}

int cmd_spectrum(const CliRun& run) {
    const Resolved r = resolve(run);
    json summary;
    summary["command"] = "spectrum";
    summary["config_hash"] = r.cfg.config_hash;
    summary["seed"] = r.cfg.seed;
    summary["offset_khz"] = r.cfg.analysis.offset_khz;
    summary["curves"] = json::array();

    for (const SweepPoint& p : expand_sweep(r.cfg, run.sweep_arg)) {
        const sim::WelchParams wp{p.cfg.analysis.rbw_khz, p.cfg.analysis.fmax_khz};
        const sim::SpectrumEstimate est = sim::spectrum_from_engine(
            p.cfg.engine, p.cfg.n_repeats, p.cfg.seed, r.workers, wp);
        const int shot_repeats = std::min(p.cfg.n_repeats, 200);
        const double shot =
            sim::shot_noise_level(p.cfg.engine, shot_repeats, p.cfg.seed, r.workers, wp);

        const std::string csv_name = "spectrum" + p.label + ".csv";
        sim::write_file(join_path(r.out_dir, csv_name), sim::spectrum_csv(est, shot));

        json curve;
        curve["file"] = csv_name;
        if (!p.axis.empty()) {
            curve["axis"] = p.axis;
            curve["value"] = p.value;
        }
        curve["config_hash"] = p.cfg.config_hash;
        curve["beam_diameter_mm"] = 2.0 * p.cfg.engine.beam.radius_beam;
        curve["larmor_khz"] = p.cfg.engine.larmor_khz;
        curve["kappa_ms_sqrt"] = p.cfg.engine.kappa;
        curve["rbw_khz"] = est.rbw_khz;
        curve["n_segments"] = est.n_segments;
        curve["shot_level"] = shot;
        curve["background_db_at_offset"] = background_db(
            est, p.cfg.engine.larmor_khz, p.cfg.analysis.offset_khz, shot);
        if (p.cfg.engine.kappa > 0.0 && p.cfg.engine.larmor_khz > 0.0)
            curve["line_area"] =
                sim::line_area(est, p.cfg.engine.larmor_khz, 3.0 * est.rbw_khz);
        summary["curves"].push_back(curve);
    }
    sim::write_file(join_path(r.out_dir, "spectrum_summary.json"),
                    summary.dump(2) + "\n");
    return 0;
}

int cmd_squeezing(const CliRun& run) {
    const Resolved r = resolve(run);
    json sweep_summary;
    sweep_summary["command"] = "squeezing";
    sweep_summary["config_hash"] = r.cfg.config_hash;
    sweep_summary["results"] = json::array();

    for (const SweepPoint& p : expand_sweep(r.cfg, run.sweep_arg)) {
        const int batches = p.cfg.analysis.batches;
        std::vector<std::string> batch_files;
        for (int b = 0; b < batches; ++b) {
            const sim::SqueezingResult res =
                sim::run_squeezing_batch(p.cfg, b, r.workers);
            const std::string name =
                "squeezing" + p.label + "_batch" + std::to_string(b) + ".json";
            sim::write_file(join_path(r.out_dir, name),
                            sim::squeezing_batch_json(p.cfg, res, p.cfg.seed, b));
            batch_files.push_back(join_path(r.out_dir, name));
        }

        const sim::SqueezingSummary s =
            sim::aggregate_batch_files(batch_files, p.cfg.config_hash);
        sim::write_file(join_path(r.out_dir, "squeezing" + p.label + ".json"),
                        sim::squeezing_result_json(p.cfg, s));

        json entry;
        if (!p.axis.empty()) {
            entry["axis"] = p.axis;
            entry["value"] = p.value;
        }
        entry["config_hash"] = p.cfg.config_hash;
        entry["beam_diameter_mm"] = 2.0 * p.cfg.engine.beam.radius_beam;
        entry["kappa_ms_sqrt"] = p.cfg.engine.kappa;
        entry["xi2_db"] = s.xi2_db;
        entry["error_bar_db"] = s.error_bar_db;
        entry["kappa2_T2"] = s.kappa2_T2;
        sweep_summary["results"].push_back(entry);
    }
    sim::write_file(join_path(r.out_dir, "squeezing_summary.json"),
                    sweep_summary.dump(2) + "\n");
    return 0;
}

int cmd_calibrate(const CliRun& run) {
    const Resolved r = resolve(run);
    const sim::CalibrationResult res = sim::calibrate_wall_reset(
        r.cfg.engine, r.cfg.calibrate.target_k2t2, r.cfg.calibrate.tolerance,
        r.cfg.calibrate.repeats, r.cfg.seed, r.workers);

    sim::RunConfig calibrated = r.cfg;
    calibrated.entries["cell.wall_reset_probability"] =
        [&] {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.8g", res.wall_reset_probability);
            return std::string(buf);
        }();
    const sim::RunConfig reparsed = sim::parse_config(sim::config_text(calibrated));
    sim::write_file(join_path(r.out_dir, "calibrated.cfg"), sim::config_text(reparsed));

    json report;
    report["command"] = "calibrate";
    report["config_hash"] = r.cfg.config_hash;
    report["calibrated_hash"] = reparsed.config_hash;
    report["seed"] = r.cfg.seed;
    report["target_k2t2"] = r.cfg.calibrate.target_k2t2;
    report["tolerance"] = r.cfg.calibrate.tolerance;
    report["repeats"] = r.cfg.calibrate.repeats;
    report["wall_reset_probability"] = res.wall_reset_probability;
    report["kappa2_T2"] = res.kappa2_t2;
    report["iterations"] = res.iterations;
    sim::write_file(join_path(r.out_dir, "calibration.json"), report.dump(2) + "\n");

    std::printf("calibrated wall_reset_probability = %.8g (kappa^2 T2 = %.4f, %d steps)\n",
                res.wall_reset_probability, res.kappa2_t2, res.iterations);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vapor-cell spin-noise and conditional-squeezing simulator"};
    app.require_subcommand(1);

    CliRun run;
    const auto add_common = [&run](CLI::App* cmd) {
        cmd->add_option("--config", run.config_path, "run configuration file")
            ->required();
        cmd->add_option("--sweep", run.sweep_arg,
                        "axis=v1,v2,... over beam_diameter, larmor, kappa, "
                        "beam_shape, or n_averages");
        cmd->add_option("--seed", run.seed_flag, "master seed (beats SIM_SEED)");
        cmd->add_option("--workers", run.workers_flag,
                        "worker threads (beats SIM_WORKERS)");
        cmd->add_option("--out", run.out_dir, "output directory (beats output.dir)");
    };

    CLI::App* spectrum =
        app.add_subcommand("spectrum", "Welch spin-noise spectra per sweep value");
    CLI::App* squeezing = app.add_subcommand(
        "squeezing", "conditional-variance squeezing analysis per sweep value");
    CLI::App* calibrate = app.add_subcommand(
        "calibrate", "tune wall_reset_probability to the coherence target");
    add_common(spectrum);
    add_common(squeezing);
    add_common(calibrate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(run);
        if (squeezing->parsed()) return cmd_squeezing(run);
        return cmd_calibrate(run);
    } catch (const sim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const sim::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
