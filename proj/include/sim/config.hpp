#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sim/dynamics.hpp"
#include "sim/squeezing.hpp"

namespace sim {

/// @brief Analysis settings shared by the spectrum and squeezing commands.
struct AnalysisConfig {
    double rbw_khz = 0.5;      ///< Hann resolution bandwidth
    double fmax_khz = -1.0;    ///< spectrum truncation; negative keeps everything
    double offset_khz = 20.0;  ///< background readout offset from the line
    int bins = 100;            ///< conditioning bins per record
    int batches = 5;           ///< independent batches behind each error bar
    Estimator estimator = Estimator::retrodiction;
    PnlMode pnl_mode = PnlMode::experiment_45;
};

/// @brief Settings of the wall-reset coherence calibration.
struct CalibrateConfig {
    double target_k2t2 = 2.26;  ///< fitted kappa^2 T2 to reproduce
    double tolerance = 0.01;    ///< relative stop criterion of the bisection
    int repeats = 20000;        ///< repeats per fit evaluation
};

/// @brief One fully validated run description.
struct RunConfig {
    EngineConfig engine;
    int n_repeats = 500;  ///< repeats per batch
    AnalysisConfig analysis;
    CalibrateConfig calibrate;
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    std::string config_hash;                   ///< FNV-1a over canonical lines
    std::map<std::string, std::string> entries;  ///< canonical key -> value
};

/// Parses the line-oriented `section.key = value` format.  Unknown keys,
/// duplicates, malformed lines (with their line number), missing required
/// keys, and out-of-range values are all reported as ConfigError.
RunConfig parse_config(const std::string& text);

/// parse_config on the contents of `path`.
RunConfig load_config(const std::string& path);

/// Canonical serialization: sorted `key = value` lines.  Hash-stable input
/// for parse_config, used when emitting calibrated configs.
std::string config_text(const RunConfig& cfg);

enum class SweepAxis { beam_diameter, larmor, kappa, beam_shape, n_averages };

/// @brief One sweep axis with its raw value list.
struct SweepSpec {
    SweepAxis axis = SweepAxis::beam_diameter;
    std::vector<std::string> values;
};

/// Parses "axis=v1,v2,..." as given on the command line.
SweepSpec parse_sweep(const std::string& arg);

/// Rebuilds the config with the axis set to `value`.  A kappa sweep also
/// rescales the probe-induced decoherence with kappa^2 (fixed-efficiency
/// probe: twice the photons decohere twice as fast).
RunConfig apply_sweep_value(const RunConfig& base, SweepAxis axis,
                            const std::string& value);

/// Filesystem-safe label, e.g. "beam_diameter_0.6".
std::string sweep_label(SweepAxis axis, const std::string& value);

const char* sweep_axis_name(SweepAxis axis);
const char* estimator_name(Estimator e);
const char* pnl_mode_name(PnlMode m);

}  // namespace sim
