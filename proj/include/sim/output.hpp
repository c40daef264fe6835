#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sim/config.hpp"
#include "sim/spectra.hpp"
#include "sim/squeezing.hpp"

namespace sim {

/// Plot-ready spectrum: header line plus freq_khz,psd,psd_db_rel_shot rows.
std::string spectrum_csv(const SpectrumEstimate& est, double shot_level);

/// One squeezing batch at the configured analysis settings.  Batch b draws
/// its record from stream block [b*R, (b+1)*R) and its PNL calibration run
/// from [(batches+b)*R, ...), so batches and their references never share
/// noise and any batch subset is reproducible in isolation.
SqueezingResult run_squeezing_batch(const RunConfig& cfg, int batch_index,
                                    int workers);

/// @brief Cross-batch statistics entering the result JSON.
struct SqueezingSummary {
    double var_conditional = 0.0;  ///< batch means throughout
    double var_prior = 0.0;
    double var_pnl = 0.0;
    double xi2_db = 0.0;
    double kappa2_T2 = 0.0;
    double ridge_lambda = 0.0;
    double error_bar_db = 0.0;  ///< sample sd of xi2_db over batches
    int n_repeats = 0;          ///< total across batches
    int batches = 0;
};

SqueezingSummary summarize_batches(const std::vector<SqueezingResult>& batches);

/// One batch as JSON carrying the config hash and its own statistics.
std::string squeezing_batch_json(const RunConfig& cfg, const SqueezingResult& result,
                                 std::uint64_t batch_seed, int batch_index);

/// Reads batch JSON files back and summarizes them; every file must carry
/// `expected_hash` or the aggregation is rejected.
SqueezingSummary aggregate_batch_files(const std::vector<std::string>& paths,
                                       const std::string& expected_hash);

/// Result document in the documented schema: config_hash, seed,
/// beam_diameter_mm, kappa_ms_sqrt, larmor_khz, estimator, var_conditional,
/// var_pnl, xi2_db, kappa2_T2, n_repeats, error_bar_db (+ metadata block).
std::string squeezing_result_json(const RunConfig& cfg, const SqueezingSummary& s);

/// Writes `contents` to `path` (parent directory must exist).
void write_file(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace sim
