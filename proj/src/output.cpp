#include "sim/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sim/error.hpp"

namespace sim {
namespace {

using nlohmann::json;

std::string trimmed(double v, const char* fmt = "%.10g") {
    char buf[40];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

json common_fields(const RunConfig& cfg) {
    json j;
    j["config_hash"] = cfg.config_hash;
    j["seed"] = cfg.seed;
    j["beam_diameter_mm"] = 2.0 * cfg.engine.beam.radius_beam;
    j["kappa_ms_sqrt"] = cfg.engine.kappa;
    j["larmor_khz"] = cfg.engine.larmor_khz;
    j["estimator"] = estimator_name(cfg.analysis.estimator);
    return j;
}

}  // namespace

std::string spectrum_csv(const SpectrumEstimate& est, double shot_level) {
    std::string out = "freq_khz,psd,psd_db_rel_shot\n";
    for (std::size_t i = 0; i < est.freq_khz.size(); ++i) {
        const double db =
            10.0 * std::log10(std::max(est.psd[i], 1e-300) / shot_level);
        out += trimmed(est.freq_khz[i]);
        out += ',';
        out += trimmed(est.psd[i], "%.12g");
        out += ',';
        out += trimmed(db);
        out += '\n';
    }
    return out;
}

SqueezingResult run_squeezing_batch(const RunConfig& cfg, int batch_index,
                                    int workers) {
    const int repeats = cfg.n_repeats;
    const TargetQuadrature target =
        cfg.analysis.estimator == Estimator::prediction
            ? TargetQuadrature::final_quadrature
            : TargetQuadrature::midpoint_quadrature;
    const EngineConfig pnl_engine =
        pnl_run_config(cfg.engine, cfg.analysis.pnl_mode);
    const std::uint64_t base_stream =
        static_cast<std::uint64_t>(batch_index) * repeats;
    const std::uint64_t pnl_stream =
        static_cast<std::uint64_t>(cfg.analysis.batches + batch_index) * repeats;
    const MeasurementRecord rec =
        run_measurement(cfg.engine, repeats, cfg.seed, workers, true, base_stream);
    const MeasurementRecord rec_pnl =
        run_measurement(pnl_engine, repeats, cfg.seed, workers, true, pnl_stream);
    const double pnl = pnl_reference(
        cfg.analysis.pnl_mode,
        bin_record(rec_pnl, pnl_engine, cfg.analysis.bins, target));
    return estimate_conditional(rec, cfg.engine, target, cfg.analysis.estimator,
                                pnl, cfg.analysis.bins);
}

SqueezingSummary summarize_batches(const std::vector<SqueezingResult>& batches) {
    if (batches.empty()) throw ConfigError("no batches to summarize");
    SqueezingSummary s;
    s.batches = static_cast<int>(batches.size());
    for (const SqueezingResult& r : batches) {
        s.var_conditional += r.var_conditional;
        s.var_prior += r.var_prior;
        s.var_pnl += r.var_pnl;
        s.xi2_db += r.xi_squared_db;
        s.kappa2_T2 += r.kappa2_T2;
        s.ridge_lambda += r.ridge_lambda;
        s.n_repeats += r.n_repeats;
    }
    const double n = s.batches;
    s.var_conditional /= n;
    s.var_prior /= n;
    s.var_pnl /= n;
    s.xi2_db /= n;
    s.kappa2_T2 /= n;
    s.ridge_lambda /= n;
    if (s.batches > 1) {
        double ss = 0.0;
        for (const SqueezingResult& r : batches) {
            const double d = r.xi_squared_db - s.xi2_db;
            ss += d * d;
        }
        s.error_bar_db = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

std::string squeezing_batch_json(const RunConfig& cfg, const SqueezingResult& result,
                                 std::uint64_t batch_seed, int batch_index) {
    json j = common_fields(cfg);
    j["seed"] = batch_seed;
    j["batch_index"] = batch_index;
    j["var_conditional"] = result.var_conditional;
    j["var_prior"] = result.var_prior;
    j["var_pnl"] = result.var_pnl;
    j["xi2_db"] = result.xi_squared_db;
    j["kappa2_T2"] = result.kappa2_T2;
    j["ridge_lambda"] = result.ridge_lambda;
    j["n_repeats"] = result.n_repeats;
    return j.dump(2) + "\n";
}

SqueezingSummary aggregate_batch_files(const std::vector<std::string>& paths,
                                       const std::string& expected_hash) {
    if (paths.empty()) throw ConfigError("no batch files to aggregate");
    std::vector<SqueezingResult> batches;
    for (const std::string& path : paths) {
        json j;
        try {
            j = json::parse(read_file(path));
        } catch (const json::exception& e) {
            throw ConfigError("cannot parse batch file '" + path + "': " + e.what());
        }
        const std::string hash = j.value("config_hash", std::string());
        if (hash != expected_hash)
            throw ConfigError("config hash mismatch in '" + path + "': expected " +
                              expected_hash + ", found " + hash);
        SqueezingResult r;
        try {
            r.var_conditional = j.at("var_conditional").get<double>();
            r.var_prior = j.at("var_prior").get<double>();
            r.var_pnl = j.at("var_pnl").get<double>();
            r.xi_squared_db = j.at("xi2_db").get<double>();
            r.kappa2_T2 = j.at("kappa2_T2").get<double>();
            r.ridge_lambda = j.at("ridge_lambda").get<double>();
            r.n_repeats = j.at("n_repeats").get<int>();
        } catch (const json::exception& e) {
            throw ConfigError("batch file '" + path + "' is missing fields: " +
                              e.what());
        }
        batches.push_back(r);
    }
    return summarize_batches(batches);
}

std::string squeezing_result_json(const RunConfig& cfg, const SqueezingSummary& s) {
    json j = common_fields(cfg);
    j["var_conditional"] = s.var_conditional;
    j["var_pnl"] = s.var_pnl;
    j["xi2_db"] = s.xi2_db;
    j["kappa2_T2"] = s.kappa2_T2;
    j["n_repeats"] = s.n_repeats;
    j["error_bar_db"] = s.error_bar_db;
    j["metadata"] = {
        {"var_prior", s.var_prior},
        {"ridge_lambda", s.ridge_lambda},
        {"batches", s.batches},
        {"bins", cfg.analysis.bins},
        {"pnl_mode", pnl_mode_name(cfg.analysis.pnl_mode)},
        {"n_sim", cfg.engine.n_sim},
        {"xi2_linear", std::pow(10.0, s.xi2_db / 10.0)},
    };
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << contents;
    if (!out) throw ConfigError("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace sim
