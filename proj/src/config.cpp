#include "sim/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sim/error.hpp"
#include "sim/optics.hpp"

namespace sim {
namespace {

constexpr std::array<const char*, 31> kKnownKeys = {
    "cell.radius_mm",
    "cell.temperature_c",
    "cell.wall_reset_probability",
    "beam.diameter_mm",
    "beam.shape",
    "probe.duty",
    "probe.larmor_khz",
    "coupling.kappa_target",
    "coupling.power_peak_mw",
    "coupling.detuning_ghz",
    "coupling.area_mm2",
    "coupling.n_atoms",
    "dynamics.dt_us",
    "dynamics.duration_ms",
    "dynamics.n_sim",
    "dynamics.n_repeats",
    "dynamics.gamma_background",
    "dynamics.gamma_probe_avg",
    "dynamics.stationary_atoms",
    "analysis.rbw_khz",
    "analysis.fmax_khz",
    "analysis.offset_khz",
    "analysis.bins",
    "analysis.batches",
    "analysis.estimator",
    "analysis.pnl_mode",
    "calibrate.target_k2t2",
    "calibrate.tolerance",
    "calibrate.repeats",
    "seed",
    "output.dir",
};

constexpr std::array<const char*, 5> kRequiredKeys = {
    "cell.temperature_c", "beam.diameter_mm", "probe.larmor_khz",
    "dynamics.duration_ms", "dynamics.n_repeats",
};

bool known_key(const std::string& key) {
    return std::find_if(kKnownKeys.begin(), kKnownKeys.end(), [&](const char* k) {
               return key == k;
           }) != kKnownKeys.end();
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError("key '" + key + "': not a number: '" + value + "'");
    return out;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long out = 0;
    const char* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError("key '" + key + "': not an integer: '" + value + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const char* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError("key '" + key + "': not an unsigned integer: '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + value + "'");
}

/// Lookup helpers over the canonical entry map.
class Keys {
  public:
    explicit Keys(const std::map<std::string, std::string>& m) : m_(m) {}

    bool has(const std::string& key) const { return m_.count(key) > 0; }
    double number(const std::string& key, double fallback) const {
        const auto it = m_.find(key);
        return it == m_.end() ? fallback : parse_double(key, it->second);
    }
    long long integer(const std::string& key, long long fallback) const {
        const auto it = m_.find(key);
        return it == m_.end() ? fallback : parse_int(key, it->second);
    }
    bool flag(const std::string& key, bool fallback) const {
        const auto it = m_.find(key);
        return it == m_.end() ? fallback : parse_bool(key, it->second);
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        const auto it = m_.find(key);
        return it == m_.end() ? fallback : it->second;
    }

  private:
    const std::map<std::string, std::string>& m_;
};

void check_positive(double v, const char* key) {
    if (!(v > 0.0)) throw ConfigError(std::string("key '") + key + "' must be positive");
}

std::string hash_entries(const std::map<std::string, std::string>& entries) {
    std::uint64_t h = 14695981039346656037ull;
    const auto eat = [&h](const std::string& s) {
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
    };
    for (const auto& [key, value] : entries) {  // std::map: sorted, order-stable
        eat(key);
        eat("=");
        eat(value);
        eat("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig build(std::map<std::string, std::string> entries) {
    for (const char* key : kRequiredKeys)
        if (entries.find(key) == entries.end())
            throw ConfigError(std::string("missing required key ") + key);
    const Keys k(entries);
    RunConfig cfg;

    cfg.engine.cell.radius_cell = k.number("cell.radius_mm", cfg.engine.cell.radius_cell);
    check_positive(cfg.engine.cell.radius_cell, "cell.radius_mm");
    const double temp_c = k.number("cell.temperature_c", 0.0);
    if (temp_c <= -273.15)
        throw ConfigError("key 'cell.temperature_c' must be above absolute zero");
    cfg.engine.cell.temperature = temp_c + 273.15;
    cfg.engine.cell.wall_reset_probability = k.number("cell.wall_reset_probability", 0.0);
    if (cfg.engine.cell.wall_reset_probability < 0.0 ||
        cfg.engine.cell.wall_reset_probability > 1.0)
        throw ConfigError("key 'cell.wall_reset_probability' must be in [0, 1]");

    const double diameter = k.number("beam.diameter_mm", 0.0);
    check_positive(diameter, "beam.diameter_mm");
    cfg.engine.beam.radius_beam = 0.5 * diameter;
    const std::string shape = k.text("beam.shape", "gaussian");
    if (shape == "gaussian") {
        cfg.engine.beam.shape = BeamShape::gaussian;
    } else if (shape == "tophat") {
        cfg.engine.beam.shape = BeamShape::tophat;
    } else {
        throw ConfigError("key 'beam.shape': expected gaussian or tophat, got '" +
                          shape + "'");
    }

    cfg.engine.duty = k.number("probe.duty", 0.1);
    if (!(cfg.engine.duty > 0.0) || cfg.engine.duty > 1.0)
        throw ConfigError("key 'probe.duty' must be in (0, 1]");
    cfg.engine.larmor_khz = k.number("probe.larmor_khz", 0.0);
    if (cfg.engine.larmor_khz < 0.0)
        throw ConfigError("key 'probe.larmor_khz' must be nonnegative");
    if (cfg.engine.duty < 1.0 && cfg.engine.larmor_khz <= 0.0)
        throw ConfigError(
            "key 'probe.duty': stroboscopic probing needs probe.larmor_khz > 0");

    if (k.has("coupling.kappa_target")) {
        cfg.engine.kappa = k.number("coupling.kappa_target", 0.0);
        if (cfg.engine.kappa < 0.0)
            throw ConfigError("key 'coupling.kappa_target' must be nonnegative");
    } else {
        CouplingParams p;
        p.power_peak_mw = k.number("coupling.power_peak_mw", p.power_peak_mw);
        check_positive(p.power_peak_mw, "coupling.power_peak_mw");
        p.detuning_ghz = k.number("coupling.detuning_ghz", p.detuning_ghz);
        p.area_mm2 = k.number("coupling.area_mm2", p.area_mm2);
        check_positive(p.area_mm2, "coupling.area_mm2");
        p.atom_number = k.number("coupling.n_atoms", p.atom_number);
        check_positive(p.atom_number, "coupling.n_atoms");
        p.duty_cycle = cfg.engine.duty;
        p.time_averaged = true;  // engine kappa is the duty-averaged coupling
        cfg.engine.kappa = effective_kappa(p);
    }

    const double dt_us = k.number("dynamics.dt_us", 0.0);
    if (dt_us < 0.0) throw ConfigError("key 'dynamics.dt_us' must be nonnegative");
    cfg.engine.dt_ms = dt_us * 1e-3;
    cfg.engine.duration_ms = k.number("dynamics.duration_ms", 0.0);
    check_positive(cfg.engine.duration_ms, "dynamics.duration_ms");
    const long long n_sim = k.integer("dynamics.n_sim", cfg.engine.n_sim);
    if (n_sim < 4 || n_sim % 4 != 0 || n_sim > (1 << 24))
        throw ConfigError("key 'dynamics.n_sim' must be a multiple of 4 in [4, 2^24]");
    cfg.engine.n_sim = static_cast<int>(n_sim);
    const long long n_repeats = k.integer("dynamics.n_repeats", 0);
    if (n_repeats < 1 || n_repeats > (1 << 26))
        throw ConfigError("key 'dynamics.n_repeats' must be in [1, 2^26]");
    cfg.n_repeats = static_cast<int>(n_repeats);
    cfg.engine.gamma_background = k.number("dynamics.gamma_background", 0.05);
    if (cfg.engine.gamma_background < 0.0)
        throw ConfigError("key 'dynamics.gamma_background' must be nonnegative");
    cfg.engine.gamma_probe_avg = k.number("dynamics.gamma_probe_avg", 0.10);
    if (cfg.engine.gamma_probe_avg < 0.0)
        throw ConfigError("key 'dynamics.gamma_probe_avg' must be nonnegative");
    cfg.engine.stationary_atoms = k.flag("dynamics.stationary_atoms", false);

    cfg.analysis.rbw_khz = k.number("analysis.rbw_khz", 0.5);
    check_positive(cfg.analysis.rbw_khz, "analysis.rbw_khz");
    cfg.analysis.fmax_khz = k.number("analysis.fmax_khz", -1.0);
    cfg.analysis.offset_khz = k.number("analysis.offset_khz", 20.0);
    check_positive(cfg.analysis.offset_khz, "analysis.offset_khz");
    const long long bins = k.integer("analysis.bins", 100);
    if (bins < 4 || bins % 2 != 0 || bins > 4096)
        throw ConfigError("key 'analysis.bins' must be an even number in [4, 4096]");
    cfg.analysis.bins = static_cast<int>(bins);
    const long long batches = k.integer("analysis.batches", 5);
    if (batches < 1 || batches > 1024)
        throw ConfigError("key 'analysis.batches' must be in [1, 1024]");
    cfg.analysis.batches = static_cast<int>(batches);
    const std::string est = k.text("analysis.estimator", "retrodiction");
    if (est == "retrodiction") {
        cfg.analysis.estimator = Estimator::retrodiction;
    } else if (est == "prediction") {
        cfg.analysis.estimator = Estimator::prediction;
    } else {
        throw ConfigError(
            "key 'analysis.estimator': expected retrodiction or prediction, got '" +
            est + "'");
    }
    const std::string pnl = k.text("analysis.pnl_mode", "experiment_45");
    if (pnl == "experiment_45") {
        cfg.analysis.pnl_mode = PnlMode::experiment_45;
    } else if (pnl == "theory_stationary") {
        cfg.analysis.pnl_mode = PnlMode::theory_stationary;
    } else {
        throw ConfigError(
            "key 'analysis.pnl_mode': expected experiment_45 or theory_stationary, "
            "got '" + pnl + "'");
    }

    cfg.calibrate.target_k2t2 = k.number("calibrate.target_k2t2", 2.26);
    check_positive(cfg.calibrate.target_k2t2, "calibrate.target_k2t2");
    cfg.calibrate.tolerance = k.number("calibrate.tolerance", 0.01);
    if (!(cfg.calibrate.tolerance > 0.0) || cfg.calibrate.tolerance > 0.5)
        throw ConfigError("key 'calibrate.tolerance' must be in (0, 0.5]");
    const long long cal_repeats = k.integer("calibrate.repeats", 20000);
    if (cal_repeats < 100 || cal_repeats > (1 << 26))
        throw ConfigError("key 'calibrate.repeats' must be in [100, 2^26]");
    cfg.calibrate.repeats = static_cast<int>(cal_repeats);

    cfg.seed = k.has("seed") ? parse_u64("seed", entries.at("seed")) : 1;
    cfg.output_dir = k.text("output.dir", ".");
    if (cfg.output_dir.empty())
        throw ConfigError("key 'output.dir' must not be empty");

    cfg.entries = std::move(entries);
    cfg.config_hash = hash_entries(cfg.entries);
    return cfg;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        if (key.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789._") !=
            std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": malformed key '" +
                              key + "'");
        if (!known_key(key))
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
        if (!entries.emplace(key, value).second)
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
    }
    return build(std::move(entries));
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_text(const RunConfig& cfg) {
    std::string out;
    for (const auto& [key, value] : cfg.entries) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

SweepSpec parse_sweep(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos)
        throw ConfigError("sweep must look like axis=v1,v2,...: '" + arg + "'");
    const std::string axis = trim(arg.substr(0, eq));
    SweepSpec spec;
    if (axis == "beam_diameter") {
        spec.axis = SweepAxis::beam_diameter;
    } else if (axis == "larmor") {
        spec.axis = SweepAxis::larmor;
    } else if (axis == "kappa") {
        spec.axis = SweepAxis::kappa;
    } else if (axis == "beam_shape") {
        spec.axis = SweepAxis::beam_shape;
    } else if (axis == "n_averages") {
        spec.axis = SweepAxis::n_averages;
    } else {
        throw ConfigError("unknown sweep axis '" + axis +
                          "' (beam_diameter, larmor, kappa, beam_shape, n_averages)");
    }
    std::string rest = arg.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const std::string v =
            trim(rest.substr(pos, comma == std::string::npos ? comma : comma - pos));
        if (v.empty()) throw ConfigError("sweep value list has an empty entry");
        spec.values.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (spec.values.empty()) throw ConfigError("sweep value list is empty");
    return spec;
}

RunConfig apply_sweep_value(const RunConfig& base, SweepAxis axis,
                            const std::string& value) {
    std::map<std::string, std::string> entries = base.entries;
    switch (axis) {
        case SweepAxis::beam_diameter:
            check_positive(parse_double("beam_diameter", value), "beam_diameter");
            entries["beam.diameter_mm"] = value;
            break;
        case SweepAxis::larmor:
            if (parse_double("larmor", value) < 0.0)
                throw ConfigError("sweep value for larmor must be nonnegative");
            entries["probe.larmor_khz"] = value;
            break;
        case SweepAxis::kappa:
            // measurement-strength study: decoherence rates stay at their
            // configured values while the coupling alone is swept
            check_positive(parse_double("kappa", value), "kappa");
            entries["coupling.kappa_target"] = value;
            break;
        case SweepAxis::beam_shape:
            if (value != "gaussian" && value != "tophat")
                throw ConfigError("sweep value for beam_shape must be gaussian or "
                                  "tophat, got '" + value + "'");
            entries["beam.shape"] = value;
            break;
        case SweepAxis::n_averages:
            if (parse_int("n_averages", value) < 1)
                throw ConfigError("sweep value for n_averages must be at least 1");
            entries["dynamics.n_repeats"] = value;
            break;
    }
    return build(std::move(entries));
}

std::string sweep_label(SweepAxis axis, const std::string& value) {
    return std::string(sweep_axis_name(axis)) + "_" + value;
}

const char* sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::beam_diameter: return "beam_diameter";
        case SweepAxis::larmor: return "larmor";
        case SweepAxis::kappa: return "kappa";
        case SweepAxis::beam_shape: return "beam_shape";
        case SweepAxis::n_averages: return "n_averages";
    }
    return "unknown";
}

const char* estimator_name(Estimator e) {
    return e == Estimator::prediction ? "prediction" : "retrodiction";
}

const char* pnl_mode_name(PnlMode m) {
    return m == PnlMode::experiment_45 ? "experiment_45" : "theory_stationary";
}

}  // namespace sim
