#include "sim/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "sim/error.hpp"
#include "sim/fft.hpp"

namespace sim {
namespace {

std::vector<double> hann_window(int n) {
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j)
        w[j] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * j / n));
    return w;
}

/// Accumulates the one-sided periodogram of every 50%-overlapped segment of
/// `x` into `acc` (length n_keep) and returns the number of segments added.
int accumulate_segments(const std::vector<double>& x, const std::vector<double>& w,
                        double dt_ms, int n_keep, std::vector<double>& acc) {
    const int nseg = static_cast<int>(w.size());
    const int hop = nseg / 2;
    double wsum2 = 0.0;
    for (double v : w) wsum2 += v * v;
    const double norm = dt_ms / wsum2;

    std::vector<std::complex<double>> buf(nseg);
    int count = 0;
    for (std::size_t start = 0; start + nseg <= x.size(); start += hop) {
        double mean = 0.0;
        for (int j = 0; j < nseg; ++j) mean += x[start + j];
        mean /= nseg;
        for (int j = 0; j < nseg; ++j) buf[j] = {(x[start + j] - mean) * w[j], 0.0};
        fft_inplace(buf);
        for (int k = 0; k < n_keep; ++k) {
            const double two_sided = std::norm(buf[k]) * norm;
            // one-sided: double everything except DC and Nyquist
            acc[k] += (k == 0 || k == nseg / 2) ? two_sided : 2.0 * two_sided;
        }
        ++count;
    }
    return count;
}

int bins_to_keep(int nseg, double dt_ms, double fmax_khz) {
    const int full = nseg / 2 + 1;
    if (fmax_khz < 0.0) return full;
    const double df = 1.0 / (nseg * dt_ms);
    const int want = static_cast<int>(std::floor(fmax_khz / df)) + 1;
    return std::clamp(want, 1, full);
}

SpectrumEstimate finalize(std::vector<double> psd, int nseg, double dt_ms, int count) {
    SpectrumEstimate s;
    const double df = 1.0 / (nseg * dt_ms);
    s.freq_khz.resize(psd.size());
    for (std::size_t k = 0; k < psd.size(); ++k) s.freq_khz[k] = k * df;
    for (double& v : psd) v /= count;
    s.psd = std::move(psd);
    s.df_khz = df;
    s.rbw_khz = 1.5 * df;  // Hann equivalent noise bandwidth
    s.n_segments = count;
    return s;
}

}  // namespace

int welch_segment_length(double dt_ms, double rbw_khz, int n_samples) {
    if (dt_ms <= 0.0) throw ConfigError("sample spacing must be positive");
    if (rbw_khz <= 0.0) throw ConfigError("resolution bandwidth must be positive");
    if (n_samples < 16) throw ConfigError("record too short for spectral analysis");
    // Hann noise bandwidth is 1.5 bins, so target nseg = 1.5 / (rbw * dt).
    const double ideal = 1.5 / (rbw_khz * dt_ms);
    int nseg = 1 << std::max(4, static_cast<int>(std::lround(std::log2(ideal))));
    while (nseg > n_samples) nseg >>= 1;
    if (nseg < 16) throw ConfigError("record too short for spectral analysis");
    return nseg;
}

SpectrumEstimate estimate_psd(const std::vector<std::vector<double>>& records,
                              double dt_ms, const WelchParams& wp) {
    if (records.size() < 2) throw ConfigError("spectral averaging needs at least two records");
    const std::size_t len = records.front().size();
    for (const auto& r : records)
        if (r.size() != len) throw ConfigError("records lie on mismatched time grids");

    const int nseg = welch_segment_length(dt_ms, wp.rbw_khz, static_cast<int>(len));
    const std::vector<double> w = hann_window(nseg);
    const int n_keep = bins_to_keep(nseg, dt_ms, wp.fmax_khz);

    std::vector<double> acc(n_keep, 0.0);
    int count = 0;
    for (const auto& r : records) count += accumulate_segments(r, w, dt_ms, n_keep, acc);
    return finalize(std::move(acc), nseg, dt_ms, count);
}

SpectrumEstimate spectrum_from_engine(const EngineConfig& cfg, int n_repeats,
                                      std::uint64_t seed, int workers,
                                      const WelchParams& wp) {
    if (n_repeats < 2) throw ConfigError("spectral averaging needs at least two repeats");
    const int n_samples = record_length(cfg);
    const double dt = record_dt(cfg);
    const int nseg = welch_segment_length(dt, wp.rbw_khz, n_samples);
    const std::vector<double> w = hann_window(nseg);
    const int n_keep = bins_to_keep(nseg, dt, wp.fmax_khz);

    // Per-repeat reduced periodograms land in slots so the final reduction is
    // a fixed-order sum, independent of the worker count.
    std::vector<std::vector<double>> slots(n_repeats);
    std::vector<int> seg_counts(n_repeats, 0);
    run_measurement_stream(
        cfg, n_repeats, seed, workers,
        [&](int repeat, const std::vector<double>& samples, const std::vector<double>&) {
            std::vector<double> acc(n_keep, 0.0);
            seg_counts[repeat] = accumulate_segments(samples, w, dt, n_keep, acc);
            slots[repeat] = std::move(acc);
        });

    std::vector<double> total(n_keep, 0.0);
    int count = 0;
    for (int r = 0; r < n_repeats; ++r) {
        for (int k = 0; k < n_keep; ++k) total[k] += slots[r][k];
        count += seg_counts[r];
    }
    return finalize(std::move(total), nseg, dt, count);
}

double shot_noise_level(const EngineConfig& cfg, int n_repeats, std::uint64_t seed,
                        int workers, const WelchParams& wp) {
    EngineConfig dark = cfg;
    dark.kappa = 0.0;
    const SpectrumEstimate s = spectrum_from_engine(dark, n_repeats, seed, workers, wp);
    double sum = 0.0;
    for (double v : s.psd) sum += v;
    return sum / static_cast<double>(s.psd.size());
}

std::vector<double> to_db_rel_shot(const SpectrumEstimate& s, double shot_level) {
    if (shot_level <= 0.0) throw ConfigError("shot reference level must be positive");
    std::vector<double> db(s.psd.size());
    for (std::size_t k = 0; k < db.size(); ++k)
        db[k] = 10.0 * std::log10(std::max(s.psd[k], 1e-300) / shot_level);
    return db;
}

double mean_psd_band(const SpectrumEstimate& s, double f_lo_khz, double f_hi_khz) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < s.freq_khz.size(); ++k) {
        if (s.freq_khz[k] >= f_lo_khz && s.freq_khz[k] <= f_hi_khz) {
            sum += s.psd[k];
            ++n;
        }
    }
    if (n == 0) throw ConfigError("frequency band holds no spectral bins");
    return sum / n;
}

double line_area(const SpectrumEstimate& s, double f0_khz, double half_width_khz) {
    const double wl = half_width_khz;
    const double lo_flank = mean_psd_band(s, f0_khz - 3.0 * wl, f0_khz - 1.5 * wl);
    const double hi_flank = mean_psd_band(s, f0_khz + 1.5 * wl, f0_khz + 3.0 * wl);
    const double f_lo = f0_khz - 2.25 * wl;  // flank band centers
    const double f_hi = f0_khz + 2.25 * wl;

    double area = 0.0;
    for (std::size_t k = 0; k < s.freq_khz.size(); ++k) {
        const double f = s.freq_khz[k];
        if (std::abs(f - f0_khz) > wl) continue;
        const double bg = lo_flank + (hi_flank - lo_flank) * (f - f_lo) / (f_hi - f_lo);
        area += (s.psd[k] - bg) * s.df_khz;
    }
    return area;
}

namespace {

double bessel_i0(double x) {
    // power series; converges fast for the beta values used here
    double term = 1.0, sum = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

}  // namespace

std::vector<double> design_lowpass_fir(double dt_ms, double cutoff_khz,
                                       double stopband_db) {
    if (cutoff_khz <= 0.0) throw ConfigError("filter cutoff must be positive");
    const double nyquist = 0.5 / dt_ms;
    if (1.5 * cutoff_khz >= nyquist)
        throw ConfigError("filter stopband edge exceeds the input Nyquist frequency");

    const double atten = std::max(stopband_db, 21.0);
    const double beta = atten > 50.0
                            ? 0.1102 * (atten - 8.7)
                            : 0.5842 * std::pow(atten - 21.0, 0.4) + 0.07886 * (atten - 21.0);
    // Kaiser tap estimate for a transition band of half the cutoff, which
    // puts the stopband edge at 1.5x the corner.
    const double d_omega = std::numbers::pi * cutoff_khz * dt_ms;
    int taps = static_cast<int>(std::ceil((atten - 7.95) / (2.285 * d_omega))) + 1;
    if (taps % 2 == 0) ++taps;

    // windowed sinc centered between passband and stopband edges
    const double fc = 1.25 * cutoff_khz * dt_ms;  // cycles per sample
    const int mid = (taps - 1) / 2;
    const double inv_i0 = 1.0 / bessel_i0(beta);
    std::vector<double> h(taps);
    double gain = 0.0;
    for (int j = 0; j < taps; ++j) {
        const int m = j - mid;
        const double sinc = m == 0 ? 2.0 * fc
                                   : std::sin(2.0 * std::numbers::pi * fc * m) /
                                         (std::numbers::pi * m);
        const double t = static_cast<double>(m) / mid;
        h[j] = sinc * bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - t * t))) * inv_i0;
        gain += h[j];
    }
    for (double& v : h) v /= gain;
    return h;
}

DemodRecord demodulate(const std::vector<double>& x, double dt_ms, const DemodParams& dp) {
    if (dt_ms <= 0.0) throw ConfigError("sample spacing must be positive");
    if (dp.decimate < 1) throw ConfigError("decimation factor must be at least 1");
    const double nyquist = 0.5 / dt_ms;
    if (dp.lo_khz < 0.0 || dp.lo_khz > nyquist)
        throw ConfigError("local oscillator lies outside the sampled band");
    const double out_nyquist = 0.5 / (dt_ms * dp.decimate);
    if (1.5 * dp.cutoff_khz > out_nyquist)
        throw ConfigError("decimated rate aliases the filter transition band");

    const std::vector<double> h = design_lowpass_fir(dt_ms, dp.cutoff_khz, dp.stopband_db);
    const int taps = static_cast<int>(h.size());
    if (x.size() < static_cast<std::size_t>(2 * taps))
        throw ConfigError("record shorter than the demodulation filter");

    // mix to baseband: z = x * exp(-i 2 pi lo t)
    const double w0 = 2.0 * std::numbers::pi * dp.lo_khz * dt_ms;
    std::vector<double> zi(x.size()), zq(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        zi[j] = x[j] * std::cos(w0 * j);
        zq[j] = -x[j] * std::sin(w0 * j);
    }

    DemodRecord out;
    out.dt_ms = dt_ms * dp.decimate;
    // drop the filter warm-up, then convolve and decimate in one pass
    for (std::size_t n = taps - 1; n < x.size(); n += dp.decimate) {
        double si = 0.0, sq = 0.0;
        for (int k = 0; k < taps; ++k) {
            si += h[k] * zi[n - k];
            sq += h[k] * zq[n - k];
        }
        out.i.push_back(si);
        out.q.push_back(sq);
    }
    return out;
}

}  // namespace sim
