#pragma once

#include <cstdint>
#include <vector>

#include "sim/dynamics.hpp"

namespace sim {

/// @brief One-sided power spectral density on a uniform frequency grid.
struct SpectrumEstimate {
  std::vector<double> freq_khz;  ///< bin centers, DC first
  std::vector<double> psd;       ///< linear density, record-units^2 per kHz
  double df_khz = 0.0;           ///< bin spacing
  double rbw_khz = 0.0;          ///< noise bandwidth of the Hann window actually used
  int n_segments = 0;            ///< total segments averaged into psd
};

/// @brief Welch averaging settings.
struct WelchParams {
  double rbw_khz = 0.5;    ///< requested resolution; segment length snaps to a power of two
  double fmax_khz = -1.0;  ///< drop bins above this frequency; negative keeps the full grid
};

/// Power-of-two segment length whose Hann noise bandwidth best matches rbw_khz,
/// clamped so at least one segment fits into n_samples.
int welch_segment_length(double dt_ms, double rbw_khz, int n_samples);

/// Welch PSD over equal-length records: Hann window, 50% overlap, per-segment
/// mean removal, one-sided normalization so that sum(psd) * df equals the
/// sample variance. Requires at least two records on a common time grid.
SpectrumEstimate estimate_psd(const std::vector<std::vector<double>>& records,
                              double dt_ms, const WelchParams& wp);

/// Runs the measurement engine and averages per-repeat periodograms without
/// retaining raw records. Repeats are reduced in index order, so the result is
/// independent of the worker count.
SpectrumEstimate spectrum_from_engine(const EngineConfig& cfg, int n_repeats,
                                      std::uint64_t seed, int workers,
                                      const WelchParams& wp);

/// Mean PSD of the photon-shot-only record (kappa = 0) under identical
/// acquisition settings; used as the 0 dB reference.
double shot_noise_level(const EngineConfig& cfg, int n_repeats, std::uint64_t seed,
                        int workers, const WelchParams& wp);

/// 10*log10(psd / shot_level) per bin.
std::vector<double> to_db_rel_shot(const SpectrumEstimate& s, double shot_level);

/// Mean linear PSD over [f_lo_khz, f_hi_khz]; throws if the band holds no bins.
double mean_psd_band(const SpectrumEstimate& s, double f_lo_khz, double f_hi_khz);

/// Background-subtracted power integrated over |f - f0| <= half_width. The
/// background is a straight line fitted to the flanking bands at 1.5x..3x the
/// half width on each side. Returns record-units^2.
double line_area(const SpectrumEstimate& s, double f0_khz, double half_width_khz);

/// @brief Complex baseband record produced by lock-in demodulation.
struct DemodRecord {
  std::vector<double> i;  ///< in-phase samples
  std::vector<double> q;  ///< quadrature samples
  double dt_ms = 0.0;     ///< output sample spacing
};

/// @brief Lock-in settings: mix against exp(-i 2 pi lo t), low-pass, decimate.
struct DemodParams {
  double lo_khz = 0.0;        ///< local-oscillator frequency
  double cutoff_khz = 0.0;    ///< low-pass corner of the anti-alias filter
  int decimate = 1;           ///< keep every decimate-th filtered sample
  double stopband_db = 60.0;  ///< minimum attenuation past 1.5x the corner
};

/// Kaiser windowed-sinc low-pass taps, unit DC gain, stopband edge at
/// 1.5 * cutoff_khz with at least stopband_db attenuation.
std::vector<double> design_lowpass_fir(double dt_ms, double cutoff_khz,
                                       double stopband_db);

/// Demodulates a real record to complex baseband. Throws ConfigError when the
/// decimated rate would alias the filter transition band.
DemodRecord demodulate(const std::vector<double>& x, double dt_ms,
                       const DemodParams& dp);

}  // namespace sim
