#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sim/dynamics.hpp"

namespace sim {

/// Which quadrature the conditional estimate targets.  With the default even
/// window split both choices land on the bin at the window boundary: the
/// record midpoint, which is also the end of the first measurement window.
enum class TargetQuadrature { final_quadrature, midpoint_quadrature };

enum class Estimator { prediction, retrodiction };

enum class PnlMode { theory_stationary, experiment_45 };

/// @brief Measurement record reduced to equal-time bins, one row per repeat.
struct BinnedRecord {
  Eigen::MatrixXd bins;     ///< [repeat][bin] measured quadratures, shot included
  Eigen::VectorXd target;   ///< shot-free atomic quadrature over the target window
  int target_bin = 0;       ///< first bin overlapping the window; prediction uses [0, target_bin)
  int overlap_last = 0;     ///< last bin overlapping the window; retrodiction skips through here
  double bin_ms = 0.0;      ///< bin duration
  double window_ms = 0.0;   ///< target window duration (1% of the record)
  double kappa = 0.0;       ///< coupling the record was taken at, ms^(-1/2)
};

/// Sums the record into n_bins bins and rescales so a stationary CSS gives a
/// target variance of 1/2.  The target window is a fixed 1% of the record
/// (one default-width bin) opening at the midpoint, independent of n_bins, so
/// the conditioned quadrature is the same observable at every bin count.
/// Needs the shot-free record (keep_atomic) and a baseband record:
/// stroboscopic probing, or continuous probing at zero field.
BinnedRecord bin_record(const MeasurementRecord& rec, const EngineConfig& cfg,
                        int n_bins = 100,
                        TargetQuadrature target = TargetQuadrature::midpoint_quadrature);

/// @brief Unbiased second moments of binned records across repeats.
struct CovarianceSummary {
  Eigen::MatrixXd matrix;  ///< n x n covariance over repeats
  Eigen::VectorXd means;   ///< length-n column means
  int n_repeats = 0;
};

/// Unbiased sample covariance over repeats (rows).  Requires >= 2 rows and
/// verifies symmetry / positive semidefiniteness of the result.
CovarianceSummary covariance_analysis(const Eigen::MatrixXd& rows);

/// Scalar conditional variance: var_prior - cov^2 / var_obs.
double conditional_variance(double var_prior, double cov, double var_obs);

/// @brief Linear-Gaussian conditioning of a target on feature columns.
struct ConditionalEstimate {
  double var_conditional = 0.0;     ///< residual variance, dof-corrected
  double var_prior = 0.0;           ///< sample variance of the target
  double rss = 0.0;                 ///< raw residual sum of squares
  double empirical_residual = 0.0;  ///< rss / (repeats - 1)
  double ridge_lambda = 0.0;        ///< regularization actually applied
  int n_features = 0;
  int n_repeats = 0;
};

/// Ridge-regularized Schur complement of the target against the features,
/// evaluated as a regression so the analytic conditional variance and the
/// empirical residual variance come from the same fit.
ConditionalEstimate condition_on_bins(const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& target);

/// @brief Squeezing figures for one record set.
struct SqueezingResult {
  double var_conditional = 0.0;
  double var_prior = 0.0;
  double var_pnl = 0.0;
  double xi_squared_db = 0.0;
  double kappa2_T2 = 0.0;
  double ridge_lambda = 0.0;
  Estimator estimator = Estimator::retrodiction;
  int n_repeats = 0;
};

/// Conditions the target quadrature on the measured bins: prediction uses
/// only bins before the target window, retrodiction all bins around it.
/// var_pnl scales the result into xi^2 and should come from a matched
/// calibration run (see pnl_reference); kappa2_T2 is fitted from the same
/// records.
SqueezingResult estimate_conditional(const MeasurementRecord& rec, const EngineConfig& cfg,
                                     TargetQuadrature target, Estimator estimator,
                                     double var_pnl, int n_bins = 100);

/// Engine settings for the PNL calibration run belonging to `mode`:
/// theory_stationary freezes the atoms; experiment_45 prepares a stationary
/// thermal spin state at 1.25x the CSS variance with transit unchanged.
EngineConfig pnl_run_config(const EngineConfig& cfg, PnlMode mode);

/// Projection-noise reference from a calibration run binned with bin_record:
/// the target variance for theory_stationary, 4/5 of it for experiment_45.
/// theory_stationary expects a frozen-atom CSS run and lands on the 1/2 SQL;
/// experiment_45 expects a thermal run with transit kept, so the reference
/// carries the same window averaging as the record it normalizes.
double pnl_reference(PnlMode mode, const BinnedRecord& calibration);

/// xi^2 in dB: 10 log10(var_conditional / var_pnl); negative means squeezing.
double squeezing_db(double var_conditional, double var_pnl);

/// @brief Exponential fit A exp(-gamma tau) to the binned autocovariance.
struct CoherenceFit {
  double gamma = 0.0;      ///< decay rate, 1/ms
  double amplitude = 0.0;
  double kappa2_t2 = 0.0;  ///< kappa^2 / gamma
  int lag_min = 0, lag_max = 0;
};

/// Gauss-Newton fit of the ensemble autocovariance of binned records at lags
/// [lag_min, lag_max]; early lags are skipped to step over the fast transit
/// dip and any bin-local noise.
CoherenceFit fit_coherence(const std::vector<std::vector<double>>& binned_rows,
                           double bin_ms, double kappa, int lag_min = 2, int lag_max = 40);

/// Runs the engine, bins each shot-free record to bin_ms, and fits kappa^2 T2.
/// Repeats stream through slot storage, so memory stays at one row per repeat.
CoherenceFit fit_kappa2_t2(const EngineConfig& cfg, int n_repeats, std::uint64_t seed,
                           int workers, double bin_ms = 0.03);

}  // namespace sim
