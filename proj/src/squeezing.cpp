#include "sim/squeezing.hpp"

#include <cmath>
#include <vector>

#include "sim/error.hpp"
#include "sim/optics.hpp"

namespace sim {
namespace {

/// Scale that maps a record-bin sum onto the spin quadrature it measures, so
/// that a stationary CSS target has variance 1/2 for any beam profile.
double bin_norm(const EngineConfig& cfg, int samples_per_bin, double dt) {
    const CouplingField field = make_coupling_field(cfg.beam, cfg.cell.radius_cell,
                                                    cfg.kappa, cfg.duty, cfg.n_sim);
    double width = dt, cbar = 1.0;
    if (cfg.duty < 1.0) {
        const StrobeModel sm = strobe_model(cfg.larmor_khz, cfg.duty);
        width = sm.width;
        cbar = sm.cbar;
    }
    return samples_per_bin * std::sqrt(width) * cbar * field.kappa_pulse *
           std::sqrt(field.mean_u2) / field.mean_u;
}

}  // namespace

BinnedRecord bin_record(const MeasurementRecord& rec, const EngineConfig& cfg,
                        int n_bins, TargetQuadrature) {
    const int n_repeats = static_cast<int>(rec.samples.size());
    if (n_repeats < 1) throw ConfigError("empty measurement record");
    if (rec.atomic.size() != rec.samples.size())
        throw ConfigError("bin analysis needs the shot-free record (keep_atomic)");
    if (rec.duty >= 1.0 && rec.larmor_khz > 0.0)
        throw ConfigError("bin analysis needs a baseband record: strobe the probe "
                          "or demodulate first");
    if (cfg.kappa == 0.0)
        throw ConfigError("record carries no atomic signal at kappa = 0");
    if (n_bins < 4 || n_bins % 2 != 0)
        throw ConfigError("bin count must be an even number of at least 4");
    const int n_steps = static_cast<int>(rec.samples.front().size());
    if (n_steps < n_bins) throw ConfigError("record shorter than the bin grid");

    const int m = n_steps / n_bins;
    const double norm = bin_norm(cfg, m, rec.dt);

    // Target window: 1% of the record, opening at the midpoint.  Both target
    // choices name this window: the record midpoint is also the end of the
    // first measurement half.
    const int mt = std::max(1, n_steps / 100);
    const int t0 = n_steps / 2;
    const double norm_t = bin_norm(cfg, mt, rec.dt);

    BinnedRecord out;
    out.bins.resize(n_repeats, n_bins);
    out.target.resize(n_repeats);
    out.target_bin = t0 / m;
    out.overlap_last = (t0 + mt - 1) / m;
    out.bin_ms = m * rec.dt;
    out.window_ms = mt * rec.dt;
    out.kappa = cfg.kappa;

    for (int r = 0; r < n_repeats; ++r) {
        const double* s = rec.samples[r].data();
        const double* a = rec.atomic[r].data();
        for (int j = 0; j < n_bins; ++j) {
            double acc = 0.0;
            for (int k = j * m; k < (j + 1) * m; ++k) acc += s[k];
            out.bins(r, j) = acc / norm;
        }
        double acc = 0.0;
        for (int k = t0; k < t0 + mt; ++k) acc += a[k];
        out.target(r) = acc / norm_t;
    }
    return out;
}

CovarianceSummary covariance_analysis(const Eigen::MatrixXd& rows) {
    const int n_repeats = static_cast<int>(rows.rows());
    if (n_repeats < 2) throw ConfigError("covariance analysis needs at least two repeats");

    CovarianceSummary s;
    s.n_repeats = n_repeats;
    s.means = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - s.means.transpose();
    s.matrix = centered.transpose() * centered / static_cast<double>(n_repeats - 1);
    s.matrix = 0.5 * (s.matrix + s.matrix.transpose()).eval();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.matrix,
                                                             Eigen::EigenvaluesOnly);
    const double floor = -1e-9 * s.matrix.trace() / static_cast<double>(rows.cols());
    if (eig.eigenvalues().minCoeff() < floor)
        throw NumericalError("sample covariance is not positive semidefinite");
    return s;
}

double conditional_variance(double var_prior, double cov, double var_obs) {
    if (var_obs <= 0.0) throw ConfigError("observation variance must be positive");
    return var_prior - cov * cov / var_obs;
}

ConditionalEstimate condition_on_bins(const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& target) {
    const int n = static_cast<int>(features.rows());
    const int b = static_cast<int>(features.cols());
    if (target.size() != n) throw ConfigError("feature rows and targets disagree");
    if (b < 1) throw ConfigError("conditioning needs at least one feature bin");
    if (n < b + 2)
        throw NumericalError("too few repeats to condition on this many bins");

    const Eigen::MatrixXd x = features.rowwise() - features.colwise().mean();
    const Eigen::VectorXd t = target.array() - target.mean();

    Eigen::MatrixXd gram = x.transpose() * x;
    const double lambda = 1e-8 * gram.trace() / static_cast<double>(b);
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd beta = gram.ldlt().solve(x.transpose() * t);

    ConditionalEstimate ce;
    ce.rss = (t - x * beta).squaredNorm();
    ce.var_prior = t.squaredNorm() / static_cast<double>(n - 1);
    ce.var_conditional = ce.rss / static_cast<double>(n - 1 - b);
    ce.empirical_residual = ce.rss / static_cast<double>(n - 1);
    ce.ridge_lambda = lambda;
    ce.n_features = b;
    ce.n_repeats = n;
    return ce;
}

SqueezingResult estimate_conditional(const MeasurementRecord& rec, const EngineConfig& cfg,
                                     TargetQuadrature target, Estimator estimator,
                                     double var_pnl, int n_bins) {
    const BinnedRecord b = bin_record(rec, cfg, n_bins, target);
    const int tb = b.target_bin;
    const int n_repeats = static_cast<int>(b.bins.rows());

    Eigen::MatrixXd features;
    if (estimator == Estimator::prediction) {
        features = b.bins.leftCols(tb);
    } else {
        const int n_after = n_bins - b.overlap_last - 1;
        features.resize(n_repeats, tb + n_after);
        features.leftCols(tb) = b.bins.leftCols(tb);
        features.rightCols(n_after) = b.bins.rightCols(n_after);
    }
    const ConditionalEstimate ce = condition_on_bins(features, b.target);

    // kappa^2 T2 from the shot-free record at the same binning
    const int n_steps = static_cast<int>(rec.atomic.front().size());
    const int m = n_steps / n_bins;
    std::vector<std::vector<double>> rows(n_repeats, std::vector<double>(n_bins));
    for (int r = 0; r < n_repeats; ++r)
        for (int j = 0; j < n_bins; ++j) {
            double acc = 0.0;
            for (int k = j * m; k < (j + 1) * m; ++k) acc += rec.atomic[r][k];
            rows[r][j] = acc;
        }
    const CoherenceFit fit =
        fit_coherence(rows, b.bin_ms, cfg.kappa, 2, std::min(40, n_bins - 2));

    SqueezingResult res;
    res.var_conditional = ce.var_conditional;
    res.var_prior = ce.var_prior;
    res.var_pnl = var_pnl;
    res.xi_squared_db = squeezing_db(ce.var_conditional, var_pnl);
    res.kappa2_T2 = fit.kappa2_t2;
    res.ridge_lambda = ce.ridge_lambda;
    res.estimator = estimator;
    res.n_repeats = n_repeats;
    return res;
}

EngineConfig pnl_run_config(const EngineConfig& cfg, PnlMode mode) {
    EngineConfig run = cfg;
    if (mode == PnlMode::theory_stationary) {
        run.stationary_atoms = true;
    } else {
        // stationary thermal manifold: 5/4 of the CSS noise, transit unchanged
        run.init_spin_variance = 1.25 * cfg.langevin_variance;
        run.langevin_variance = 1.25 * cfg.langevin_variance;
    }
    return run;
}

double pnl_reference(PnlMode mode, const BinnedRecord& calibration) {
    const int n = static_cast<int>(calibration.target.size());
    if (n < 2) throw ConfigError("missing calibration run for the PNL reference");
    const Eigen::VectorXd c = calibration.target.array() - calibration.target.mean();
    const double var = c.squaredNorm() / static_cast<double>(n - 1);
    return mode == PnlMode::experiment_45 ? 0.8 * var : var;
}

double squeezing_db(double var_conditional, double var_pnl) {
    if (var_pnl <= 0.0) throw ConfigError("PNL reference must be positive");
    if (var_conditional <= 0.0)
        throw NumericalError("conditional variance collapsed to zero or below");
    return 10.0 * std::log10(var_conditional / var_pnl);
}

CoherenceFit fit_coherence(const std::vector<std::vector<double>>& binned_rows,
                           double bin_ms, double kappa, int lag_min, int lag_max) {
    const int n_repeats = static_cast<int>(binned_rows.size());
    if (n_repeats < 2) throw ConfigError("coherence fit needs at least two repeats");
    const int n_bins = static_cast<int>(binned_rows.front().size());
    for (const auto& row : binned_rows)
        if (static_cast<int>(row.size()) != n_bins)
            throw ConfigError("binned rows have mismatched lengths");
    lag_max = std::min(lag_max, n_bins - 2);
    if (lag_min < 1 || lag_max - lag_min < 3)
        throw ConfigError("coherence fit needs at least four lags");

    std::vector<double> mu(n_bins, 0.0);
    for (const auto& row : binned_rows)
        for (int j = 0; j < n_bins; ++j) mu[j] += row[j];
    for (double& v : mu) v /= n_repeats;

    const int n_lags = lag_max - lag_min + 1;
    std::vector<double> tau(n_lags), cov(n_lags, 0.0);
    for (int l = 0; l < n_lags; ++l) tau[l] = (lag_min + l) * bin_ms;
    for (const auto& row : binned_rows)
        for (int l = 0; l < n_lags; ++l) {
            const int lag = lag_min + l;
            double acc = 0.0;
            for (int j = 0; j + lag < n_bins; ++j)
                acc += (row[j] - mu[j]) * (row[j + lag] - mu[j + lag]);
            cov[l] += acc / static_cast<double>(n_bins - lag);
        }
    for (double& v : cov) v /= static_cast<double>(n_repeats - 1);

    // log-linear initialization on the positive lags
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int pos = 0;
    for (int l = 0; l < n_lags; ++l) {
        if (cov[l] <= 0.0) continue;
        const double y = std::log(cov[l]);
        sx += tau[l];
        sy += y;
        sxx += tau[l] * tau[l];
        sxy += tau[l] * y;
        ++pos;
    }
    if (pos < 3) throw NumericalError("autocovariance too noisy for a decay fit");
    const double det = pos * sxx - sx * sx;
    double gamma = -(pos * sxy - sx * sy) / det;
    double amp = std::exp((sy * sxx - sx * sxy) / det);
    if (!(gamma > 0.0)) gamma = 1.0 / tau[n_lags - 1];

    auto rss_at = [&](double a, double g) {
        double rss = 0.0;
        for (int l = 0; l < n_lags; ++l) {
            const double r = cov[l] - a * std::exp(-g * tau[l]);
            rss += r * r;
        }
        return rss;
    };

    // Gauss-Newton with backtracking on (amplitude, gamma)
    double rss = rss_at(amp, gamma);
    for (int it = 0; it < 80; ++it) {
        double j11 = 0.0, j12 = 0.0, j22 = 0.0, g1 = 0.0, g2 = 0.0;
        for (int l = 0; l < n_lags; ++l) {
            const double e = std::exp(-gamma * tau[l]);
            const double r = cov[l] - amp * e;
            const double da = e, dg = -amp * tau[l] * e;
            j11 += da * da;
            j12 += da * dg;
            j22 += dg * dg;
            g1 += da * r;
            g2 += dg * r;
        }
        const double d = j11 * j22 - j12 * j12;
        if (!(std::abs(d) > 1e-300)) break;
        double step_a = (j22 * g1 - j12 * g2) / d;
        double step_g = (j11 * g2 - j12 * g1) / d;
        double scale = 1.0;
        double next = rss_at(amp + step_a, gamma + step_g);
        while (next > rss && scale > 1e-6) {
            scale *= 0.5;
            next = rss_at(amp + scale * step_a, gamma + scale * step_g);
        }
        amp += scale * step_a;
        gamma += scale * step_g;
        const bool converged = std::abs(scale * step_g) < 1e-12 * std::abs(gamma) + 1e-15;
        rss = next;
        if (converged) break;
    }
    if (!(gamma > 0.0)) throw NumericalError("coherence fit found no decay");

    CoherenceFit fit;
    fit.gamma = gamma;
    fit.amplitude = amp;
    fit.kappa2_t2 = kappa * kappa / gamma;
    fit.lag_min = lag_min;
    fit.lag_max = lag_max;
    return fit;
}

CoherenceFit fit_kappa2_t2(const EngineConfig& cfg, int n_repeats, std::uint64_t seed,
                           int workers, double bin_ms) {
    const int n_steps = record_length(cfg);
    const double dt = record_dt(cfg);
    const int m = std::max(1, static_cast<int>(std::llround(bin_ms / dt)));
    const int n_bins = n_steps / m;
    if (n_bins < 8) throw ConfigError("record too short for the coherence fit binning");

    std::vector<std::vector<double>> rows(n_repeats);
    run_measurement_stream(
        cfg, n_repeats, seed, workers,
        [&](int r, const std::vector<double>&, const std::vector<double>& atomic) {
            std::vector<double> row(n_bins, 0.0);
            for (int j = 0; j < n_bins; ++j)
                for (int k = j * m; k < (j + 1) * m; ++k) row[j] += atomic[k];
            rows[r] = std::move(row);
        },
        /*keep_atomic=*/true);
    return fit_coherence(rows, m * dt, cfg.kappa, 2, std::min(40, n_bins - 2));
}

}  // namespace sim
