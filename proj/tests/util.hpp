#pragma once

// Shared statistics helpers for the test suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace testutil {

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

/// Kolmogorov distribution tail Q(lambda) = P(D > d).
inline double ks_q(double lambda) {
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1) ? term : -term;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS test p-value against a continuous CDF.
inline double ks_pvalue(std::vector<double> sample,
                        const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::fabs(f - lo), std::fabs(f - hi)});
    }
    const double sq = std::sqrt(n);
    return ks_q((sq + 0.12 + 0.11 / sq) * d);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Pearson chi-square statistic for binned counts vs expected counts.
inline double chi2_stat(const std::vector<double>& observed,
                        const std::vector<double>& expected) {
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = observed[i] - expected[i];
        s += d * d / expected[i];
    }
    return s;
}

// Upper 1% critical value of chi-square with 49 degrees of freedom.
constexpr double kChi2Crit49_p01 = 74.919;

}  // namespace testutil
