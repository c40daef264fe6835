#include "sim/rng.hpp"

#include <cmath>

namespace sim {
namespace {

// 128-layer ziggurat partition of the standard normal.
constexpr int kLayers = 128;
constexpr double kTailX = 3.442619855899;         // rightmost layer edge
constexpr double kLayerArea = 9.91256303526217e-3;

struct ZigTables {
    double x[kLayers + 1];  // layer right edges, descending
    double ratio[kLayers];  // x[i+1]/x[i], fast-accept threshold

    ZigTables() {
        const double f = std::exp(-0.5 * kTailX * kTailX);
        x[0] = kLayerArea / f;  // base strip width including the tail mass
        x[1] = kTailX;
        x[kLayers] = 0.0;
        for (int i = 2; i < kLayers; ++i) {
            const double prev = x[i - 1];
            x[i] = std::sqrt(-2.0 * std::log(kLayerArea / prev +
                                             std::exp(-0.5 * prev * prev)));
        }
        for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
    }
};

const ZigTables kZig;

}  // namespace

double Rng::normal_tail(bool negative) {
    // Marsaglia tail sampler for |x| > kTailX.
    double xt, yt;
    do {
        xt = -std::log(uniform_open()) / kTailX;
        yt = -std::log(uniform_open());
    } while (yt + yt < xt * xt);
    const double v = kTailX + xt;
    return negative ? -v : v;
}

double Rng::normal() {
    for (;;) {
        const std::uint64_t w = next_u64();
        const int i = static_cast<int>(w & 127u);
        // signed coordinate in (-1, 1) from the top 57 bits
        const double u =
            static_cast<double>(static_cast<std::int64_t>(w) >> 7) * 0x1.0p-56;
        if (std::fabs(u) < kZig.ratio[i]) return u * kZig.x[i];
        if (i == 0) return normal_tail(u < 0.0);
        const double xv = u * kZig.x[i];
        const double f0 = std::exp(-0.5 * (kZig.x[i] * kZig.x[i] - xv * xv));
        const double f1 =
            std::exp(-0.5 * (kZig.x[i + 1] * kZig.x[i + 1] - xv * xv));
        if (f1 + uniform() * (f0 - f1) < 1.0) return xv;
    }
}

}  // namespace sim
