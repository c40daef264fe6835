#pragma once

// Shared pieces of the scalar and AVX2 kernel backends.  The exp() used in
// the hot loop is a custom polynomial so both backends can run the same
// operation sequence and stay bit-identical.

#include <cmath>
#include <cstdint>

namespace sim::detail {

// exp(x) for x <= 0: range reduction x = k ln2 + r, degree-11 Horner on r.
inline constexpr double kLog2E = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;

// 1/k! for k = 11 .. 2
inline constexpr double kExpC[] = {
    2.5052108385441718775e-08, 2.7557319223985890653e-07, 2.7557319223985892510e-06,
    2.4801587301587301566e-05, 1.9841269841269841253e-04, 1.3888888888888889419e-03,
    8.3333333333333332177e-03, 4.1666666666666664354e-02, 1.6666666666666666574e-01,
    5.0000000000000000000e-01,
};

/// Scalar mirror of the vector exp; valid for x in [-746, 0].
inline double exp_neg(double x) {
    const double kd = std::nearbyint(x * kLog2E);
    double r = std::fma(kd, -kLn2Hi, x);
    r = std::fma(kd, -kLn2Lo, r);
    double p = kExpC[0];
    for (int i = 1; i < 10; ++i) p = std::fma(p, r, kExpC[i]);
    p = std::fma(p, r * r, r) + 1.0;
    const int k = static_cast<int>(kd);
    if (k < -1021) return 0.0;  // flush underflow, matching the vector path
    std::uint64_t bits = static_cast<std::uint64_t>(k + 1023) << 52;
    double scale;
    __builtin_memcpy(&scale, &bits, 8);
    return p * scale;
}

/// Beam intensity of one atom, mirroring the vector op order.
inline double beam_u(bool tophat, double neg_two_inv_w2, double edge_r2, double x,
                     double y) {
    const double r2 = std::fma(x, x, y * y);
    if (tophat) return r2 <= edge_r2 ? 1.0 : 0.0;
    return exp_neg(r2 * neg_two_inv_w2);
}

}  // namespace sim::detail
