// AVX2/FMA backend.  Operation order mirrors the scalar backend exactly
// (same exp polynomial, same fused ops, lane-partial sums combined in the
// same order), so the two backends produce bit-identical results.

#include <immintrin.h>

#include <cmath>

#include "kernels_common.hpp"
#include "sim/kernels.hpp"

namespace sim {
namespace {

// ------------------------------------------------------------------ exp ----

inline __m256d exp_neg4(__m256d vx) {
    const __m256d log2e = _mm256_set1_pd(detail::kLog2E);
    const __m256d ln2hi = _mm256_set1_pd(detail::kLn2Hi);
    const __m256d ln2lo = _mm256_set1_pd(detail::kLn2Lo);

    const __m256d kd = _mm256_round_pd(_mm256_mul_pd(vx, log2e),
                                       _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(kd, ln2hi, vx);
    r = _mm256_fnmadd_pd(kd, ln2lo, r);

    __m256d p = _mm256_set1_pd(detail::kExpC[0]);
    for (int i = 1; i < 10; ++i)
        p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(detail::kExpC[i]));
    const __m256d rr = _mm256_mul_pd(r, r);
    p = _mm256_add_pd(_mm256_fmadd_pd(p, rr, r), _mm256_set1_pd(1.0));

    // scale by 2^k through the exponent field
    const __m128i k32 = _mm256_cvtpd_epi32(kd);
    const __m256i k64 = _mm256_cvtepi32_epi64(k32);
    const __m256i bits =
        _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    const __m256d scale = _mm256_castsi256_pd(bits);
    __m256d result = _mm256_mul_pd(p, scale);

    // flush k < -1021 to zero, as the scalar path does
    const __m256d flush = _mm256_cmp_pd(kd, _mm256_set1_pd(-1021.0), _CMP_LT_OQ);
    return _mm256_andnot_pd(flush, result);
}

inline __m256d beam_u4(const BeamParams& b, __m256d x, __m256d y) {
    const __m256d r2 = _mm256_fmadd_pd(x, x, _mm256_mul_pd(y, y));
    if (b.tophat) {
        const __m256d inside =
            _mm256_cmp_pd(r2, _mm256_set1_pd(b.edge_r2), _CMP_LE_OQ);
        return _mm256_and_pd(inside, _mm256_set1_pd(1.0));
    }
    return exp_neg4(_mm256_mul_pd(r2, _mm256_set1_pd(b.neg_two_inv_w2)));
}

// ----------------------------------------------------------- spin update ---

SpinStepResult spin_step_avx2(int n, const double* x, const double* y, double* sx,
                              double* sp, const double* noise, const BeamParams& b,
                              const SpinStepParams& c) {
    const __m256d decay_bg = _mm256_set1_pd(c.decay_bg);
    const __m256d neg_gpr = _mm256_set1_pd(-c.gpr_dt);
    const __m256d var_l = _mm256_set1_pd(c.langevin_var);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d kick_x = _mm256_set1_pd(c.kick_x);
    const __m256d kick_p = _mm256_set1_pd(c.kick_p);

    __m256d accp = _mm256_setzero_pd();
    __m256d accx = _mm256_setzero_pd();
    const double* nx = noise;
    const double* np = noise + n;

    for (int i = 0; i < n; i += 4) {
        const __m256d u = beam_u4(b, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        const __m256d decay =
            _mm256_mul_pd(decay_bg, exp_neg4(_mm256_mul_pd(neg_gpr, u)));
        const __m256d sigma = _mm256_sqrt_pd(
            _mm256_mul_pd(_mm256_fnmadd_pd(decay, decay, one), var_l));
        const __m256d sxn = _mm256_fmadd_pd(
            decay, _mm256_loadu_pd(sx + i),
            _mm256_mul_pd(sigma, _mm256_loadu_pd(nx + i)));
        const __m256d spn = _mm256_fmadd_pd(
            decay, _mm256_loadu_pd(sp + i),
            _mm256_mul_pd(sigma, _mm256_loadu_pd(np + i)));
        accx = _mm256_fmadd_pd(u, sxn, accx);
        accp = _mm256_fmadd_pd(u, spn, accp);
        _mm256_storeu_pd(sx + i, _mm256_fmadd_pd(kick_x, u, sxn));
        _mm256_storeu_pd(sp + i, _mm256_fmadd_pd(kick_p, u, spn));
    }

    // (lane0 + lane1) + (lane2 + lane3), matching the scalar combine
    const auto hsum = [](__m256d v) {
        const __m128d lo = _mm256_castpd256_pd128(v);
        const __m128d hi = _mm256_extractf128_pd(v, 1);
        const double l01 = _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
        const double l23 = _mm_cvtsd_f64(hi) + _mm_cvtsd_f64(_mm_unpackhi_pd(hi, hi));
        return l01 + l23;
    };
    return {hsum(accp), hsum(accx)};
}

// ------------------------------------------------------------- transport ---

void advance_avx2(int n, double* x, double* y, double* vx, double* vy,
                  std::uint8_t* pending, double dt, const CellGeometry& cell,
                  Rng& rng) {
    const __m256d vdt = _mm256_set1_pd(dt);
    const __m256d R2 = _mm256_set1_pd(cell.radius_cell * cell.radius_cell);
    for (int i = 0; i < n; i += 4) {
        const __m256d x0 = _mm256_loadu_pd(x + i);
        const __m256d y0 = _mm256_loadu_pd(y + i);
        const __m256d xn = _mm256_fmadd_pd(_mm256_loadu_pd(vx + i), vdt, x0);
        const __m256d yn = _mm256_fmadd_pd(_mm256_loadu_pd(vy + i), vdt, y0);
        const __m256d r2 = _mm256_fmadd_pd(xn, xn, _mm256_mul_pd(yn, yn));
        const __m256d crossed = _mm256_cmp_pd(r2, R2, _CMP_GT_OQ);
        const int mask = _mm256_movemask_pd(crossed);
        // interior lanes advance; crossing lanes keep their old state for the
        // exact solver below
        _mm256_storeu_pd(x + i, _mm256_blendv_pd(xn, x0, crossed));
        _mm256_storeu_pd(y + i, _mm256_blendv_pd(yn, y0, crossed));
        if (!mask) continue;
        for (int lane = 0; lane < 4; ++lane) {
            if (!(mask & (1 << lane))) continue;
            const int j = i + lane;
            AtomState s{x[j], y[j], vx[j], vy[j], 0.0, pending[j] != 0};
            advance_with_walls(s, cell, dt, rng);
            x[j] = s.x;
            y[j] = s.y;
            vx[j] = s.vx;
            vy[j] = s.vy;
            pending[j] = s.phase_reset_pending ? 1 : 0;
        }
    }
}

}  // namespace

const Kernels kAvx2Kernels{spin_step_avx2, advance_avx2, "avx2"};

}  // namespace sim
