#include <cmath>
#include <cstdlib>
#include <cstring>

#include "kernels_common.hpp"
#include "sim/error.hpp"
#include "sim/kernels.hpp"

namespace sim {
namespace {

using detail::beam_u;
using detail::exp_neg;

SpinStepResult spin_step_scalar(int n, const double* x, const double* y, double* sx,
                                double* sp, const double* noise, const BeamParams& b,
                                const SpinStepParams& c) {
    // four alternating accumulators mirror the vector lanes
    double accp[4] = {0, 0, 0, 0};
    double accx[4] = {0, 0, 0, 0};
    const double* nx = noise;
    const double* np = noise + n;
    for (int i = 0; i < n; ++i) {
        const double u = beam_u(b.tophat, b.neg_two_inv_w2, b.edge_r2, x[i], y[i]);
        const double decay = c.decay_bg * exp_neg(-c.gpr_dt * u);
        const double sigma =
            std::sqrt(std::fma(-decay, decay, 1.0) * c.langevin_var);
        const double sxn = std::fma(decay, sx[i], sigma * nx[i]);
        const double spn = std::fma(decay, sp[i], sigma * np[i]);
        accx[i & 3] = std::fma(u, sxn, accx[i & 3]);
        accp[i & 3] = std::fma(u, spn, accp[i & 3]);
        sx[i] = std::fma(c.kick_x, u, sxn);
        sp[i] = std::fma(c.kick_p, u, spn);
    }
    return {(accp[0] + accp[1]) + (accp[2] + accp[3]),
            (accx[0] + accx[1]) + (accx[2] + accx[3])};
}

void advance_scalar(int n, double* x, double* y, double* vx, double* vy,
                    std::uint8_t* pending, double dt, const CellGeometry& cell,
                    Rng& rng) {
    const double R2 = cell.radius_cell * cell.radius_cell;
    for (int i = 0; i < n; ++i) {
        const double xn = std::fma(vx[i], dt, x[i]);
        const double yn = std::fma(vy[i], dt, y[i]);
        const double r2 = std::fma(xn, xn, yn * yn);
        if (!(r2 > R2)) {
            x[i] = xn;
            y[i] = yn;
            continue;
        }
        AtomState s{x[i], y[i], vx[i], vy[i], 0.0, pending[i] != 0};
        advance_with_walls(s, cell, dt, rng);
        x[i] = s.x;
        y[i] = s.y;
        vx[i] = s.vx;
        vy[i] = s.vy;
        pending[i] = s.phase_reset_pending ? 1 : 0;
    }
}

}  // namespace

const Kernels kScalarKernels{spin_step_scalar, advance_scalar, "scalar"};

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Kernels& active_kernels() {
    static const Kernels* chosen = [] {
        if (const char* env = std::getenv("SIM_KERNELS")) {
            if (std::strcmp(env, "scalar") == 0) return &kScalarKernels;
            if (std::strcmp(env, "avx2") == 0) {
                if (!cpu_has_avx2())
                    throw ConfigError("SIM_KERNELS=avx2 but the CPU lacks AVX2/FMA");
                return &kAvx2Kernels;
            }
            throw ConfigError("SIM_KERNELS must be 'scalar' or 'avx2'");
        }
        return cpu_has_avx2() ? &kAvx2Kernels : &kScalarKernels;
    }();
    return *chosen;
}

}  // namespace sim
