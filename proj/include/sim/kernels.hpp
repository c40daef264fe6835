#pragma once

#include <cstdint>

#include "sim/kinematics.hpp"
#include "sim/rng.hpp"

namespace sim {

// ---------------------------------------------------------------------------
// Fused per-step spin update
//
// One sweep over the ensemble performs, per atom i with intensity u_i:
//   D_i  = decay_bg * exp(-gpr_dt * u_i)            relaxation over the step
//   s_i <- D_i s_i + sqrt((1 - D_i^2) var_l) n_i    exact OU refresh
//   accumulate u_i * sp_i and u_i * sx_i            readout sums
//   sx_i += kick_x * u_i ;  sp_i += kick_p * u_i    collective backaction
// The readout sums are taken before the kick.  Both backends accumulate into
// four alternating partial sums combined in a fixed order, so their outputs
// are bit-identical; n must be a multiple of 4.
// ---------------------------------------------------------------------------

/// @brief Beam-profile constants consumed by the kernels.
struct BeamParams {
    bool tophat = false;
    double neg_two_inv_w2 = 0.0;  ///< gaussian: -2/w^2
    double edge_r2 = 0.0;         ///< tophat: radius^2
};

/// @brief Per-step constants of the fused update.
struct SpinStepParams {
    double decay_bg = 1.0;     ///< exp(-gamma_background * step)
    double gpr_dt = 0.0;       ///< gamma_probe_peak * illuminated time
    double langevin_var = 0.5;
    double kick_x = 0.0;       ///< backaction on sx per unit u
    double kick_p = 0.0;       ///< backaction on sp per unit u
};

/// @brief Readout sums of one step.
struct SpinStepResult {
    double sum_usp = 0.0;
    double sum_usx = 0.0;
};

using spin_step_fn = SpinStepResult (*)(int n, const double* x, const double* y,
                                        double* sx, double* sp,
                                        const double* noise,  // 2n normals
                                        const BeamParams& beam,
                                        const SpinStepParams& c);

/// Advance all atoms by dt with exact wall handling.  The straight-line fast
/// path is branch-free; atoms that would cross the wall are re-run through
/// the scalar multi-hit solver in ascending index order, so random-stream
/// consumption is identical in every backend.  pending[i] is set on
/// depolarizing hits.
using advance_fn = void (*)(int n, double* x, double* y, double* vx, double* vy,
                            std::uint8_t* pending, double dt,
                            const CellGeometry& cell, Rng& rng);

/// @brief One kernel backend.
struct Kernels {
    spin_step_fn spin_step;
    advance_fn advance;
    const char* name;
};

extern const Kernels kScalarKernels;
extern const Kernels kAvx2Kernels;

bool cpu_has_avx2();

/// Widest backend the CPU supports; SIM_KERNELS=scalar|avx2 overrides.
const Kernels& active_kernels();

}  // namespace sim
