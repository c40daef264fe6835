#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sim/constants.hpp"
#include "sim/rng.hpp"

namespace sim {

/// @brief Circular cell cross-section and the thermal/wall model attached to it.
struct CellGeometry {
    double radius_cell = 1.6925687506432687;  ///< mm; disk of unit area 3/sqrt(pi) scaled
    double temperature = 331.15;              ///< K
    double wall_reset_probability = 0.0;      ///< spin reset chance per wall hit
    double mass_atom = kMassRb87;             ///< kg
};

/// rms thermal speed per axis, mm/ms
double thermal_sigma(const CellGeometry& geom);

/// @brief Point particle inside the cell cross-section.
struct AtomState {
    double x = 0.0, y = 0.0;    ///< mm
    double vx = 0.0, vy = 0.0;  ///< mm/ms
    double time = 0.0;          ///< ms
    bool phase_reset_pending = false;  ///< set by a depolarizing wall hit
};

/// @brief One sampled point of a trajectory.
struct TrajectorySample {
    double t, x, y, vx, vy;
    bool reset;  ///< a depolarizing wall hit occurred since the previous sample
};

/// @brief Sampled path plus the times of depolarizing wall hits.
struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<double> reset_events;
};

/// Uniform position over the disk cross-section.
void sample_initial_position(const CellGeometry& geom, Rng& rng, double& x, double& y);

/// Equilibrium 2D speed distribution f(v) = (v/sigma^2) exp(-v^2/2sigma^2).
double sample_speed_mb2d(double sigma, Rng& rng);

/// Flux-weighted speed distribution g(v) ~ v^2 exp(-v^2/2sigma^2), the
/// speed law of atoms arriving at the wall.
double sample_speed_flux_weighted(double sigma, Rng& rng);

/// Isotropic velocity with equilibrium speed law.
void sample_initial_velocity(const CellGeometry& geom, Rng& rng, double& vx, double& vy);

/// Cosine-law re-emission at the wall with a flux-weighted fresh speed.
/// Marks the atom reset-pending with probability wall_reset_probability;
/// returns whether this hit depolarized the atom.
bool reflect_at_wall(AtomState& s, const CellGeometry& geom, Rng& rng);

/// Move along a straight line for at most dt.  If the wall is reached first,
/// the state stops exactly on it and the flight time is returned; otherwise
/// the full dt is consumed and nullopt is returned.  The chord-wall
/// intersection is solved exactly, so collision statistics do not depend on
/// the sampling step.
std::optional<double> advance_free_flight(AtomState& s, const CellGeometry& geom, double dt);

/// Advance through dt resolving every wall hit in order; returns the number
/// of hits.  reset_times (optional) receives times of depolarizing hits.
int advance_with_walls(AtomState& s, const CellGeometry& geom, double dt, Rng& rng,
                       std::vector<double>* reset_times = nullptr);

/// Sample a fresh equilibrium atom and follow it for `duration`, recording
/// the state every dt.
Trajectory simulate_trajectory(const CellGeometry& geom, Rng& rng, double duration,
                               double dt);

/// CSV dump: t_ms,x_mm,y_mm,vx,vy,reset_flag
void write_trajectory_csv(const Trajectory& traj, const char* path);

}  // namespace sim
