#include "sim/kinematics.hpp"

#include <cmath>
#include <cstdio>

namespace sim {

namespace {
constexpr double kTwoPi = 6.283185307179586;
constexpr double kMinSpeedFrac = 1e-6;  // re-sample below this times sigma
constexpr double kWallInset = 1.0 - 1e-12;
}  // namespace

double thermal_sigma(const CellGeometry& geom) {
    return std::sqrt(kBoltzmann * geom.temperature / geom.mass_atom);
}

void sample_initial_position(const CellGeometry& geom, Rng& rng, double& x, double& y) {
    const double r = geom.radius_cell * std::sqrt(rng.uniform());
    const double th = kTwoPi * rng.uniform();
    x = r * std::cos(th);
    y = r * std::sin(th);
}

double sample_speed_mb2d(double sigma, Rng& rng) {
    double v;
    do {
        v = sigma * std::sqrt(-2.0 * std::log(rng.uniform_open()));
    } while (v < kMinSpeedFrac * sigma);
    return v;
}

double sample_speed_flux_weighted(double sigma, Rng& rng) {
    double v;
    do {
        const double a = rng.normal();
        const double b = rng.normal();
        const double c = rng.normal();
        v = sigma * std::sqrt(a * a + b * b + c * c);
    } while (v < kMinSpeedFrac * sigma);
    return v;
}

void sample_initial_velocity(const CellGeometry& geom, Rng& rng, double& vx, double& vy) {
    const double v = sample_speed_mb2d(thermal_sigma(geom), rng);
    const double th = kTwoPi * rng.uniform();
    vx = v * std::cos(th);
    vy = v * std::sin(th);
}

bool reflect_at_wall(AtomState& s, const CellGeometry& geom, Rng& rng) {
    const double r = std::sqrt(s.x * s.x + s.y * s.y);
    const double nx = -s.x / r, ny = -s.y / r;  // inward normal
    // cosine law: uniform in sin(eps) about the inward normal
    const double eps = std::asin(2.0 * rng.uniform() - 1.0);
    const double ce = std::cos(eps), se = std::sin(eps);
    const double dx = nx * ce - ny * se;
    const double dy = nx * se + ny * ce;
    const double v = sample_speed_flux_weighted(thermal_sigma(geom), rng);
    s.vx = v * dx;
    s.vy = v * dy;
    // nudge off the wall so the next chord solve sees a strictly interior point
    const double scale = geom.radius_cell * kWallInset / r;
    s.x *= scale;
    s.y *= scale;
    const bool reset = rng.uniform() < geom.wall_reset_probability;
    if (reset) s.phase_reset_pending = true;
    return reset;
}

std::optional<double> advance_free_flight(AtomState& s, const CellGeometry& geom,
                                          double dt) {
    const double a = s.vx * s.vx + s.vy * s.vy;
    if (a == 0.0 || dt <= 0.0) {
        s.time += dt;
        return std::nullopt;
    }
    const double b = 2.0 * (s.x * s.vx + s.y * s.vy);
    const double c = s.x * s.x + s.y * s.y - geom.radius_cell * geom.radius_cell;
    // interior point: c < 0, so there is exactly one positive root
    const double disc = b * b - 4.0 * a * c;
    const double t_hit = (-b + std::sqrt(disc)) / (2.0 * a);
    if (t_hit > dt) {
        s.x += s.vx * dt;
        s.y += s.vy * dt;
        s.time += dt;
        return std::nullopt;
    }
    s.x += s.vx * t_hit;
    s.y += s.vy * t_hit;
    // land exactly on the circle
    const double r = std::sqrt(s.x * s.x + s.y * s.y);
    const double fix = geom.radius_cell / r;
    s.x *= fix;
    s.y *= fix;
    s.time += t_hit;
    return t_hit;
}

int advance_with_walls(AtomState& s, const CellGeometry& geom, double dt, Rng& rng,
                       std::vector<double>* reset_times) {
    int hits = 0;
    double remaining = dt;
    while (remaining > 0.0) {
        const auto flight = advance_free_flight(s, geom, remaining);
        if (!flight) break;
        remaining -= *flight;
        const bool reset = reflect_at_wall(s, geom, rng);
        ++hits;
        if (reset && reset_times) reset_times->push_back(s.time);
    }
    return hits;
}

Trajectory simulate_trajectory(const CellGeometry& geom, Rng& rng, double duration,
                               double dt) {
    Trajectory traj;
    AtomState s;
    sample_initial_position(geom, rng, s.x, s.y);
    sample_initial_velocity(geom, rng, s.vx, s.vy);

    const auto record = [&](bool reset) {
        traj.samples.push_back({s.time, s.x, s.y, s.vx, s.vy, reset});
    };
    record(false);
    const int n_steps = static_cast<int>(std::llround(duration / dt));
    for (int k = 0; k < n_steps; ++k) {
        const std::size_t before = traj.reset_events.size();
        advance_with_walls(s, geom, dt, rng, &traj.reset_events);
        record(traj.reset_events.size() > before);
    }
    return traj;
}

void write_trajectory_csv(const Trajectory& traj, const char* path) {
    std::FILE* f = std::fopen(path, "w");
    if (!f) return;
    std::fputs("t_ms,x_mm,y_mm,vx,vy,reset_flag\n", f);
    for (const auto& p : traj.samples)
        std::fprintf(f, "%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", p.t, p.x, p.y, p.vx, p.vy,
                     p.reset ? 1 : 0);
    std::fclose(f);
}

}  // namespace sim
