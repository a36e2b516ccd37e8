// Object motion in a steady airflow field.
//
// Speed follows the identified first-order model
//   dv/dt = xi1 v + xi2 v_air + xi3
// saturated at v = 0, and the object moves radially away from the
// stagnation point with velocity max(v, 0) [cos a, sin a].
#pragma once

#include "airflow/field_model.hpp"
#include "airflow/vec2.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace airflow {

struct DynamicsModel {
    double xi1 = 0.0; ///< 1/s, self damping (< 0)
    double xi2 = 0.0; ///< 1/s per unit air speed (> 0)
    double xi3 = 0.0; ///< m/s^2
    std::string label;

    void validate() const;
    /// Steady speed for a constant air speed (may be negative: object stays put).
    double equilibrium_speed(double v_air) const { return (xi2 * v_air + xi3) / -xi1; }
    /// Air speed at which a resting object starts to move.
    double motion_threshold() const { return -xi3 / xi2; }

    /// Identified polystyrene tracer hemisphere.
    static DynamicsModel tracer() { return {-2.66, 4.26, -8.53, "tracer"}; }
    /// Identified cotton wad.
    static DynamicsModel cotton_wad() { return {-4.25, 3.46, -4.12, "cotton_wad"}; }
};

inline double speed_derivative(const DynamicsModel &m, double v_obj, double v_air) {
    return m.xi1 * v_obj + m.xi2 * v_air + m.xi3;
}

struct ObjectState {
    Vec2 position;      ///< m
    double speed = 0.0; ///< m/s, never negative once simulated
    DynamicsModel dynamics;
};

/// max(speed, 0) along the bearing from `s` to the object. Zero at `s`.
Vec2 velocity_2d(const ObjectState &state, const Vec2 &s);

struct SimConfig {
    double rel_tol = 1e-6;
    double abs_tol = 1e-8;
    double noise_sigma = 0.0; ///< multiplicative speed noise per accepted step
    double delay_s = 0.0;     ///< previous field stays active this long
    std::uint64_t seed = 0;
    double output_rate_hz = 40.0;
    double min_step_s = 1e-12;

    void validate() const;
};

struct TrajectorySample {
    double t;      ///< s
    Vec2 position; ///< m
    double speed;  ///< m/s
};

/// Time-stamped samples of one object on the output grid k / output_rate_hz,
/// plus the final time when the duration is not on the grid.
struct Trajectory {
    std::vector<TrajectorySample> samples;

    const TrajectorySample &back() const { return samples.back(); }
};

/// Integrates every object independently for `duration_s` seconds with an
/// adaptive Dormand-Prince scheme. `previous` (optional) is the field that
/// stays active during the first cfg.delay_s seconds. Throws DomainError when
/// the step size collapses below cfg.min_step_s.
std::vector<Trajectory> simulate(const std::vector<ObjectState> &objects, const AirflowField &field,
                                 double duration_s, const SimConfig &cfg,
                                 const AirflowField *previous = nullptr);

/// Same integration without output sampling; returns the end states only.
/// Used by the planner, where only end positions matter.
std::vector<ObjectState> simulate_end_states(const std::vector<ObjectState> &objects,
                                             const AirflowField &field, double duration_s,
                                             const SimConfig &cfg,
                                             const AirflowField *previous = nullptr);

/// Convenience overload for a field model at a nozzle orientation.
std::vector<Trajectory> simulate(const std::vector<ObjectState> &objects, const FieldModel &field,
                                 const NozzleOrientation &orientation, double duration_s,
                                 const SimConfig &cfg);

/// Deterministic 64-bit mixing used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace airflow
