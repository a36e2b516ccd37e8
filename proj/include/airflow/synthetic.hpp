// Synthetic ground truth: analytic fields, gridded samples and object
// trajectories with known parameters. Used as fitting/identification oracles
// and as the default simulated world.
#pragma once

#include "airflow/dynamics.hpp"
#include "airflow/field_fit.hpp"
#include "airflow/field_model.hpp"

#include <cstdint>
#include <vector>

namespace airflow {

/// Direction-dependent radial profile:
///   b1(a) = b1 (1 + b1_aniso cos a),  b2,b3(a) = b2,b3 (1 + decay_aniso cos a)
/// with `a` the bearing relative to the pan heading.
struct ProfileLaw {
    RadialProfile base;
    double b1_aniso = 0.0;
    double decay_aniso = 0.0;

    RadialProfile at(double alpha_rel_deg) const;
    void validate() const;
};

struct SyntheticFieldSpec {
    FieldGeometry geometry;
    NozzleOrientation orientation{90.0, 0.0};
    ProfileLaw law;
    Vec2 grid_center{0.0, 0.0};
    double grid_extent_m = 2.0; ///< side length of the square grid
    int resolution = 11;        ///< points per side
    double noise = 0.0;         ///< multiplicative Gaussian noise std

    Vec2 stagnation() const { return stagnation_point(orientation, geometry); }
    void validate() const;
};

/// Evaluates the analytic field on the grid and applies multiplicative noise
/// (1 + N(0, noise)), clamped at zero. Deterministic per seed.
VelocityGrid generate_synthetic_grid(const SyntheticFieldSpec &spec, std::uint64_t seed);

/// Analytic multi-tilt field: one ProfileLaw per tilt node.
struct SyntheticField {
    FieldGeometry geometry;
    std::vector<double> tilt_nodes;
    std::vector<ProfileLaw> laws;

    /// Tabulates every law at the 1-degree bin centres.
    FieldModel to_model() const;
};

/// Built-in reference world: tilt nodes 0, 22.5 and 45 degrees with peak air
/// speeds around 3.4 m/s, forward-biased anisotropy growing with tilt.
SyntheticField reference_field();

enum class TrajectoryScheme {
    /// Speed advanced by the explicit-Euler map of the continuous model at
    /// the sample interval; positions advanced so that central differences of
    /// positions reproduce the speed samples exactly.
    discrete_map,
    /// Adaptive integration of the continuous model, sampled at the output rate.
    continuous,
};

struct TrajectoryGenSpec {
    NozzleOrientation orientation{90.0, 0.0};
    std::size_t count = 50;
    double min_radius_m = 0.20;
    double max_radius_m = 0.58;
    double duration_s = 2.0;
    double rate_hz = 40.0;
    double speed_noise = 0.0; ///< multiplicative per sample
    TrajectoryScheme scheme = TrajectoryScheme::discrete_map;
};

/// Objects start at rest at positions uniform (by area) in the annulus around
/// the stagnation point and are simulated for `duration_s`.
std::vector<Trajectory> generate_synthetic_trajectories(const DynamicsModel &dynamics,
                                                        const FieldModel &field,
                                                        const TrajectoryGenSpec &spec,
                                                        std::uint64_t seed);

} // namespace airflow
